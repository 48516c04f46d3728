use msbc_core::experiment::derivation::consistent_system;
use msbc_core::experiment::{derive, derive_boundary, BoundarySet, Scenario};
use msbc_core::normal_form::{at_param, construct, structure_violations, verify_conjugacy, NormalForm, DEFAULT_EXACT_PARAM_ORDER};
use msbc_core::scalar::{int, rat, Rational};
use msbc_core::series::{TruncatedSeries, Truncation};
use msbc_core::spatial::{build_embedding, coordinate_map, Embedding};

fn slow(s: &TruncatedSeries) -> TruncatedSeries {
    s.filter(|m| m.exponent(2) == 0 && m.exponent(3) == 0)
}

#[test]
fn evolution_has_the_normal_form_structure() {
    for order in [2, 3, 4] {
        let d = derive(order).unwrap();
        assert!(d.normal_form.param_series_terminated(), "order {order}");
        if order <= 3 {
            assert!(d.cross_validation.passed(), "order {order}: {:?}", d.cross_validation);
        } else {
            // float rounding in the second embedding settles near 4e-12 here
            assert!(d.cross_validation.max_scaled_discrepancy < 1e-10, "{:?}", d.cross_validation);
        }
        let g1 = d.evolution.get(0);
        assert_eq!(g1.len(), 1);
        assert_eq!(g1.coeff_of(&[0, 1, 0, 0]), int(1));
        let violations = structure_violations(&d.evolution);
        if order <= 3 {
            assert!(violations.is_empty(), "order {order}");
        } else {
            // from quartic order the slow equations pick up the resonant s3 s4 pairing
            let vars = d.evolution.vars().clone();
            let expected = msbc_core::series::Monomial::new(&[1, 1, 1, 1]);
            assert_eq!(violations, vec![(1, expected)], "{:?}", violations.iter().map(|(_, m)| vars.render(m)).collect::<Vec<_>>());
            assert_eq!(d.evolution.get(1).coeff(&expected), rat(2349, 1024));
        }
    }
}

#[test]
fn slow_manifold_normalisation() {
    let d = derive(3).unwrap();
    let t = d.transform.components();
    let sum = slow(&t[0]).add(&slow(&t[1])).unwrap();
    let dsum = slow(&t[2]).add(&slow(&t[3])).unwrap();
    let vars = d.transform.vars().clone();
    let trunc = d.transform.truncation();
    assert_eq!(sum, TruncatedSeries::var(vars.clone(), trunc, 0).scale(&int(2)));
    assert_eq!(dsum, TruncatedSeries::var(vars, trunc, 1).scale(&int(2)));
}

#[test]
fn conjugacy_holds_through_the_truncation_order() {
    let system = build_embedding(Embedding::A);
    for order in [2, 3] {
        let nf: NormalForm<Rational> =
            construct(&system, &coordinate_map(), Truncation::new(order, DEFAULT_EXACT_PARAM_ORDER)).unwrap();
        let r = verify_conjugacy(&nf.transform, &nf.evolution, &system).unwrap();
        assert_eq!(r.min_state_degree(), None, "order {order}");
    }
}

#[test]
fn boundary_round_trip_is_exact() {
    let d = derive(3).unwrap();
    assert!(d.printed.round_trip_degree.is_none_or(|k| k > 3));
    assert!(d.consistent.round_trip_degree.is_none_or(|k| k > 3));
}

#[test]
fn printed_system_robin_coefficients() {
    let d = derive(3).unwrap();
    let left = &d.printed.left;
    assert_eq!(left.p.coeff_of(&[0, 0]), rat(1, 2));
    assert_eq!(left.p.coeff_of(&[1, 0]), rat(477, 128));
    assert_eq!(left.p.coeff_of(&[0, 1]), rat(-357, 128));
    assert_eq!(left.q, int(3));
    assert_eq!(left.r.coeff_of(&[1, 0]), rat(3, 4));
    assert_eq!(left.r.coeff_of(&[0, 1]), rat(1, 4));
    assert_eq!(left.r.coeff_of(&[2, 0]), rat(45, 256));
    assert_eq!(left.r.coeff_of(&[1, 1]), rat(-81, 128));
    assert_eq!(left.r.coeff_of(&[0, 2]), rat(-75, 256));
    assert_eq!(d.printed.right, left.mirror());
}

#[test]
fn consistent_system_recovers_the_macroscale_model() {
    // steady C_t = C^3/2 - 2 C Cx + 4 Cxx gives Cxx = C Cx / 2 - C^3 / 8;
    // anything else is C Cx^2 or smaller, beyond the model's accuracy
    let nf: NormalForm<Rational> =
        construct(&consistent_system(), &coordinate_map(), Truncation::new(3, DEFAULT_EXACT_PARAM_ORDER)).unwrap();
    let g = at_param(&nf.evolution, int(1)).unwrap();
    let t = at_param(&nf.transform, int(1)).unwrap();
    let g2 = g.get(1);
    assert_eq!(g2.coeff_of(&[1, 1, 0, 0]), rat(1, 2));
    assert_eq!(g2.coeff_of(&[3, 0, 0, 0]), rat(-1, 8));
    for (m, _) in g2.terms() {
        let known = [[1, 1], [3, 0]].iter().any(|e| m.exponent(0) == e[0] && m.exponent(1) == e[1]);
        assert!(known || m.exponent(1) >= 2, "{}", g2.vars().render(m));
    }
    // a = C - Cx + C^2 / 2 + ... on the slow manifold
    let a = slow(t.get(0));
    assert_eq!(a.coeff_of(&[1, 0, 0, 0]), int(1));
    assert_eq!(a.coeff_of(&[0, 1, 0, 0]), int(-1));
    assert_eq!(a.coeff_of(&[2, 0, 0, 0]), rat(1, 2));
}

#[test]
fn consistent_robin_coefficients() {
    let b = derive_boundary(&consistent_system(), 3).unwrap();
    let left = &b.left;
    assert_eq!(left.p.coeff_of(&[0, 0]), rat(1, 2));
    assert_eq!(left.p.coeff_of(&[1, 0]), rat(159, 128));
    assert_eq!(left.p.coeff_of(&[0, 1]), rat(-119, 128));
    assert_eq!(left.q, int(1));
    assert_eq!(left.r.coeff_of(&[2, 0]), rat(15, 256));
    assert_eq!(left.r.coeff_of(&[1, 1]), rat(-27, 128));
    assert_eq!(left.r.coeff_of(&[0, 2]), rat(-25, 256));
    assert_eq!(b.right, left.mirror());
    // the linearisation does not depend on the quadratic scale
    let printed = derive_boundary(&build_embedding(Embedding::A), 3).unwrap();
    assert_eq!(left.linearised(), printed.left.linearised());
}

#[test]
fn boundary_file_round_trip() {
    let d = derive(3).unwrap();
    assert_eq!(BoundarySet::from_text(&d.boundary_text()).unwrap(), BoundarySet::from_derivation(&d));
    assert!(BoundarySet::from_text("# consistent\n").is_err());
}

#[test]
fn report_matches_golden_and_is_deterministic() {
    let d = derive(3).unwrap();
    let report = d.report();
    assert_eq!(report, include_str!("golden/report_order3.txt"));
    assert_eq!(d.files(), derive(3).unwrap().files());
}

#[test]
fn shipped_scenario_parses_to_the_builtin() {
    let text = include_str!("../../../scenarios/heated_inlet.cfg");
    assert_eq!(Scenario::parse(text).unwrap(), Scenario::heated_inlet());
}
