//! The full derivation pipeline and its text report.

use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::boundary::{
    assemble_left_bc, assemble_right_bc, centre_stable_restriction, revert_boundary, round_trip_residual, BoundaryConstraint,
    RevertedBoundary, RobinBC, Side, BOUNDARY_AMPLITUDES,
};
use crate::linalg::rational_roots;
use crate::normal_form::{
    at_param, construct, cross_validate_embeddings, exact_param_order, float_param_order, CrossValidation, NormalForm,
    NormalFormError,
};
use crate::scalar::{rat, sig2, Rational};
use crate::series::text::{rational_text, render_expression, to_term_lines};
use crate::series::{SeriesError, SeriesVector, TruncatedSeries, Truncation, VarSet};
use crate::spatial::{build_embedding, build_original, coordinate_map, Embedding, SpatialSystem};

use super::ExperimentError;

const COMPONENT_NAMES: [&str; 4] = ["a", "b", "ax", "bx"];

/// Boundary relations obtained from one spatial system.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedBoundary {
    pub constraint: BoundaryConstraint,
    pub reverted: RevertedBoundary,
    pub left: RobinBC,
    pub right: RobinBC,
    /// Lowest state degree left in the round-trip residual, `None` if zero.
    pub round_trip_degree: Option<u32>,
}

impl DerivedBoundary {
    pub fn from_transform(transform_at_one: &SeriesVector) -> Result<DerivedBoundary, SeriesError> {
        let constraint = centre_stable_restriction(transform_at_one)?;
        let reverted = revert_boundary(&constraint)?;
        let round_trip_degree = round_trip_residual(&constraint, &reverted)?.min_state_degree();
        let left = assemble_left_bc(&reverted);
        let right = assemble_right_bc(&reverted);
        Ok(DerivedBoundary { constraint, reverted, left, right, round_trip_degree })
    }
}

/// Normal form of the embedded system plus the boundary relations.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub order: u32,
    /// Eigenvalues of the unembedded linear operator, with multiplicity.
    pub original_eigenvalues: Vec<Rational>,
    pub normal_form: NormalForm<Rational>,
    /// Transform and evolution at `eps = 1`.
    pub transform: SeriesVector,
    pub evolution: SeriesVector,
    pub cross_validation: CrossValidation,
    /// From the spatial system with its quadratic terms as given.
    pub printed: DerivedBoundary,
    /// From the steady form of the microscale PDE, whose quadratic terms are
    /// a third of those in the given spatial system.
    pub consistent: DerivedBoundary,
}

/// The spatial system whose quadratic terms match the steady microscale PDE.
pub fn consistent_system() -> SpatialSystem {
    build_embedding(Embedding::A).with_quadratic_scaled(&rat(1, 3))
}

/// Boundary relations of an embedded system at truncation `order`.
pub fn derive_boundary(system: &SpatialSystem, order: u32) -> Result<DerivedBoundary, ExperimentError> {
    let nf: NormalForm<Rational> = construct(system, &coordinate_map(), Truncation::new(order, exact_param_order(order)))?;
    let t = at_param(&nf.transform, Rational::one()).map_err(NormalFormError::from)?;
    Ok(DerivedBoundary::from_transform(&t).map_err(NormalFormError::from)?)
}

pub fn derive(order: u32) -> Result<Derivation, ExperimentError> {
    if order < 2 {
        return Err(ExperimentError::Validation(format!("order must be at least 2, got {order}")));
    }
    let original = build_original();
    let original_eigenvalues = rational_roots(&original.linear().charpoly()).unwrap_or_default();
    let normal_form: NormalForm<Rational> =
        construct(&build_embedding(Embedding::A), &coordinate_map(), Truncation::new(order, exact_param_order(order)))?;
    let float_form: NormalForm<f64> =
        construct(&build_embedding(Embedding::B), &coordinate_map(), Truncation::new(order, float_param_order(order)))?;
    let cross_validation = cross_validate_embeddings(&normal_form, &float_form).map_err(NormalFormError::from)?;
    let transform = at_param(&normal_form.transform, Rational::one()).map_err(NormalFormError::from)?;
    let evolution = at_param(&normal_form.evolution, Rational::one()).map_err(NormalFormError::from)?;
    let printed = DerivedBoundary::from_transform(&transform).map_err(NormalFormError::from)?;
    let consistent = derive_boundary(&consistent_system(), order)?;
    Ok(Derivation { order, original_eigenvalues, normal_form, transform, evolution, cross_validation, printed, consistent })
}

/// `C - P Cx - Q Cx^2 = R` with the data replaced by `(first f, second f)`:
/// `P` and `R` become polynomials in `f`.
pub fn specialise(bc: &RobinBC, first: &Rational, second: &Rational) -> (TruncatedSeries, Rational, TruncatedSeries) {
    let vars = VarSet::new(&["f"], &[]);
    let trunc = bc.p.truncation();
    let f = TruncatedSeries::var(vars.clone(), trunc, 0);
    let images = [f.scale(first), f.scale(second)];
    let p = bc.p.compose(&images).expect("two data variables");
    let r = bc.r.compose(&images).expect("two data variables");
    (p, bc.q.clone(), r)
}

fn robin_line(p: &TruncatedSeries, q: &Rational, r: &TruncatedSeries, coeff: &dyn Fn(&Rational) -> String) -> String {
    let qtext = coeff(&-q.clone());
    let (qsign, qmag) = match qtext.strip_prefix('-') {
        Some(m) => ("-", m.to_string()),
        None => ("+", qtext),
    };
    format!("C - ({})*Cx {qsign} {qmag}*Cx^2 = {}", render_expression(p, coeff), render_expression(r, coeff))
}

/// `C - P Cx = R` from the linearised relation, data terms listed last
/// variable first.
fn linear_robin_line(bc: &RobinBC, coeff: &dyn Fn(&Rational) -> String) -> String {
    let lin = bc.linearised();
    let p = lin.p.coeff_of(&[0, 0]);
    let names = bc.side.data_names();
    let mut rhs = Vec::new();
    for (i, name) in names.iter().enumerate().rev() {
        let mut e = [0u8; 2];
        e[i] = 1;
        let c = lin.r.coeff_of(&e);
        if !c.is_zero() {
            rhs.push((coeff(&c), *name));
        }
    }
    let mut r = String::new();
    for (k, (c, name)) in rhs.iter().enumerate() {
        let (neg, mag) = match c.strip_prefix('-') {
            Some(m) => (true, m),
            None => (false, c.as_str()),
        };
        match (k, neg) {
            (0, true) => r.push('-'),
            (0, false) => {}
            (_, true) => r.push_str(" - "),
            (_, false) => r.push_str(" + "),
        }
        write!(r, "{mag}*{name}").unwrap();
    }
    if r.is_empty() {
        r.push('0');
    }
    let ptext = coeff(&p);
    let (psign, pmag) = match ptext.strip_prefix('-') {
        Some(m) => ("+", m.to_string()),
        None => ("-", ptext),
    };
    format!("C {psign} {pmag}*Cx = {r}")
}

fn eigenvalue_summary(eigs: &[Rational]) -> String {
    let mut sorted = eigs.to_vec();
    sorted.sort();
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let m = j - i;
        let text = rational_text(&sorted[i]);
        parts.push(if m > 1 { format!("{text} (x{m})") } else { text });
        i = j;
    }
    parts.join(", ")
}

impl Derivation {
    fn section_boundary(&self, out: &mut String, d: &DerivedBoundary, coeff: &dyn Fn(&Rational) -> String) {
        writeln!(out, "a0 = {}", render_expression(&d.constraint.a0, coeff)).unwrap();
        writeln!(out, "b0 = {}", render_expression(&d.constraint.b0, coeff)).unwrap();
        writeln!(out, "{} = {}", BOUNDARY_AMPLITUDES[0], render_expression(&d.reverted.s1, coeff)).unwrap();
        writeln!(out, "{} = {}", BOUNDARY_AMPLITUDES[2], render_expression(&d.reverted.s3, coeff)).unwrap();
        match d.round_trip_degree {
            None => writeln!(out, "round trip: exact").unwrap(),
            Some(k) => writeln!(out, "round trip: residual starts at degree {k}").unwrap(),
        }
        for bc in [&d.left, &d.right] {
            writeln!(out, "robin {}: {}", bc.side.name(), robin_line(&bc.p, &bc.q, &bc.r, coeff)).unwrap();
        }
        for bc in [&d.left, &d.right] {
            writeln!(out, "linear robin {}: {}", bc.side.name(), linear_robin_line(bc, coeff)).unwrap();
        }
    }

    /// Deterministic text report.
    pub fn report(&self) -> String {
        let exact: &dyn Fn(&Rational) -> String = &rational_text;
        let two: &dyn Fn(&Rational) -> String = &sig2;
        let mut out = String::new();
        writeln!(out, "# normal-form derivation").unwrap();
        writeln!(out, "order {} in the amplitudes; eps kept to degree {}", self.order, exact_param_order(self.order)).unwrap();
        if self.normal_form.param_series_terminated() {
            writeln!(out, "eps series terminates at eps^{}, so eps = 1 values are exact", self.normal_form.highest_param_power).unwrap();
        } else {
            writeln!(out, "eps series reaches the cap at eps^{}", self.normal_form.highest_param_power).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "## linear operator").unwrap();
        writeln!(out, "eigenvalues: {}", eigenvalue_summary(&self.original_eigenvalues)).unwrap();
        let hyperbolic: Vec<&Rational> = self.original_eigenvalues.iter().filter(|v| !v.is_zero()).collect();
        if hyperbolic.len() == 2 && hyperbolic.iter().all(|v| num_traits::Signed::abs(*v) == rat(2, 3)) {
            writeln!(out, "note: the hyperbolic pair is -2/3, 2/3 (not -sqrt(2), sqrt(2))").unwrap();
        }
        writeln!(out, "embedded eigenvalues: {}", eigenvalue_summary(&self.normal_form.eigenvalues)).unwrap();
        writeln!(out, "amplitudes: C := s1 = (a + b)/2, Cx := s2 = (ax + bx)/2, s3 = (3a - 3b - 3ax + 9bx)/8, s4 = (3a - 3b + 9ax - 3bx)/8")
            .unwrap();
        writeln!(out).unwrap();
        writeln!(out, "## transform at eps = 1 (2 s.f.)").unwrap();
        for (name, c) in COMPONENT_NAMES.iter().zip(self.transform.components()) {
            writeln!(out, "{name} = {}", render_expression(c, two)).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "## evolution at eps = 1 (2 s.f.)").unwrap();
        for (j, g) in self.evolution.components().iter().enumerate() {
            writeln!(out, "G{} = {}", j + 1, render_expression(g, two)).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "## resonances").unwrap();
        let entries = &self.normal_form.report.entries;
        let kept: Vec<_> = self.normal_form.report.kept().collect();
        writeln!(out, "{} homological coefficients solved, {} resonant (kept in G)", entries.len(), kept.len()).unwrap();
        let vars = self.normal_form.evolution.vars().clone();
        let mut by_component = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for e in &kept {
            if vars.param_degree(&e.monomial) == 0 {
                by_component[e.component].push(vars.render(&e.monomial));
            }
        }
        for (j, list) in by_component.iter().enumerate() {
            writeln!(out, "G{} resonant (eps^0): {}", j + 1, if list.is_empty() { "-".to_string() } else { list.join(" ") }).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "## cross-validation").unwrap();
        let cv = &self.cross_validation;
        writeln!(
            out,
            "embedding-A (exact) vs embedding-B (float): {} (max coefficient difference {:.1e}, relative to size {:.1e}, tolerance {:.0e})",
            if cv.passed() { "pass" } else { "FAIL" },
            cv.max_discrepancy,
            cv.max_scaled_discrepancy,
            cv.tolerance
        )
        .unwrap();
        writeln!(out).unwrap();
        writeln!(out, "## boundary (exact)").unwrap();
        self.section_boundary(&mut out, &self.printed, exact);
        writeln!(out).unwrap();
        writeln!(out, "## boundary (2 s.f.)").unwrap();
        self.section_boundary(&mut out, &self.printed, two);
        let (p, q, r) = specialise(&self.printed.left, &rat(1, 5), &Rational::zero());
        writeln!(out, "left with a0 = 0.2 f, b0 = 0: {}", robin_line(&p, &q, &r, two)).unwrap();
        let (p, q, r) = specialise(&self.printed.right, &Rational::zero(), &rat(1, 5));
        writeln!(out, "right with aL = 0, bL = 0.2 f: {}", robin_line(&p, &q, &r, two)).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "## boundary from the steady microscale PDE (quadratic terms / 3)").unwrap();
        for bc in [&self.consistent.left, &self.consistent.right] {
            writeln!(out, "robin {}: {}", bc.side.name(), robin_line(&bc.p, &bc.q, &bc.r, exact)).unwrap();
        }
        let (p, q, r) = specialise(&self.consistent.left, &rat(1, 5), &Rational::zero());
        writeln!(out, "left with a0 = 0.2 f, b0 = 0: {}", robin_line(&p, &q, &r, two)).unwrap();
        let (p, q, r) = specialise(&self.consistent.right, &Rational::zero(), &rat(1, 5));
        writeln!(out, "right with aL = 0, bL = 0.2 f: {}", robin_line(&p, &q, &r, two)).unwrap();
        out
    }

    /// Robin conditions in their text form: the given system first, then the
    /// PDE-consistent one, each as a left line and a right line.
    pub fn boundary_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# printed").unwrap();
        writeln!(out, "{}", self.printed.left).unwrap();
        writeln!(out, "{}", self.printed.right).unwrap();
        writeln!(out, "# consistent").unwrap();
        writeln!(out, "{}", self.consistent.left).unwrap();
        writeln!(out, "{}", self.consistent.right).unwrap();
        out
    }

    /// All report files as `(name, contents)`.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut transform = String::new();
        for (name, c) in COMPONENT_NAMES.iter().zip(self.transform.components()) {
            writeln!(transform, "component {name}").unwrap();
            transform.push_str(&to_term_lines(c));
        }
        let mut evolution = String::new();
        for (j, g) in self.evolution.components().iter().enumerate() {
            writeln!(evolution, "component G{}", j + 1).unwrap();
            evolution.push_str(&to_term_lines(g));
        }
        let mut resonances = String::from("component monomial divisor disposition\n");
        let vars = self.normal_form.evolution.vars().clone();
        for e in &self.normal_form.report.entries {
            let disposition = match e.disposition {
                crate::normal_form::Disposition::KeptInG => "kept",
                crate::normal_form::Disposition::RemovedIntoT => "removed",
            };
            writeln!(resonances, "G{} {} {} {disposition}", e.component + 1, vars.render(&e.monomial), rational_text(&e.divisor))
                .unwrap();
        }
        vec![
            ("report.txt".to_string(), self.report()),
            ("transform.txt".to_string(), transform),
            ("evolution.txt".to_string(), evolution),
            ("resonances.txt".to_string(), resonances),
            ("boundary.txt".to_string(), self.boundary_text()),
        ]
    }
}

/// Reads the left/right pair that follows `# <section>` in a
/// [`Derivation::boundary_text`] file.
pub fn parse_boundary_text(text: &str, section: &str) -> Result<(RobinBC, RobinBC), ExperimentError> {
    let header = format!("# {section}");
    let mut lines = text.lines().skip_while(|l| l.trim() != header).skip(1).filter(|l| !l.trim().is_empty());
    let mut next = |want: Side| -> Result<RobinBC, ExperimentError> {
        let line = lines.next().ok_or_else(|| ExperimentError::Validation(format!("boundary file: section '{section}' is incomplete")))?;
        let bc = RobinBC::from_text(line).map_err(|e| ExperimentError::Validation(format!("boundary file: {e}")))?;
        if bc.side != want {
            return Err(ExperimentError::Validation(format!("boundary file: expected the {} condition", want.name())));
        }
        Ok(bc)
    };
    let left = next(Side::Left)?;
    let right = next(Side::Right)?;
    Ok((left, right))
}
