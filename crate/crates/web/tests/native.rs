use msbc_web::{Demo, MAX_INTERVALS};

#[test]
fn robin_at_zero_data_is_the_linear_condition() {
    let demo = Demo::build(3).unwrap();
    assert_eq!(demo.robin(false, false, 0.0, 0.0), vec![0.5, 1.0, 0.0]);
    assert_eq!(demo.robin(true, false, 0.0, 0.0), vec![-0.5, -1.0, 0.0]);
    assert_eq!(demo.robin(false, true, 0.0, 0.0), vec![0.5, 3.0, 0.0]);
}

#[test]
fn robin_matches_closed_form_at_scenario_data() {
    let demo = Demo::build(3).unwrap();
    let [p, q, r] = demo.robin(false, true, 0.2, 0.0)[..] else { panic!() };
    assert!((p - (0.5 + 477.0 / 128.0 * 0.2)).abs() < 1e-15);
    assert_eq!(q, 3.0);
    assert!((r - (0.15 + 45.0 / 256.0 * 0.04)).abs() < 1e-15);
}

#[test]
fn transform_linear_part_near_origin() {
    let demo = Demo::build(3).unwrap();
    let h = 1e-6;
    let v = demo.transform(0.0, 0.0, h, 0.0);
    let expect = [0.25, -0.75, -1.0 / 6.0, 0.5];
    for (got, e) in v.iter().zip(expect) {
        assert!((got / h - e).abs() < 1e-5, "{got} {e}");
    }
    assert_eq!(demo.transform(0.0, 0.0, 0.0, 0.0), vec![0.0; 4]);
}

#[test]
fn small_comparison_favours_robin() {
    let demo = Demo::build(3).unwrap();
    let p = demo.profiles_at(21.0, 120, 0.2, 0.2).unwrap();
    assert_eq!(p.xs().len(), 121);
    for v in [p.micro(), p.dirichlet(), p.robin(), p.linear()] {
        assert_eq!(v.len(), 121);
    }
    let e = p.errors();
    assert!(e[1] < e[0] && e[2] < e[0], "{e:?}");
}

#[test]
fn rejects_oversized_or_bad_requests() {
    let demo = Demo::build(3).unwrap();
    assert!(demo.profiles_at(21.0, MAX_INTERVALS + 1, 0.2, 0.2).is_err());
    assert!(demo.profiles_at(-1.0, 120, 0.2, 0.2).is_err());
    assert!(demo.profiles_at(5.0, 4, 0.2, 0.2).is_err());
    assert!(Demo::build(1).is_err());
}
