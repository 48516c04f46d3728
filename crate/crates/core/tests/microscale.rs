use msbc_core::boundary::{BoundaryData, Signal};
use msbc_core::experiment::Scenario;
use msbc_core::solvers::{
    solve_microscale, solve_microscale_observed, Grid1D, MicroProblem, MicroState, MicroTerms, SolveConfig, Tolerances,
};
use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

const L: f64 = 30.0;
const TIGHT: Tolerances = Tolerances { rtol: 1e-11, atol: 1e-12 };

fn constant_data() -> BoundaryData {
    BoundaryData { a0: Signal::Constant(0.2), b0: Signal::Constant(0.0), al: Signal::Constant(0.0), bl: Signal::Constant(0.2) }
}

fn linear_problem() -> MicroProblem {
    MicroProblem { data: constant_data(), terms: MicroTerms::linear() }
}

fn solve(n: usize, problem: &MicroProblem, t_end: f64, tol: Tolerances) -> MicroState {
    let cfg = SolveConfig::new(Grid1D::new(L, n).unwrap(), tol, vec![t_end]).unwrap();
    solve_microscale(&cfg, problem, None).unwrap().last().clone()
}

/// Largest difference between a coarse and a fine solution at the coarse nodes.
fn coarse_difference(coarse: &MicroState, fine: &MicroState) -> f64 {
    let ratio = (fine.a.len() - 1) / (coarse.a.len() - 1);
    (0..coarse.a.len())
        .map(|i| (coarse.a[i] - fine.a[i * ratio]).abs().max((coarse.b[i] - fine.b[i * ratio]).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn self_convergence_on_the_shipped_scenario() {
    let problem = MicroProblem::new(Scenario::heated_inlet().data);
    let tol = Tolerances { rtol: 1e-10, atol: 1e-11 };
    let s: Vec<MicroState> = [150, 300, 600].iter().map(|&n| solve(n, &problem, 5.0, tol)).collect();
    let e1 = coarse_difference(&s[0], &s[1]);
    let e2 = coarse_difference(&s[1], &s[2]);
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "differences {e1:e} {e2:e}, order {order}");
    // Richardson reference from the two finest grids
    let extrapolate = |fine: &[f64], coarse: &[f64]| -> Vec<f64> {
        coarse.iter().enumerate().map(|(j, c)| fine[2 * j] + (fine[2 * j] - c) / 3.0).collect()
    };
    let reference = MicroState { t: 5.0, a: extrapolate(&s[2].a, &s[1].a), b: extrapolate(&s[2].b, &s[1].b) };
    let r1 = coarse_difference(&s[0], &reference);
    let r2 = coarse_difference(&s[1], &reference);
    assert!((r1 / r2).log2() >= 1.9, "{r1:e} {r2:e}");
}

/// Steady linearised equations on the same stencil, assembled and solved
/// densely: `3 u'' -+ u' + (v - u)/2 = 0`.
fn dense_steady(n: usize) -> (Vec<f64>, Vec<f64>) {
    let dx = L / n as f64;
    let m = n - 1;
    let (a0, b0, al, bl) = (0.2, 0.0, 0.0, 0.2);
    let mut k = DMatrix::<f64>::zeros(2 * m, 2 * m);
    let mut rhs = DVector::<f64>::zeros(2 * m);
    let d2 = 3.0 / (dx * dx);
    let d1 = 1.0 / (2.0 * dx);
    for i in 0..m {
        for (field, sign) in [(0usize, -1.0), (1usize, 1.0)] {
            let row = 2 * i + field;
            let other = 2 * i + 1 - field;
            let left_coeff = d2 - sign * d1;
            let right_coeff = d2 + sign * d1;
            k[(row, row)] = -2.0 * d2 - 0.5;
            k[(row, other)] = 0.5;
            let (lo_data, hi_data) = if field == 0 { (a0, al) } else { (b0, bl) };
            if i > 0 {
                k[(row, row - 2)] = left_coeff;
            } else {
                rhs[row] -= left_coeff * lo_data;
            }
            if i + 1 < m {
                k[(row, row + 2)] = right_coeff;
            } else {
                rhs[row] -= right_coeff * hi_data;
            }
        }
    }
    let u = k.lu().solve(&rhs).expect("nonsingular");
    let mut a = vec![a0];
    let mut b = vec![b0];
    for i in 0..m {
        a.push(u[2 * i]);
        b.push(u[2 * i + 1]);
    }
    a.push(al);
    b.push(bl);
    (a, b)
}

#[test]
fn linear_steady_state_matches_dense_solve() {
    let n = 512;
    let steady = solve(n, &linear_problem(), 1500.0, TIGHT);
    let (a, b) = dense_steady(n);
    let err = steady.a.iter().zip(&a).chain(steady.b.iter().zip(&b)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err:e}");
}

/// Exact solution of the continuous steady linear problem:
/// `(a, b, a', b')' = A0 (a, b, a', b')` with the four Dirichlet values.
fn continuous_steady() -> impl Fn(f64) -> (f64, f64) {
    let a0 = Matrix4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        1.0 / 6.0, -1.0 / 6.0, 1.0 / 3.0, 0.0, //
        -1.0 / 6.0, 1.0 / 6.0, 0.0, -1.0 / 3.0,
    );
    // null vector, its Jordan partner, and the hyperbolic pair
    let v0 = Vector4::new(1.0, 1.0, 0.0, 0.0);
    let w = Vector4::new(-1.0, 1.0, 1.0, 1.0);
    let vp = Vector4::new(1.0, -1.0 / 3.0, 2.0 / 3.0, -2.0 / 9.0);
    let vm = Vector4::new(1.0, -3.0, -2.0 / 3.0, 2.0);
    assert!((a0 * v0).norm() < 1e-15);
    assert!((a0 * w - v0).norm() < 1e-15);
    assert!((a0 * vp - vp * (2.0 / 3.0)).norm() < 1e-15);
    assert!((a0 * vm + vm * (2.0 / 3.0)).norm() < 1e-15);
    let basis = move |x: f64| -> [[f64; 2]; 4] {
        let g = ((2.0 / 3.0) * (x - L)).exp();
        let d = (-(2.0 / 3.0) * x).exp();
        [
            [v0[0], v0[1]],
            [x * v0[0] + w[0], x * v0[1] + w[1]],
            [g * vp[0], g * vp[1]],
            [d * vm[0], d * vm[1]],
        ]
    };
    let (left, right) = (basis(0.0), basis(L));
    let mut m = Matrix4::zeros();
    for j in 0..4 {
        m[(0, j)] = left[j][0];
        m[(1, j)] = left[j][1];
        m[(2, j)] = right[j][0];
        m[(3, j)] = right[j][1];
    }
    let c = m.lu().solve(&Vector4::new(0.2, 0.0, 0.0, 0.2)).expect("well posed");
    move |x| {
        let bs = basis(x);
        (0..4).fold((0.0, 0.0), |(a, b), j| (a + c[j] * bs[j][0], b + c[j] * bs[j][1]))
    }
}

#[test]
fn linear_steady_state_converges_to_continuous_solution() {
    let exact = continuous_steady();
    let errors: Vec<f64> = [60, 120, 240]
        .iter()
        .map(|&n| {
            let s = solve(n, &linear_problem(), 1500.0, TIGHT);
            let grid = Grid1D::new(L, n).unwrap();
            grid.xs()
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let (a, b) = exact(x);
                    (s.a[i] - a).abs().max((s.b[i] - b).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "{errors:?}");
    }
}

#[test]
fn boundary_layers_at_both_ends() {
    let s = Scenario::heated_inlet();
    let state = solve(s.intervals, &MicroProblem::new(s.data), 21.0, s.tolerances);
    let grid = s.grid().unwrap();
    let gap: Vec<f64> = state.a.iter().zip(&state.b).map(|(a, b)| (a - b).abs()).collect();
    let mut interior: Vec<f64> = grid.window(2.0, L - 2.0).map(|i| gap[i]).collect();
    interior.sort_by(f64::total_cmp);
    let median = interior[interior.len() / 2];
    let left = grid.window(0.0, 2.0).map(|i| gap[i]).fold(0.0, f64::max);
    let right = grid.window(L - 2.0, L).map(|i| gap[i]).fold(0.0, f64::max);
    assert!(left > median && right > median, "left {left} right {right} median {median}");
}

#[test]
fn boundary_nodes_hold_the_data_after_every_step() {
    let s = Scenario::heated_inlet();
    let cfg = SolveConfig::new(Grid1D::new(L, 120).unwrap(), s.tolerances, vec![3.0]).unwrap();
    let n = 120;
    let mut checked = 0;
    solve_microscale_observed(&cfg, &MicroProblem::new(s.data), None, &mut |m| {
        let (a0, b0) = (s.data.a0.at(m.t), s.data.b0.at(m.t));
        assert_eq!((m.a[0], m.b[0]), (a0, b0));
        assert_eq!((m.a[n], m.b[n]), (s.data.al.at(m.t), s.data.bl.at(m.t)));
        checked += 1;
    })
    .unwrap();
    assert!(checked > 5);
}

#[test]
fn repeated_runs_are_identical() {
    let s = Scenario::heated_inlet();
    let p = MicroProblem::new(s.data);
    let first = solve(150, &p, 6.0, s.tolerances);
    let second = solve(150, &p, 6.0, s.tolerances);
    assert_eq!(first, second);
}
