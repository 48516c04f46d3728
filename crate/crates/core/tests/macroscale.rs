use std::f64::consts::PI;
use std::sync::Arc;

use msbc_core::boundary::{NumericRobin, Side};
use msbc_core::experiment::{BoundarySet, Mode, Scenario};
use msbc_core::solvers::{
    solve_macroscale, solve_macroscale_observed, Grid1D, MacroBoundary, MacroProblem, SolveConfig, SolverError, Tolerances,
};

const L: f64 = 30.0;
const T_END: f64 = 4.0;
const TIGHT: Tolerances = Tolerances { rtol: 1e-11, atol: 1e-12 };

/// `C* = 0.1 sin(pi x / L) e^{-t/10} + shift`, with its derivatives.
#[derive(Clone, Copy)]
struct Manufactured {
    shift: f64,
    phase: f64,
}

impl Manufactured {
    fn parts(&self, t: f64, x: f64) -> (f64, f64, f64, f64) {
        let k = PI / L;
        let e = 0.1 * (-t / 10.0).exp();
        let arg = k * x + self.phase;
        let c = e * arg.sin() + self.shift;
        let ct = -e * arg.sin() / 10.0;
        let cx = e * k * arg.cos();
        let cxx = -e * k * k * arg.sin();
        (c, ct, cx, cxx)
    }

    fn value(&self, t: f64, x: f64) -> f64 {
        self.parts(t, x).0
    }

    /// Forcing that makes `C*` an exact solution of `C_t = C^3/2 - 2 C C_x + 4 C_xx + S`.
    fn source(self) -> impl Fn(f64, f64) -> f64 + Send + Sync {
        move |t, x| {
            let (c, ct, cx, cxx) = self.parts(t, x);
            ct - (0.5 * c * c * c - 2.0 * c * cx + 4.0 * cxx)
        }
    }
}

fn max_nodal_error(problem: &MacroProblem, m: Manufactured, n: usize) -> f64 {
    let grid = Grid1D::new(L, n).unwrap();
    let initial = msbc_core::solvers::MacroState { t: 0.0, c: grid.xs().iter().map(|&x| m.value(0.0, x)).collect() };
    let cfg = SolveConfig::new(grid, TIGHT, vec![T_END]).unwrap();
    let tr = solve_macroscale(&cfg, problem, Some(&initial)).unwrap();
    tr.last().c.iter().zip(grid.xs()).map(|(c, x)| (c - m.value(T_END, x)).abs()).fold(0.0, f64::max)
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn manufactured_dirichlet_solution_converges_at_second_order() {
    let m = Manufactured { shift: 0.0, phase: 0.0 };
    let problem = MacroProblem::new(
        MacroBoundary::Dirichlet(Arc::new(move |t| m.value(t, 0.0))),
        MacroBoundary::Dirichlet(Arc::new(move |t| m.value(t, L))),
    )
    .with_source(m.source());
    let errors: Vec<f64> = [30, 60, 120].iter().map(|&n| max_nodal_error(&problem, m, n)).collect();
    let orders = observed_orders(&errors);
    assert!(orders.iter().all(|&p| p >= 1.9), "errors {errors:?} orders {orders:?}");
}

#[test]
fn manufactured_robin_solution_converges_at_second_order() {
    // offset and phase so C and Cx are both nonzero at the ends
    let m = Manufactured { shift: 0.05, phase: 0.4 };
    let robin = |x: f64, p: f64, q: f64| -> MacroBoundary {
        MacroBoundary::Robin(Arc::new(move |t| {
            let (c, _, cx, _) = m.parts(t, x);
            NumericRobin { p, q, r: c - p * cx - q * cx * cx }
        }))
    };
    let problem = MacroProblem::new(robin(0.0, 0.5, 1.0), robin(L, -0.5, -1.0)).with_source(m.source());
    let errors: Vec<f64> = [30, 60, 120].iter().map(|&n| max_nodal_error(&problem, m, n)).collect();
    let orders = observed_orders(&errors);
    assert!(orders.iter().all(|&p| p >= 1.9), "errors {errors:?} orders {orders:?}");
}

#[test]
fn robin_residual_stays_below_tolerance_after_every_step() {
    let s = Scenario::heated_inlet();
    let bcs = BoundarySet::derive(3).unwrap();
    for mode in [Mode::MacroRobin, Mode::MacroRobinLinear] {
        let problem = bcs.problem(mode, &s).unwrap();
        let grid = s.grid().unwrap();
        let mut worst: f64 = 0.0;
        let mut steps = 0;
        solve_macroscale_observed(&s.solve_config().unwrap(), &problem, None, &mut |state| {
            let (l, r) = problem.boundary_residuals(&grid, state);
            worst = worst.max(l.unwrap().abs()).max(r.unwrap().abs());
            steps += 1;
        })
        .unwrap();
        assert!(steps > 10);
        assert!(worst <= 1e-9, "{}: {worst:e}", mode.name());
    }
}

#[test]
fn dirichlet_mode_imposes_the_mean_of_the_data() {
    let s = Scenario::heated_inlet();
    let bcs = BoundarySet::derive(3).unwrap();
    let problem = bcs.problem(Mode::MacroDirichlet, &s).unwrap();
    let tr = solve_macroscale(&s.solve_config().unwrap(), &problem, None).unwrap();
    let c = &tr.last().c;
    let f = 21.0f64.tanh().powi(2);
    assert!((c[0] - 0.1 * f).abs() < 1e-15);
    assert_eq!(c[c.len() - 1], 0.1);
}

#[test]
fn printed_relation_loses_its_right_root_early() {
    // the as-given spatial system's right condition folds at C = R + P^2 / (4 |Q|) ~ 0.148
    let s = Scenario::heated_inlet();
    let bcs = BoundarySet::derive(3).unwrap();
    let problem = bcs.problem(Mode::MacroRobinPrinted, &s).unwrap();
    let err = solve_macroscale(&s.solve_config().unwrap(), &problem, None).unwrap_err();
    match err {
        SolverError::BoundaryNoRoot { side, t, .. } => {
            assert_eq!(side, Side::Right.name());
            assert!(t > 1.0 && t < 2.5, "t = {t}");
        }
        other => panic!("unexpected {other}"),
    }
}
