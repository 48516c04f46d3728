//! Macroscale model `C_t = C^3/2 - 2 C C_x + 4 C_xx`.
//!
//! The unknowns are the interior nodes. A Dirichlet end fixes its node; a
//! Robin end determines its node from the two nearest interior values by
//! solving the boundary relation with the one-sided second-order `C_x`.

use std::fmt;
use std::sync::Arc;

use crate::boundary::{BoundaryData, NumericRobin, RobinBC, Side};
use crate::scalar::rational_to_f64;

use super::integrator::{integrate, OdeSystem};
use super::micro::MicroState;
use super::trajectory::{FieldTrajectory, Snapshot};
use super::{Grid1D, SolveConfig, SolverError};

const BOUNDARY_MAX_ITER: usize = 50;
const BOUNDARY_TOL: f64 = 1e-12;
/// Accepted when Newton can no longer reduce the residual (rounding floor).
const BOUNDARY_STALL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MacroState {
    pub t: f64,
    pub c: Vec<f64>,
}

impl Snapshot for MacroState {
    fn time(&self) -> f64 {
        self.t
    }
    fn fields(&self) -> Vec<(&'static str, &[f64])> {
        vec![("C", &self.c)]
    }
}

type TimeFn<T> = Arc<dyn Fn(f64) -> T + Send + Sync>;
type Source = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Condition imposed at one end of the macroscale domain.
#[derive(Clone)]
pub enum MacroBoundary {
    Dirichlet(TimeFn<f64>),
    Robin(TimeFn<NumericRobin>),
}

impl fmt::Debug for MacroBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MacroBoundary::Dirichlet(_) => f.write_str("Dirichlet(..)"),
            MacroBoundary::Robin(_) => f.write_str("Robin(..)"),
        }
    }
}

impl MacroBoundary {
    /// `C = (a + b) / 2` from the microscale data on that side.
    pub fn mean_of_data(data: BoundaryData, side: Side) -> MacroBoundary {
        MacroBoundary::Dirichlet(Arc::new(move |t| {
            let (a, b) = data.at(side, t);
            0.5 * (a + b)
        }))
    }

    /// A derived Robin condition evaluated on the microscale data of its side.
    pub fn robin(bc: &RobinBC, data: BoundaryData) -> MacroBoundary {
        let side = bc.side;
        let p = bc.p.map_coeffs(rational_to_f64);
        let r = bc.r.map_coeffs(rational_to_f64);
        let q = rational_to_f64(&bc.q);
        MacroBoundary::Robin(Arc::new(move |t| {
            let (x, y) = data.at(side, t);
            NumericRobin { p: p.evaluate(&[x, y]), q, r: r.evaluate(&[x, y]) }
        }))
    }

    /// Robin residual at the end node, `None` for a Dirichlet end.
    pub fn residual(&self, t: f64, c: f64, cx: f64) -> Option<f64> {
        match self {
            MacroBoundary::Dirichlet(_) => None,
            MacroBoundary::Robin(f) => Some(f(t).residual(c, cx)),
        }
    }
}

#[derive(Clone)]
pub struct MacroProblem {
    pub left: MacroBoundary,
    pub right: MacroBoundary,
    /// Extra forcing `S(t, x)` added to the right-hand side.
    pub source: Option<Source>,
}

impl fmt::Debug for MacroProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MacroProblem")
            .field("left", &self.left)
            .field("right", &self.right)
            .field("source", &self.source.as_ref().map(|_| ".."))
            .finish()
    }
}

impl MacroProblem {
    pub fn new(left: MacroBoundary, right: MacroBoundary) -> Self {
        MacroProblem { left, right, source: None }
    }

    pub fn with_source(mut self, source: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(source));
        self
    }

    /// Robin residuals `(left, right)` of a full nodal state.
    pub fn boundary_residuals(&self, grid: &Grid1D, state: &MacroState) -> (Option<f64>, Option<f64>) {
        let (l, r) = one_sided_slopes(&state.c, grid.dx());
        let n = grid.intervals();
        (self.left.residual(state.t, state.c[0], l), self.right.residual(state.t, state.c[n], r))
    }
}

/// Second-order one-sided `C_x` at both ends.
fn one_sided_slopes(c: &[f64], dx: f64) -> (f64, f64) {
    let n = c.len() - 1;
    let left = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * dx);
    let right = (3.0 * c[n] - 4.0 * c[n - 1] + c[n - 2]) / (2.0 * dx);
    (left, right)
}

/// Solves the Robin relation for the end value. `near` and `far` are the
/// first and second interior neighbours.
///
/// With `C_x` tied to the end value the relation is a quadratic `F(c) = 0`.
/// Of its two roots we take the one with `F'(c) > 0`: the end value then
/// rises with the data, as it does for the linear condition, and this is the
/// root reached by continuing the linear one as `Q` is switched on. The
/// closed-form root is polished by Newton.
fn robin_end_value(side: Side, bc: NumericRobin, near: f64, far: f64, dx: f64, t: f64) -> Result<f64, SolverError> {
    // Cx = alpha * c + beta
    let (alpha, beta) = match side {
        Side::Left => (-3.0 / (2.0 * dx), (4.0 * near - far) / (2.0 * dx)),
        Side::Right => (3.0 / (2.0 * dx), (far - 4.0 * near) / (2.0 * dx)),
    };
    let k2 = -bc.q * alpha * alpha;
    let k1 = 1.0 - bc.p * alpha - 2.0 * bc.q * alpha * beta;
    let k0 = -bc.r - bc.p * beta - bc.q * beta * beta;
    let f = |c: f64| bc.residual(c, alpha * c + beta);
    let failure = |c: f64, iterations| SolverError::BoundaryNewton { side: side.name(), t, residual: f(c).abs(), iterations };
    let mut c = if k2 == 0.0 {
        -k0 / k1
    } else {
        let disc = k1 * k1 - 4.0 * k2 * k0;
        if disc < 0.0 {
            let vertex = -k1 / (2.0 * k2);
            return Err(SolverError::BoundaryNoRoot { side: side.name(), t, residual: f(vertex).abs() });
        }
        let sq = disc.sqrt();
        if k1 < 0.0 {
            (sq - k1) / (2.0 * k2)
        } else if k1 + sq > 0.0 {
            -2.0 * k0 / (k1 + sq)
        } else {
            0.0
        }
    };
    if !c.is_finite() {
        return Err(failure(0.0, 0));
    }
    let mut res = f(c);
    for _ in 0..BOUNDARY_MAX_ITER {
        if res.abs() <= BOUNDARY_TOL {
            return Ok(c);
        }
        let next = c - res / (2.0 * k2 * c + k1);
        let next_res = f(next);
        if !(next_res.abs() < res.abs()) {
            if res.abs() <= BOUNDARY_STALL_TOL {
                return Ok(c);
            }
            break;
        }
        c = next;
        res = next_res;
    }
    if res.abs() <= BOUNDARY_TOL {
        return Ok(c);
    }
    Err(failure(c, BOUNDARY_MAX_ITER))
}

struct MacroSystem<'a> {
    grid: Grid1D,
    problem: &'a MacroProblem,
}

impl MacroSystem<'_> {
    fn end_value(&self, side: Side, t: f64, y: &[f64]) -> Result<f64, SolverError> {
        let m = y.len();
        let (bnd, near, far) = match side {
            Side::Left => (&self.problem.left, y[0], y[1]),
            Side::Right => (&self.problem.right, y[m - 1], y[m - 2]),
        };
        match bnd {
            MacroBoundary::Dirichlet(g) => Ok(g(t)),
            MacroBoundary::Robin(g) => robin_end_value(side, g(t), near, far, self.grid.dx(), t),
        }
    }

    fn expand(&self, t: f64, y: &[f64]) -> Result<MacroState, SolverError> {
        let mut c = Vec::with_capacity(y.len() + 2);
        c.push(self.end_value(Side::Left, t, y)?);
        c.extend_from_slice(y);
        c.push(self.end_value(Side::Right, t, y)?);
        Ok(MacroState { t, c })
    }
}

impl OdeSystem for MacroSystem<'_> {
    fn dim(&self) -> usize {
        self.grid.intervals() - 1
    }

    fn bandwidths(&self) -> (usize, usize) {
        (1, 1)
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), SolverError> {
        let left = self.end_value(Side::Left, t, y)?;
        let right = self.end_value(Side::Right, t, y)?;
        let n = self.grid.intervals();
        let dx = self.grid.dx();
        let c = |i: usize| match i {
            0 => left,
            i if i == n => right,
            i => y[i - 1],
        };
        let (c1, c2) = (1.0 / dx, 4.0 / (dx * dx));
        for i in 1..n {
            let (cm, ci, cp) = (c(i - 1), c(i), c(i + 1));
            let mut v = 0.5 * ci * ci * ci - c1 * ci * (cp - cm) + c2 * (cp - 2.0 * ci + cm);
            if let Some(s) = &self.problem.source {
                v += s(t, self.grid.x(i));
            }
            dy[i - 1] = v;
        }
        Ok(())
    }
}

pub fn solve_macroscale_observed(
    cfg: &SolveConfig,
    problem: &MacroProblem,
    initial: Option<&MacroState>,
    observer: &mut dyn FnMut(&MacroState),
) -> Result<FieldTrajectory<MacroState>, SolverError> {
    cfg.validate()?;
    let sys = MacroSystem { grid: cfg.grid, problem };
    let n = cfg.grid.intervals();
    let (t0, y0) = match initial {
        Some(s) if s.c.len() == n + 1 => (s.t, s.c[1..n].to_vec()),
        Some(_) => return Err(SolverError::Config("initial state does not match the grid".into())),
        None => (0.0, vec![0.0; n - 1]),
    };
    let mut failure = None;
    let (ys, stats) = integrate(&sys, t0, &y0, &cfg.snapshots, &cfg.tolerances, &mut |t, y| match sys.expand(t, y) {
        Ok(s) => observer(&s),
        Err(e) => failure = failure.take().or(Some(e)),
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let snapshots = cfg.snapshots.iter().zip(&ys).map(|(&t, y)| sys.expand(t, y)).collect::<Result<Vec<_>, _>>()?;
    Ok(FieldTrajectory { grid: cfg.grid, snapshots, stats })
}

pub fn solve_macroscale(
    cfg: &SolveConfig,
    problem: &MacroProblem,
    initial: Option<&MacroState>,
) -> Result<FieldTrajectory<MacroState>, SolverError> {
    solve_macroscale_observed(cfg, problem, initial, &mut |_| {})
}

/// Interior-model prediction of the microscale fields:
/// `a = C + C^2/2 - C_x`, `b = C - C^2/2 + C_x`.
pub fn reconstruct_micro(state: &MacroState, grid: &Grid1D) -> MicroState {
    let n = grid.intervals();
    let dx = grid.dx();
    let (left, right) = one_sided_slopes(&state.c, dx);
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let ci = state.c[i];
        let cx = match i {
            0 => left,
            i if i == n => right,
            i => (state.c[i + 1] - state.c[i - 1]) / (2.0 * dx),
        };
        a.push(ci + 0.5 * ci * ci - cx);
        b.push(ci - 0.5 * ci * ci + cx);
    }
    MicroState { t: state.t, a, b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Tolerances;

    fn zero_dirichlet() -> MacroProblem {
        MacroProblem::new(MacroBoundary::mean_of_data(BoundaryData::zero(), Side::Left), MacroBoundary::mean_of_data(BoundaryData::zero(), Side::Right))
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SolveConfig::new(Grid1D::new(30.0, 60).unwrap(), Tolerances::default(), vec![2.0, 10.0]).unwrap();
        let traj = solve_macroscale(&cfg, &zero_dirichlet(), None).unwrap();
        assert!(traj.snapshots.iter().all(|s| s.c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn robin_end_value_satisfies_relation() {
        let bc = NumericRobin { p: 0.65, q: 3.0, r: 0.155 };
        let dx = 0.05;
        for side in [Side::Left, Side::Right] {
            let c = robin_end_value(side, bc, 0.2, 0.21, dx, 0.0).unwrap();
            let cx = match side {
                Side::Left => (-3.0 * c + 4.0 * 0.2 - 0.21) / (2.0 * dx),
                Side::Right => (3.0 * c - 4.0 * 0.2 + 0.21) / (2.0 * dx),
            };
            assert!(bc.residual(c, cx).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_of_constant_and_linear_fields() {
        let grid = Grid1D::new(4.0, 8).unwrap();
        let s = MacroState { t: 0.0, c: vec![0.3; 9] };
        let m = reconstruct_micro(&s, &grid);
        assert!(m.a.iter().all(|&v| (v - (0.3 + 0.045)).abs() < 1e-15));
        assert!(m.b.iter().all(|&v| (v - (0.3 - 0.045)).abs() < 1e-15));
        let alpha = 0.1;
        let s = MacroState { t: 0.0, c: grid.xs().iter().map(|x| alpha * x).collect() };
        let m = reconstruct_micro(&s, &grid);
        for (i, x) in grid.xs().iter().enumerate() {
            let expect = alpha * x + 0.5 * alpha * alpha * x * x - alpha;
            assert!((m.a[i] - expect).abs() < 1e-14, "{i}");
        }
    }

    #[test]
    fn robin_root_rises_with_data() {
        let dx = 0.05;
        let cases = [(Side::Left, 0.75, 1.0), (Side::Right, -0.25, -1.0)];
        for (side, p, q) in cases {
            let lo = robin_end_value(side, NumericRobin { p, q, r: 0.14 }, 0.12, 0.115, dx, 0.0).unwrap();
            let hi = robin_end_value(side, NumericRobin { p, q, r: 0.15 }, 0.12, 0.115, dx, 0.0).unwrap();
            assert!(hi > lo, "{side:?}: {lo} {hi}");
        }
    }

    #[test]
    fn unreachable_robin_relation_reports_failure() {
        // C - 3 Cx^2 = 10 has no real root once Cx is tied to C with a large slope
        let bc = NumericRobin { p: 0.0, q: 3.0, r: 10.0 };
        let err = robin_end_value(Side::Left, bc, 0.0, 0.0, 0.05, 1.5).unwrap_err();
        assert!(matches!(err, SolverError::BoundaryNoRoot { side: "left", .. }), "{err}");
    }
}
