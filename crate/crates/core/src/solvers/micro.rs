//! Microscale system
//!
//! ```text
//! a_t = (b - a)/2 + a^2/2 - a_x + 3 a_xx
//! b_t = (a - b)/2 - b^2/2 + b_x + 3 b_xx
//! ```
//!
//! with Dirichlet data at both ends. Unknowns are the interior nodes,
//! interleaved as `(a_1, b_1, a_2, b_2, ...)` so the Jacobian is pentadiagonal.

use crate::boundary::{BoundaryData, Side};

use super::integrator::{integrate, OdeSystem};
use super::trajectory::{FieldTrajectory, Snapshot};
use super::{Grid1D, SolveConfig, SolverError};

#[derive(Clone, Debug, PartialEq)]
pub struct MicroState {
    pub t: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl MicroState {
    pub fn zero(grid: &Grid1D) -> MicroState {
        MicroState { t: 0.0, a: vec![0.0; grid.nodes()], b: vec![0.0; grid.nodes()] }
    }

    /// `(a + b) / 2` at every node.
    pub fn mean(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

impl Snapshot for MicroState {
    fn time(&self) -> f64 {
        self.t
    }
    fn fields(&self) -> Vec<(&'static str, &[f64])> {
        vec![("a", &self.a), ("b", &self.b)]
    }
}

/// Switches for the individual terms; all on is the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MicroTerms {
    pub exchange: bool,
    pub reaction: bool,
    pub advection: bool,
    pub diffusion: bool,
}

impl Default for MicroTerms {
    fn default() -> Self {
        MicroTerms { exchange: true, reaction: true, advection: true, diffusion: true }
    }
}

impl MicroTerms {
    /// Everything except the quadratic reaction.
    pub fn linear() -> Self {
        MicroTerms { reaction: false, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicroProblem {
    pub data: BoundaryData,
    pub terms: MicroTerms,
}

impl MicroProblem {
    pub fn new(data: BoundaryData) -> Self {
        MicroProblem { data, terms: MicroTerms::default() }
    }
}

struct MicroSystem<'a> {
    grid: Grid1D,
    problem: &'a MicroProblem,
}

impl MicroSystem<'_> {
    fn interior(&self) -> usize {
        self.grid.intervals() - 1
    }

    /// Full nodal arrays from the unknown vector at time `t`.
    fn expand(&self, t: f64, y: &[f64]) -> MicroState {
        let n = self.grid.intervals();
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        (a[0], b[0]) = self.problem.data.at(Side::Left, t);
        (a[n], b[n]) = self.problem.data.at(Side::Right, t);
        for i in 1..n {
            a[i] = y[2 * (i - 1)];
            b[i] = y[2 * (i - 1) + 1];
        }
        MicroState { t, a, b }
    }
}

impl OdeSystem for MicroSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.interior()
    }

    fn bandwidths(&self) -> (usize, usize) {
        (2, 2)
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), SolverError> {
        let n = self.grid.intervals();
        let dx = self.grid.dx();
        let terms = self.problem.terms;
        let (al, bl) = self.problem.data.at(Side::Left, t);
        let (ar, br) = self.problem.data.at(Side::Right, t);
        let a = |i: usize| match i {
            0 => al,
            i if i == n => ar,
            i => y[2 * (i - 1)],
        };
        let b = |i: usize| match i {
            0 => bl,
            i if i == n => br,
            i => y[2 * (i - 1) + 1],
        };
        let (c1, c2) = (0.5 / dx, 3.0 / (dx * dx));
        for i in 1..n {
            let (am, ai, ap) = (a(i - 1), a(i), a(i + 1));
            let (bm, bi, bp) = (b(i - 1), b(i), b(i + 1));
            let mut da = 0.0;
            let mut db = 0.0;
            if terms.exchange {
                da += 0.5 * (bi - ai);
                db += 0.5 * (ai - bi);
            }
            if terms.reaction {
                da += 0.5 * ai * ai;
                db -= 0.5 * bi * bi;
            }
            if terms.advection {
                da -= c1 * (ap - am);
                db += c1 * (bp - bm);
            }
            if terms.diffusion {
                da += c2 * (ap - 2.0 * ai + am);
                db += c2 * (bp - 2.0 * bi + bm);
            }
            dy[2 * (i - 1)] = da;
            dy[2 * (i - 1) + 1] = db;
        }
        Ok(())
    }
}

/// Integrates from `initial` (zero if `None`, at `t = 0`) and returns the
/// state at every snapshot time. `observer` sees every accepted step.
pub fn solve_microscale_observed(
    cfg: &SolveConfig,
    problem: &MicroProblem,
    initial: Option<&MicroState>,
    observer: &mut dyn FnMut(&MicroState),
) -> Result<FieldTrajectory<MicroState>, SolverError> {
    cfg.validate()?;
    let sys = MicroSystem { grid: cfg.grid, problem };
    let start = initial.cloned().unwrap_or_else(|| MicroState::zero(&cfg.grid));
    if start.a.len() != cfg.grid.nodes() || start.b.len() != cfg.grid.nodes() {
        return Err(SolverError::Config("initial state does not match the grid".into()));
    }
    let y0: Vec<f64> = (1..cfg.grid.intervals()).flat_map(|i| [start.a[i], start.b[i]]).collect();
    let (ys, stats) = integrate(&sys, start.t, &y0, &cfg.snapshots, &cfg.tolerances, &mut |t, y| observer(&sys.expand(t, y)))?;
    let snapshots = cfg.snapshots.iter().zip(&ys).map(|(&t, y)| sys.expand(t, y)).collect();
    Ok(FieldTrajectory { grid: cfg.grid, snapshots, stats })
}

pub fn solve_microscale(
    cfg: &SolveConfig,
    problem: &MicroProblem,
    initial: Option<&MicroState>,
) -> Result<FieldTrajectory<MicroState>, SolverError> {
    solve_microscale_observed(cfg, problem, initial, &mut |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Signal;
    use crate::solvers::Tolerances;

    fn cfg(n: usize, times: Vec<f64>) -> SolveConfig {
        SolveConfig::new(Grid1D::new(30.0, n).unwrap(), Tolerances::default(), times).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let traj = solve_microscale(&cfg(40, vec![1.0, 5.0]), &MicroProblem::new(BoundaryData::zero()), None).unwrap();
        for s in &traj.snapshots {
            assert!(s.a.iter().chain(&s.b).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn boundary_nodes_carry_data() {
        let mut data = BoundaryData::zero();
        data.a0 = Signal::TanhSquared(0.2);
        data.bl = Signal::Constant(0.2);
        let traj = solve_microscale(&cfg(60, vec![0.5, 2.0]), &MicroProblem::new(data), None).unwrap();
        for s in &traj.snapshots {
            assert_eq!(s.a[0], data.a0.at(s.t));
            assert_eq!(s.b[60], 0.2);
            assert_eq!(s.b[0], 0.0);
        }
    }

    #[test]
    fn exchange_only_conserves_total_heat() {
        // with only exchange the nodal sum of a + b is invariant
        let grid = Grid1D::new(10.0, 20).unwrap();
        let cfg = SolveConfig::new(grid, Tolerances { rtol: 1e-10, atol: 1e-12 }, vec![3.0]).unwrap();
        let problem = MicroProblem {
            data: BoundaryData::zero(),
            terms: MicroTerms { exchange: true, reaction: false, advection: false, diffusion: false },
        };
        let mut init = MicroState::zero(&grid);
        for i in 1..20 {
            let x = grid.x(i);
            init.a[i] = (x / 3.0).sin();
            init.b[i] = 0.1 * x;
        }
        let before: f64 = init.a.iter().zip(&init.b).map(|(a, b)| a + b).sum::<f64>() * grid.dx();
        let traj = solve_microscale(&cfg, &problem, Some(&init)).unwrap();
        let s = traj.last();
        let after: f64 = s.a.iter().zip(&s.b).map(|(a, b)| a + b).sum::<f64>() * grid.dx();
        assert!((before - after).abs() < 1e-9, "{before} vs {after}");
    }
}
