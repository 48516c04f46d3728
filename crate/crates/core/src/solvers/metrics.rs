//! Interior discrepancy between a macroscale solution and the microscale
//! reference it is meant to describe.

use super::macroscale::{reconstruct_micro, MacroState};
use super::micro::MicroState;
use super::{Grid1D, SolverError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorError {
    /// Max of `|C - (a + b)/2|` over the window.
    pub linf_mean: f64,
    /// `sqrt(sum e^2 dx)` of the same difference.
    pub l2_mean: f64,
    /// Max over both fields of the reconstructed-minus-micro difference.
    pub linf_fields: f64,
}

struct Differences {
    mean: Vec<f64>,
    fields: Vec<f64>,
}

fn differences(micro: &MicroState, macro_state: &MacroState, grid: &Grid1D, window: (f64, f64)) -> Result<Differences, SolverError> {
    if micro.t != macro_state.t {
        return Err(SolverError::Config(format!("time stamps differ: micro {} vs macro {}", micro.t, macro_state.t)));
    }
    let n = grid.nodes();
    if micro.a.len() != n || micro.b.len() != n || macro_state.c.len() != n {
        return Err(SolverError::Config("states do not match the grid".into()));
    }
    let range = grid.window(window.0, window.1);
    if range.is_empty() {
        return Err(SolverError::Config(format!("window [{}, {}] contains no grid nodes", window.0, window.1)));
    }
    let recon = reconstruct_micro(macro_state, grid);
    let mut mean = Vec::new();
    let mut fields = Vec::new();
    for i in range {
        mean.push((macro_state.c[i] - 0.5 * (micro.a[i] + micro.b[i])).abs());
        fields.push((recon.a[i] - micro.a[i]).abs());
        fields.push((recon.b[i] - micro.b[i]).abs());
    }
    Ok(Differences { mean, fields })
}

/// Single pass with running maxima.
pub fn interior_error(micro: &MicroState, macro_state: &MacroState, grid: &Grid1D, window: (f64, f64)) -> Result<InteriorError, SolverError> {
    let d = differences(micro, macro_state, grid, window)?;
    let mut linf_mean: f64 = 0.0;
    let mut sq = 0.0;
    for e in &d.mean {
        linf_mean = linf_mean.max(*e);
        sq += e * e;
    }
    let linf_fields = d.fields.iter().fold(0.0f64, |m, e| m.max(*e));
    Ok(InteriorError { linf_mean, l2_mean: (sq * grid.dx()).sqrt(), linf_fields })
}

/// Same metrics by sorting: maxima are the last elements, and the sum of
/// squares is accumulated smallest first.
pub fn interior_error_sorted(
    micro: &MicroState,
    macro_state: &MacroState,
    grid: &Grid1D,
    window: (f64, f64),
) -> Result<InteriorError, SolverError> {
    let mut d = differences(micro, macro_state, grid, window)?;
    d.mean.sort_by(f64::total_cmp);
    d.fields.sort_by(f64::total_cmp);
    let sq: f64 = d.mean.iter().map(|e| e * e).sum();
    Ok(InteriorError {
        linf_mean: *d.mean.last().expect("non-empty window"),
        l2_mean: (sq * grid.dx()).sqrt(),
        linf_fields: *d.fields.last().expect("non-empty window"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_mean_gives_zero_mean_error() {
        let grid = Grid1D::new(30.0, 30).unwrap();
        let c: Vec<f64> = grid.xs().iter().map(|x| 0.01 * x).collect();
        let macro_state = MacroState { t: 1.0, c };
        let micro = reconstruct_micro(&macro_state, &grid);
        let e = interior_error(&micro, &macro_state, &grid, (5.0, 25.0)).unwrap();
        assert_eq!(e.linf_fields, 0.0);
        assert!(e.linf_mean < 1e-16 && e.l2_mean < 1e-15);
    }

    #[test]
    fn empty_window_is_an_error() {
        let grid = Grid1D::new(30.0, 10).unwrap();
        let m = MacroState { t: 0.0, c: vec![0.0; 11] };
        let micro = MicroState::zero(&grid);
        assert!(interior_error(&micro, &m, &grid, (4.0, 5.0)).is_err());
        assert!(interior_error(&micro, &m, &grid, (3.0, 3.0)).is_ok());
    }
}
