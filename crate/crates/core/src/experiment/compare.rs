//! Microscale reference against the macroscale model under each boundary
//! treatment, over an interior window.

use std::fmt::Write as _;

use crate::normal_form::CrossValidation;
use crate::solvers::{interior_error, FieldTrajectory, InteriorError, MacroState, MicroState, SolverError};

use super::run::{run, BoundarySet, Mode, RunOutput};
use super::{ExperimentError, Scenario};

/// Default bound on `Linf_mean(macro-robin) / Linf_mean(macro-dirichlet)`.
pub const DEFAULT_RATIO_THRESHOLD: f64 = 0.5;

const MACRO_MODES: [Mode; 3] = [Mode::MacroDirichlet, Mode::MacroRobin, Mode::MacroRobinLinear];

/// Metric as printed in the report, re-read so that ratios are exact
/// quotients of the tabulated numbers.
fn tabulated(v: f64) -> f64 {
    format!("{v:.6e}").parse().expect("formatted float")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub mode: Mode,
    /// Metrics rounded to the printed precision.
    pub error: InteriorError,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub scenario: Scenario,
    pub cross_validation: Option<CrossValidation>,
    pub boundaries: BoundarySet,
    pub micro: FieldTrajectory<MicroState>,
    pub macros: Vec<(Mode, FieldTrajectory<MacroState>)>,
    /// Optional runs that failed, with the solver diagnostic.
    pub failures: Vec<(Mode, SolverError)>,
    pub rows: Vec<ComparisonRow>,
    pub threshold: f64,
}

/// Runs the microscale reference and the macroscale modes (in parallel) and
/// tabulates interior errors at every snapshot. `include_printed` adds the
/// run with the as-given Robin conditions; its failure is recorded rather
/// than propagated.
pub fn compare(
    scenario: &Scenario,
    boundaries: &BoundarySet,
    cross_validation: Option<CrossValidation>,
    include_printed: bool,
    threshold: f64,
) -> Result<Comparison, ExperimentError> {
    scenario.validate()?;
    let mut modes = vec![Mode::Micro];
    modes.extend(MACRO_MODES);
    if include_printed {
        modes.push(Mode::MacroRobinPrinted);
    }
    let outcomes: Vec<(Mode, Result<RunOutput, SolverError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = modes.iter().map(|&m| (m, s.spawn(move || run(scenario, m, boundaries)))).collect();
        handles.into_iter().map(|(m, h)| (m, h.join().expect("solver thread panicked"))).collect()
    });
    let mut micro = None;
    let mut macros = Vec::new();
    let mut failures = Vec::new();
    for (mode, outcome) in outcomes {
        match (mode, outcome) {
            (_, Ok(RunOutput::Micro(t))) => micro = Some(t),
            (_, Ok(RunOutput::Macro(t))) => macros.push((mode, t)),
            (Mode::MacroRobinPrinted, Err(e)) => failures.push((mode, e)),
            (_, Err(e)) => return Err(ExperimentError::Numerical(format!("{}: {e}", mode.name()))),
        }
    }
    let micro = micro.expect("microscale run is always requested");
    let grid = scenario.grid()?;
    let mut rows = Vec::new();
    for (k, m) in micro.snapshots.iter().enumerate() {
        for (mode, traj) in &macros {
            let e = interior_error(m, &traj.snapshots[k], &grid, scenario.window)?;
            let error = InteriorError { linf_mean: tabulated(e.linf_mean), l2_mean: tabulated(e.l2_mean), linf_fields: tabulated(e.linf_fields) };
            rows.push(ComparisonRow { t: m.t, mode: *mode, error });
        }
    }
    Ok(Comparison {
        scenario: scenario.clone(),
        cross_validation,
        boundaries: boundaries.clone(),
        micro,
        macros,
        failures,
        rows,
        threshold,
    })
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

fn ratio_text(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

impl Comparison {
    fn row(&self, t: f64, mode: Mode) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.t == t && r.mode == mode)
    }

    /// Metric ratios of `mode` against the Dirichlet heuristic at time `t`.
    pub fn ratios(&self, t: f64, mode: Mode) -> Option<[Option<f64>; 3]> {
        let r = self.row(t, mode)?;
        let d = self.row(t, Mode::MacroDirichlet)?;
        Some([
            ratio(r.error.linf_mean, d.error.linf_mean),
            ratio(r.error.l2_mean, d.error.l2_mean),
            ratio(r.error.linf_fields, d.error.linf_fields),
        ])
    }

    /// `Linf_mean` ratio of the derived Robin run at the final snapshot.
    pub fn final_ratio(&self) -> Option<f64> {
        self.ratios(self.scenario.t_end, Mode::MacroRobin).and_then(|r| r[0])
    }

    /// `None` when the ratio is undefined (zero heuristic error).
    pub fn check(&self) -> Option<bool> {
        self.final_ratio().map(|r| r <= self.threshold)
    }

    pub fn report(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        writeln!(out, "# comparison: scenario {}", s.name).unwrap();
        writeln!(
            out,
            "# grid: L = {}, n = {}, dx = {}; rtol = {:e}, atol = {:e}",
            s.length,
            s.intervals,
            s.length / s.intervals as f64,
            s.tolerances.rtol,
            s.tolerances.atol
        )
        .unwrap();
        writeln!(out, "# window: [{}, {}]", s.window.0, s.window.1).unwrap();
        match &self.cross_validation {
            Some(cv) => writeln!(
                out,
                "# derivation: order {}; embedding cross-check {} (max difference {:.1e})",
                s.order,
                if cv.passed() { "pass" } else { "FAIL" },
                cv.max_discrepancy
            )
            .unwrap(),
            None => writeln!(out, "# derivation: boundary conditions read from file").unwrap(),
        }
        writeln!(out, "# macro-robin {}", self.boundaries.derived.0).unwrap();
        writeln!(out, "# macro-robin {}", self.boundaries.derived.1).unwrap();
        writeln!(out, "# ratios are relative to macro-dirichlet").unwrap();
        writeln!(out, "t mode linf_mean l2_mean linf_fields ratio_linf_mean ratio_l2_mean ratio_linf_fields").unwrap();
        for r in &self.rows {
            let [a, b, c] = self.ratios(r.t, r.mode).unwrap_or([None; 3]);
            writeln!(
                out,
                "{} {} {:.6e} {:.6e} {:.6e} {} {} {}",
                r.t,
                r.mode.name(),
                r.error.linf_mean,
                r.error.l2_mean,
                r.error.linf_fields,
                ratio_text(a),
                ratio_text(b),
                ratio_text(c)
            )
            .unwrap();
        }
        for (mode, e) in &self.failures {
            writeln!(out, "# {} failed: {e}", mode.name()).unwrap();
        }
        let verdict = match self.check() {
            None => "n/a".to_string(),
            Some(true) => "pass".to_string(),
            Some(false) => "FAIL".to_string(),
        };
        writeln!(
            out,
            "check: linf_mean ratio macro-robin/macro-dirichlet at t = {}: {} <= {}: {verdict}",
            s.t_end,
            ratio_text(self.final_ratio()),
            self.threshold
        )
        .unwrap();
        out
    }

    /// Columnar overlay files, one per snapshot, and a gnuplot script.
    pub fn plot_files(&self) -> Vec<(String, String)> {
        let grid = self.micro.grid;
        let xs = grid.xs();
        let mut files = Vec::new();
        let mut script = String::from("set terminal pngcairo size 1000,640\nset xlabel 'x'\nset ylabel 'temperature'\nset key outside right\n");
        for (k, m) in self.micro.snapshots.iter().enumerate() {
            let name = format!("{}_overlay_t{}", self.scenario.name, m.t);
            let mut header = vec!["x", "micro_a", "micro_b", "micro_mean"];
            for (mode, _) in &self.macros {
                header.push(mode.name());
            }
            let mut dat = format!("# t = {}\n# {}\n", m.t, header.join(" "));
            let mean = m.mean();
            for (i, x) in xs.iter().enumerate() {
                write!(dat, "{x} {} {} {}", m.a[i], m.b[i], mean[i]).unwrap();
                for (_, traj) in &self.macros {
                    write!(dat, " {}", traj.snapshots[k].c[i]).unwrap();
                }
                dat.push('\n');
            }
            writeln!(script, "set output '{name}.png'").unwrap();
            writeln!(script, "set title 't = {}'", m.t).unwrap();
            let mut plots = vec![
                format!("'{name}.dat' using 1:2 with lines title 'a (micro)'"),
                format!("'' using 1:3 with lines title 'b (micro)'"),
                format!("'' using 1:4 with lines dashtype 2 title '(a+b)/2 (micro)'"),
            ];
            for (j, (mode, _)) in self.macros.iter().enumerate() {
                plots.push(format!("'' using 1:{} with lines title 'C ({})'", 5 + j, mode.name()));
            }
            writeln!(script, "plot {}", plots.join(", \\\n     ")).unwrap();
            files.push((format!("{name}.dat"), dat));
        }
        files.push(("plot.gp".to_string(), script));
        files
    }

    pub fn files(&self) -> Vec<(String, String)> {
        let mut files = vec![("comparison.txt".to_string(), self.report())];
        files.extend(self.plot_files());
        files
    }
}
