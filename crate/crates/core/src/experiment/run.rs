use std::fmt::Write as _;

use crate::boundary::{RobinBC, Side};
use crate::solvers::{
    snapshot_file_name, solve_macroscale, solve_microscale, FieldTrajectory, MacroBoundary, MacroProblem, MacroState,
    MicroProblem, MicroState, Snapshot, SolverError, Stats,
};

use crate::spatial::{build_embedding, Embedding};

use super::derivation::{consistent_system, derive_boundary, parse_boundary_text};
use super::{Derivation, ExperimentError, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Micro,
    /// `C` fixed to the mean of the microscale data.
    MacroDirichlet,
    /// Derived nonlinear Robin conditions.
    MacroRobin,
    /// Their linearisation at zero data.
    MacroRobinLinear,
    /// Robin conditions derived from the spatial system with its quadratic
    /// terms as given, not matched to the microscale PDE.
    MacroRobinPrinted,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Micro, Mode::MacroDirichlet, Mode::MacroRobin, Mode::MacroRobinLinear, Mode::MacroRobinPrinted];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Micro => "micro",
            Mode::MacroDirichlet => "macro-dirichlet",
            Mode::MacroRobin => "macro-robin",
            Mode::MacroRobinLinear => "macro-robin-linear",
            Mode::MacroRobinPrinted => "macro-robin-printed",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// The Robin pairs a run may need.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySet {
    pub derived: (RobinBC, RobinBC),
    pub printed: (RobinBC, RobinBC),
}

impl BoundarySet {
    pub fn from_derivation(d: &Derivation) -> BoundarySet {
        BoundarySet {
            derived: (d.consistent.left.clone(), d.consistent.right.clone()),
            printed: (d.printed.left.clone(), d.printed.right.clone()),
        }
    }

    /// Both pairs from the exact derivation alone, without the float
    /// cross-check.
    pub fn derive(order: u32) -> Result<BoundarySet, ExperimentError> {
        if order < 2 {
            return Err(ExperimentError::Validation(format!("order must be at least 2, got {order}")));
        }
        let printed = derive_boundary(&build_embedding(Embedding::A), order)?;
        let derived = derive_boundary(&consistent_system(), order)?;
        Ok(BoundarySet { derived: (derived.left, derived.right), printed: (printed.left, printed.right) })
    }

    /// Reads a `boundary.txt` written by the derivation.
    pub fn from_text(text: &str) -> Result<BoundarySet, ExperimentError> {
        Ok(BoundarySet { derived: parse_boundary_text(text, "consistent")?, printed: parse_boundary_text(text, "printed")? })
    }

    /// The macroscale problem for `mode`; `None` for the microscale mode.
    pub fn problem(&self, mode: Mode, scenario: &Scenario) -> Option<MacroProblem> {
        let data = scenario.data;
        let robin = |pair: &(RobinBC, RobinBC)| {
            MacroProblem::new(MacroBoundary::robin(&pair.0, data), MacroBoundary::robin(&pair.1, data))
        };
        match mode {
            Mode::Micro => None,
            Mode::MacroDirichlet => Some(MacroProblem::new(
                MacroBoundary::mean_of_data(data, Side::Left),
                MacroBoundary::mean_of_data(data, Side::Right),
            )),
            Mode::MacroRobin => Some(robin(&self.derived)),
            Mode::MacroRobinLinear => Some(robin(&(self.derived.0.linearised(), self.derived.1.linearised()))),
            Mode::MacroRobinPrinted => Some(robin(&self.printed)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum RunOutput {
    Micro(FieldTrajectory<MicroState>),
    Macro(FieldTrajectory<MacroState>),
}

impl RunOutput {
    pub fn stats(&self) -> Stats {
        match self {
            RunOutput::Micro(t) => t.stats,
            RunOutput::Macro(t) => t.stats,
        }
    }

    fn csv_files(&self, scenario: &str, mode: Mode) -> Vec<(String, String)> {
        fn files<S: Snapshot>(t: &FieldTrajectory<S>, scenario: &str, mode: Mode) -> Vec<(String, String)> {
            t.snapshots.iter().map(|s| (snapshot_file_name(scenario, mode.name(), s.time()), t.snapshot_csv(s))).collect()
        }
        match self {
            RunOutput::Micro(t) => files(t, scenario, mode),
            RunOutput::Macro(t) => files(t, scenario, mode),
        }
    }
}

pub fn run(scenario: &Scenario, mode: Mode, bcs: &BoundarySet) -> Result<RunOutput, SolverError> {
    let cfg = scenario.solve_config()?;
    match bcs.problem(mode, scenario) {
        None => solve_microscale(&cfg, &MicroProblem::new(scenario.data), None).map(RunOutput::Micro),
        Some(p) => solve_macroscale(&cfg, &p, None).map(RunOutput::Macro),
    }
}

/// Snapshot CSVs plus `manifest.txt` for one run.
pub fn simulate_files(scenario: &Scenario, mode: Mode, bcs: &BoundarySet) -> Result<Vec<(String, String)>, ExperimentError> {
    let out = run(scenario, mode, bcs)?;
    let mut files = out.csv_files(&scenario.name, mode);
    let mut manifest = String::new();
    writeln!(manifest, "tool msbc {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(manifest, "mode {}", mode.name()).unwrap();
    if matches!(mode, Mode::MacroRobin | Mode::MacroRobinLinear | Mode::MacroRobinPrinted) {
        let pair = match mode {
            Mode::MacroRobinPrinted => bcs.printed.clone(),
            Mode::MacroRobinLinear => (bcs.derived.0.linearised(), bcs.derived.1.linearised()),
            _ => bcs.derived.clone(),
        };
        writeln!(manifest, "robin {}", pair.0).unwrap();
        writeln!(manifest, "robin {}", pair.1).unwrap();
    }
    let stats = out.stats();
    writeln!(manifest, "steps accepted {} rejected {} newton-failures {}", stats.accepted, stats.rejected, stats.newton_failures)
        .unwrap();
    for (name, _) in &files {
        writeln!(manifest, "file {name}").unwrap();
    }
    writeln!(manifest, "# scenario").unwrap();
    manifest.push_str(&scenario.to_text());
    files.push(("manifest.txt".to_string(), manifest));
    Ok(files)
}
