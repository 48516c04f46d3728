#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msbc_core::experiment::{compare, derive, simulate_files, BoundarySet, ExperimentError, Mode, Scenario};
use msbc_core::experiment::compare::DEFAULT_RATIO_THRESHOLD;

/// Overrides the comparison ratio threshold.
const SEED_TOLERANCE_VAR: &str = "MSBC_SEED_TOLERANCE";

#[derive(Parser)]
#[command(name = "msbc", version, about = "Macroscale boundary conditions for a two-pipe heat exchanger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normal form, boundary relations and Robin conditions.
    Derive {
        #[arg(long, default_value_t = 3)]
        order: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// One solver run; writes snapshot CSVs and a manifest.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        /// Robin conditions from a previous `derive` (its boundary.txt).
        #[arg(long)]
        bc: Option<PathBuf>,
    },
    /// Microscale reference against the macroscale modes.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        /// Also run the Robin conditions of the spatial system as given.
        #[arg(long)]
        with_printed_bc: bool,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| {
        let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn read(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn threshold() -> Result<f64, ExperimentError> {
    match std::env::var(SEED_TOLERANCE_VAR) {
        Err(_) => Ok(DEFAULT_RATIO_THRESHOLD),
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
            .ok_or_else(|| ExperimentError::Validation(format!("{SEED_TOLERANCE_VAR}: '{s}' is not a positive number"))),
    }
}

fn boundaries(bc: Option<&Path>, order: u32) -> Result<BoundarySet, ExperimentError> {
    match bc {
        Some(path) => BoundarySet::from_text(&read(path)?),
        None => BoundarySet::derive(order),
    }
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Derive { order, out } => {
            let d = derive(order)?;
            write_all(&out, &d.files())?;
            let cv = &d.cross_validation;
            if !cv.passed() {
                return Err(ExperimentError::Validation(format!(
                    "embedding cross-check failed: max scaled difference {:e} exceeds {:e}",
                    cv.max_scaled_discrepancy, cv.tolerance
                )));
            }
            println!("wrote {}", out.display());
        }
        Command::Simulate { scenario, mode, out, bc } => {
            let s = Scenario::parse(&read(&scenario)?)?;
            let bcs = boundaries(bc.as_deref(), s.order)?;
            write_all(&out, &simulate_files(&s, mode, &bcs)?)?;
            println!("wrote {}", out.display());
        }
        Command::Compare { scenario, out, window, with_printed_bc } => {
            let mut s = Scenario::parse(&read(&scenario)?)?;
            if let Some(w) = window {
                if !(w[0] <= w[1]) {
                    return Err(ExperimentError::Validation("window needs LO <= HI".into()));
                }
                s.window = (w[0], w[1]);
            }
            let threshold = threshold()?;
            let d = derive(s.order)?;
            let bcs = BoundarySet::from_derivation(&d);
            let c = compare(&s, &bcs, Some(d.cross_validation.clone()), with_printed_bc, threshold)?;
            write_all(&out, &c.files())?;
            print!("{}", c.report());
            if !d.cross_validation.passed() {
                return Err(ExperimentError::Validation("embedding cross-check failed".into()));
            }
            if c.check() == Some(false) {
                return Err(ExperimentError::Validation(format!(
                    "ratio {} exceeds {threshold}",
                    c.final_ratio().map_or("n/a".into(), |r| r.to_string())
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("msbc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
