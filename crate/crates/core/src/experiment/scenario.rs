//! Scenario files: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment.
//!
//! ```text
//! [scenario]
//! name = heated-inlet
//! length = 30
//! t_end = 21
//! snapshots = 5 21
//!
//! [boundary]
//! a0 = 0.2*tanh2
//! bL = 0.2
//!
//! [solver]
//! intervals = 600
//! rtol = 1e-8
//! atol = 1e-8
//!
//! [compare]
//! window = 5 25
//! order = 3
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::boundary::{BoundaryData, Signal};
use crate::solvers::{Grid1D, SolveConfig, SolverError, Tolerances};

use super::ExperimentError;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub length: f64,
    pub t_end: f64,
    /// Ascending; the last equals `t_end`.
    pub snapshots: Vec<f64>,
    pub data: BoundaryData,
    pub intervals: usize,
    pub tolerances: Tolerances,
    pub window: (f64, f64),
    /// Truncation order of the derivation behind the Robin conditions.
    pub order: u32,
}

const KEYS: &[(&str, &[&str])] = &[
    ("scenario", &["name", "length", "t_end", "snapshots"]),
    ("boundary", &["a0", "b0", "aL", "bL"]),
    ("solver", &["intervals", "rtol", "atol"]),
    ("compare", &["window", "order"]),
];

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Validation(msg.into())
}

fn number(key: &str, text: &str) -> Result<f64, ExperimentError> {
    text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| invalid(format!("{key}: '{text}' is not a number")))
}

fn numbers(key: &str, text: &str) -> Result<Vec<f64>, ExperimentError> {
    text.split_whitespace().map(|t| number(key, t)).collect()
}

impl Scenario {
    /// The numerical example: a heated inlet at the left ramping up as
    /// `tanh^2 t`, a fixed warm stream at the right.
    pub fn heated_inlet() -> Scenario {
        Scenario {
            name: "heated-inlet".into(),
            length: 30.0,
            t_end: 21.0,
            snapshots: vec![21.0],
            data: BoundaryData {
                a0: Signal::TanhSquared(0.2),
                b0: Signal::Constant(0.0),
                al: Signal::Constant(0.0),
                bl: Signal::Constant(0.2),
            },
            intervals: 600,
            tolerances: Tolerances { rtol: 1e-8, atol: 1e-8 },
            window: (5.0, 25.0),
            order: 3,
        }
    }

    pub fn parse(text: &str) -> Result<Scenario, ExperimentError> {
        let mut values: BTreeMap<(String, String), String> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let lineno = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(invalid(format!("line {lineno}: unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(sec) = &section else {
                return Err(invalid(format!("line {lineno}: key outside any section")));
            };
            let (key, value) =
                line.split_once('=').ok_or_else(|| invalid(format!("line {lineno}: expected 'key = value'")))?;
            let (key, value) = (key.trim(), value.trim());
            let allowed = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(invalid(format!("line {lineno}: unknown key '{key}' in [{sec}]")));
            }
            if values.insert((sec.clone(), key.to_string()), value.to_string()).is_some() {
                return Err(invalid(format!("line {lineno}: duplicate key '{key}'")));
            }
        }
        let get = |s: &str, k: &str| values.get(&(s.to_string(), k.to_string())).map(String::as_str);
        let name = get("scenario", "name").ok_or_else(|| invalid("[scenario] name is required"))?.to_string();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(invalid(format!("name '{name}' must be non-empty and use only letters, digits, '-' or '_'")));
        }
        let length = number("length", get("scenario", "length").ok_or_else(|| invalid("[scenario] length is required"))?)?;
        let t_end = number("t_end", get("scenario", "t_end").ok_or_else(|| invalid("[scenario] t_end is required"))?)?;
        let mut snapshots = match get("scenario", "snapshots") {
            Some(s) => numbers("snapshots", s)?,
            None => vec![t_end],
        };
        if snapshots.iter().any(|&t| t > t_end) {
            return Err(invalid("snapshot times must not exceed t_end"));
        }
        if snapshots.last() != Some(&t_end) {
            snapshots.push(t_end);
        }
        let signal = |k: &str| -> Result<Signal, ExperimentError> {
            match get("boundary", k) {
                None => Ok(Signal::Constant(0.0)),
                Some(s) => Signal::parse(s).ok_or_else(|| invalid(format!("{k}: '{s}' is neither a number nor 'A*tanh2'"))),
            }
        };
        let data = BoundaryData { a0: signal("a0")?, b0: signal("b0")?, al: signal("aL")?, bl: signal("bL")? };
        let intervals = match get("solver", "intervals") {
            Some(s) => s.parse::<usize>().map_err(|_| invalid(format!("intervals: '{s}' is not a positive integer")))?,
            None => 600,
        };
        let rtol = get("solver", "rtol").map(|s| number("rtol", s)).transpose()?.unwrap_or(1e-8);
        let atol = get("solver", "atol").map(|s| number("atol", s)).transpose()?.unwrap_or(1e-8);
        let window = match get("compare", "window") {
            Some(s) => match numbers("window", s)?.as_slice() {
                [lo, hi] if lo <= hi => (*lo, *hi),
                _ => return Err(invalid("window needs two numbers LO HI with LO <= HI")),
            },
            None => (5.0, 25.0),
        };
        let order = match get("compare", "order") {
            Some(s) => s.parse::<u32>().map_err(|_| invalid(format!("order: '{s}' is not an integer")))?,
            None => 3,
        };
        let scenario = Scenario { name, length, t_end, snapshots, data, intervals, tolerances: Tolerances { rtol, atol }, window, order };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.order < 2 {
            return Err(invalid(format!("order must be at least 2, got {}", self.order)));
        }
        if !(self.t_end > 0.0) {
            return Err(invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        self.solve_config().map_err(|e| match e {
            SolverError::Config(m) => invalid(m),
            other => ExperimentError::Numerical(other.to_string()),
        })?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D, SolverError> {
        Grid1D::new(self.length, self.intervals)
    }

    pub fn solve_config(&self) -> Result<SolveConfig, SolverError> {
        SolveConfig::new(self.grid()?, self.tolerances, self.snapshots.clone())
    }

    /// Canonical text form; parses back to the same scenario.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "[scenario]").unwrap();
        writeln!(out, "name = {}", self.name).unwrap();
        writeln!(out, "length = {}", self.length).unwrap();
        writeln!(out, "t_end = {}", self.t_end).unwrap();
        writeln!(out, "snapshots = {}", join(&self.snapshots)).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "[boundary]").unwrap();
        writeln!(out, "a0 = {}", self.data.a0.to_text()).unwrap();
        writeln!(out, "b0 = {}", self.data.b0.to_text()).unwrap();
        writeln!(out, "aL = {}", self.data.al.to_text()).unwrap();
        writeln!(out, "bL = {}", self.data.bl.to_text()).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "[solver]").unwrap();
        writeln!(out, "intervals = {}", self.intervals).unwrap();
        writeln!(out, "rtol = {:e}", self.tolerances.rtol).unwrap();
        writeln!(out, "atol = {:e}", self.tolerances.atol).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "[compare]").unwrap();
        writeln!(out, "window = {} {}", self.window.0, self.window.1).unwrap();
        writeln!(out, "order = {}", self.order).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenario_round_trip() {
        let s = Scenario::heated_inlet();
        assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn defaults_and_comments() {
        let s = Scenario::parse("# zero data\n[scenario]\nname = flat\nlength = 10 # short\nt_end = 2\n").unwrap();
        assert_eq!(s.snapshots, vec![2.0]);
        assert!(s.data.is_zero());
        assert_eq!(s.intervals, 600);
        assert_eq!(s.window, (5.0, 25.0));
    }

    #[test]
    fn rejects_bad_input() {
        let base = "[scenario]\nname = x\nlength = 30\nt_end = 5\n";
        for bad in [
            "[scenario]\nlength = 30\nt_end = 5\n",
            "name = x\n",
            &format!("{base}[solver]\nrtol = -1\n"),
            &format!("{base}[solver]\nintervals = 4\n"),
            &format!("{base}[boundary]\na0 = hot\n"),
            &format!("{base}[weather]\n"),
            &format!("{base}[compare]\nwindow = 25 5\n"),
            "[scenario]\nname = x\nlength = 30\nt_end = 5\nsnapshots = 1 7\n",
            "[scenario]\nname = x\nname = y\nlength = 30\nt_end = 5\n",
        ] {
            assert!(matches!(Scenario::parse(bad), Err(ExperimentError::Validation(_))), "{bad}");
        }
    }
}
