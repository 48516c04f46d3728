use std::fmt::Write as _;

use super::{Grid1D, Stats};

/// A nodal state at one time.
pub trait Snapshot {
    fn time(&self) -> f64;
    /// Named nodal arrays, each of length `n + 1`.
    fn fields(&self) -> Vec<(&'static str, &[f64])>;
}

/// Snapshots of a solve on a fixed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTrajectory<S> {
    pub grid: Grid1D,
    pub snapshots: Vec<S>,
    pub stats: Stats,
}

impl<S: Snapshot> FieldTrajectory<S> {
    /// The snapshot stored for time `t`, if any.
    pub fn at(&self, t: f64) -> Option<&S> {
        self.snapshots.iter().find(|s| s.time() == t)
    }

    pub fn last(&self) -> &S {
        self.snapshots.last().expect("a trajectory holds at least one snapshot")
    }

    /// CSV with header `t,x,field,value`, one row per node and field.
    pub fn snapshot_csv(&self, snapshot: &S) -> String {
        let xs = self.grid.xs();
        let mut out = String::from("t,x,field,value\n");
        for (name, values) in snapshot.fields() {
            for (x, v) in xs.iter().zip(values) {
                writeln!(out, "{},{},{},{}", snapshot.time(), x, name, v).expect("writing to a String");
            }
        }
        out
    }
}

/// `<scenario>_<mode>_t<time>.csv`.
pub fn snapshot_file_name(scenario: &str, mode: &str, t: f64) -> String {
    format!("{scenario}_{mode}_t{t}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat(f64, Vec<f64>);

    impl Snapshot for Flat {
        fn time(&self) -> f64 {
            self.0
        }
        fn fields(&self) -> Vec<(&'static str, &[f64])> {
            vec![("C", &self.1)]
        }
    }

    #[test]
    fn csv_layout() {
        let grid = Grid1D::new(8.0, 8).unwrap();
        let traj = FieldTrajectory { grid, snapshots: vec![Flat(1.5, vec![0.25; 9])], stats: Stats::default() };
        let csv = traj.snapshot_csv(traj.last());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[0], "t,x,field,value");
        assert_eq!(lines[1], "1.5,0,C,0.25");
        assert_eq!(lines[9], "1.5,8,C,0.25");
        assert_eq!(snapshot_file_name("heated-inlet", "micro", 21.0), "heated-inlet_micro_t21.csv");
    }
}
