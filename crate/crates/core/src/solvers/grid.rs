use super::SolverError;

/// Uniform grid `x_i = i * dx`, `i = 0..=n`, on `[0, length]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    length: f64,
    n: usize,
}

impl Grid1D {
    pub const MIN_INTERVALS: usize = 8;

    pub fn new(length: f64, n: usize) -> Result<Grid1D, SolverError> {
        if n < Self::MIN_INTERVALS {
            return Err(SolverError::Config(format!("grid needs at least {} intervals, got {n}", Self::MIN_INTERVALS)));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SolverError::Config(format!("domain length must be positive, got {length}")));
        }
        Ok(Grid1D { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n {
            self.length
        } else {
            i as f64 * self.dx()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.x(i)).collect()
    }

    /// Indices of nodes inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let eps = 1e-9 * self.dx();
        let first = ((lo - eps) / self.dx()).ceil().max(0.0) as usize;
        let last = (((hi + eps) / self.dx()).floor() as usize).min(self.n);
        first..=last
    }
}
