//! Banded LU factorisation with partial pivoting.

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage keeps
/// `kl` extra super-diagonals for the fill-in produced by row interchanges.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("band matrix is singular at column {0}")]
pub struct Singular(pub usize);

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width], pivots: vec![0; n], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// True if `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
        self.factored = false;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.factored, "matrix already factored");
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(&mut self) -> Result<(), Singular> {
        let n = self.n;
        let reach = self.ku + self.kl;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Singular(k));
            }
            self.pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves in place after [`factor`](Self::factor).
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "factor first");
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        let reach = self.ku + self.kl;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_with_pivoting() {
        // small diagonal forces row swaps
        let n = 6;
        let mut m = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            m.set(i, i, if i % 2 == 0 { 1e-3 } else { 2.0 });
            if i > 0 {
                m.set(i, i - 1, 1.0 + i as f64);
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let mut b = m.mul_vec(&x);
        m.factor().unwrap();
        m.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(1, 1, 0.0);
        m.set(2, 2, 1.0);
        assert_eq!(m.factor(), Err(Singular(1)));
    }
}
