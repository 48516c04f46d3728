//! Small dense matrices over a [`Scalar`] field.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{Rational, Scalar};

#[derive(Clone, PartialEq)]
pub struct Matrix<C: Scalar = Rational> {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl<C: Scalar> Matrix<C> {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| C::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C::one() } else { C::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<C> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<C> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Matrix<D> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Matrix<C>) -> Matrix<C> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(C::zero(), |acc, k| acc + self.get(i, k).clone() * other.get(k, j).clone())
        })
    }

    pub fn mul_vec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).fold(C::zero(), |acc, k| acc + self.get(i, k).clone() * v[k].clone()))
            .collect()
    }

    /// `v^T A`.
    pub fn left_mul_vec(&self, v: &[C]) -> Vec<C> {
        self.transpose().mul_vec(v)
    }

    pub fn sub(&self, other: &Matrix<C>) -> Matrix<C> {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() - other.get(i, j).clone())
    }

    pub fn add(&self, other: &Matrix<C>) -> Matrix<C> {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() + other.get(i, j).clone())
    }

    pub fn scale(&self, k: &C) -> Matrix<C> {
        self.map(|x| x.clone() * k.clone())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix<C> {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn hstack(blocks: &[Matrix<C>]) -> Matrix<C> {
        let rows = blocks[0].rows;
        let mut cols = Vec::new();
        for b in blocks {
            assert_eq!(b.rows, rows);
            for j in 0..b.cols {
                cols.push(b.column(j));
            }
        }
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i].clone())
    }

    fn pivot_row(&self, col: usize, from: usize) -> Option<usize> {
        let scale = self.max_abs();
        if C::EXACT {
            (from..self.rows).find(|&r| !self.get(r, col).is_zero())
        } else {
            let best = (from..self.rows).max_by(|&a, &b| {
                self.get(a, col).to_f64().abs().total_cmp(&self.get(b, col).to_f64().abs())
            })?;
            (!self.get(best, col).is_negligible(scale)).then_some(best)
        }
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = self.pivot_row(c, r) else { continue };
            self.swap_rows(r, p);
            let inv = C::one() / self.get(r, c).clone();
            for j in 0..self.cols {
                let v = self.get(r, j).clone() * inv.clone();
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i != r && !self.get(i, c).is_zero() {
                    let f = self.get(i, c).clone();
                    for j in 0..self.cols {
                        let v = self.get(i, j).clone() - f.clone() * self.get(r, j).clone();
                        self.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn inverse(&self) -> Option<Matrix<C>> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Matrix::hstack(&[self.clone(), Matrix::identity(n)]);
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Matrix::from_fn(n, n, |i, j| aug.get(i, n + j).clone()))
    }

    pub fn solve(&self, b: &[C]) -> Option<Vec<C>> {
        self.inverse().map(|inv| inv.mul_vec(b))
    }

    pub fn det(&self) -> C {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let mut det = C::one();
        for c in 0..m.cols {
            let Some(p) = m.pivot_row(c, c) else { return C::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det = det * piv.clone();
            for i in c + 1..m.rows {
                let f = m.get(i, c).clone() / piv.clone();
                if !f.is_zero() {
                    for j in c..m.cols {
                        let v = m.get(i, j).clone() - f.clone() * m.get(c, j).clone();
                        m.set(i, j, v);
                    }
                }
            }
        }
        det
    }

    /// Basis of the right null space, one column per basis vector.
    pub fn nullspace(&self) -> Vec<Vec<C>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![C::zero(); self.cols];
                v[f] = C::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -m.get(r, f).clone();
                }
                v
            })
            .collect()
    }

    /// Characteristic polynomial coefficients `c[0] + c[1] x + ... + x^n`
    /// (Faddeev-LeVerrier).
    pub fn charpoly(&self) -> Vec<C> {
        let n = self.rows;
        let mut coeffs = vec![C::zero(); n + 1];
        coeffs[n] = C::one();
        let mut mk = Matrix::<C>::zeros(n, n);
        for k in 1..=n {
            let shifted = mk.add(&Matrix::identity(n).scale(&coeffs[n - k + 1]));
            mk = self.mul(&shifted);
            let trace = (0..n).fold(C::zero(), |acc, i| acc + mk.get(i, i).clone());
            coeffs[n - k] = -trace / C::from_i64(k as i64);
        }
        coeffs
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.max_abs()
    }
}

impl<C: Scalar> fmt::Debug for Matrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Rational roots of a polynomial with rational coefficients (low to high),
/// with multiplicity. Returns `None` when some root is not rational.
pub fn rational_roots(poly: &[Rational]) -> Option<Vec<Rational>> {
    let mut p: Vec<Rational> = poly.to_vec();
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    let mut roots = Vec::new();
    while p.len() > 1 && p[0].is_zero() {
        roots.push(Rational::zero());
        p.remove(0);
    }
    loop {
        let deg = p.len() - 1;
        if deg == 0 {
            return Some(roots);
        }
        // clear denominators to get integer coefficients
        let lcm = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let a0 = ints[0].abs();
        let an = ints[deg].abs();
        let found = divisors(&a0).into_iter().find_map(|num| {
            divisors(&an).into_iter().find_map(|den| {
                [Rational::new(num.clone(), den.clone()), -Rational::new(num.clone(), den)]
                    .into_iter()
                    .find(|cand| eval_poly(&p, cand).is_zero())
            })
        })?;
        roots.push(found.clone());
        p = deflate(&p, &found);
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            let q = n / &d;
            if q != d {
                out.push(q);
            }
        }
        d += 1;
    }
    out.sort();
    out
}

fn eval_poly(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn deflate(p: &[Rational], root: &Rational) -> Vec<Rational> {
    // synthetic division by (x - root)
    let deg = p.len() - 1;
    let mut q = vec![Rational::zero(); deg];
    let mut carry = Rational::zero();
    for i in (0..=deg).rev() {
        let v = &p[i] + &carry * root;
        if i > 0 {
            q[i - 1] = v.clone();
        }
        carry = v;
    }
    q
}

/// Real eigenvalues of a real matrix via nalgebra's Schur form. Complex pairs
/// are returned as `(re, im)`.
pub fn float_eigenvalues(m: &Matrix<f64>) -> Vec<(f64, f64)> {
    let n = m.rows();
    let na = nalgebra::DMatrix::from_fn(n, n, |i, j| *m.get(i, j));
    let mut ev: Vec<(f64, f64)> = na.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    ev
}

/// Null space of a float matrix from its SVD, with relative rank tolerance.
pub fn float_nullspace(m: &Matrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let (r, c) = (m.rows(), m.cols());
    let na = nalgebra::DMatrix::from_fn(r.max(c), c, |i, j| if i < r { *m.get(i, j) } else { 0.0 });
    let svd = na.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    (0..c)
        .filter(|&k| svd.singular_values[k] <= rel_tol * smax)
        .map(|k| (0..c).map(|j| vt[(k, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn m(rows: &[&[(i64, i64)]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&(a, b)| rat(a, b)).collect()).collect())
    }

    #[test]
    fn exact_inverse_and_determinant() {
        let a = m(&[&[(1, 2), (1, 2)], &[(3, 8), (-3, 8)]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        assert_eq!(a.det(), rat(-3, 8));
        let singular = m(&[&[(1, 1), (2, 1)], &[(2, 1), (4, 1)]]);
        assert!(singular.inverse().is_none());
        assert_eq!(singular.det(), int(0));
    }

    #[test]
    fn charpoly_and_rational_roots() {
        // diag(0, 0, -2/3, 2/3) conjugated by a unimodular matrix
        let d = m(&[
            &[(0, 1), (0, 1), (0, 1), (0, 1)],
            &[(0, 1), (0, 1), (0, 1), (0, 1)],
            &[(0, 1), (0, 1), (-2, 3), (0, 1)],
            &[(0, 1), (0, 1), (0, 1), (2, 3)],
        ]);
        let p = m(&[
            &[(1, 1), (1, 1), (0, 1), (0, 1)],
            &[(0, 1), (1, 1), (1, 1), (0, 1)],
            &[(0, 1), (0, 1), (1, 1), (1, 1)],
            &[(2, 1), (0, 1), (0, 1), (1, 1)],
        ]);
        let a = p.mul(&d).mul(&p.inverse().unwrap());
        let cp = a.charpoly();
        let mut roots = rational_roots(&cp).unwrap();
        roots.sort();
        assert_eq!(roots, vec![rat(-2, 3), int(0), int(0), rat(2, 3)]);
    }

    #[test]
    fn irrational_roots_are_detected() {
        // x^2 - 2
        assert!(rational_roots(&[int(-2), int(0), int(1)]).is_none());
    }

    #[test]
    fn nullspace_basis() {
        let a = m(&[&[(1, 1), (1, 1), (0, 1)], &[(0, 1), (0, 1), (1, 1)]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(|x| x.is_zero()));
    }
}
