//! Spatial dynamics of the steady heat exchanger: `du/dx = A u + N(u, eps)`
//! with `u = (a, b, a', b')`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::Zero;

use crate::linalg::{float_eigenvalues, float_nullspace, rational_roots, Matrix};
use crate::scalar::{parse_rational, rat, Rational, Scalar};
use crate::series::text::{from_term_lines, rational_text, to_term_lines};
use crate::series::{Monomial, SeriesError, SeriesVector, TruncatedSeries, Truncation, VarSet};

pub const STATE_NAMES: [&str; 4] = ["a", "b", "ax", "bx"];
pub const PARAM_NAME: &str = "eps";

/// Polynomial right-hand sides are stored with generous truncation so that
/// composing them never loses terms of the compositions we need.
const SYSTEM_TRUNCATION: Truncation = Truncation::new(8, 8);

#[derive(Debug, thiserror::Error)]
pub enum SpatialError {
    #[error("linear part has irrational eigenvalues; use the float path")]
    IrrationalSpectrum,
    #[error("linear part has complex eigenvalue {re} + {im}i")]
    ComplexSpectrum { re: f64, im: f64 },
    #[error("linear part is not diagonalizable: eigenvalue {eigenvalue} has algebraic multiplicity {algebraic} but only {geometric} eigenvectors")]
    NotDiagonalizable { eigenvalue: f64, algebraic: usize, geometric: usize },
    #[error("system text, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Embedding {
    /// Perturbation splits the advection coupling off the diagonal.
    A,
    /// Alternate family with an eps-dependent spectrum.
    B,
}

impl Embedding {
    pub fn name(self) -> &'static str {
        match self {
            Embedding::A => "embedding-A",
            Embedding::B => "embedding-B",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialSystem {
    name: String,
    linear: Matrix<Rational>,
    nonlinear: SeriesVector<Rational>,
}

fn state_vars(with_param: bool) -> Arc<VarSet> {
    if with_param {
        VarSet::new(&STATE_NAMES, &[PARAM_NAME])
    } else {
        VarSet::new(&STATE_NAMES, &[])
    }
}

fn rows(m: [[(i64, i64); 4]; 4]) -> Matrix<Rational> {
    Matrix::from_fn(4, 4, |i, j| rat(m[i][j].0, m[i][j].1))
}

/// The four physical equations' quadratic terms `(0, 0, -a^2/2, b^2/2)`.
fn quadratic_part(vars: &Arc<VarSet>) -> Vec<TruncatedSeries<Rational>> {
    let t = SYSTEM_TRUNCATION;
    let a2 = Monomial::var(0).mul(&Monomial::var(0));
    let b2 = Monomial::var(1).mul(&Monomial::var(1));
    vec![
        TruncatedSeries::zero(vars.clone(), t),
        TruncatedSeries::zero(vars.clone(), t),
        TruncatedSeries::from_terms(vars.clone(), t, [(a2, rat(-1, 2))]),
        TruncatedSeries::from_terms(vars.clone(), t, [(b2, rat(1, 2))]),
    ]
}

pub fn build_original() -> SpatialSystem {
    let linear = rows([
        [(0, 1), (0, 1), (1, 1), (0, 1)],
        [(0, 1), (0, 1), (0, 1), (1, 1)],
        [(1, 6), (-1, 6), (1, 3), (0, 1)],
        [(-1, 6), (1, 6), (0, 1), (-1, 3)],
    ]);
    let vars = state_vars(false);
    let nonlinear = SeriesVector::new(quadratic_part(&vars)).expect("shared variable set");
    SpatialSystem { name: "original".into(), linear, nonlinear }
}

/// Embeds the original system in a one-parameter family whose linear part at
/// `eps = 0` has no generalised eigenvectors; `eps = 1` recovers the original.
pub fn build_embedding(variant: Embedding) -> SpatialSystem {
    let original = build_original();
    let linear = match variant {
        Embedding::A => rows([
            [(0, 1), (0, 1), (1, 1), (-1, 1)],
            [(0, 1), (0, 1), (-1, 1), (1, 1)],
            [(1, 6), (-1, 6), (-1, 6), (1, 2)],
            [(-1, 6), (1, 6), (-1, 2), (1, 6)],
        ]),
        Embedding::B => rows([
            [(0, 1), (0, 1), (1, 1), (-1, 1)],
            [(0, 1), (0, 1), (-1, 1), (1, 1)],
            [(1, 6), (-1, 6), (1, 6), (1, 6)],
            [(-1, 6), (1, 6), (-1, 6), (-1, 6)],
        ]),
    };
    // eps * (A_original - A) u carries the difference
    let diff = original.linear.sub(&linear);
    let vars = state_vars(true);
    let eps = Monomial::var(4);
    let mut comps = quadratic_part(&vars);
    for (i, comp) in comps.iter_mut().enumerate() {
        for j in 0..4 {
            comp.add_term(Monomial::var(j).mul(&eps), diff.get(i, j).clone());
        }
    }
    let nonlinear = SeriesVector::new(comps).expect("shared variable set");
    SpatialSystem { name: variant.name().into(), linear, nonlinear }
}

impl SpatialSystem {
    pub fn new(name: &str, linear: Matrix<Rational>, nonlinear: SeriesVector<Rational>) -> Result<Self, SpatialError> {
        let err = |msg: &str| SpatialError::Parse { line: 0, msg: msg.to_string() };
        if linear.rows() != 4 || linear.cols() != 4 || nonlinear.len() != 4 {
            return Err(err("expected a 4x4 matrix and 4 nonlinear components"));
        }
        let vars = nonlinear.vars();
        if vars.len() < 4 || (0..4).any(|i| vars.name(i) != STATE_NAMES[i] || vars.is_param(i)) {
            return Err(err("nonlinear part must be over (a, b, ax, bx[, eps])"));
        }
        for c in nonlinear.components() {
            if !c.constant_term().is_zero() {
                return Err(err("nonlinear part must vanish at the origin"));
            }
            if c.terms().any(|(m, _)| vars.state_degree(m) == 1 && vars.param_degree(m) == 0) {
                return Err(err("linear eps^0 terms belong in the matrix"));
            }
        }
        Ok(SpatialSystem { name: name.to_string(), linear, nonlinear })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Linear part at `eps = 0`.
    pub fn linear(&self) -> &Matrix<Rational> {
        &self.linear
    }

    pub fn nonlinear(&self) -> &SeriesVector<Rational> {
        &self.nonlinear
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        self.nonlinear.vars()
    }

    pub fn has_param(&self) -> bool {
        self.vars().len() > 4
    }

    /// Linear part of the full right-hand side at the given parameter value.
    pub fn linearisation_at(&self, eps: &Rational) -> Matrix<Rational> {
        let mut m = self.linear.clone();
        for i in 0..4 {
            for (mono, c) in self.nonlinear.get(i).terms() {
                let vars = self.vars();
                if vars.state_degree(mono) != 1 {
                    continue;
                }
                let j = (0..4).find(|&j| mono.exponent(j) == 1).expect("degree one");
                let p = vars.param_degree(mono) as i32;
                let v = m.get(i, j).clone() + c.clone() * num_traits::pow(eps.clone(), p as usize);
                m.set(i, j, v);
            }
        }
        m
    }

    /// The system with the parameter fixed at `eps`, over the state variables
    /// only. Eps-linear terms move into the matrix.
    pub fn at_param(&self, eps: &Rational) -> SpatialSystem {
        if !self.has_param() {
            return self.clone();
        }
        let target = state_vars(false);
        let mut images: Vec<TruncatedSeries<Rational>> =
            (0..4).map(|i| TruncatedSeries::var(target.clone(), SYSTEM_TRUNCATION, i)).collect();
        images.push(TruncatedSeries::constant(target.clone(), SYSTEM_TRUNCATION, eps.clone()));
        let collapsed = self.nonlinear.compose(&images).expect("constant parameter image");
        let linear = self.linearisation_at(eps);
        let nonlinear = SeriesVector::new(
            collapsed.components().iter().map(|c| c.filter(|m| m.total_degree() != 1)).collect(),
        )
        .expect("shared variable set");
        SpatialSystem { name: format!("{}@eps={}", self.name, rational_text(eps)), linear, nonlinear }
    }

    /// Same system with the state-quadratic terms multiplied by `factor`.
    ///
    /// Steady states of the microscale PDEs satisfy the printed system with
    /// factor 1/3: `3 a'' = a' - (b - a)/2 - a^2/2`.
    pub fn with_quadratic_scaled(&self, factor: &Rational) -> SpatialSystem {
        let vars = self.vars().clone();
        let comps = self
            .nonlinear
            .components()
            .iter()
            .map(|c| {
                let quad = c.filter(|m| vars.state_degree(m) == 2).scale(factor);
                let rest = c.filter(|m| vars.state_degree(m) != 2);
                &quad + &rest
            })
            .collect();
        SpatialSystem {
            name: format!("{}-quadratic*{}", self.name, rational_text(factor)),
            linear: self.linear.clone(),
            nonlinear: SeriesVector::new(comps).expect("shared variable set"),
        }
    }

    /// Right-hand side `F(u) = A u + N(u, eps)` composed with series images of
    /// the state variables (and of `eps`, when the system has one).
    pub fn rhs_series<C: Scalar>(&self, images: &[TruncatedSeries<C>]) -> Result<SeriesVector<C>, SeriesError> {
        let lin = SeriesVector::new(images[..4].to_vec())?.linear_combination(&self.linear.map(C::from_rational));
        let nl = self.nonlinear.components().iter().map(|c| c.map_coeffs(C::from_rational)).collect::<Vec<_>>();
        let nl = SeriesVector::new(nl)?.compose(images)?;
        lin.sub(&nl.map(|c| c.neg()))
    }

    /// Pointwise right-hand side in floating point.
    pub fn rhs_f64(&self, u: &[f64; 4], eps: f64) -> [f64; 4] {
        let lin = self.linear.map(|c| c.to_f64()).mul_vec(u);
        let mut point = u.to_vec();
        if self.has_param() {
            point.push(eps);
        }
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = lin[i] + self.nonlinear.get(i).map_coeffs(|c| c.to_f64()).evaluate(&point);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let vars = self.vars();
        let params: Vec<&str> = (0..vars.len()).filter(|&i| vars.is_param(i)).map(|i| vars.name(i)).collect();
        writeln!(s, "system {}", self.name).unwrap();
        writeln!(s, "state {}", STATE_NAMES.join(" ")).unwrap();
        writeln!(s, "params {}", params.join(" ")).unwrap();
        writeln!(s, "matrix").unwrap();
        for i in 0..4 {
            let row: Vec<String> = self.linear.row(i).iter().map(rational_text).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        for (i, c) in self.nonlinear.components().iter().enumerate() {
            writeln!(s, "nonlinear {i}").unwrap();
            s.push_str(&to_term_lines(c));
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<SpatialSystem, SpatialError> {
        let lines: Vec<(usize, &str)> =
            text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
        let err = |line: usize, msg: &str| SpatialError::Parse { line, msg: msg.to_string() };
        let mut pos = 0;
        let expect = |pos: &mut usize, prefix: &str| -> Result<(usize, String), SpatialError> {
            match lines.get(*pos) {
                Some(&(n, l)) if l.starts_with(prefix) => {
                    *pos += 1;
                    Ok((n, l[prefix.len()..].trim().to_string()))
                }
                Some(&(n, _)) => Err(err(n, &format!("expected `{prefix}`"))),
                None => Err(err(0, &format!("missing `{prefix}`"))),
            }
        };
        let (_, name) = expect(&mut pos, "system")?;
        let (n, state) = expect(&mut pos, "state")?;
        if state.split_whitespace().collect::<Vec<_>>() != STATE_NAMES {
            return Err(err(n, "state variables must be a b ax bx"));
        }
        let (_, params) = expect(&mut pos, "params")?;
        let params: Vec<&str> = params.split_whitespace().collect();
        let vars = VarSet::new(&STATE_NAMES, &params);
        expect(&mut pos, "matrix")?;
        let mut entries = Vec::new();
        for _ in 0..4 {
            let (n, row) = expect(&mut pos, "")?;
            let vals: Option<Vec<Rational>> = row.split_whitespace().map(parse_rational).collect();
            match vals {
                Some(v) if v.len() == 4 => entries.push(v),
                _ => return Err(err(n, "matrix rows need four rationals")),
            }
        }
        let linear = Matrix::from_rows(entries);
        let mut comps = Vec::new();
        for i in 0..4 {
            let (n, idx) = expect(&mut pos, "nonlinear")?;
            if idx != i.to_string() {
                return Err(err(n, "nonlinear components out of order"));
            }
            let mut body = String::new();
            while let Some(&(_, l)) = lines.get(pos) {
                if l.starts_with("nonlinear") || l == "end" {
                    break;
                }
                body.push_str(l);
                body.push('\n');
                pos += 1;
            }
            comps.push(from_term_lines(&body, vars.clone(), SYSTEM_TRUNCATION)?);
        }
        expect(&mut pos, "end")?;
        SpatialSystem::new(&name, linear, SeriesVector::new(comps)?)
    }
}

/// The linear change of variables `s = M u` that names the modal amplitudes:
/// mean temperature, mean gradient, and the decaying/growing boundary-layer
/// amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    m: Matrix<Rational>,
    m_inv: Matrix<Rational>,
}

impl CoordinateMap {
    pub fn new(m: Matrix<Rational>) -> Option<CoordinateMap> {
        let m_inv = m.inverse()?;
        Some(CoordinateMap { m, m_inv })
    }

    pub fn matrix(&self) -> &Matrix<Rational> {
        &self.m
    }

    pub fn inverse(&self) -> &Matrix<Rational> {
        &self.m_inv
    }
}

pub fn coordinate_map() -> CoordinateMap {
    CoordinateMap::new(rows([
        [(1, 2), (1, 2), (0, 1), (0, 1)],
        [(0, 1), (0, 1), (1, 2), (1, 2)],
        [(3, 8), (-3, 8), (-3, 8), (9, 8)],
        [(3, 8), (-3, 8), (9, 8), (-3, 8)],
    ]))
    .expect("invertible")
}

/// Eigenvalues and a basis of eigenvectors, grouped into clusters of equal
/// eigenvalue. Clusters are ordered centre (zero) first, then by increasing
/// modulus, negative before positive.
#[derive(Clone, Debug)]
pub struct EigenStructure<C: Scalar> {
    pub clusters: Vec<EigenCluster<C>>,
}

#[derive(Clone, Debug)]
pub struct EigenCluster<C: Scalar> {
    pub value: C,
    /// Eigenvectors, one per entry.
    pub vectors: Vec<Vec<C>>,
}

impl<C: Scalar> EigenStructure<C> {
    /// Eigenvalues with multiplicity in cluster order.
    pub fn eigenvalues(&self) -> Vec<C> {
        self.clusters.iter().flat_map(|c| std::iter::repeat_n(c.value.clone(), c.vectors.len())).collect()
    }

    pub fn vectors(&self) -> Vec<Vec<C>> {
        self.clusters.iter().flat_map(|c| c.vectors.iter().cloned()).collect()
    }

    /// `max |A v - lambda v|` over all pairs.
    pub fn max_residual(&self, a: &Matrix<Rational>) -> f64 {
        let af = a.map(|c| c.to_f64());
        let mut worst = 0.0f64;
        for cl in &self.clusters {
            for v in &cl.vectors {
                let vf: Vec<f64> = v.iter().map(|x| x.to_f64()).collect();
                let av = af.mul_vec(&vf);
                for (x, y) in av.iter().zip(&vf) {
                    worst = worst.max((x - cl.value.to_f64() * y).abs());
                }
            }
        }
        worst
    }
}

fn sort_clusters<C: Scalar>(clusters: &mut [EigenCluster<C>]) {
    clusters.sort_by(|x, y| {
        let (a, b) = (x.value.to_f64(), y.value.to_f64());
        let modulus = if (a.abs() - b.abs()).abs() <= 1e-9 * a.abs().max(b.abs()) {
            std::cmp::Ordering::Equal
        } else {
            a.abs().total_cmp(&b.abs())
        };
        modulus.then(a.total_cmp(&b))
    });
}

/// Coefficient fields for which a diagonalizing eigenbasis can be computed.
pub trait EigenSolve: Scalar {
    fn eigen(a: &Matrix<Rational>) -> Result<EigenStructure<Self>, SpatialError>;
}

impl EigenSolve for Rational {
    fn eigen(a: &Matrix<Rational>) -> Result<EigenStructure<Rational>, SpatialError> {
        let roots = rational_roots(&a.charpoly()).ok_or(SpatialError::IrrationalSpectrum)?;
        let mut distinct: Vec<Rational> = roots.clone();
        distinct.sort();
        distinct.dedup();
        let n = a.rows();
        let mut clusters = Vec::new();
        for value in distinct {
            let algebraic = roots.iter().filter(|r| **r == value).count();
            let shifted = a.sub(&Matrix::identity(n).scale(&value));
            let vectors = shifted.nullspace();
            if vectors.len() < algebraic {
                return Err(SpatialError::NotDiagonalizable {
                    eigenvalue: value.to_f64(),
                    algebraic,
                    geometric: vectors.len(),
                });
            }
            clusters.push(EigenCluster { value, vectors });
        }
        sort_clusters(&mut clusters);
        Ok(EigenStructure { clusters })
    }
}

/// Relative tolerance for grouping float eigenvalues and for rank decisions.
const FLOAT_EIGEN_TOL: f64 = 1e-9;

impl EigenSolve for f64 {
    fn eigen(a: &Matrix<Rational>) -> Result<EigenStructure<f64>, SpatialError> {
        let af = a.map(|c| c.to_f64());
        let scale = af.max_abs_entry().max(1.0);
        let ev = float_eigenvalues(&af);
        if let Some(&(re, im)) = ev.iter().find(|(_, im)| im.abs() > FLOAT_EIGEN_TOL * scale) {
            return Err(SpatialError::ComplexSpectrum { re, im });
        }
        let mut groups: Vec<Vec<f64>> = Vec::new();
        for (re, _) in ev {
            match groups.iter_mut().find(|g| (g[0] - re).abs() <= 1e-6 * scale) {
                Some(g) => g.push(re),
                None => groups.push(vec![re]),
            }
        }
        let n = af.rows();
        let mut clusters = Vec::new();
        for g in groups {
            let mut value = g.iter().sum::<f64>() / g.len() as f64;
            if value.abs() <= 1e-6 * scale {
                value = 0.0;
            }
            let shifted = af.sub(&Matrix::identity(n).scale(&value));
            let vectors = float_nullspace(&shifted, FLOAT_EIGEN_TOL);
            if vectors.len() < g.len() {
                return Err(SpatialError::NotDiagonalizable {
                    eigenvalue: value,
                    algebraic: g.len(),
                    geometric: vectors.len(),
                });
            }
            clusters.push(EigenCluster { value, vectors });
        }
        sort_clusters(&mut clusters);
        Ok(EigenStructure { clusters })
    }
}

/// Eigenvalues of a rational matrix in double precision, sorted ascending.
pub fn numeric_eigenvalues(a: &Matrix<Rational>) -> Vec<f64> {
    float_eigenvalues(&a.map(|c| c.to_f64())).into_iter().map(|(re, _)| re).collect()
}

/// True when `v^T A = lambda v^T` exactly.
pub fn is_left_eigenvector(a: &Matrix<Rational>, v: &[Rational], lambda: &Rational) -> bool {
    let left = a.left_mul_vec(v);
    left.iter().zip(v).all(|(x, y)| *x == lambda.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn original_entries_and_origin() {
        let s = build_original();
        assert_eq!(*s.linear().get(2, 0), rat(1, 6));
        assert_eq!(s.rhs_f64(&[0.0; 4], 0.0), [0.0; 4]);
    }

    #[test]
    fn embeddings_collapse_to_original() {
        let original = build_original();
        for v in [Embedding::A, Embedding::B] {
            let e = build_embedding(v);
            let at1 = e.at_param(&int(1));
            assert_eq!(at1.linear(), original.linear(), "{v:?}");
            assert_eq!(at1.nonlinear(), original.nonlinear(), "{v:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        for s in [build_original(), build_embedding(Embedding::A), build_embedding(Embedding::B)] {
            let text = s.to_text();
            let back = SpatialSystem::from_text(&text).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn original_is_not_diagonalizable() {
        let err = Rational::eigen(build_original().linear()).unwrap_err();
        assert!(matches!(err, SpatialError::NotDiagonalizable { algebraic: 2, geometric: 1, .. }));
    }

    #[test]
    fn embedding_b_spectrum_is_irrational() {
        let b = build_embedding(Embedding::B);
        assert!(matches!(Rational::eigen(b.linear()), Err(SpatialError::IrrationalSpectrum)));
        let ev = f64::eigen(b.linear()).unwrap().eigenvalues();
        let r = (6.0f64).sqrt() / 3.0;
        assert!((ev[2] + r).abs() < 1e-12 && (ev[3] - r).abs() < 1e-12, "{ev:?}");
    }
}
