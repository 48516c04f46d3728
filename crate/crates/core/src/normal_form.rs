//! Near-identity normal-form transform of the spatial dynamics.
//!
//! Given `du/dx = A u + N(u, eps)`, finds `u = T(s, eps)` and
//! `ds/dx = G(s, eps)` with `DT G = F(T)`, where `G` keeps only the resonant
//! terms. The construction works in the eigenbasis `u = P y` of `A`, solving
//! the homological equation block by block in (state degree, eps degree).
//! Both orders are triangular: a block only depends on blocks of lower state
//! degree, or of equal state degree and lower eps degree.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;


use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};
use crate::series::{Monomial, SeriesError, SeriesVector, TruncatedSeries, Truncation, VarSet};
use crate::spatial::{CoordinateMap, EigenSolve, SpatialError, SpatialSystem, PARAM_NAME};

pub const AMPLITUDE_NAMES: [&str; 4] = ["s1", "s2", "s3", "s4"];

/// Eps cap for exact runs. Embedding A's eps-series terminates well below it.
pub const DEFAULT_EXACT_PARAM_ORDER: u32 = 24;
/// Eps cap for float runs, whose eps-series converge geometrically instead.
pub const DEFAULT_FLOAT_PARAM_ORDER: u32 = 48;

/// Eps cap for an exact run at amplitude order `order`.
pub fn exact_param_order(order: u32) -> u32 {
    DEFAULT_EXACT_PARAM_ORDER.max(8 * order)
}

/// Eps cap for a float run at amplitude order `order`.
pub fn float_param_order(order: u32) -> u32 {
    DEFAULT_FLOAT_PARAM_ORDER.max(16 * order)
}

#[derive(Debug, thiserror::Error)]
pub enum NormalFormError {
    #[error("construction refused: {0}; embed the system in a family with a semisimple linear part first")]
    Spatial(#[from] SpatialError),
    #[error("coordinate map rows {rows:?} do not span a complement of eigenspace {cluster}")]
    CoordinateMismatch { cluster: usize, rows: Vec<usize> },
    #[error("order must be at least 2, got {0}")]
    OrderTooLow(u32),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Disposition {
    KeptInG,
    RemovedIntoT,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceEntry<C: Scalar> {
    pub component: usize,
    pub monomial: Monomial,
    pub divisor: C,
    pub disposition: Disposition,
}

/// Every homological coefficient solved during construction, in processing
/// order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResonanceReport<C: Scalar> {
    pub entries: Vec<ResonanceEntry<C>>,
}

impl<C: Scalar> ResonanceReport<C> {
    pub fn kept(&self) -> impl Iterator<Item = &ResonanceEntry<C>> {
        self.entries.iter().filter(|e| e.disposition == Disposition::KeptInG)
    }
}

#[derive(Clone, Debug)]
pub struct NormalForm<C: Scalar> {
    pub system_name: String,
    /// `(a, b, a', b')` as series in `(s1, s2, s3, s4 | eps)`.
    pub transform: SeriesVector<C>,
    /// `ds_j/dx` as series in the same variables.
    pub evolution: SeriesVector<C>,
    pub report: ResonanceReport<C>,
    pub eigenvalues: Vec<C>,
    /// Eigenbasis `P`, columns normalised so that `M P` is the identity on
    /// each eigenspace block.
    pub basis: Matrix<C>,
    /// `K = M P`: amplitudes `s = M u` in terms of eigen-coordinates.
    pub amplitude_matrix: Matrix<C>,
    /// Highest eps power with a nonzero coefficient.
    pub highest_param_power: u32,
}

impl<C: Scalar> NormalForm<C> {
    pub fn truncation(&self) -> Truncation {
        self.transform.truncation()
    }

    /// True when the eps-series visibly terminated: the upper half of the eps
    /// range carries no terms, so evaluation at `eps = 1` is exact rather than
    /// a partial sum.
    pub fn param_series_terminated(&self) -> bool {
        let cap = self.truncation().param_order;
        cap == 0 || self.highest_param_power <= cap / 2
    }
}

/// Normal-form variables: the four amplitudes, plus `eps` when present.
pub fn amplitude_vars(with_param: bool) -> Arc<VarSet> {
    if with_param {
        VarSet::new(&AMPLITUDE_NAMES, &[PARAM_NAME])
    } else {
        VarSet::new(&AMPLITUDE_NAMES, &[])
    }
}

/// Eigenbasis normalised against the coordinate map: clusters take the rows
/// of `M` in order, and each block of `P` satisfies `M_rows P_block = I`.
pub fn normalised_basis<C: EigenSolve>(
    system: &SpatialSystem,
    map: &CoordinateMap,
) -> Result<(Vec<C>, Matrix<C>), NormalFormError> {
    let eig = C::eigen(system.linear())?;
    let m = map.matrix().map(C::from_rational);
    let n = system.linear().rows();
    let mut columns: Vec<Vec<C>> = Vec::new();
    let mut row = 0;
    for (ci, cluster) in eig.clusters.iter().enumerate() {
        let k = cluster.vectors.len();
        let rows: Vec<usize> = (row..row + k).collect();
        let v = Matrix::from_fn(n, k, |i, j| cluster.vectors[j][i].clone());
        let mv = m.submatrix(&rows, &(0..n).collect::<Vec<_>>()).mul(&v);
        let inv = mv.inverse().ok_or(NormalFormError::CoordinateMismatch { cluster: ci, rows: rows.clone() })?;
        let block = v.mul(&inv);
        for j in 0..k {
            columns.push(block.column(j));
        }
        row += k;
    }
    let p = Matrix::from_fn(n, n, |i, j| columns[j][i].clone());
    Ok((eig.eigenvalues(), p))
}

type Block<C> = BTreeMap<Monomial, C>;

/// Homogeneous blocks of a series, indexed by (state degree, eps degree).
struct Graded<C: Scalar> {
    order: usize,
    param_order: usize,
    blocks: Vec<Block<C>>,
}

impl<C: Scalar> Graded<C> {
    fn new(order: u32, param_order: u32) -> Self {
        let (order, param_order) = (order as usize, param_order as usize);
        Graded { order, param_order, blocks: vec![Block::new(); (order + 1) * (param_order + 1)] }
    }

    fn get(&self, d: usize, e: usize) -> &Block<C> {
        &self.blocks[d * (self.param_order + 1) + e]
    }

    fn get_mut(&mut self, d: usize, e: usize) -> &mut Block<C> {
        &mut self.blocks[d * (self.param_order + 1) + e]
    }

    fn highest_param_power(&self) -> usize {
        (0..=self.order)
            .flat_map(|d| (0..=self.param_order).map(move |e| (d, e)))
            .filter(|&(d, e)| !self.get(d, e).is_empty())
            .map(|(_, e)| e)
            .max()
            .unwrap_or(0)
    }

    fn to_series(&self, vars: &Arc<VarSet>, trunc: Truncation) -> TruncatedSeries<C> {
        let mut s = TruncatedSeries::zero(vars.clone(), trunc);
        for b in &self.blocks {
            for (m, c) in b {
                s.add_term(*m, c.clone());
            }
        }
        s
    }
}

fn accumulate<C: Scalar>(into: &mut Block<C>, m: Monomial, c: C) {
    if c.is_zero() {
        return;
    }
    match into.get_mut(&m) {
        Some(v) => {
            *v = v.clone() + c;
        }
        None => {
            into.insert(m, c);
        }
    }
}

fn convolve_into<C: Scalar>(into: &mut Block<C>, a: &Block<C>, b: &Block<C>, scale: &C) {
    for (ma, ca) in a {
        for (mb, cb) in b {
            accumulate(into, ma.mul(mb), scale.clone() * ca.clone() * cb.clone());
        }
    }
}

fn derivative_block<C: Scalar>(b: &Block<C>, i: usize) -> Block<C> {
    let mut out = Block::new();
    for (m, c) in b {
        if let Some(low) = m.lower(i) {
            accumulate(&mut out, low, c.clone() * C::from_i64(m.exponent(i) as i64));
        }
    }
    out
}

fn prune<C: Scalar>(b: &mut Block<C>) {
    b.retain(|_, c| !c.is_zero());
}

/// One term of the nonlinearity: `coeff * eps^q * prod u_f`.
struct NlTerm<C> {
    component: usize,
    coeff: C,
    param_power: usize,
    factors: Vec<usize>,
}

/// Constructs the normal form of `system` to state degree `trunc.order`
/// and eps degree `trunc.param_order`.
pub fn construct<C: EigenSolve>(
    system: &SpatialSystem,
    map: &CoordinateMap,
    trunc: Truncation,
) -> Result<NormalForm<C>, NormalFormError> {
    if trunc.order < 2 {
        return Err(NormalFormError::OrderTooLow(trunc.order));
    }
    let with_param = system.has_param();
    let trunc = if with_param { trunc } else { Truncation::state(trunc.order) };
    let (lambda, p) = normalised_basis::<C>(system, map)?;
    let p_inv = p.inverse().expect("eigenbasis is invertible");
    let k = map.matrix().map(C::from_rational).mul(&p);
    let n = 4;
    let eps_index = with_param.then_some(4);
    let (order, pord) = (trunc.order as usize, trunc.param_order as usize);

    let nl_terms: Vec<NlTerm<C>> = system
        .nonlinear()
        .components()
        .iter()
        .enumerate()
        .flat_map(|(i, comp)| {
            comp.terms()
                .map(|(m, c)| {
                    let mut factors = Vec::new();
                    for v in 0..n {
                        for _ in 0..m.exponent(v) {
                            factors.push(v);
                        }
                    }
                    NlTerm {
                        component: i,
                        coeff: C::from_rational(c),
                        param_power: eps_index.map_or(0, |e| m.exponent(e) as usize),
                        factors,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut product_keys: BTreeSet<Vec<usize>> = BTreeSet::new();
    for t in &nl_terms {
        for len in 2..=t.factors.len() {
            product_keys.insert(t.factors[..len].to_vec());
        }
    }
    let mut products: BTreeMap<Vec<usize>, Graded<C>> =
        product_keys.iter().map(|k| (k.clone(), Graded::new(trunc.order, trunc.param_order))).collect();

    let mut y: Vec<Graded<C>> = (0..n).map(|_| Graded::new(trunc.order, trunc.param_order)).collect();
    let mut g: Vec<Graded<C>> = (0..n).map(|_| Graded::new(trunc.order, trunc.param_order)).collect();
    let mut u: Vec<Graded<C>> = (0..n).map(|_| Graded::new(trunc.order, trunc.param_order)).collect();
    for j in 0..n {
        y[j].get_mut(1, 0).insert(Monomial::var(j), C::one());
        accumulate(g[j].get_mut(1, 0), Monomial::var(j), lambda[j].clone());
        for i in 0..n {
            accumulate(u[i].get_mut(1, 0), Monomial::var(j), p.get(i, j).clone());
        }
    }

    let eps_pow = |q: usize| -> Monomial {
        let mut m = Monomial::ONE;
        if let Some(e) = eps_index {
            for _ in 0..q {
                m = m.mul(&Monomial::var(e));
            }
        }
        m
    };
    let divisor = |m: &Monomial, j: usize| -> C {
        let mut d = -lambda[j].clone();
        for (i, l) in lambda.iter().enumerate() {
            let e = m.exponent(i);
            if e > 0 {
                d = d + l.clone() * C::from_i64(e as i64);
            }
        }
        d
    };
    let lambda_scale = lambda.iter().map(|l| l.to_f64().abs()).fold(1.0, f64::max);

    let mut report = ResonanceReport { entries: Vec::new() };
    for d in 1..=order {
        // products of degree d depend only on u blocks of lower state degree
        for key in &product_keys {
            for e in 0..=pord {
                let mut block = Block::new();
                let last = *key.last().unwrap();
                for d1 in key.len() - 1..d {
                    for e1 in 0..=e {
                        let prefix = if key.len() == 2 {
                            u[key[0]].get(d1, e1)
                        } else {
                            products[&key[..key.len() - 1]].get(d1, e1)
                        };
                        if prefix.is_empty() {
                            continue;
                        }
                        convolve_into(&mut block, prefix, u[last].get(d - d1, e - e1), &C::one());
                    }
                }
                prune(&mut block);
                *products.get_mut(key).unwrap().get_mut(d, e) = block;
            }
        }
        for e in 0..=pord {
            if d == 1 && e == 0 {
                continue;
            }
            // nonlinearity in physical coordinates, then eigen-coordinates
            let mut nl: Vec<Block<C>> = vec![Block::new(); n];
            for t in &nl_terms {
                if t.param_power > e {
                    continue;
                }
                let src = if t.factors.len() == 1 {
                    u[t.factors[0]].get(d, e - t.param_power)
                } else {
                    products[&t.factors].get(d, e - t.param_power)
                };
                let shift = eps_pow(t.param_power);
                for (m, c) in src {
                    accumulate(&mut nl[t.component], m.mul(&shift), t.coeff.clone() * c.clone());
                }
            }
            let mut residual: Vec<Block<C>> = vec![Block::new(); n];
            for j in 0..n {
                for i in 0..n {
                    let pij = p_inv.get(j, i);
                    if pij.is_zero() {
                        continue;
                    }
                    for (m, c) in &nl[i] {
                        accumulate(&mut residual[j], *m, -(pij.clone() * c.clone()));
                    }
                }
                // DY G, skipping the two pairings that hold this block's unknowns
                for i in 0..n {
                    for d1 in 1..=d {
                        let d2 = d + 1 - d1;
                        for e1 in 0..=e {
                            let e2 = e - e1;
                            if (d1 == d && e1 == e) || (d1 == 1 && e1 == 0 && d2 == d && e2 == e) {
                                continue;
                            }
                            let gb = g[i].get(d2, e2);
                            let yb = y[j].get(d1, e1);
                            if gb.is_empty() || yb.is_empty() {
                                continue;
                            }
                            let dy = derivative_block(yb, i);
                            convolve_into(&mut residual[j], &dy, gb, &C::one());
                        }
                    }
                }
                prune(&mut residual[j]);
            }
            // homological solve
            for j in 0..n {
                let entries: Vec<(Monomial, C)> = residual[j].iter().map(|(m, c)| (*m, c.clone())).collect();
                for (m, r) in entries {
                    let dv = divisor(&m, j);
                    if dv.is_negligible(lambda_scale) {
                        g[j].get_mut(d, e).insert(m, -r);
                        report.entries.push(ResonanceEntry {
                            component: j,
                            monomial: m,
                            divisor: C::zero(),
                            disposition: Disposition::KeptInG,
                        });
                    } else {
                        y[j].get_mut(d, e).insert(m, -r / dv.clone());
                        report.entries.push(ResonanceEntry {
                            component: j,
                            monomial: m,
                            divisor: dv,
                            disposition: Disposition::RemovedIntoT,
                        });
                    }
                }
            }
            // kernel choice: on resonant monomials, the amplitudes s = M u
            // carry no correction
            let monos: BTreeSet<Monomial> = (0..n).flat_map(|j| y[j].get(d, e).keys().copied()).collect();
            for m in monos {
                let res: Vec<usize> = (0..n).filter(|&j| divisor(&m, j).is_negligible(lambda_scale)).collect();
                if res.is_empty() {
                    continue;
                }
                let others: Vec<usize> = (0..n).filter(|j| !res.contains(j)).collect();
                let kss = k.submatrix(&res, &res);
                let rhs: Vec<C> = res
                    .iter()
                    .map(|&r| {
                        others.iter().fold(C::zero(), |acc, &o| {
                            acc - k.get(r, o).clone() * y[o].get(d, e).get(&m).cloned().unwrap_or_else(C::zero)
                        })
                    })
                    .collect();
                let sol = kss.solve(&rhs).ok_or(NormalFormError::CoordinateMismatch { cluster: res[0], rows: res.clone() })?;
                for (&r, v) in res.iter().zip(sol) {
                    let block = y[r].get_mut(d, e);
                    if v.is_negligible(1.0) && (C::EXACT || v.to_f64() == 0.0) {
                        block.remove(&m);
                    } else {
                        block.insert(m, v);
                    }
                }
            }
            for i in 0..n {
                let mut block = Block::new();
                for jj in 0..n {
                    let pij = p.get(i, jj);
                    if pij.is_zero() {
                        continue;
                    }
                    for (m, c) in y[jj].get(d, e) {
                        accumulate(&mut block, *m, pij.clone() * c.clone());
                    }
                }
                prune(&mut block);
                *u[i].get_mut(d, e) = block;
            }
        }
    }

    let vars = amplitude_vars(with_param);
    let transform = SeriesVector::new(u.iter().map(|ui| ui.to_series(&vars, trunc)).collect())?;
    let evolution = SeriesVector::new(g.iter().map(|gi| gi.to_series(&vars, trunc)).collect())?;
    let highest = u.iter().chain(g.iter()).map(|s| s.highest_param_power()).max().unwrap_or(0) as u32;
    Ok(NormalForm {
        system_name: system.name().to_string(),
        transform,
        evolution,
        report,
        eigenvalues: lambda,
        basis: p,
        amplitude_matrix: k,
        highest_param_power: highest,
    })
}

/// `DT G - F(T)`, computed with full series arithmetic, independently of the
/// block solver.
pub fn verify_conjugacy<C: Scalar>(
    transform: &SeriesVector<C>,
    evolution: &SeriesVector<C>,
    system: &SpatialSystem,
) -> Result<SeriesVector<C>, SeriesError> {
    let vars = transform.vars().clone();
    let trunc = transform.truncation();
    let mut images: Vec<TruncatedSeries<C>> = transform.components().to_vec();
    if system.has_param() {
        let eps = vars.index_of(PARAM_NAME).ok_or_else(|| SeriesError::Arity { expected: 5, found: vars.len() })?;
        images.push(TruncatedSeries::var(vars.clone(), trunc, eps));
    }
    let rhs = system.rhs_series(&images)?;
    let lhs: Vec<TruncatedSeries<C>> = transform
        .components()
        .iter()
        .map(|tj| {
            (0..evolution.len()).try_fold(TruncatedSeries::zero(vars.clone(), trunc), |acc, i| {
                tj.derivative(i).mul(evolution.get(i)).and_then(|t| acc.add(&t))
            })
        })
        .collect::<Result<_, _>>()?;
    SeriesVector::new(lhs)?.sub(&rhs)
}

/// Collapses the parameter to a value, giving series over the amplitudes only.
pub fn at_param<C: Scalar>(v: &SeriesVector<C>, value: C) -> Result<SeriesVector<C>, SeriesError> {
    let src = v.vars();
    if src.len() == 4 {
        return Ok(v.clone());
    }
    let target = amplitude_vars(false);
    let trunc = Truncation::state(v.truncation().order);
    let mut images: Vec<TruncatedSeries<C>> = (0..4).map(|i| TruncatedSeries::var(target.clone(), trunc, i)).collect();
    images.push(TruncatedSeries::constant(target, trunc, value));
    v.compose(&images)
}

/// Monomials in `G1`, `G2` that depend on `s3` or `s4`, and monomials of
/// `G3` (`G4`) not divisible by `s3` (`s4`).
pub fn structure_violations<C: Scalar>(evolution: &SeriesVector<C>) -> Vec<(usize, Monomial)> {
    let mut out = Vec::new();
    for (j, gj) in evolution.components().iter().enumerate() {
        for (m, _) in gj.terms() {
            let bad = match j {
                0 | 1 => m.exponent(2) > 0 || m.exponent(3) > 0,
                2 => m.exponent(2) == 0,
                3 => m.exponent(3) == 0,
                _ => false,
            };
            if bad {
                out.push((j, *m));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidation {
    pub order: u32,
    /// Largest coefficient difference over `T` and `G` at `eps = 1`.
    pub max_discrepancy: f64,
    /// Largest difference relative to `max(1, |coefficient|)`.
    pub max_scaled_discrepancy: f64,
    pub tolerance: f64,
    pub exact_param_terminated: bool,
}

impl CrossValidation {
    /// Coefficientwise agreement to the tolerance, relative to the
    /// coefficient size once it exceeds one.
    pub fn passed(&self) -> bool {
        self.max_scaled_discrepancy <= self.tolerance
    }
}

pub const CROSS_VALIDATION_TOLERANCE: f64 = 1e-12;

/// Largest absolute and scaled coefficient differences; `a` sets the scale.
fn max_difference(a: &SeriesVector<f64>, b: &SeriesVector<f64>) -> (f64, f64) {
    let (mut worst, mut scaled) = (0.0f64, 0.0f64);
    for (x, y) in a.components().iter().zip(b.components()) {
        let keys: BTreeSet<Monomial> = x.terms().chain(y.terms()).map(|(m, _)| *m).collect();
        for m in keys {
            let d = (x.coeff(&m) - y.coeff(&m)).abs();
            worst = worst.max(d);
            scaled = scaled.max(d / x.coeff(&m).abs().max(1.0));
        }
    }
    (worst, scaled)
}

/// Builds both embeddings, collapses them at `eps = 1`, and compares every
/// coefficient of `T` and `G`.
pub fn cross_validate_embeddings(
    exact: &NormalForm<Rational>,
    float: &NormalForm<f64>,
) -> Result<CrossValidation, SeriesError> {
    let ta = at_param(&exact.transform, Rational::from_integer(1.into()))?;
    let ga = at_param(&exact.evolution, Rational::from_integer(1.into()))?;
    let to_f = |v: &SeriesVector<Rational>| {
        SeriesVector::new(v.components().iter().map(|c| c.map_coeffs(|x| x.to_f64())).collect())
    };
    let (ta, ga) = (to_f(&ta)?, to_f(&ga)?);
    let tb = at_param(&float.transform, 1.0)?;
    let gb = at_param(&float.evolution, 1.0)?;
    let (t_abs, t_scaled) = max_difference(&ta, &tb);
    let (g_abs, g_scaled) = max_difference(&ga, &gb);
    Ok(CrossValidation {
        order: exact.truncation().order,
        max_discrepancy: t_abs.max(g_abs),
        max_scaled_discrepancy: t_scaled.max(g_scaled),
        tolerance: CROSS_VALIDATION_TOLERANCE,
        exact_param_terminated: exact.param_series_terminated(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::scalar::{int, rat};
    use crate::spatial::{build_embedding, build_original, coordinate_map, Embedding};

    fn exact_a(order: u32) -> NormalForm<Rational> {
        construct(&build_embedding(Embedding::A), &coordinate_map(), Truncation::new(order, exact_param_order(order)))
            .unwrap()
    }

    #[test]
    fn original_system_is_refused() {
        let err = construct::<Rational>(&build_original(), &coordinate_map(), Truncation::state(3)).unwrap_err();
        assert!(matches!(err, NormalFormError::Spatial(SpatialError::NotDiagonalizable { .. })));
    }

    #[test]
    fn linear_part_at_unit_eps() {
        let nf = exact_a(2);
        let t = at_param(&nf.transform, int(1)).unwrap();
        let g = at_param(&nf.evolution, int(1)).unwrap();
        assert_eq!(t.get(0).coeff_of(&[0, 0, 1, 0]), rat(1, 4));
        assert_eq!(t.get(0).coeff_of(&[0, 0, 0, 1]), rat(3, 4));
        assert_eq!(g.get(0).state_part(1).len(), 1);
        assert_eq!(g.get(0).coeff_of(&[0, 1, 0, 0]), int(1));
        assert_eq!(g.get(2).coeff_of(&[0, 0, 1, 0]), rat(-2, 3));
    }

    #[test]
    fn conjugacy_residual_vanishes() {
        let nf = exact_a(3);
        let r = verify_conjugacy(&nf.transform, &nf.evolution, &build_embedding(Embedding::A)).unwrap();
        assert!(r.components().iter().all(|c| c.is_zero()), "{r:?}");
        assert!(nf.param_series_terminated());
    }

    #[test]
    fn report_divisors_match_dispositions() {
        let nf = exact_a(3);
        for e in &nf.report.entries {
            assert_eq!(e.divisor.is_zero(), e.disposition == Disposition::KeptInG);
        }
        assert!(nf.report.kept().count() > 0);
    }
}
