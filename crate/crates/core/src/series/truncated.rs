use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::monomial::{Monomial, Truncation, VarSet};
use super::SeriesError;
use crate::scalar::{Rational, Scalar};

/// Multivariate polynomial truncated at a fixed degree, kept in canonical form:
/// no zero coefficients, no monomial beyond the truncation, terms ordered
/// lexicographically by exponent vector.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries<C: Scalar = Rational> {
    vars: Arc<VarSet>,
    trunc: Truncation,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> TruncatedSeries<C> {
    pub fn zero(vars: Arc<VarSet>, trunc: Truncation) -> Self {
        TruncatedSeries { vars, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(vars: Arc<VarSet>, trunc: Truncation, c: C) -> Self {
        Self::from_terms(vars, trunc, [(Monomial::ONE, c)])
    }

    pub fn var(vars: Arc<VarSet>, trunc: Truncation, i: usize) -> Self {
        assert!(i < vars.len(), "variable index {i} out of range");
        Self::from_terms(vars, trunc, [(Monomial::var(i), C::one())])
    }

    /// Builds a series from raw terms, summing repeats and dropping zeros and
    /// monomials beyond the truncation.
    pub fn from_terms<I>(vars: Arc<VarSet>, trunc: Truncation, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C)>,
    {
        let mut s = Self::zero(vars, trunc);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn order(&self) -> u32 {
        self.trunc.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    /// Number of nonzero terms.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficient by exponent list, e.g. `coeff_of(&[1, 0, 1])`.
    pub fn coeff_of(&self, exponents: &[u8]) -> C {
        self.coeff(&Monomial::new(exponents))
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&Monomial::ONE)
    }

    /// Adds `c·m` in place, respecting truncation and canonical form.
    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() || !self.trunc.admits(&self.vars, &m) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SeriesError> {
        if Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars {
            Ok(())
        } else {
            Err(SeriesError::VarSetMismatch {
                left: self.vars.names().to_vec(),
                right: other.vars.names().to_vec(),
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.retruncated(trunc);
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.retruncated(trunc);
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.map_terms(|c| -c.clone())
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return Self::zero(self.vars.clone(), self.trunc);
        }
        self.map_terms(|c| c.clone() * k.clone())
    }

    fn map_terms(&self, f: impl Fn(&C) -> C) -> Self {
        let terms = self.terms.iter().map(|(m, c)| (*m, f(c))).filter(|(_, c)| !c.is_zero()).collect();
        TruncatedSeries { vars: self.vars.clone(), trunc: self.trunc, terms }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let trunc = self.trunc.min(other.trunc);
        let mut acc: BTreeMap<Monomial, C> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            let sd1 = self.vars.state_degree(m1);
            let pd1 = self.vars.param_degree(m1);
            if sd1 > trunc.order || pd1 > trunc.param_order {
                continue;
            }
            for (m2, c2) in &other.terms {
                if sd1 + self.vars.state_degree(m2) > trunc.order
                    || pd1 + self.vars.param_degree(m2) > trunc.param_order
                {
                    continue;
                }
                let m = m1.mul(m2);
                let p = c1.clone() * c2.clone();
                match acc.get_mut(&m) {
                    Some(v) => *v = v.clone() + p,
                    None => {
                        acc.insert(m, p);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(TruncatedSeries { vars: self.vars.clone(), trunc, terms: acc })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.vars.clone(), self.trunc, C::one());
        for _ in 0..k {
            out = out.mul(self).expect("same variable set");
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.vars.clone(), self.trunc);
        for (m, c) in &self.terms {
            if let Some(lower) = m.lower(i) {
                out.add_term(lower, c.clone() * C::from_i64(m.exponent(i) as i64));
            }
        }
        out
    }

    /// Same series under a tighter truncation.
    pub fn retruncated(&self, trunc: Truncation) -> Self {
        let trunc = self.trunc.min(trunc);
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| trunc.admits(&self.vars, m))
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        TruncatedSeries { vars: self.vars.clone(), trunc, terms }
    }

    /// Terms whose monomial satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (*m, c.clone())).collect();
        TruncatedSeries { vars: self.vars.clone(), trunc: self.trunc, terms }
    }

    /// Homogeneous part of the given degree in the state variables.
    pub fn state_part(&self, degree: u32) -> Self {
        let vars = self.vars.clone();
        self.filter(|m| vars.state_degree(m) == degree)
    }

    /// Lowest state degree among stored terms, `None` for the zero series.
    pub fn min_state_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| self.vars.state_degree(m)).min()
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> TruncatedSeries<D> {
        let terms = self.terms.iter().map(|(m, c)| (*m, f(c))).filter(|(_, c)| !c.is_zero()).collect();
        TruncatedSeries { vars: self.vars.clone(), trunc: self.trunc, terms }
    }

    /// Replaces some variables by series over the same variable set.
    ///
    /// A replacement for a state variable must have zero constant term; a
    /// parameter may be replaced by a constant (e.g. `eps = 1`) or by a series
    /// without constant term.
    pub fn substitute(&self, bindings: &[(usize, TruncatedSeries<C>)]) -> Result<Self, SeriesError> {
        let mut images: Vec<TruncatedSeries<C>> =
            (0..self.vars.len()).map(|i| Self::var(self.vars.clone(), self.trunc, i)).collect();
        for (i, s) in bindings {
            self.check_compatible(s)?;
            images[*i] = s.clone();
        }
        self.compose(&images)
    }

    /// Composition: every variable `i` of `self` is replaced by `images[i]`.
    /// All images must share one variable set, which becomes the result's.
    pub fn compose(&self, images: &[TruncatedSeries<C>]) -> Result<TruncatedSeries<C>, SeriesError> {
        if images.len() != self.vars.len() {
            return Err(SeriesError::Arity { expected: self.vars.len(), found: images.len() });
        }
        let target = images[0].vars.clone();
        for img in images {
            if img.vars != target {
                return Err(SeriesError::VarSetMismatch {
                    left: target.names().to_vec(),
                    right: img.vars.names().to_vec(),
                });
            }
        }
        let mut trunc = images.iter().fold(images[0].trunc, |t, s| t.min(s.trunc));
        for (i, img) in images.iter().enumerate() {
            let has_const = !img.constant_term().is_zero();
            if has_const {
                let pure_constant = img.len() == 1;
                if !self.vars.is_param(i) || !pure_constant {
                    return Err(SeriesError::NonzeroConstant(self.vars.name(i).to_string()));
                }
            }
        }
        // Truncation of `self` in its state variables limits what is known of
        // the composite whenever state images start at degree >= 1.
        let state_images_positive = (0..self.vars.len())
            .filter(|&i| !self.vars.is_param(i))
            .all(|i| images[i].min_state_degree().is_none_or(|d| d >= 1));
        if state_images_positive {
            trunc.order = trunc.order.min(self.trunc.order);
        }

        let max_exp: Vec<u32> = (0..self.vars.len())
            .map(|i| self.terms.keys().map(|m| m.exponent(i)).max().unwrap_or(0))
            .collect();
        let one = TruncatedSeries::constant(target.clone(), trunc, C::one());
        let powers: Vec<Vec<TruncatedSeries<C>>> = images
            .iter()
            .zip(&max_exp)
            .map(|(img, &k)| {
                let img = img.retruncated(trunc);
                let mut p = vec![one.clone()];
                for _ in 0..k {
                    let next = p.last().unwrap().mul(&img).expect("same variable set");
                    p.push(next);
                }
                p
            })
            .collect();

        let mut out = TruncatedSeries::zero(target.clone(), trunc);
        for (m, c) in &self.terms {
            let mut prod = TruncatedSeries::constant(target.clone(), trunc, c.clone());
            for (i, pw) in powers.iter().enumerate() {
                let e = m.exponent(i) as usize;
                if e > 0 {
                    prod = prod.mul(&pw[e]).expect("same variable set");
                    if prod.is_zero() {
                        break;
                    }
                }
            }
            for (pm, pc) in prod.terms {
                out.add_term(pm, pc);
            }
        }
        Ok(out)
    }

    /// Direct term-by-term evaluation.
    pub fn evaluate(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.vars.len(), "point dimension must match the variable count");
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, x) in point.iter().enumerate() {
                for _ in 0..m.exponent(i) {
                    t = t * x.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Nested Horner evaluation, one variable at a time.
    pub fn evaluate_horner(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.vars.len(), "point dimension must match the variable count");
        let terms: Vec<(&Monomial, &C)> = self.terms.iter().collect();
        horner(&terms, 0, point)
    }
}

fn horner<C: Scalar>(terms: &[(&Monomial, &C)], var: usize, point: &[C]) -> C {
    if terms.is_empty() {
        return C::zero();
    }
    if var == point.len() {
        return terms.iter().fold(C::zero(), |acc, (_, c)| acc + (*c).clone());
    }
    // terms are sorted lexicographically, so equal exponents of `var` are
    // contiguous once the earlier variables agree (guaranteed by recursion)
    let mut groups: Vec<(u32, C)> = Vec::new();
    let mut start = 0;
    while start < terms.len() {
        let e = terms[start].0.exponent(var);
        let mut end = start;
        while end < terms.len() && terms[end].0.exponent(var) == e {
            end += 1;
        }
        groups.push((e, horner(&terms[start..end], var + 1, point)));
        start = end;
    }
    let x = &point[var];
    let mut acc = C::zero();
    let mut prev = groups.last().map(|g| g.0).unwrap_or(0);
    for (e, v) in groups.into_iter().rev() {
        for _ in e..prev {
            acc = acc * x.clone();
        }
        acc = acc + v;
        prev = e;
    }
    for _ in 0..prev {
        acc = acc * x.clone();
    }
    acc
}

impl<C: Scalar> fmt::Debug for TruncatedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0 + O({})", self.trunc.order + 1);
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(m, c)| format!("({:?})*{}", c, self.vars.render(m))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Display for TruncatedSeries<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::render_expression(self, |c| c.to_string()))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl<C: Scalar> std::ops::$tr<&TruncatedSeries<C>> for &TruncatedSeries<C> {
            type Output = TruncatedSeries<C>;
            /// Panics if the variable sets differ; use the inherent method for
            /// a `Result`.
            fn $method(self, rhs: &TruncatedSeries<C>) -> TruncatedSeries<C> {
                TruncatedSeries::$inner(self, rhs).expect("series over different variable sets")
            }
        }
    };
}
forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);

impl<C: Scalar> std::ops::Neg for &TruncatedSeries<C> {
    type Output = TruncatedSeries<C>;
    fn neg(self) -> TruncatedSeries<C> {
        TruncatedSeries::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn vars() -> Arc<VarSet> {
        VarSet::new(&["s1", "s2", "s3", "s4"], &["eps"])
    }

    fn v(i: usize) -> TruncatedSeries {
        TruncatedSeries::var(vars(), Truncation::new(3, 3), i)
    }

    #[test]
    fn additive_identity_and_cancellation() {
        let p = &(&v(0) * &v(1)) + &v(2);
        let zero = TruncatedSeries::zero(vars(), Truncation::new(3, 3));
        assert_eq!(&p + &zero, p);
        assert!((&v(0) + &(-&v(0))).is_zero());
    }

    #[test]
    fn binomial_square() {
        let s = &v(0) + &v(1);
        let sq = &s * &s;
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.coeff_of(&[2, 0]), int(1));
        assert_eq!(sq.coeff_of(&[1, 1]), int(2));
        assert_eq!(sq.coeff_of(&[0, 2]), int(1));
    }

    #[test]
    fn multiplicative_identity_and_truncation() {
        let p = &(&v(0) * &v(3)) + &v(2);
        let one = TruncatedSeries::constant(vars(), Truncation::new(3, 3), int(1));
        assert_eq!(&p * &one, p);
        let s1sq = &v(0) * &v(0);
        assert!((&s1sq * &s1sq).is_zero());
    }

    #[test]
    fn mismatched_variable_sets_are_rejected() {
        let other = VarSet::new(&["x", "y"], &[]);
        let q = TruncatedSeries::<Rational>::var(other, Truncation::state(3), 0);
        assert!(matches!(v(0).add(&q), Err(SeriesError::VarSetMismatch { .. })));
        assert!(v(0).mul(&q).is_err());
    }

    #[test]
    fn parameter_collapse() {
        let p = &v(0) + &(&v(4) * &v(1));
        let one = TruncatedSeries::constant(vars(), Truncation::new(3, 3), int(1));
        let collapsed = p.substitute(&[(4, one)]).unwrap();
        assert_eq!(collapsed, &v(0) + &v(1));
    }

    #[test]
    fn identity_substitution_is_noop() {
        let p = &(&v(0) * &v(0)) + &(&v(4) * &v(2));
        let ids: Vec<_> = (0..5).map(|i| (i, v(i))).collect();
        assert_eq!(p.substitute(&ids).unwrap(), p);
    }

    #[test]
    fn constant_substitution_for_state_variable_is_refused() {
        let p = &v(0) * &v(1);
        let shifted = &v(1) + &TruncatedSeries::constant(vars(), Truncation::new(3, 3), int(1));
        assert!(matches!(p.substitute(&[(0, shifted)]), Err(SeriesError::NonzeroConstant(_))));
    }

    #[test]
    fn evaluation_of_transform_linear_part() {
        let p = TruncatedSeries::from_terms(
            vars(),
            Truncation::new(3, 3),
            [
                (Monomial::var(0), int(1)),
                (Monomial::var(1), int(-1)),
                (Monomial::var(2), rat(1, 4)),
                (Monomial::var(3), rat(3, 4)),
            ],
        );
        assert_eq!(p.evaluate(&[int(1), int(0), int(0), int(0), int(1)]), int(1));
        let zero = TruncatedSeries::<Rational>::zero(vars(), Truncation::new(3, 3));
        assert_eq!(zero.evaluate(&[int(3), int(1), int(2), int(5), int(1)]), int(0));
    }

    #[test]
    fn derivative_lowers_exponent() {
        let p = &(&v(0) * &v(0)) * &v(1);
        let d = p.derivative(0);
        assert_eq!(d.coeff_of(&[1, 1]), int(2));
        assert_eq!(d.len(), 1);
    }
}
