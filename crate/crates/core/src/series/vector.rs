use std::sync::Arc;

use super::monomial::{Monomial, Truncation, VarSet};
use super::truncated::TruncatedSeries;
use super::SeriesError;
use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};

/// Ordered list of series over one variable set and one truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesVector<C: Scalar = Rational> {
    components: Vec<TruncatedSeries<C>>,
}

impl<C: Scalar> SeriesVector<C> {
    pub fn new(components: Vec<TruncatedSeries<C>>) -> Result<Self, SeriesError> {
        if let Some(first) = components.first() {
            for c in &components[1..] {
                if c.vars() != first.vars() {
                    return Err(SeriesError::VarSetMismatch {
                        left: first.vars().names().to_vec(),
                        right: c.vars().names().to_vec(),
                    });
                }
            }
            let trunc = components.iter().fold(first.truncation(), |t, c| t.min(c.truncation()));
            let components = components.into_iter().map(|c| c.retruncated(trunc)).collect();
            return Ok(SeriesVector { components });
        }
        Ok(SeriesVector { components })
    }

    pub fn components(&self) -> &[TruncatedSeries<C>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<TruncatedSeries<C>> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn get(&self, i: usize) -> &TruncatedSeries<C> {
        &self.components[i]
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        self.components[0].vars()
    }

    pub fn truncation(&self) -> Truncation {
        self.components[0].truncation()
    }

    pub fn map(&self, f: impl Fn(&TruncatedSeries<C>) -> TruncatedSeries<C>) -> Self {
        SeriesVector { components: self.components.iter().map(f).collect() }
    }

    pub fn compose(&self, images: &[TruncatedSeries<C>]) -> Result<Self, SeriesError> {
        let comps = self.components.iter().map(|c| c.compose(images)).collect::<Result<Vec<_>, _>>()?;
        SeriesVector::new(comps)
    }

    pub fn substitute(&self, bindings: &[(usize, TruncatedSeries<C>)]) -> Result<Self, SeriesError> {
        let comps = self.components.iter().map(|c| c.substitute(bindings)).collect::<Result<Vec<_>, _>>()?;
        SeriesVector::new(comps)
    }

    pub fn evaluate(&self, point: &[C]) -> Vec<C> {
        self.components.iter().map(|c| c.evaluate(point)).collect()
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>, _>>()?;
        SeriesVector::new(comps)
    }

    /// Linear map applied componentwise: `out_i = sum_j m[i][j] * self_j`.
    pub fn linear_combination(&self, m: &Matrix<C>) -> Self {
        assert_eq!(m.cols(), self.len());
        let zero = TruncatedSeries::zero(self.vars().clone(), self.truncation());
        let comps = (0..m.rows())
            .map(|i| {
                let mut acc = zero.clone();
                for j in 0..m.cols() {
                    let k = m.get(i, j);
                    if !k.is_zero() {
                        acc = &acc + &self.components[j].scale(k);
                    }
                }
                acc
            })
            .collect();
        SeriesVector { components: comps }
    }

    /// Jacobian of the components with respect to the listed variables, at
    /// the origin.
    pub fn jacobian_at_origin(&self, wrt: &[usize]) -> Matrix<C> {
        Matrix::from_fn(self.len(), wrt.len(), |i, j| self.components[i].coeff(&Monomial::var(wrt[j])))
    }

    /// Largest coefficient magnitude over all components (zero if empty).
    pub fn max_abs_coeff(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.terms().map(|(_, v)| v.to_f64().abs()))
            .fold(0.0, f64::max)
    }

    /// Lowest state degree among all stored terms.
    pub fn min_state_degree(&self) -> Option<u32> {
        self.components.iter().filter_map(|c| c.min_state_degree()).min()
    }
}
