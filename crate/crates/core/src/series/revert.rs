use std::sync::Arc;

use super::monomial::{Truncation, VarSet};
use super::truncated::TruncatedSeries;
use super::vector::SeriesVector;
use super::SeriesError;
use crate::scalar::Scalar;

/// Solves `equations(unknowns, knowns) = values` for the unknowns as series.
///
/// `equations[k]` is the series giving the k-th known value in terms of the
/// variables of the equation set; `unknowns` lists which of those variables
/// are to be solved for (one per equation). The result is a vector with one
/// series per unknown, over a new variable set made of the remaining
/// variables (in their original order) followed by `value_names`.
///
/// The equations must vanish at the origin and have an invertible Jacobian
/// with respect to the unknowns there. Each fixed-point sweep
/// `u <- J^-1 (v - K k - N(u, k))` fixes one more degree, so `order` sweeps
/// give the result to the full truncation order.
pub fn solve_implicit_system<C: Scalar>(
    equations: &SeriesVector<C>,
    unknowns: &[usize],
    value_names: &[&str],
) -> Result<SeriesVector<C>, SeriesError> {
    let n = equations.len();
    if unknowns.len() != n || value_names.len() != n {
        return Err(SeriesError::Arity { expected: n, found: unknowns.len().min(value_names.len()) });
    }
    let src = equations.vars().clone();
    let trunc = equations.truncation();
    for eq in equations.components() {
        if !eq.constant_term().is_zero() {
            return Err(SeriesError::NonzeroConstant("equation".into()));
        }
    }

    let knowns: Vec<usize> = (0..src.len()).filter(|i| !unknowns.contains(i)).collect();
    let state_known: Vec<&str> =
        knowns.iter().filter(|&&i| !src.is_param(i)).map(|&i| src.name(i)).collect();
    let param_known: Vec<&str> = knowns.iter().filter(|&&i| src.is_param(i)).map(|&i| src.name(i)).collect();
    let mut state_names = state_known.clone();
    state_names.extend_from_slice(value_names);
    let dst: Arc<VarSet> = VarSet::new(&state_names, &param_known);
    let out_trunc = Truncation { order: trunc.order, param_order: trunc.param_order };

    let jac = equations.jacobian_at_origin(unknowns);
    let jinv = jac.inverse().ok_or(SeriesError::SingularJacobian)?;

    // images of the source variables in the destination set
    let dst_index = |name: &str| dst.index_of(name).expect("known variable carried over");
    let known_images: Vec<(usize, TruncatedSeries<C>)> = knowns
        .iter()
        .map(|&i| (i, TruncatedSeries::var(dst.clone(), out_trunc, dst_index(src.name(i)))))
        .collect();
    let values: Vec<TruncatedSeries<C>> = value_names
        .iter()
        .map(|name| TruncatedSeries::var(dst.clone(), out_trunc, dst_index(name)))
        .collect();

    // residual part of each equation: everything except the unknowns' linear terms
    let linear_unknown: Vec<TruncatedSeries<C>> = equations
        .components()
        .iter()
        .map(|eq| {
            eq.filter(|m| unknowns.iter().any(|&u| *m == super::Monomial::var(u)))
        })
        .collect();
    let rest: Vec<TruncatedSeries<C>> = equations
        .components()
        .iter()
        .zip(&linear_unknown)
        .map(|(eq, lin)| eq.sub(lin))
        .collect::<Result<_, _>>()?;

    let zero = TruncatedSeries::zero(dst.clone(), out_trunc);
    let mut current: Vec<TruncatedSeries<C>> = vec![zero.clone(); n];
    for _ in 0..=trunc.order.max(1) + trunc.param_order {
        let mut images: Vec<TruncatedSeries<C>> = vec![zero.clone(); src.len()];
        for (i, img) in &known_images {
            images[*i] = img.clone();
        }
        for (k, &u) in unknowns.iter().enumerate() {
            images[u] = current[k].clone();
        }
        let rhs: Vec<TruncatedSeries<C>> = rest
            .iter()
            .zip(&values)
            .map(|(r, v)| r.compose(&images).and_then(|nr| v.sub(&nr)))
            .collect::<Result<_, _>>()?;
        let next: Vec<TruncatedSeries<C>> = (0..n)
            .map(|i| {
                (0..n).fold(zero.clone(), |acc, j| &acc + &rhs[j].scale(jinv.get(i, j)))
            })
            .collect();
        if next == current {
            break;
        }
        current = next;
    }
    SeriesVector::new(current)
}
