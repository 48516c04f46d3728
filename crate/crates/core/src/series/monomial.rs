use std::fmt;
use std::sync::Arc;

/// Upper bound on the number of variables a series may carry.
pub const MAX_VARS: usize = 8;

/// Exponent vector. Unused trailing slots stay zero, so the derived `Ord` is
/// the lexicographic order on the exponents of the variables actually in use.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial([u8; MAX_VARS]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; MAX_VARS]);

    pub fn new(exponents: &[u8]) -> Self {
        assert!(exponents.len() <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        let mut e = [0u8; MAX_VARS];
        e[..exponents.len()].copy_from_slice(exponents);
        Monomial(e)
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0u8; MAX_VARS];
        e[i] = 1;
        Monomial(e)
    }

    #[inline]
    pub fn exponent(&self, i: usize) -> u32 {
        self.0[i] as u32
    }

    pub fn exponents(&self, n: usize) -> &[u8] {
        &self.0[..n]
    }

    #[inline]
    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    #[inline]
    pub fn degree_where(&self, mask: &[bool]) -> u32 {
        mask.iter().zip(self.0.iter()).filter(|(m, _)| **m).map(|(_, &e)| e as u32).sum()
    }

    #[inline]
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a = a.checked_add(*b).expect("monomial exponent overflow");
        }
        Monomial(e)
    }

    /// Exponent vector with variable `i` lowered by one, if it is present.
    pub fn lower(&self, i: usize) -> Option<Monomial> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0;
        e[i] -= 1;
        Some(Monomial(e))
    }

    pub fn with_exponent(&self, i: usize, value: u8) -> Monomial {
        let mut e = self.0;
        e[i] = value;
        Monomial(e)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Names of the variables of a series, and which of them are parameters.
///
/// Parameters (such as the embedding parameter `eps`) are truncated separately
/// from the state variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarSet {
    names: Vec<String>,
    params: Vec<bool>,
}

impl VarSet {
    /// State variables first, then parameters.
    pub fn new(state: &[&str], params: &[&str]) -> Arc<VarSet> {
        let names: Vec<String> = state.iter().chain(params.iter()).map(|s| s.to_string()).collect();
        assert!(names.len() <= MAX_VARS, "at most {MAX_VARS} variables are supported");
        let mut p = vec![false; state.len()];
        p.extend(std::iter::repeat_n(true, params.len()));
        Arc::new(VarSet { names, params: p })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_param(&self, i: usize) -> bool {
        self.params[i]
    }

    pub fn param_mask(&self) -> &[bool] {
        &self.params
    }

    pub fn state_mask(&self) -> Vec<bool> {
        self.params.iter().map(|p| !p).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn state_degree(&self, m: &Monomial) -> u32 {
        (0..self.len()).filter(|&i| !self.params[i]).map(|i| m.exponent(i)).sum()
    }

    pub fn param_degree(&self, m: &Monomial) -> u32 {
        (0..self.len()).filter(|&i| self.params[i]).map(|i| m.exponent(i)).sum()
    }

    /// Renders `c`-free monomial text such as `s1^2*s3`; `1` for the unit.
    pub fn render(&self, m: &Monomial) -> String {
        let parts: Vec<String> = (0..self.len())
            .filter(|&i| m.exponent(i) > 0)
            .map(|i| match m.exponent(i) {
                1 => self.names[i].clone(),
                e => format!("{}^{}", self.names[i], e),
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

/// Truncation bounds: total degree in the state variables, and total degree in
/// the parameters. Monomials beyond either bound are never stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub order: u32,
    pub param_order: u32,
}

impl Truncation {
    pub const fn new(order: u32, param_order: u32) -> Self {
        Truncation { order, param_order }
    }

    /// Only state variables present (or parameters never raised).
    pub const fn state(order: u32) -> Self {
        Truncation { order, param_order: 0 }
    }

    pub fn min(self, other: Truncation) -> Truncation {
        Truncation {
            order: self.order.min(other.order),
            param_order: self.param_order.min(other.param_order),
        }
    }

    pub fn admits(&self, vars: &VarSet, m: &Monomial) -> bool {
        vars.state_degree(m) <= self.order && vars.param_degree(m) <= self.param_order
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::state(3)
    }
}
