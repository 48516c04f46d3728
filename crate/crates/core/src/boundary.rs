//! Macroscale boundary conditions from the normal-form transform.
//!
//! Microscale Dirichlet data fix a curve on the centre-stable manifold.
//! Projecting it along the isochrons onto the slow manifold gives a relation
//! between `C = s1` and `Cx = s2` at the boundary: a nonlinear Robin
//! condition `C - P Cx - Q Cx^2 = R` with `P`, `R` polynomials in the data.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::scalar::{rational_to_f64, Rational};
use crate::series::text::{parse_expression, rational_text, render_expression};
use crate::series::{solve_implicit_system, Monomial, SeriesError, SeriesVector, TruncatedSeries, Truncation, VarSet};

pub const BOUNDARY_AMPLITUDES: [&str; 3] = ["s10", "s20", "s30"];

/// The transform's `a` and `b` components on the centre-stable manifold
/// (`s4 = 0`), as series in the boundary amplitudes `(s10, s20, s30)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConstraint {
    pub a0: TruncatedSeries,
    pub b0: TruncatedSeries,
}

/// `s10` and `s30` as series in `(s20, a0, b0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RevertedBoundary {
    pub s1: TruncatedSeries,
    pub s3: TruncatedSeries,
}

/// Restricts a transform (already collapsed at `eps = 1`, over
/// `s1..s4`) to `s4 = 0` and relabels to boundary amplitudes.
pub fn centre_stable_restriction(transform: &SeriesVector) -> Result<BoundaryConstraint, SeriesError> {
    let order = transform.truncation().order;
    let trunc = Truncation::state(order);
    let vars = VarSet::new(&BOUNDARY_AMPLITUDES, &[]);
    let images = vec![
        TruncatedSeries::var(vars.clone(), trunc, 0),
        TruncatedSeries::var(vars.clone(), trunc, 1),
        TruncatedSeries::var(vars.clone(), trunc, 2),
        TruncatedSeries::zero(vars.clone(), trunc),
    ];
    Ok(BoundaryConstraint { a0: transform.get(0).compose(&images)?, b0: transform.get(1).compose(&images)? })
}

pub fn revert_boundary(c: &BoundaryConstraint) -> Result<RevertedBoundary, SeriesError> {
    let eqs = SeriesVector::new(vec![c.a0.clone(), c.b0.clone()])?;
    let sol = solve_implicit_system(&eqs, &[0, 2], &["a0", "b0"])?;
    let mut comps = sol.into_components();
    let s3 = comps.pop().expect("two unknowns");
    let s1 = comps.pop().expect("two unknowns");
    Ok(RevertedBoundary { s1, s3 })
}

/// Substitutes the reverted series back into the constraint: the result
/// should equal `(a0, b0)` up to the truncation order.
pub fn round_trip_residual(c: &BoundaryConstraint, r: &RevertedBoundary) -> Result<SeriesVector, SeriesError> {
    let vars = r.s1.vars().clone();
    let trunc = r.s1.truncation();
    let s2 = TruncatedSeries::var(vars.clone(), trunc, 0);
    let images = [r.s1.clone(), s2, r.s3.clone()];
    let a = c.a0.compose(&images)?;
    let b = c.b0.compose(&images)?;
    let a0 = TruncatedSeries::var(vars.clone(), trunc, 1);
    let b0 = TruncatedSeries::var(vars, trunc, 2);
    SeriesVector::new(vec![a.sub(&a0)?, b.sub(&b0)?])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    /// Names of the boundary data variables on this side.
    pub fn data_names(self) -> [&'static str; 2] {
        match self {
            Side::Left => ["a0", "b0"],
            Side::Right => ["aL", "bL"],
        }
    }

    fn vars(self) -> Arc<VarSet> {
        VarSet::new(&self.data_names(), &[])
    }
}

/// `C - P Cx - Q Cx^2 = R` with `P`, `R` polynomials in the side's data.
#[derive(Clone, Debug, PartialEq)]
pub struct RobinBC {
    pub side: Side,
    pub p: TruncatedSeries,
    pub q: Rational,
    pub r: TruncatedSeries,
}

/// Total degree in `(Cx, a0, b0)` kept in the boundary relation.
pub const ROBIN_DEGREE: u32 = 2;

/// Substitutes `s10 = C`, `s20 = Cx` in the reverted `s10` series and reads
/// off the coefficients, keeping total degree two.
pub fn assemble_left_bc(r: &RevertedBoundary) -> RobinBC {
    let side = Side::Left;
    let vars = side.vars();
    let trunc = Truncation::state(ROBIN_DEGREE);
    let mut p = TruncatedSeries::zero(vars.clone(), trunc);
    let mut rr = TruncatedSeries::zero(vars.clone(), trunc);
    let mut q = Rational::zero();
    for (m, c) in r.s1.terms() {
        if m.total_degree() > ROBIN_DEGREE {
            continue;
        }
        let data = Monomial::new(&[m.exponent(1) as u8, m.exponent(2) as u8]);
        match m.exponent(0) {
            0 => rr.add_term(data, c.clone()),
            1 => p.add_term(data, c.clone()),
            2 => q += c,
            _ => {}
        }
    }
    RobinBC { side, p, q, r: rr }
}

/// Right boundary by the reflection `x -> L - x`, `a -> -b`, `b -> -a`,
/// `C -> -C`, under which `Cx` is unchanged.
pub fn assemble_right_bc(r: &RevertedBoundary) -> RobinBC {
    assemble_left_bc(r).mirror()
}

impl RobinBC {
    /// The same condition seen from the other end of the domain. An involution.
    pub fn mirror(&self) -> RobinBC {
        let side = match self.side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        let vars = side.vars();
        let trunc = self.p.truncation();
        // data (x, y) on the new side appear as (-y, -x) on the old side
        let x = TruncatedSeries::var(vars.clone(), trunc, 0);
        let y = TruncatedSeries::var(vars, trunc, 1);
        let images = [y.neg(), x.neg()];
        let p = self.p.compose(&images).expect("same layout").neg();
        let r = self.r.compose(&images).expect("same layout").neg();
        RobinBC { side, p, q: -self.q.clone(), r }
    }

    /// Drops every term of degree two in `(Cx, data)`.
    pub fn linearised(&self) -> RobinBC {
        RobinBC {
            side: self.side,
            p: self.p.filter(|m| m.total_degree() == 0),
            q: Rational::zero(),
            r: self.r.filter(|m| m.total_degree() <= 1),
        }
    }

    /// Numeric coefficients at the given data values.
    pub fn at(&self, first: f64, second: f64) -> NumericRobin {
        let pf = self.p.map_coeffs(rational_to_f64);
        let rf = self.r.map_coeffs(rational_to_f64);
        NumericRobin { p: pf.evaluate(&[first, second]), q: rational_to_f64(&self.q), r: rf.evaluate(&[first, second]) }
    }

    pub fn to_text(&self) -> String {
        let [x, y] = self.side.data_names();
        format!(
            "{} P({x},{y})= {} Q= {} R({x},{y})= {}",
            self.side.name(),
            render_expression(&self.p, rational_text),
            rational_text(&self.q),
            render_expression(&self.r, rational_text)
        )
    }

    pub fn from_text(text: &str) -> Result<RobinBC, SeriesError> {
        let err = |msg: &str| SeriesError::Parse { line: 1, msg: msg.to_string() };
        let text = text.trim();
        let (side_name, rest) = text.split_once(' ').ok_or_else(|| err("missing side"))?;
        let side = match side_name {
            "left" => Side::Left,
            "right" => Side::Right,
            _ => return Err(err("side must be left or right")),
        };
        let [x, y] = side.data_names();
        let p_tag = format!("P({x},{y})=");
        let r_tag = format!("R({x},{y})=");
        let rest = rest.trim().strip_prefix(&p_tag).ok_or_else(|| err("missing P"))?;
        let (p_text, rest) = rest.split_once(" Q=").ok_or_else(|| err("missing Q"))?;
        let (q_text, r_text) = rest.split_once(&r_tag).ok_or_else(|| err("missing R"))?;
        let vars = side.vars();
        let trunc = Truncation::state(ROBIN_DEGREE);
        let p = parse_expression(p_text, vars.clone(), trunc)?;
        let q = crate::scalar::parse_rational(q_text).ok_or_else(|| err("bad Q"))?;
        let r = parse_expression(r_text, vars, trunc)?;
        Ok(RobinBC { side, p, q, r })
    }
}

impl fmt::Display for RobinBC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A Robin condition specialised to numeric data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericRobin {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl NumericRobin {
    pub fn residual(&self, c: f64, cx: f64) -> f64 {
        c - self.p * cx - self.q * cx * cx - self.r
    }

    /// Derivatives of the residual with respect to `C` and `Cx`.
    pub fn gradient(&self, cx: f64) -> (f64, f64) {
        (1.0, -self.p - 2.0 * self.q * cx)
    }
}

/// Boundary value as a function of time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Signal {
    Constant(f64),
    /// `amplitude * tanh(t)^2`: rises smoothly from zero.
    TanhSquared(f64),
}

impl Signal {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Signal::Constant(v) => v,
            Signal::TanhSquared(a) => {
                let th = t.tanh();
                a * th * th
            }
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Signal::Constant(v) => format!("{v}"),
            Signal::TanhSquared(a) => format!("{a}*tanh2"),
        }
    }

    /// `0.2`, or `0.2*tanh2` for the ramped form.
    pub fn parse(s: &str) -> Option<Signal> {
        let s = s.trim();
        match s.strip_suffix("*tanh2") {
            Some(a) => a.trim().parse().ok().map(Signal::TanhSquared),
            None => s.parse().ok().map(Signal::Constant),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryData {
    pub a0: Signal,
    pub b0: Signal,
    pub al: Signal,
    pub bl: Signal,
}

impl BoundaryData {
    pub fn zero() -> Self {
        let z = Signal::Constant(0.0);
        BoundaryData { a0: z, b0: z, al: z, bl: z }
    }

    /// `(a, b)` at the given side and time.
    pub fn at(&self, side: Side, t: f64) -> (f64, f64) {
        match side {
            Side::Left => (self.a0.at(t), self.b0.at(t)),
            Side::Right => (self.al.at(t), self.bl.at(t)),
        }
    }

    pub fn is_zero(&self) -> bool {
        [self.a0, self.b0, self.al, self.bl].iter().all(|s| matches!(s, Signal::Constant(v) | Signal::TanhSquared(v) if *v == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn sample_bc() -> RobinBC {
        let vars = Side::Left.vars();
        let t = Truncation::state(2);
        RobinBC {
            side: Side::Left,
            p: TruncatedSeries::from_terms(vars.clone(), t, [(Monomial::ONE, rat(1, 2)), (Monomial::new(&[1, 0]), rat(3, 7))]),
            q: int(3),
            r: TruncatedSeries::from_terms(vars, t, [(Monomial::new(&[0, 1]), rat(1, 4)), (Monomial::new(&[1, 1]), rat(-5, 8))]),
        }
    }

    #[test]
    fn mirror_is_an_involution() {
        let bc = sample_bc();
        assert_eq!(bc.mirror().mirror(), bc);
        assert_eq!(bc.mirror().side, Side::Right);
    }

    #[test]
    fn text_round_trip() {
        for bc in [sample_bc(), sample_bc().mirror()] {
            assert_eq!(RobinBC::from_text(&bc.to_text()).unwrap(), bc);
        }
    }

    #[test]
    fn residual_matches_formula() {
        let n = sample_bc().at(0.3, -0.1);
        let (c, cx) = (0.7, -0.2);
        let direct = c - n.p * cx - n.q * cx * cx - n.r;
        assert_eq!(n.residual(c, cx), direct);
    }

    #[test]
    fn signals() {
        assert_eq!(Signal::TanhSquared(0.2).at(0.0), 0.0);
        assert!((Signal::TanhSquared(0.2).at(21.0) - 0.2).abs() < 1e-15);
        assert_eq!(Signal::parse("0.2*tanh2"), Some(Signal::TanhSquared(0.2)));
        assert_eq!(Signal::parse(" -1.5 "), Some(Signal::Constant(-1.5)));
        assert_eq!(Signal::parse("x"), None);
    }
}
