//! Coefficient fields for series and small matrices.
//!
//! Derivations run on exact rationals whenever the linear algebra allows it.
//! The `f64` implementation is the fallback for systems whose eigenvalues are
//! irrational.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Field operations needed by the series algebra and the normal-form solver.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Exact for rationals. Floats compare against `tol` scaled by `scale`.
    fn is_negligible(&self, scale: f64) -> bool;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn from_i64(n: i64) -> Self;
    /// `true` for coefficient types that do exact arithmetic.
    const EXACT: bool;
}

impl Scalar for Rational {
    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    const EXACT: bool = true;
}

/// Relative tolerance used when the float path needs a zero test.
pub const FLOAT_ZERO_TOL: f64 = 1e-9;

impl Scalar for f64 {
    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= FLOAT_ZERO_TOL * scale.max(1.0)
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    const EXACT: bool = false;
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Huge numerator/denominator: shift both down before dividing.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// Parses `p`, `p/q` or a plain decimal such as `-0.035` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exp10) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / BigInt::from(10);
    let scale = exp10 - frac_part.len() as i32;
    let mut value = Rational::from_integer(all);
    let ten = int(10);
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if neg { -value } else { value })
}

/// Rounds to `digits` significant figures, half-to-even on the last kept digit.
pub fn round_sig(x: &Rational, digits: u32) -> Rational {
    if x.is_zero() {
        return x.clone();
    }
    let e = decimal_exponent(x);
    // x = m * 10^(e - digits + 1) with 10^(digits-1) <= |m| < 10^digits
    let shift = e - digits as i32 + 1;
    let scale = pow10(shift);
    let m = x / &scale;
    let rounded = round_half_even(&m);
    Rational::from_integer(rounded) * scale
}

/// `floor(log10 |x|)` for nonzero `x`, computed exactly.
pub fn decimal_exponent(x: &Rational) -> i32 {
    let ax = x.abs();
    let mut e = rational_to_f64(&ax).log10().floor() as i32;
    // float estimate can be off by one near powers of ten
    while pow10(e) > ax {
        e -= 1;
    }
    while pow10(e + 1) <= ax {
        e += 1;
    }
    e
}

pub fn pow10(e: i32) -> Rational {
    let ten = int(10);
    if e >= 0 {
        num_traits::pow(ten, e as usize)
    } else {
        Rational::one() / num_traits::pow(ten, (-e) as usize)
    }
}

fn round_half_even(x: &Rational) -> BigInt {
    let floor = x.floor().to_integer();
    let frac = x - Rational::from_integer(floor.clone());
    let half = rat(1, 2);
    if frac > half || (frac == half && floor.is_odd()) {
        floor + 1
    } else {
        floor
    }
}

/// Shortest decimal rendering of a rational that has a terminating expansion.
/// Falls back to `p/q` otherwise.
pub fn format_decimal(x: &Rational) -> String {
    let mut den = x.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut places = 0usize;
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", x.numer(), x.denom());
    }
    places = places.max(twos).max(fives);
    let scaled = x * num_traits::pow(int(10), places);
    let digits = scaled.to_integer().abs().to_string();
    let sign = if x.is_negative() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (ip, fp) = padded.split_at(padded.len() - places);
    let fp = fp.trim_end_matches('0');
    if fp.is_empty() {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{fp}")
    }
}

/// Two-significant-figure decimal string, the precision used for published
/// coefficient tables.
pub fn sig2(x: &Rational) -> String {
    format_decimal(&round_sig(x, 2))
}

/// Float analogue of [`round_sig`] for the float derivation path.
pub fn round_sig_f64(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let shift = e - digits as i32 + 1;
    let m = if shift >= 0 { x / 10f64.powi(shift) } else { x * 10f64.powi(-shift) };
    let r = m.round();
    let r = if (m - m.trunc()).abs() == 0.5 && (r as i64) % 2 != 0 { r - m.signum() } else { r };
    if shift >= 0 {
        r * 10f64.powi(shift)
    } else {
        r / 10f64.powi(-shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("-0.035").unwrap(), rat(-7, 200));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("1.5e-2").unwrap(), rat(3, 200));
        assert_eq!(parse_rational("9/256").unwrap(), rat(9, 256));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn rounding_to_two_significant_figures() {
        assert_eq!(round_sig(&rat(873, 256), 2), rat(34, 10));
        assert_eq!(round_sig(&rat(-9, 256), 2), rat(-35, 1000));
        assert_eq!(round_sig(&rat(-291, 64), 2), rat(-45, 10));
        // half-even: 0.125 -> 0.12, 0.135 -> 0.14
        assert_eq!(round_sig(&rat(1, 8), 2), rat(12, 100));
        assert_eq!(round_sig(&rat(135, 1000), 2), rat(14, 100));
        assert_eq!(round_sig(&int(100), 2), int(100));
        assert_eq!(round_sig(&rat(-2, 3), 2), rat(-67, 100));
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(format_decimal(&rat(-7, 200)), "-0.035");
        assert_eq!(format_decimal(&int(6)), "6");
        assert_eq!(format_decimal(&rat(3, 2)), "1.5");
        assert_eq!(format_decimal(&rat(1, 3)), "1/3");
        assert_eq!(sig2(&rat(-2, 3)), "-0.67");
        assert_eq!(sig2(&rat(477, 128)), "3.7");
    }

    #[test]
    fn float_rounding_matches_exact_on_plain_values() {
        assert_eq!(round_sig_f64(3.41015625, 2), 3.4);
        assert_eq!(round_sig_f64(-0.6666, 2), -0.67);
    }
}
