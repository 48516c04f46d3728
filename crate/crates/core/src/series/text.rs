//! Plain-text forms of a series.
//!
//! The term format is one term per line, `<num>/<den> <e1> ... <en>`, in
//! canonical (lexicographic) term order. Lines starting with `#` are comments.

use std::sync::Arc;

use num_traits::{One, Signed};

use super::monomial::{Monomial, Truncation, VarSet};
use super::truncated::TruncatedSeries;
use super::SeriesError;
use crate::scalar::{parse_rational, Rational, Scalar};

pub fn to_term_lines(s: &TruncatedSeries<Rational>) -> String {
    let n = s.vars().len();
    let mut out = String::new();
    for (m, c) in s.terms() {
        out.push_str(&format!("{}/{}", c.numer(), c.denom()));
        for e in m.exponents(n) {
            out.push(' ');
            out.push_str(&e.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn from_term_lines(
    text: &str,
    vars: Arc<VarSet>,
    trunc: Truncation,
) -> Result<TruncatedSeries<Rational>, SeriesError> {
    let n = vars.len();
    let mut s = TruncatedSeries::zero(vars, trunc);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: &str| SeriesError::Parse { line: lineno + 1, msg: msg.to_string() };
        let mut fields = line.split_whitespace();
        let c = fields.next().and_then(parse_rational).ok_or_else(|| parse_err("bad coefficient"))?;
        let exps: Vec<u8> = fields.map(|f| f.parse::<u8>()).collect::<Result<_, _>>().map_err(|_| parse_err("bad exponent"))?;
        if exps.len() != n {
            return Err(parse_err(&format!("expected {n} exponents, found {}", exps.len())));
        }
        s.add_term(Monomial::new(&exps), c);
    }
    Ok(s)
}

/// Human-readable expression, terms ordered by state degree then by
/// descending exponents, e.g. `1/2 + 477/128*a0 - 357/128*b0`.
pub fn render_expression<C: Scalar>(s: &TruncatedSeries<C>, coeff: impl Fn(&C) -> String) -> String {
    let vars = s.vars().clone();
    let mut terms: Vec<(&Monomial, &C)> = s.terms().collect();
    terms.sort_by(|a, b| {
        let da = vars.state_degree(a.0) + vars.param_degree(a.0);
        let db = vars.state_degree(b.0) + vars.param_degree(b.0);
        da.cmp(&db).then_with(|| b.0.cmp(a.0))
    });
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in terms.iter().enumerate() {
        let text = coeff(c);
        let (neg, mag) = match text.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, text),
        };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = vars.render(m);
        if mono == "1" {
            out.push_str(&mag);
        } else if mag == "1" {
            out.push_str(&mono);
        } else {
            out.push_str(&mag);
            out.push('*');
            out.push_str(&mono);
        }
    }
    out
}

/// Parses expressions produced by [`render_expression`] with rational
/// coefficients: signed sums of `coeff*var^e*var` products.
pub fn parse_expression(
    text: &str,
    vars: Arc<VarSet>,
    trunc: Truncation,
) -> Result<TruncatedSeries<Rational>, SeriesError> {
    let err = |msg: String| SeriesError::Parse { line: 1, msg };
    let mut s = TruncatedSeries::zero(vars.clone(), trunc);
    let text = text.trim();
    if text == "0" {
        return Ok(s);
    }
    // split on top-level + and - signs that follow whitespace
    let mut pieces: Vec<(bool, String)> = Vec::new();
    let mut sign_neg = false;
    let mut current = String::new();
    let tokens: Vec<&str> = text.split_whitespace().collect();
    for (i, tok) in tokens.iter().enumerate() {
        if (*tok == "+" || *tok == "-") && i > 0 {
            pieces.push((sign_neg, std::mem::take(&mut current)));
            sign_neg = *tok == "-";
        } else {
            current.push_str(tok);
        }
    }
    pieces.push((sign_neg, current));
    for (neg, piece) in pieces {
        let (neg, body) = match piece.strip_prefix('-') {
            Some(rest) => (!neg, rest.to_string()),
            None => (neg, piece),
        };
        let mut coeff = Rational::one();
        let mut mono = Monomial::ONE;
        for factor in body.split('*') {
            if factor.is_empty() {
                return Err(err(format!("empty factor in `{body}`")));
            }
            if let Some(c) = parse_rational(factor) {
                coeff *= c;
                continue;
            }
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => (n, e.parse::<u8>().map_err(|_| err(format!("bad exponent in `{factor}`")))?),
                None => (factor, 1),
            };
            let idx = vars.index_of(name).ok_or_else(|| err(format!("unknown variable `{name}`")))?;
            for _ in 0..exp {
                mono = mono.mul(&Monomial::var(idx));
            }
        }
        if neg {
            coeff = -coeff;
        }
        s.add_term(mono, coeff);
    }
    Ok(s)
}

/// Coefficient rendered as an exact rational, `p/q` or integer.
pub fn rational_text(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else if c.is_negative() {
        format!("-{}/{}", c.numer().abs(), c.denom())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn term_lines_round_trip() {
        let vars = VarSet::new(&["s1", "s2"], &["eps"]);
        let t = Truncation::new(3, 2);
        let s = TruncatedSeries::from_terms(
            vars.clone(),
            t,
            [(Monomial::new(&[2, 0, 1]), rat(-7, 200)), (Monomial::new(&[0, 1, 0]), int(3))],
        );
        let text = to_term_lines(&s);
        assert_eq!(text, "3/1 0 1 0\n-7/200 2 0 1\n");
        assert_eq!(from_term_lines(&text, vars, t).unwrap(), s);
    }

    #[test]
    fn expression_round_trip() {
        let vars = VarSet::new(&["a0", "b0"], &[]);
        let t = Truncation::state(2);
        let s = TruncatedSeries::from_terms(
            vars.clone(),
            t,
            [
                (Monomial::ONE, rat(1, 2)),
                (Monomial::new(&[1, 0]), rat(477, 128)),
                (Monomial::new(&[0, 1]), rat(-357, 128)),
                (Monomial::new(&[1, 1]), int(-1)),
            ],
        );
        let text = render_expression(&s, rational_text);
        assert_eq!(text, "1/2 + 477/128*a0 - 357/128*b0 - a0*b0");
        assert_eq!(parse_expression(&text, vars, t).unwrap(), s);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let vars = VarSet::new(&["x"], &[]);
        assert!(from_term_lines("1/2 1 2\n", vars.clone(), Truncation::state(3)).is_err());
        assert!(parse_expression("2*y", vars, Truncation::state(3)).is_err());
    }
}
