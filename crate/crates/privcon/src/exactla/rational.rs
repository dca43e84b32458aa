use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = BigRational;

/// Shorthand for `n/d` as an exact rational. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// True when the fraction is stored reduced with a positive denominator.
pub fn is_canonical(q: &Rational) -> bool {
    q.denom().is_positive() && q.numer().gcd(q.denom()).is_one()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("cannot rationalize non-finite value {0}")]
    NonFinite(f64),
}

/// Strict parse of `p/q` or `p`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let bad = || ParseRationalError::Malformed(s.to_string());
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            Ok(Rational::new(p, q))
        }
        None => s.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad()),
    }
}

/// Exact value of a decimal literal such as `-0.684605` or `1.5e-3`.
pub fn parse_decimal(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    let bad = || ParseRationalError::Malformed(s.to_string());
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let n: BigInt = joined.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

/// Result of a lenient parse: fractions are kept exact, decimals may be rounded.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRational {
    pub value: Rational,
    pub from_decimal: bool,
    pub rounded: bool,
}

/// Accepts `p/q`, `p` or a decimal. Decimals whose exact denominator exceeds
/// `max_den` are replaced by the best approximation with denominator ≤ `max_den`.
pub fn parse_lenient(s: &str, max_den: u64) -> Result<ParsedRational, ParseRationalError> {
    if let Ok(value) = parse_rational(s) {
        return Ok(ParsedRational { value, from_decimal: false, rounded: false });
    }
    let exact = parse_decimal(s)?;
    if exact.denom() <= &BigInt::from(max_den) {
        return Ok(ParsedRational { value: exact, from_decimal: true, rounded: false });
    }
    let value = best_approximation(&exact, max_den);
    Ok(ParsedRational { value, from_decimal: true, rounded: true })
}

/// Closest rational to `x` with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: u64) -> Result<Rational, ParseRationalError> {
    let exact = Rational::from_float(x).ok_or(ParseRationalError::NonFinite(x))?;
    Ok(best_approximation(&exact, max_den))
}

/// Continued-fraction best approximation (convergents and the last semiconvergent).
pub fn best_approximation(x: &Rational, max_den: u64) -> Rational {
    assert!(max_den >= 1);
    let bound = BigInt::from(max_den);
    if x.denom() <= &bound {
        return x.clone();
    }
    let neg = x.is_negative();
    let x = x.abs();
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let (a, r) = n.div_rem(&d);
        let q2 = &q0 + &a * &q1;
        if q2 > bound {
            // largest semiconvergent that still fits
            let k = (&bound - &q0) / &q1;
            let semi = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
            let conv = Rational::new(p1.clone(), q1.clone());
            let pick = if (&semi - &x).abs() < (&conv - &x).abs() { semi } else { conv };
            return if neg { -pick } else { pick };
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        if r.is_zero() {
            let q = Rational::new(p1, q1);
            return if neg { -q } else { q };
        }
        n = std::mem::replace(&mut d, r);
    }
}

/// Display wrapper rendering `p/q`, or `p` when the denominator is one.
pub struct Fmt<'a>(pub &'a Rational);

impl fmt::Display for Fmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub fn format_rational(q: &Rational) -> String {
    Fmt(q).to_string()
}

/// Serde adapters: rationals travel as strings.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format_rational(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_rational_vec_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::serde_rational_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let raw = Option::<Vec<String>>::deserialize(d)?;
        raw.map(|v| {
            v.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        })
        .transpose()
    }
}
