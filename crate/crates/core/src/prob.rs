//! Probabilities and scalars that are exact rationals when possible.
//!
//! Brute-force oracles run in exact arithmetic whenever the edge probability
//! is a small fraction (any finite decimal qualifies), and in f64 otherwise
//! with a 1e-12 mass tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// An edge probability, carried exactly when it is a small fraction.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeProb {
    Exact(BigRational),
    Approx(f64),
}

impl EdgeProb {
    pub fn from_fraction(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidProbability(num as f64 / den as f64));
        }
        Ok(EdgeProb::Exact(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(EdgeProb::Approx(p))
    }

    /// Parses a plain decimal literal ("0.3", "1", ".25") into an exact
    /// rational; anything else ("1e-3") falls back to f64.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let plain = s.chars().all(|c| c.is_ascii_digit() || c == '.')
            && !s.is_empty()
            && s.matches('.').count() <= 1;
        if plain {
            let (int_part, frac_part) = match s.split_once('.') {
                Some((a, b)) => (a, b),
                None => (s, ""),
            };
            if frac_part.len() <= 30 {
                let digits = format!("{int_part}{frac_part}");
                let num: BigInt = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad probability {s:?}")))?;
                let den = BigInt::from(10u32).pow(frac_part.len() as u32);
                let q = BigRational::new(num, den);
                if q.is_negative() || q > BigRational::one() {
                    return Err(Error::InvalidProbability(q.to_f64().unwrap_or(f64::NAN)));
                }
                return Ok(EdgeProb::Exact(q));
            }
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad probability {s:?}")))?;
        Self::from_f64(p)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            EdgeProb::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            EdgeProb::Approx(p) => *p,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, EdgeProb::Exact(_))
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            EdgeProb::Exact(q) => Some(q),
            EdgeProb::Approx(_) => None,
        }
    }
}

/// A scalar produced by an oracle: exact rational where the input mode
/// allowed it, f64 otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Value::Approx(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Approx(_) => None,
        }
    }

    pub fn zero_like(exact: bool) -> Self {
        if exact {
            Value::Exact(BigRational::zero())
        } else {
            Value::Approx(0.0)
        }
    }
}

/// Renders a rational as "num/den" (used by the JSON writers).
pub fn ratio_strings(q: &BigRational) -> (String, String) {
    (q.numer().to_string(), q.denom().to_string())
}

/// Exact `q^k` by repeated multiplication.
pub fn pow_rational(q: &BigRational, k: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = q.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}
