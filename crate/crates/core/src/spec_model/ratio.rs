use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};

use crate::numeric::log_sum_exp;

/// A contraction ratio, kept exactly when it was presented as a fraction or a
/// terminating decimal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratio {
    value: f64,
    exact: Option<Rational64>,
}

impl Ratio {
    /// Exact ratio `numer / denom`.
    ///
    /// Panics if `denom == 0`.
    pub fn exact(numer: i64, denom: i64) -> Self {
        Self::from_rational(Rational64::new(numer, denom))
    }

    pub fn from_rational(r: Rational64) -> Self {
        let value = *r.numer() as f64 / *r.denom() as f64;
        Self { value, exact: Some(r) }
    }

    /// Inexact ratio; only the binary floating point value is known.
    pub fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn ln(&self) -> f64 {
        match self.exact {
            // ln(p) - ln(q) is more accurate than ln(p/q) for small ratios like 1/3.
            Some(r) if *r.numer() > 0 => (*r.numer() as f64).ln() - (*r.denom() as f64).ln(),
            _ => self.value.ln(),
        }
    }

    pub fn as_rational(&self) -> Option<Rational64> {
        self.exact
    }

    pub fn to_big(&self) -> Option<BigRational> {
        self.exact
            .map(|r| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Whether the ratio lies strictly inside `(0, 1)`, decided exactly when possible.
    pub fn is_proper(&self) -> bool {
        match self.exact {
            Some(r) => r > Rational64::zero() && r < Rational64::one(),
            None => self.value > 0.0 && self.value < 1.0,
        }
    }

    /// Multiply by an exact rational factor when both sides are exact.
    pub fn scaled(&self, factor: Ratio) -> Ratio {
        match (self.exact, factor.exact) {
            (Some(a), Some(b)) => match (a.numer().checked_mul(*b.numer()), a.denom().checked_mul(*b.denom())) {
                (Some(n), Some(d)) => Ratio::from_rational(Rational64::new(n, d)),
                _ => Ratio::from_f64(self.value * factor.value),
            },
            _ => Ratio::from_f64(self.value * factor.value),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read {input:?} as a ratio: {reason}")]
pub struct RatioParseError {
    pub input: String,
    pub reason: &'static str,
}

impl FromStr for Ratio {
    type Err = RatioParseError;

    /// Accepts `p/q`, terminating decimals such as `0.125` (both exact), and
    /// anything else `f64` parses (inexact).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = |reason| RatioParseError {
            input: s.to_string(),
            reason,
        };
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| err("numerator is not an integer"))?;
            let q: i64 = q.trim().parse().map_err(|_| err("denominator is not an integer"))?;
            if q == 0 {
                return Err(err("zero denominator"));
            }
            return Ok(Ratio::exact(p, q));
        }
        if let Some(r) = parse_decimal(t) {
            return Ok(Ratio::from_rational(r));
        }
        let v: f64 = t.parse().map_err(|_| err("not a number"))?;
        if !v.is_finite() {
            return Err(err("not finite"));
        }
        Ok(Ratio::from_f64(v))
    }
}

/// Exact value of a plain decimal literal (`[-]digits[.digits]`), if it fits in i64.
fn parse_decimal(t: &str) -> Option<Rational64> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut numer: i64 = 0;
    for c in int.chars().chain(frac.chars()) {
        numer = numer.checked_mul(10)?.checked_add(c.to_digit(10)? as i64)?;
    }
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    Some(Rational64::new(if neg { -numer } else { numer }, denom))
}

/// One level of the construction: the ratio vector `(c_1, ..., c_n)` shared by
/// every parent at that level.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    ratios: Vec<Ratio>,
    ln_ratios: Vec<f64>,
}

impl Level {
    pub fn new(ratios: Vec<Ratio>) -> Self {
        let ln_ratios = ratios.iter().map(Ratio::ln).collect();
        Self { ratios, ln_ratios }
    }

    /// `n` children, each with ratio `c`.
    pub fn uniform(n: usize, c: Ratio) -> Self {
        Self::new(vec![c; n])
    }

    pub fn n(&self) -> usize {
        self.ratios.len()
    }

    pub fn ratios(&self) -> &[Ratio] {
        &self.ratios
    }

    pub fn ln_ratios(&self) -> &[f64] {
        &self.ln_ratios
    }

    pub fn is_uniform(&self) -> bool {
        self.ratios.windows(2).all(|w| w[0] == w[1])
    }

    pub fn min_ratio(&self) -> Ratio {
        *self
            .ratios
            .iter()
            .min_by(|a, b| a.value().total_cmp(&b.value()))
            .expect("level has at least one ratio")
    }

    pub fn max_ratio(&self) -> Ratio {
        *self
            .ratios
            .iter()
            .max_by(|a, b| a.value().total_cmp(&b.value()))
            .expect("level has at least one ratio")
    }

    /// `ln Σ_j c_j^s`.
    pub fn log_moment(&self, s: f64) -> f64 {
        log_sum_exp(self.ln_ratios.iter().map(|l| s * l))
    }

    /// `Σ_j c_j^d` in floating point.
    pub fn power_sum(&self, d: u32) -> f64 {
        self.ratios.iter().map(|c| c.value().powi(d as i32)).sum()
    }

    /// `Σ_j c_j^d` exactly, when every ratio is exact.
    pub fn power_sum_exact(&self, d: u32) -> Option<BigRational> {
        let mut total = BigRational::zero();
        for c in &self.ratios {
            total += num_traits::pow(c.to_big()?, d as usize);
        }
        Some(total)
    }

    /// Whether every ratio is exactly representable.
    pub fn is_exact(&self) -> bool {
        self.ratios.iter().all(Ratio::is_exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        let r: Ratio = "1/3".parse().unwrap();
        assert_eq!(r.as_rational(), Some(Rational64::new(1, 3)));
        let r: Ratio = "0.125".parse().unwrap();
        assert_eq!(r.as_rational(), Some(Rational64::new(1, 8)));
        let r: Ratio = "1e-3".parse().unwrap();
        assert!(!r.is_exact());
        assert_eq!(r.value(), 1e-3);
        assert!("1/0".parse::<Ratio>().is_err());
        assert!("abc".parse::<Ratio>().is_err());
        assert!("inf".parse::<Ratio>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["1/3", "1/16", "0.3333333333333333"] {
            let r: Ratio = s.parse().unwrap();
            let back: Ratio = r.to_string().parse().unwrap();
            assert_eq!(r.value(), back.value());
        }
    }

    #[test]
    fn exact_power_sum_detects_overfull_level() {
        let level = Level::uniform(2, Ratio::exact(2, 3));
        assert_eq!(level.power_sum_exact(1), Some(BigRational::new(4.into(), 3.into())));
        let level = Level::uniform(3, Ratio::exact(1, 3));
        assert_eq!(level.power_sum_exact(1), Some(BigRational::one()));
    }

    #[test]
    fn log_moment_at_zero_is_log_branching() {
        let level = Level::new(vec![Ratio::exact(1, 2), Ratio::exact(1, 5), Ratio::exact(1, 7)]);
        assert!((level.log_moment(0.0) - 3f64.ln()).abs() < 1e-15);
        let direct = (0.5f64.powf(0.7) + 0.2f64.powf(0.7) + (1.0f64 / 7.0).powf(0.7)).ln();
        assert!((level.log_moment(0.7) - direct).abs() < 1e-14);
    }
}
