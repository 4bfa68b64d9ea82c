//! Exact rational probabilities and finite distributions over string labels.
//!
//! Nothing in this module touches floating point except [`Prob::to_f64`],
//! which exists for display.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("cannot parse {0:?} as a rational \"p/q\"")]
    Parse(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("negative probability {0}")]
    NegativeProbability(String),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("masses sum to {sum}, not 1")]
    NotNormalized { sum: Prob },
    #[error("distributions are over different label sets")]
    LabelMismatch,
    #[error("weight {0} is outside [0, 1]")]
    WeightOutOfRange(Prob),
    #[error("cannot renormalize: total mass is zero")]
    ZeroTotalMass,
}

/// A nonnegative exact rational, always in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    pub fn new(numer: u64, denom: u64) -> Result<Self, ProbError> {
        if denom == 0 {
            return Err(ProbError::ZeroDenominator);
        }
        Ok(Prob(BigRational::new(numer.into(), denom.into())))
    }

    /// Builds from an arbitrary rational, rejecting negative values.
    pub fn from_rational(r: BigRational) -> Result<Self, ProbError> {
        if r.is_negative() {
            return Err(ProbError::NegativeProbability(r.to_string()));
        }
        Ok(Prob(r))
    }

    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// True when the value lies in `[0, 1]`.
    pub fn is_probability(&self) -> bool {
        self.0 <= BigRational::one()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    /// `1 - self`, or `None` if `self > 1`.
    pub fn complement(&self) -> Option<Prob> {
        Prob::one().checked_sub(self)
    }

    pub fn checked_sub(&self, rhs: &Prob) -> Option<Prob> {
        let d = &self.0 - &rhs.0;
        (!d.is_negative()).then_some(Prob(d))
    }

    pub fn checked_div(&self, rhs: &Prob) -> Option<Prob> {
        (!rhs.is_zero()).then(|| Prob(&self.0 / &rhs.0))
    }

    pub fn abs_diff(&self, rhs: &Prob) -> Prob {
        Prob((&self.0 - &rhs.0).abs())
    }

    pub fn half(&self) -> Prob {
        Prob(&self.0 / BigRational::from_integer(2.into()))
    }

    /// Display-only approximation.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl std::ops::Add for &Prob {
    type Output = Prob;
    fn add(self, rhs: &Prob) -> Prob {
        Prob(&self.0 + &rhs.0)
    }
}

impl std::ops::Mul for &Prob {
    type Output = Prob;
    fn mul(self, rhs: &Prob) -> Prob {
        Prob(&self.0 * &rhs.0)
    }
}

impl std::iter::Sum for Prob {
    fn sum<I: Iterator<Item = Prob>>(iter: I) -> Prob {
        Prob(iter.fold(BigRational::zero(), |acc, p| acc + p.0))
    }
}

impl<'a> std::iter::Sum<&'a Prob> for Prob {
    fn sum<I: Iterator<Item = &'a Prob>>(iter: I) -> Prob {
        Prob(iter.fold(BigRational::zero(), |acc, p| acc + &p.0))
    }
}

impl fmt::Display for Prob {
    /// Always `p/q`, including integers (`1/1`, `0/1`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Prob {
    type Err = ProbError;

    /// Accepts `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let parse = |x: &str| -> Result<BigInt, ProbError> {
            let x = x.trim();
            let digits = x.strip_prefix(['-', '+']).unwrap_or(x);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ProbError::Parse(s.to_string()));
            }
            x.parse().map_err(|_| ProbError::Parse(s.to_string()))
        };
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (parse(n)?, parse(d)?),
            None => (parse(t)?, BigInt::one()),
        };
        if d.is_zero() {
            return Err(ProbError::ZeroDenominator);
        }
        Prob::from_rational(BigRational::new(n, d))
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite distribution over uniquely labeled outcomes whose masses sum to
/// exactly one. Entry order is preserved from construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(into = "Vec<DistEntry>")]
pub struct Dist {
    entries: Vec<(String, Prob)>,
}

#[derive(Serialize, Deserialize)]
struct DistEntry {
    label: String,
    p: Prob,
}

impl From<Dist> for Vec<DistEntry> {
    fn from(d: Dist) -> Self {
        d.entries
            .into_iter()
            .map(|(label, p)| DistEntry { label, p })
            .collect()
    }
}

impl<'de> Deserialize<'de> for Dist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<DistEntry>::deserialize(d)?;
        Dist::new(raw.into_iter().map(|e| (e.label, e.p)).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl Dist {
    pub fn new(entries: Vec<(String, Prob)>) -> Result<Self, ProbError> {
        check_unique(entries.iter().map(|(l, _)| l.as_str()))?;
        let sum: Prob = entries.iter().map(|(_, p)| p).sum();
        if sum != Prob::one() {
            return Err(ProbError::NotNormalized { sum });
        }
        Ok(Dist { entries })
    }

    /// Divides every mass by the total. Fails when the total is zero.
    pub fn normalized(entries: Vec<(String, Prob)>) -> Result<Self, ProbError> {
        check_unique(entries.iter().map(|(l, _)| l.as_str()))?;
        let total: Prob = entries.iter().map(|(_, p)| p).sum();
        if total.is_zero() {
            return Err(ProbError::ZeroTotalMass);
        }
        let entries = entries
            .into_iter()
            .map(|(l, p)| (l, p.checked_div(&total).expect("nonzero total")))
            .collect();
        Ok(Dist { entries })
    }

    pub fn uniform<I, S>(labels: I) -> Result<Self, ProbError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len() as u64;
        if n == 0 {
            return Err(ProbError::NotNormalized { sum: Prob::zero() });
        }
        let p = Prob::new(1, n)?;
        Dist::new(labels.into_iter().map(|l| (l, p.clone())).collect())
    }

    /// Parses `(label, "p/q")` pairs.
    pub fn parse(entries: &[(&str, &str)]) -> Result<Self, ProbError> {
        let entries = entries
            .iter()
            .map(|(l, p)| Ok((l.to_string(), p.parse()?)))
            .collect::<Result<Vec<_>, ProbError>>()?;
        Dist::new(entries)
    }

    pub fn point_mass<S: Into<String>>(label: S) -> Self {
        Dist {
            entries: vec![(label.into(), Prob::one())],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Prob)> {
        self.entries.iter().map(|(l, p)| (l.as_str(), p))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn probs(&self) -> impl Iterator<Item = &Prob> {
        self.entries.iter().map(|(_, p)| p)
    }

    pub fn get(&self, label: &str) -> Option<&Prob> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.entries.iter().position(|(l, _)| l == label)
    }

    /// True when both distributions have the same label set (order ignored).
    pub fn same_support_labels(&self, other: &Dist) -> bool {
        self.len() == other.len() && self.labels().all(|l| other.get(l).is_some())
    }

    /// Half the L1 distance. Labels are matched by name, not position.
    pub fn total_variation(&self, other: &Dist) -> Result<Prob, ProbError> {
        if !self.same_support_labels(other) {
            return Err(ProbError::LabelMismatch);
        }
        let l1: Prob = self
            .iter()
            .map(|(l, p)| p.abs_diff(other.get(l).expect("label checked")))
            .sum();
        Ok(l1.half())
    }

    /// `weight * self + (1 - weight) * other`, in `self`'s label order.
    pub fn compromise(&self, other: &Dist, weight: &Prob) -> Result<Dist, ProbError> {
        if !self.same_support_labels(other) {
            return Err(ProbError::LabelMismatch);
        }
        let rest = weight
            .complement()
            .ok_or_else(|| ProbError::WeightOutOfRange(weight.clone()))?;
        let entries = self
            .iter()
            .map(|(l, p)| {
                let q = other.get(l).expect("label checked");
                (l.to_string(), &(weight * p) + &(&rest * q))
            })
            .collect();
        // Convex combinations of normalized vectors stay normalized.
        Ok(Dist { entries })
    }
}

fn check_unique<'a>(labels: impl Iterator<Item = &'a str>) -> Result<(), ProbError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(ProbError::DuplicateLabel(l.to_string()));
        }
    }
    Ok(())
}

/// Least common multiple of the denominators in `probs`.
pub fn common_denominator<'a>(probs: impl IntoIterator<Item = &'a Prob>) -> BigUint {
    probs
        .into_iter()
        .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()))
        .to_biguint()
        .expect("denominators are positive")
}
