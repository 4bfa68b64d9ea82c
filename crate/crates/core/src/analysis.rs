//! Alternative posteriors set beside the exact Bayes posterior.
//!
//! The *conditional-only* posterior ignores the message prior and renormalizes
//! `P_M(E)` over messages. The *compromised* posterior is a convex blend of the
//! prior and the conditional-only posterior, so each component lies between
//! the two. [`discrepancy_report`] computes all of them together with their
//! distances to the prior and makes no judgement about which is right.

use serde::Serialize;
use thiserror::Error;

use crate::cryptosystem::{CryptoError, FiniteCryptosystem};
use crate::probability::{Dist, Prob, ProbError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no message reaches ciphertext {0:?} under a positive-probability key")]
    UnreachableCiphertext(String),
    #[error("no plaintext in the prior has length {0}")]
    NoPlaintextOfObservedLength(usize),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// `P_M(E = cipher)` renormalized over messages. Independent of the prior.
pub fn conditional_only_posterior(
    sys: &FiniteCryptosystem,
    cipher: &str,
) -> Result<Dist, AnalysisError> {
    let c = sys.cipher_index(cipher)?;
    let masses = sys
        .messages()
        .iter()
        .enumerate()
        .map(|(m, label)| (label.clone(), sys.conditional_row(m)[c].clone()))
        .collect();
    Dist::normalized(masses).map_err(|e| match e {
        ProbError::ZeroTotalMass => AnalysisError::UnreachableCiphertext(cipher.to_string()),
        other => other.into(),
    })
}

/// `weight * prior + (1 - weight) * conditional_only`.
pub fn compromised_posterior(
    sys: &FiniteCryptosystem,
    cipher: &str,
    weight: &Prob,
) -> Result<Dist, AnalysisError> {
    let cond = conditional_only_posterior(sys, cipher)?;
    Ok(sys.prior().compromise(&cond, weight)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscrepancyReport {
    pub cipher: String,
    pub weight: Prob,
    pub prior: Dist,
    pub bayes: Dist,
    pub conditional_only: Dist,
    pub compromised: Dist,
    pub tv_bayes_vs_prior: Prob,
    pub tv_compromised_vs_prior: Prob,
}

pub fn discrepancy_report(
    sys: &FiniteCryptosystem,
    cipher: &str,
    weight: &Prob,
) -> Result<DiscrepancyReport, AnalysisError> {
    let bayes = sys.bayes_posterior(cipher)?;
    let prior = sys.prior();
    let conditional_only = conditional_only_posterior(sys, cipher)?;
    let compromised = prior.compromise(&conditional_only, weight)?;
    Ok(DiscrepancyReport {
        cipher: cipher.to_string(),
        weight: weight.clone(),
        tv_bayes_vs_prior: bayes.total_variation(&prior)?,
        tv_compromised_vs_prior: compromised.total_variation(&prior)?,
        prior,
        bayes,
        conditional_only,
        compromised,
    })
}

/// Prior over plaintexts that may differ in length (measured in characters).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthPrior(Dist);

impl LengthPrior {
    pub fn new(entries: Vec<(String, Prob)>) -> Result<Self, ProbError> {
        Dist::new(entries).map(LengthPrior)
    }

    pub fn dist(&self) -> &Dist {
        &self.0
    }
}

impl From<Dist> for LengthPrior {
    fn from(d: Dist) -> Self {
        LengthPrior(d)
    }
}

/// Posterior after learning only that the ciphertext has `observed_length`
/// characters: plaintexts of any other length get zero, the rest are
/// renormalized.
pub fn length_leakage_posterior(
    prior: &LengthPrior,
    observed_length: usize,
) -> Result<Dist, AnalysisError> {
    let masses = prior
        .0
        .iter()
        .map(|(text, p)| {
            let kept = if text.chars().count() == observed_length {
                p.clone()
            } else {
                Prob::zero()
            };
            (text.to_string(), kept)
        })
        .collect();
    Dist::normalized(masses).map_err(|e| match e {
        ProbError::ZeroTotalMass => AnalysisError::NoPlaintextOfObservedLength(observed_length),
        other => other.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cryptosystem::{modular_shift_system, xor_pad_system, IndexBase};

    fn p(s: &str) -> Prob {
        s.parse().unwrap()
    }

    fn dist(e: &[(&str, &str)]) -> Dist {
        Dist::parse(e).unwrap()
    }

    fn pad(keys: &[(&str, &str)]) -> FiniteCryptosystem {
        xor_pad_system(1, dist(&[("0", "9/10"), ("1", "1/10")]), dist(keys)).unwrap()
    }

    fn example_one() -> FiniteCryptosystem {
        pad(&[("0", "1/2"), ("1", "1/2")])
    }

    fn fig_one() -> FiniteCryptosystem {
        modular_shift_system(
            5,
            Dist::uniform((1..=5).map(|i| format!("M{i}"))).unwrap(),
            Dist::uniform((1..=5).map(|i| format!("K{i}"))).unwrap(),
            -1,
            IndexBase::One,
        )
        .unwrap()
    }

    #[test]
    fn conditional_only_examples() {
        let half = dist(&[("0", "1/2"), ("1", "1/2")]);
        assert_eq!(
            conditional_only_posterior(&example_one(), "0").unwrap(),
            half
        );

        let fig = fig_one();
        for c in fig.ciphertexts() {
            let d = conditional_only_posterior(&fig, c).unwrap();
            assert!(d.probs().all(|q| *q == p("1/5")));
        }

        assert_eq!(
            conditional_only_posterior(&pad(&[("0", "3/4"), ("1", "1/4")]), "0").unwrap(),
            dist(&[("0", "3/4"), ("1", "1/4")])
        );
    }

    #[test]
    fn conditional_only_rejects_unreachable() {
        // one key with all the mass, one with none: "b" only comes from the dead key
        let sys = FiniteCryptosystem::from_rows(
            vec!["m".into()],
            vec!["k".into(), "dead".into()],
            vec!["a".into(), "b".into()],
            &[vec!["a".into()], vec!["b".into()]],
            dist(&[("k", "1"), ("dead", "0")]),
            Dist::point_mass("m"),
        )
        .unwrap();
        assert_eq!(
            conditional_only_posterior(&sys, "b"),
            Err(AnalysisError::UnreachableCiphertext("b".into()))
        );
        assert!(matches!(
            conditional_only_posterior(&sys, "nope"),
            Err(AnalysisError::Crypto(CryptoError::UnknownLabel { .. }))
        ));
    }

    #[test]
    fn compromised_examples() {
        let sys = example_one();
        assert_eq!(
            compromised_posterior(&sys, "0", &p("1/2")).unwrap(),
            dist(&[("0", "7/10"), ("1", "3/10")])
        );
        assert_eq!(
            compromised_posterior(&sys, "0", &Prob::one()).unwrap(),
            sys.prior()
        );
        assert_eq!(
            compromised_posterior(&sys, "0", &Prob::zero()).unwrap(),
            dist(&[("0", "1/2"), ("1", "1/2")])
        );
        assert!(matches!(
            compromised_posterior(&sys, "0", &p("2")),
            Err(AnalysisError::Prob(ProbError::WeightOutOfRange(_)))
        ));
    }

    #[test]
    fn discrepancy_examples() {
        let r = discrepancy_report(&example_one(), "0", &p("1/2")).unwrap();
        assert_eq!(r.tv_bayes_vs_prior, Prob::zero());
        assert_eq!(r.tv_compromised_vs_prior, p("1/5"));
        assert_eq!(r.bayes, r.prior);

        let fig = fig_one();
        for w in ["0", "1/3", "1"] {
            let r = discrepancy_report(&fig, "E1", &p(w)).unwrap();
            assert_eq!(r.bayes, r.prior);
            assert_eq!(r.conditional_only, r.prior);
            assert_eq!(r.compromised, r.prior);
            assert!(r.tv_bayes_vs_prior.is_zero() && r.tv_compromised_vs_prior.is_zero());
        }

        let r = discrepancy_report(&pad(&[("0", "3/4"), ("1", "1/4")]), "0", &p("1/2")).unwrap();
        assert_eq!(r.tv_bayes_vs_prior, p("9/140"));
    }

    #[test]
    fn discrepancy_needs_positive_ciphertext() {
        let sys = xor_pad_system(
            1,
            dist(&[("0", "1"), ("1", "0")]),
            dist(&[("0", "1"), ("1", "0")]),
        )
        .unwrap();
        assert_eq!(
            discrepancy_report(&sys, "1", &p("1/2")),
            Err(AnalysisError::Crypto(
                CryptoError::ZeroProbabilityCiphertext("1".into())
            ))
        );
    }

    #[test]
    fn length_leakage_examples() {
        let prior = LengthPrior::from(dist(&[("0", "1/2"), ("00", "1/4"), ("11", "1/4")]));
        assert_eq!(
            length_leakage_posterior(&prior, 2).unwrap(),
            dist(&[("0", "0"), ("00", "1/2"), ("11", "1/2")])
        );

        let same = LengthPrior::from(dist(&[("000", "1/3"), ("101", "2/3")]));
        assert_eq!(length_leakage_posterior(&same, 3).unwrap(), *same.dist());

        let one = LengthPrior::from(Dist::point_mass("0"));
        assert_eq!(
            length_leakage_posterior(&one, 2),
            Err(AnalysisError::NoPlaintextOfObservedLength(2))
        );
    }
}
