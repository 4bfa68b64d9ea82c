//! Monte Carlo estimates of `P(E)` and `P_E(M)`, independent of the exact
//! formulas: sample a message and a key, encrypt, count.
//!
//! Trial `t` draws from ChaCha8 keyed by the seed, on stream `t`, so counts
//! are a pure function of `(system, trials, seed)` however the trials are
//! split across threads. Sampling inverts the exact cumulative distribution
//! over an integer drawn uniformly below the common denominator; no floating
//! point is involved in any draw.

use indexmap::IndexMap;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cryptosystem::{CryptoError, FiniteCryptosystem};
use crate::probability::{common_denominator, Dist, Prob};

/// Identifier recorded in every [`EmpiricalDist`].
pub const GENERATOR: &str = "chacha8/seed_from_u64(seed)/stream=trial";

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no trials were kept")]
    EmptyEmpirical,
    #[error("exact and empirical distributions have different labels")]
    LabelMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalDist {
    pub counts: IndexMap<String, u64>,
    pub trials_total: u64,
    pub trials_kept: u64,
    pub seed: u64,
    pub generator: String,
}

impl EmpiricalDist {
    pub fn frequency(&self, label: &str) -> Option<f64> {
        let c = *self.counts.get(label)?;
        (self.trials_kept > 0).then(|| c as f64 / self.trials_kept as f64)
    }
}

/// Inverse-CDF sampler over the indices of a rational distribution.
#[derive(Debug, Clone)]
enum Inverter {
    Small {
        total: u64,
        cumulative: Vec<u64>,
    },
    Big {
        total: BigUint,
        cumulative: Vec<BigUint>,
    },
}

impl Inverter {
    fn new(probs: &[Prob]) -> Self {
        let total = common_denominator(probs);
        let mut acc = BigUint::default();
        let cumulative: Vec<BigUint> = probs
            .iter()
            .map(|p| {
                let scale = &total / p.denom().magnitude();
                acc += p.numer().magnitude() * scale;
                acc.clone()
            })
            .collect();
        debug_assert_eq!(acc, total);
        match (
            total.to_u64(),
            cumulative.iter().map(ToPrimitive::to_u64).collect(),
        ) {
            (Some(total), Some(cumulative)) => Inverter::Small { total, cumulative },
            _ => Inverter::Big { total, cumulative },
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Inverter::Small { total, cumulative } => {
                let u = rng.random_range(0..*total);
                cumulative.partition_point(|&c| c <= u)
            }
            Inverter::Big { total, cumulative } => {
                let u = uniform_below(rng, total);
                cumulative.partition_point(|c| *c <= u)
            }
        }
    }
}

/// Uniform integer in `[0, bound)` by masked rejection.
fn uniform_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (words as u64 - 1);
    let mask = if top_bits == 32 {
        u32::MAX
    } else {
        (1u32 << top_bits) - 1
    };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
        if let Some(top) = digits.last_mut() {
            *top &= mask;
        }
        let candidate = BigUint::new(digits);
        if &candidate < bound {
            return candidate;
        }
    }
}

struct Samplers {
    messages: Inverter,
    keys: Inverter,
}

impl Samplers {
    fn new(sys: &FiniteCryptosystem) -> Self {
        Samplers {
            messages: Inverter::new(sys.prior_probs()),
            keys: Inverter::new(sys.key_probs()),
        }
    }

    /// `(message, key)` for one trial.
    fn draw(&self, base: &ChaCha8Rng, trial: u64) -> (usize, usize) {
        let mut rng = base.clone();
        rng.set_stream(trial);
        let m = self.messages.sample(&mut rng);
        let k = self.keys.sample(&mut rng);
        (m, k)
    }
}

/// Runs `trials` draws and tallies `observe(message, key)` into `bins` buckets.
fn run<F>(sys: &FiniteCryptosystem, trials: u64, seed: u64, bins: usize, observe: F) -> Vec<u64>
where
    F: Fn(usize, usize) -> Option<usize> + Sync,
{
    let samplers = Samplers::new(sys);
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut counts = vec![0u64; bins];
            let end = ((chunk + 1) * CHUNK).min(trials);
            for t in chunk * CHUNK..end {
                let (m, k) = samplers.draw(&base, t);
                if let Some(bin) = observe(m, k) {
                    counts[bin] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

fn empirical(labels: &[String], counts: Vec<u64>, trials: u64, seed: u64) -> EmpiricalDist {
    let kept = counts.iter().sum();
    EmpiricalDist {
        counts: labels.iter().cloned().zip(counts).collect(),
        trials_total: trials,
        trials_kept: kept,
        seed,
        generator: GENERATOR.to_string(),
    }
}

/// Empirical ciphertext distribution from `trials` independent encryptions.
pub fn simulate_cipher_dist(sys: &FiniteCryptosystem, trials: u64, seed: u64) -> EmpiricalDist {
    let counts = run(sys, trials, seed, sys.ciphertexts().len(), |m, k| {
        Some(sys.cell(k, m))
    });
    empirical(sys.ciphertexts(), counts, trials, seed)
}

/// Empirical posterior over messages: trials whose ciphertext is not `cipher`
/// are discarded. Zero kept trials is a valid outcome.
pub fn simulate_posterior(
    sys: &FiniteCryptosystem,
    cipher: &str,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalDist, CryptoError> {
    let cipher = sys.cipher_index(cipher)?;
    let counts = run(sys, trials, seed, sys.messages().len(), |m, k| {
        (sys.cell(k, m) == cipher).then_some(m)
    });
    Ok(empirical(sys.messages(), counts, trials, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub within_tolerance: bool,
    pub tolerance: f64,
    pub worst_label: String,
    /// Exact `|p - count/kept|` at `worst_label`.
    pub max_deviation: Prob,
}

impl Agreement {
    pub fn max_deviation_f64(&self) -> f64 {
        self.max_deviation.to_f64()
    }
}

/// Largest absolute gap between exact masses and empirical frequencies.
pub fn agreement(
    exact: &Dist,
    empirical: &EmpiricalDist,
    tolerance: f64,
) -> Result<Agreement, OracleError> {
    if empirical.trials_kept == 0 {
        return Err(OracleError::EmptyEmpirical);
    }
    if exact.len() != empirical.counts.len() {
        return Err(OracleError::LabelMismatch);
    }
    let mut worst: Option<(String, Prob)> = None;
    for (label, p) in exact.iter() {
        let count = *empirical
            .counts
            .get(label)
            .ok_or(OracleError::LabelMismatch)?;
        let freq = Prob::new(count, empirical.trials_kept).expect("kept > 0");
        let dev = p.abs_diff(&freq);
        if worst.as_ref().is_none_or(|(_, w)| dev > *w) {
            worst = Some((label.to_string(), dev));
        }
    }
    let (worst_label, max_deviation) = worst.expect("nonempty distribution");
    Ok(Agreement {
        within_tolerance: max_deviation.to_f64() <= tolerance,
        tolerance,
        worst_label,
        max_deviation,
    })
}

/// `4 * sqrt(1 / (4 n))`: four binomial standard deviations at `p = 1/2`.
pub fn convergence_tolerance(trials: u64) -> f64 {
    4.0 * (1.0 / (4.0 * trials as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cryptosystem::xor_pad_system;

    fn dist(e: &[(&str, &str)]) -> Dist {
        Dist::parse(e).unwrap()
    }

    fn counts(pairs: &[(&str, u64)]) -> EmpiricalDist {
        let kept = pairs.iter().map(|(_, c)| c).sum();
        EmpiricalDist {
            counts: pairs.iter().map(|(l, c)| (l.to_string(), *c)).collect(),
            trials_total: kept,
            trials_kept: kept,
            seed: 0,
            generator: GENERATOR.into(),
        }
    }

    fn example_one() -> FiniteCryptosystem {
        xor_pad_system(
            1,
            dist(&[("0", "9/10"), ("1", "1/10")]),
            Dist::uniform(["0", "1"]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn agreement_examples() {
        let half = dist(&[("0", "1/2"), ("1", "1/2")]);
        let a = agreement(&half, &counts(&[("0", 500), ("1", 500)]), 0.01).unwrap();
        assert!(a.within_tolerance);
        assert!(a.max_deviation.is_zero());

        let a = agreement(&half, &counts(&[("0", 600), ("1", 400)]), 0.05).unwrap();
        assert!(!a.within_tolerance);
        assert_eq!(a.max_deviation, "1/10".parse().unwrap());

        let nine = dist(&[("0", "9/10"), ("1", "1/10")]);
        let a = agreement(&nine, &counts(&[("0", 905), ("1", 95)]), 0.01).unwrap();
        assert!(a.within_tolerance);
        assert_eq!(a.max_deviation, "1/200".parse().unwrap());
        assert_eq!(a.max_deviation_f64(), 0.005);
    }

    #[test]
    fn agreement_errors() {
        let half = dist(&[("0", "1/2"), ("1", "1/2")]);
        assert_eq!(
            agreement(&half, &counts(&[("0", 0), ("1", 0)]), 0.1),
            Err(OracleError::EmptyEmpirical)
        );
        assert_eq!(
            agreement(&half, &counts(&[("0", 1), ("x", 1)]), 0.1),
            Err(OracleError::LabelMismatch)
        );
    }

    #[test]
    fn point_masses_are_deterministic() {
        let sys = xor_pad_system(
            1,
            dist(&[("0", "0"), ("1", "1")]),
            dist(&[("0", "1"), ("1", "0")]),
        )
        .unwrap();
        let e = simulate_cipher_dist(&sys, 1000, 3);
        assert_eq!(e.counts["1"], 1000);
        assert_eq!(e.counts["0"], 0);
    }

    #[test]
    fn single_trial() {
        let e = simulate_cipher_dist(&example_one(), 1, 0);
        assert_eq!(e.trials_total, 1);
        assert_eq!(e.trials_kept, 1);
        assert_eq!(e.counts.values().sum::<u64>(), 1);
    }

    #[test]
    fn unreachable_cipher_keeps_nothing() {
        let sys = xor_pad_system(
            1,
            dist(&[("0", "1"), ("1", "0")]),
            dist(&[("0", "1"), ("1", "0")]),
        )
        .unwrap();
        let e = simulate_posterior(&sys, "1", 5000, 9).unwrap();
        assert_eq!(e.trials_kept, 0);
        assert_eq!(e.trials_total, 5000);
    }

    #[test]
    fn same_seed_same_counts() {
        let sys = example_one();
        assert_eq!(
            simulate_cipher_dist(&sys, 40_000, 7),
            simulate_cipher_dist(&sys, 40_000, 7)
        );
        assert_ne!(
            simulate_cipher_dist(&sys, 40_000, 7),
            simulate_cipher_dist(&sys, 40_000, 8)
        );
    }

    #[test]
    fn chunking_does_not_change_counts() {
        // serial reference over the same per-trial streams
        let sys = example_one();
        let trials = 3 * CHUNK + 17;
        let samplers = Samplers::new(&sys);
        let base = ChaCha8Rng::seed_from_u64(11);
        let mut serial = vec![0u64; 2];
        for t in 0..trials {
            let (m, k) = samplers.draw(&base, t);
            serial[sys.cell(k, m)] += 1;
        }
        let e = simulate_cipher_dist(&sys, trials, 11);
        assert_eq!(e.counts.values().copied().collect::<Vec<_>>(), serial);
    }

    #[test]
    fn big_denominators_sample_in_range() {
        let third = Prob::from_rational(num_rational::BigRational::new(
            1.into(),
            num_bigint::BigInt::from(3u8).pow(50),
        ))
        .unwrap();
        let probs = vec![third.clone(), Prob::one().checked_sub(&third).unwrap()];
        let inv = Inverter::new(&probs);
        assert!(matches!(inv, Inverter::Big { .. }));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hits = (0..2000).filter(|_| inv.sample(&mut rng) == 0).count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn inverter_skips_zero_mass() {
        let probs: Vec<Prob> = ["0", "1/3", "0", "2/3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let inv = Inverter::new(&probs);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = [0usize; 4];
        for _ in 0..3000 {
            seen[inv.sample(&mut rng)] += 1;
        }
        assert_eq!(seen[0] + seen[2], 0);
        assert!(seen[1] > 800 && seen[3] > 1800);
    }

    #[test]
    fn tolerance_rule() {
        assert!((convergence_tolerance(10_000) - 0.02).abs() < 1e-15);
        assert!((convergence_tolerance(1_000_000) - 0.002).abs() < 1e-15);
    }
}
