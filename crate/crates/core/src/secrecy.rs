//! Perfect-secrecy checks. Each returns a [`SecrecyReport`] whose witnesses
//! carry the exact unequal probabilities (or the offending cell), so a failing
//! verdict can be re-derived by hand.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::cryptosystem::FiniteCryptosystem;
use crate::probability::Prob;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    PosteriorDefinition,
    Theorem1,
    KeyCountBound,
    LatinSquare,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::PosteriorDefinition => "posterior = prior",
            Criterion::Theorem1 => "P_M(E) = P(E)",
            Criterion::KeyCountBound => "#keys >= #messages",
            Criterion::LatinSquare => "Latin square",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    /// `P_E(M) != P(M)`.
    PosteriorMismatch {
        message: String,
        cipher: String,
        posterior: Prob,
        prior: Prob,
    },
    /// `P_M(E) != P(E)`.
    ConditionalMismatch {
        message: String,
        cipher: String,
        conditional: Prob,
        marginal: Prob,
    },
    TooFewKeys {
        positive_keys: usize,
        messages: usize,
    },
    ShapeMismatch {
        messages: usize,
        keys: usize,
        ciphertexts: usize,
    },
    /// `cipher` occurs under two messages for the same key.
    DuplicateInRow {
        key: String,
        cipher: String,
        first: String,
        second: String,
    },
    /// `cipher` occurs under two keys for the same message.
    DuplicateInColumn {
        message: String,
        cipher: String,
        first: String,
        second: String,
    },
}

impl Witness {
    /// Recomputes this witness from `sys`; true when it still holds verbatim.
    pub fn reverify(&self, sys: &FiniteCryptosystem) -> bool {
        match self {
            Witness::PosteriorMismatch {
                message,
                cipher,
                posterior,
                prior,
            } => {
                let Ok(post) = sys.bayes_posterior(cipher) else {
                    return false;
                };
                post.get(message) == Some(posterior)
                    && sys.prior().get(message) == Some(prior)
                    && posterior != prior
            }
            Witness::ConditionalMismatch {
                message,
                cipher,
                conditional,
                marginal,
            } => {
                let Ok(row) = sys.cipher_given_message(message) else {
                    return false;
                };
                row.get(cipher) == Some(conditional)
                    && sys.cipher_distribution().get(cipher) == Some(marginal)
                    && conditional != marginal
            }
            Witness::TooFewKeys {
                positive_keys,
                messages,
            } => {
                let pk = sys.key_probs().iter().filter(|p| p.is_positive()).count();
                pk == *positive_keys && sys.messages().len() == *messages && pk < *messages
            }
            Witness::ShapeMismatch {
                messages,
                keys,
                ciphertexts,
            } => {
                sys.messages().len() == *messages
                    && sys.keys().len() == *keys
                    && sys.ciphertexts().len() == *ciphertexts
                    && !(messages == keys && keys == ciphertexts)
            }
            Witness::DuplicateInRow {
                key,
                cipher,
                first,
                second,
            } => {
                first != second
                    && sys.encrypt(key, first).is_ok_and(|c| c == cipher)
                    && sys.encrypt(key, second).is_ok_and(|c| c == cipher)
            }
            Witness::DuplicateInColumn {
                message,
                cipher,
                first,
                second,
            } => {
                first != second
                    && sys.encrypt(first, message).is_ok_and(|c| c == cipher)
                    && sys.encrypt(second, message).is_ok_and(|c| c == cipher)
            }
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::PosteriorMismatch { message, cipher, posterior, prior } => write!(
                f,
                "m={message} e={cipher}: posterior {posterior} != prior {prior}"
            ),
            Witness::ConditionalMismatch { message, cipher, conditional, marginal } => write!(
                f,
                "m={message} e={cipher}: P_M(E) {conditional} != P(E) {marginal}"
            ),
            Witness::TooFewKeys { positive_keys, messages } => write!(
                f,
                "{positive_keys} positive-probability keys < {messages} messages"
            ),
            Witness::ShapeMismatch { messages, keys, ciphertexts } => write!(
                f,
                "table is not square: {messages} messages, {keys} keys, {ciphertexts} ciphertexts"
            ),
            Witness::DuplicateInRow { key, cipher, first, second } => write!(
                f,
                "ciphertext {cipher} appears twice in key {key}'s row (messages {first}, {second})"
            ),
            Witness::DuplicateInColumn { message, cipher, first, second } => write!(
                f,
                "ciphertext {cipher} appears twice in message {message}'s column (keys {first}, {second})"
            ),
        }
    }
}

/// Something a check deliberately did not examine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "label")]
pub enum Skipped {
    ZeroPriorMessage(String),
    ZeroProbabilityCiphertext(String),
}

impl fmt::Display for Skipped {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Skipped::ZeroPriorMessage(m) => write!(f, "message {m} has prior zero"),
            Skipped::ZeroProbabilityCiphertext(c) => {
                write!(f, "ciphertext {c} has probability zero")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SecrecyReport {
    pub criterion: Criterion,
    pub verdict: bool,
    pub witnesses: Vec<Witness>,
    pub skipped: Vec<Skipped>,
}

impl SecrecyReport {
    fn new(criterion: Criterion, witnesses: Vec<Witness>, skipped: Vec<Skipped>) -> Self {
        SecrecyReport {
            criterion,
            verdict: witnesses.is_empty(),
            witnesses,
            skipped,
        }
    }
}

/// Posterior equals prior for every message with positive prior and every
/// ciphertext with positive probability.
pub fn check_posterior_definition(sys: &FiniteCryptosystem) -> SecrecyReport {
    let marginal = sys.cipher_distribution();
    let prior = sys.prior();
    let mut skipped: Vec<Skipped> = prior
        .iter()
        .filter(|(_, p)| p.is_zero())
        .map(|(m, _)| Skipped::ZeroPriorMessage(m.to_string()))
        .collect();
    let mut posteriors = Vec::new();
    for (c, pe) in marginal.iter() {
        if pe.is_zero() {
            skipped.push(Skipped::ZeroProbabilityCiphertext(c.to_string()));
        } else {
            posteriors.push((c, sys.bayes_posterior(c).expect("positive ciphertext")));
        }
    }
    let mut witnesses = Vec::new();
    for (m, pm) in prior.iter() {
        if pm.is_zero() {
            continue;
        }
        for (c, post) in &posteriors {
            let pp = post.get(m).expect("same message labels");
            if pp != pm {
                witnesses.push(Witness::PosteriorMismatch {
                    message: m.to_string(),
                    cipher: c.to_string(),
                    posterior: pp.clone(),
                    prior: pm.clone(),
                });
            }
        }
    }
    SecrecyReport::new(Criterion::PosteriorDefinition, witnesses, skipped)
}

/// `P_M(E) = P(E)` for every message and ciphertext. Does not depend on the
/// prior beyond `P(E)` itself.
pub fn check_theorem1(sys: &FiniteCryptosystem) -> SecrecyReport {
    let marginal = sys.cipher_distribution();
    let mut witnesses = Vec::new();
    for m in sys.messages() {
        let row = sys.cipher_given_message(m).expect("known message");
        for ((c, pme), pe) in row.iter().zip(marginal.probs()) {
            if pme != pe {
                witnesses.push(Witness::ConditionalMismatch {
                    message: m.clone(),
                    cipher: c.to_string(),
                    conditional: pme.clone(),
                    marginal: pe.clone(),
                });
            }
        }
    }
    SecrecyReport::new(Criterion::Theorem1, witnesses, Vec::new())
}

/// Necessary condition only: at least as many positive-probability keys as
/// messages.
pub fn check_key_count_bound(sys: &FiniteCryptosystem) -> SecrecyReport {
    let positive_keys = sys.key_probs().iter().filter(|p| p.is_positive()).count();
    let messages = sys.messages().len();
    let witnesses = if positive_keys < messages {
        vec![Witness::TooFewKeys {
            positive_keys,
            messages,
        }]
    } else {
        Vec::new()
    };
    SecrecyReport::new(Criterion::KeyCountBound, witnesses, Vec::new())
}

/// Key x message table is square and no ciphertext repeats in any row or
/// column.
pub fn is_latin_square(sys: &FiniteCryptosystem) -> SecrecyReport {
    let (nm, nk, nc) = (
        sys.messages().len(),
        sys.keys().len(),
        sys.ciphertexts().len(),
    );
    if !(nm == nk && nk == nc) {
        let w = Witness::ShapeMismatch {
            messages: nm,
            keys: nk,
            ciphertexts: nc,
        };
        return SecrecyReport::new(Criterion::LatinSquare, vec![w], Vec::new());
    }
    let mut witnesses = Vec::new();
    for (k, key) in sys.keys().iter().enumerate() {
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for m in 0..nm {
            let c = sys.cell(k, m);
            if let Some(&first) = seen.get(&c) {
                witnesses.push(Witness::DuplicateInRow {
                    key: key.clone(),
                    cipher: sys.ciphertexts()[c].clone(),
                    first: sys.messages()[first].clone(),
                    second: sys.messages()[m].clone(),
                });
            } else {
                seen.insert(c, m);
            }
        }
    }
    for (m, message) in sys.messages().iter().enumerate() {
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for k in 0..nk {
            let c = sys.cell(k, m);
            if let Some(&first) = seen.get(&c) {
                witnesses.push(Witness::DuplicateInColumn {
                    message: message.clone(),
                    cipher: sys.ciphertexts()[c].clone(),
                    first: sys.keys()[first].clone(),
                    second: sys.keys()[k].clone(),
                });
            } else {
                seen.insert(c, k);
            }
        }
    }
    SecrecyReport::new(Criterion::LatinSquare, witnesses, Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PerfectSystemSummary {
    pub latin_square: bool,
    pub keys_uniform: bool,
    pub theorem1_holds: bool,
}

pub fn classify_perfect_system(sys: &FiniteCryptosystem) -> PerfectSystemSummary {
    let probs = sys.key_probs();
    PerfectSystemSummary {
        latin_square: is_latin_square(sys).verdict,
        keys_uniform: probs.windows(2).all(|w| w[0] == w[1]),
        theorem1_holds: check_theorem1(sys).verdict,
    }
}
