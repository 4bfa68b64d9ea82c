//! Finite cryptosystems: an encryption table over (key, message) pairs, a key
//! distribution and a message prior, and the exact probabilities they induce.
//!
//! A system is assembled from [`CryptosystemParts`], which may be malformed
//! and can be inspected with [`CryptosystemParts::validate`]. A
//! [`FiniteCryptosystem`] is always structurally valid: the table is total,
//! each key is injective, and every listed ciphertext is produced by some cell.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::probability::{Dist, Prob, ProbError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Message,
    Key,
    Ciphertext,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Message => "message",
            LabelKind::Key => "key",
            LabelKind::Ciphertext => "ciphertext",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// One broken structural invariant, with the labels that witness it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    EmptyLabelSet {
        set: LabelKind,
    },
    DuplicateLabel {
        set: LabelKind,
        label: String,
    },
    MissingEntry {
        key: String,
        message: String,
    },
    UnknownTableLabel {
        set: LabelKind,
        label: String,
    },
    CiphertextOutsideSpace {
        key: String,
        message: String,
        cipher: String,
    },
    NonInjectiveKey {
        key: String,
        first: String,
        second: String,
        cipher: String,
    },
    UnusedCiphertext {
        cipher: String,
    },
    /// The named distribution's labels differ from the declared label list.
    LabelMismatch {
        set: LabelKind,
        missing: Vec<String>,
        extra: Vec<String>,
    },
    ZeroProbabilityKey {
        key: String,
    },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::ZeroProbabilityKey { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyLabelSet { set } => write!(f, "no {set} labels"),
            Violation::DuplicateLabel { set, label } => {
                write!(f, "duplicate {set} label {label:?}")
            }
            Violation::MissingEntry { key, message } => {
                write!(f, "table has no entry for key {key:?}, message {message:?}")
            }
            Violation::UnknownTableLabel { set, label } => {
                write!(f, "table mentions unknown {set} {label:?}")
            }
            Violation::CiphertextOutsideSpace { key, message, cipher } => write!(
                f,
                "key {key:?} maps message {message:?} to {cipher:?}, which is not a listed ciphertext"
            ),
            Violation::NonInjectiveKey { key, first, second, cipher } => write!(
                f,
                "key {key:?} maps both {first:?} and {second:?} to ciphertext {cipher:?}"
            ),
            Violation::UnusedCiphertext { cipher } => {
                write!(f, "ciphertext {cipher:?} is never produced by the table")
            }
            Violation::LabelMismatch { set, missing, extra } => write!(
                f,
                "{set} distribution labels differ from the {set} list (missing {missing:?}, extra {extra:?})"
            ),
            Violation::ZeroProbabilityKey { key } => {
                write!(f, "key {key:?} has probability zero")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("invalid cryptosystem: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown {kind} label {label:?}")]
    UnknownLabel { kind: LabelKind, label: String },
    #[error("ciphertext {0:?} has probability zero; the posterior is undefined")]
    ZeroProbabilityCiphertext(String),
    #[error("expected {expected} entries, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("label {0:?} is not a bitstring of the required length")]
    NotABitstring(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

fn join(vs: &[Violation]) -> String {
    vs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Unchecked description of a cryptosystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CryptosystemParts {
    pub messages: Vec<String>,
    pub keys: Vec<String>,
    pub ciphertexts: Vec<String>,
    /// `(key, message) -> ciphertext`
    pub table: HashMap<(String, String), String>,
    pub key_dist: Dist,
    pub prior: Dist,
}

impl CryptosystemParts {
    /// Every violated invariant, errors and warnings alike, in a stable order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (set, labels) in [
            (LabelKind::Message, &self.messages),
            (LabelKind::Key, &self.keys),
            (LabelKind::Ciphertext, &self.ciphertexts),
        ] {
            if labels.is_empty() {
                out.push(Violation::EmptyLabelSet { set });
            }
            let mut seen = HashSet::new();
            for l in labels {
                if !seen.insert(l) {
                    out.push(Violation::DuplicateLabel {
                        set,
                        label: l.clone(),
                    });
                }
            }
        }

        let msg_set: HashSet<&String> = self.messages.iter().collect();
        let key_set: HashSet<&String> = self.keys.iter().collect();
        let cipher_set: HashSet<&String> = self.ciphertexts.iter().collect();

        let mut unknown: Vec<(LabelKind, &String)> = Vec::new();
        for (k, m) in self.table.keys() {
            if !key_set.contains(k) {
                unknown.push((LabelKind::Key, k));
            }
            if !msg_set.contains(m) {
                unknown.push((LabelKind::Message, m));
            }
        }
        unknown.sort();
        unknown.dedup();
        out.extend(
            unknown
                .into_iter()
                .map(|(set, l)| Violation::UnknownTableLabel {
                    set,
                    label: l.clone(),
                }),
        );

        let mut produced = HashSet::new();
        for k in &self.keys {
            let mut image: HashMap<&String, &String> = HashMap::new();
            for m in &self.messages {
                let Some(c) = self.table.get(&(k.clone(), m.clone())) else {
                    out.push(Violation::MissingEntry {
                        key: k.clone(),
                        message: m.clone(),
                    });
                    continue;
                };
                if !cipher_set.contains(c) {
                    out.push(Violation::CiphertextOutsideSpace {
                        key: k.clone(),
                        message: m.clone(),
                        cipher: c.clone(),
                    });
                }
                produced.insert(c);
                if let Some(first) = image.insert(c, m) {
                    // keep the earliest message as the recorded preimage
                    image.insert(c, first);
                    out.push(Violation::NonInjectiveKey {
                        key: k.clone(),
                        first: first.clone(),
                        second: m.clone(),
                        cipher: c.clone(),
                    });
                }
            }
        }
        for c in &self.ciphertexts {
            if !produced.contains(c) {
                out.push(Violation::UnusedCiphertext { cipher: c.clone() });
            }
        }

        for (set, labels, dist) in [
            (LabelKind::Key, &self.keys, &self.key_dist),
            (LabelKind::Message, &self.messages, &self.prior),
        ] {
            let missing: Vec<String> = labels
                .iter()
                .filter(|l| dist.get(l).is_none())
                .cloned()
                .collect();
            let extra: Vec<String> = dist
                .labels()
                .filter(|l| !labels.iter().any(|x| x == l))
                .map(String::from)
                .collect();
            if !missing.is_empty() || !extra.is_empty() {
                out.push(Violation::LabelMismatch {
                    set,
                    missing,
                    extra,
                });
            }
        }

        for k in &self.keys {
            if self.key_dist.get(k).is_some_and(Prob::is_zero) {
                out.push(Violation::ZeroProbabilityKey { key: k.clone() });
            }
        }
        out
    }
}

/// A validated finite cryptosystem. Label order is the declaration order and
/// drives every report's ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCryptosystem {
    messages: Vec<String>,
    keys: Vec<String>,
    ciphertexts: Vec<String>,
    /// `table[key][message]` is a ciphertext index.
    table: Vec<Vec<usize>>,
    key_probs: Vec<Prob>,
    prior_probs: Vec<Prob>,
}

/// Rows of Bayes posteriors, one per ciphertext with positive probability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PosteriorTable {
    pub rows: Vec<(String, Dist)>,
}

impl PosteriorTable {
    pub fn row(&self, cipher: &str) -> Option<&Dist> {
        self.rows.iter().find(|(c, _)| c == cipher).map(|(_, d)| d)
    }
}

impl FiniteCryptosystem {
    pub fn new(parts: CryptosystemParts) -> Result<Self, CryptoError> {
        let errors: Vec<Violation> = parts
            .validate()
            .into_iter()
            .filter(Violation::is_error)
            .collect();
        if !errors.is_empty() {
            return Err(CryptoError::Invalid(errors));
        }
        let cipher_idx: HashMap<&str, usize> = parts
            .ciphertexts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let table = parts
            .keys
            .iter()
            .map(|k| {
                parts
                    .messages
                    .iter()
                    .map(|m| cipher_idx[parts.table[&(k.clone(), m.clone())].as_str()])
                    .collect()
            })
            .collect();
        let key_probs = parts
            .keys
            .iter()
            .map(|k| parts.key_dist.get(k).cloned().expect("validated"))
            .collect();
        let prior_probs = parts
            .messages
            .iter()
            .map(|m| parts.prior.get(m).cloned().expect("validated"))
            .collect();
        Ok(FiniteCryptosystem {
            messages: parts.messages,
            keys: parts.keys,
            ciphertexts: parts.ciphertexts,
            table,
            key_probs,
            prior_probs,
        })
    }

    /// Builds from a table given as `rows[key_index][message_index] = cipher label`.
    pub fn from_rows(
        messages: Vec<String>,
        keys: Vec<String>,
        ciphertexts: Vec<String>,
        rows: &[Vec<String>],
        key_dist: Dist,
        prior: Dist,
    ) -> Result<Self, CryptoError> {
        if rows.len() != keys.len() {
            return Err(CryptoError::SizeMismatch {
                expected: keys.len(),
                got: rows.len(),
            });
        }
        let mut table = HashMap::new();
        for (k, row) in keys.iter().zip(rows) {
            if row.len() != messages.len() {
                return Err(CryptoError::SizeMismatch {
                    expected: messages.len(),
                    got: row.len(),
                });
            }
            for (m, c) in messages.iter().zip(row) {
                table.insert((k.clone(), m.clone()), c.clone());
            }
        }
        FiniteCryptosystem::new(CryptosystemParts {
            messages,
            keys,
            ciphertexts,
            table,
            key_dist,
            prior,
        })
    }

    pub fn to_parts(&self) -> CryptosystemParts {
        let mut table = HashMap::new();
        for (ki, k) in self.keys.iter().enumerate() {
            for (mi, m) in self.messages.iter().enumerate() {
                table.insert(
                    (k.clone(), m.clone()),
                    self.ciphertexts[self.table[ki][mi]].clone(),
                );
            }
        }
        CryptosystemParts {
            messages: self.messages.clone(),
            keys: self.keys.clone(),
            ciphertexts: self.ciphertexts.clone(),
            table,
            key_dist: self.key_dist(),
            prior: self.prior(),
        }
    }

    /// Remaining warnings; a constructed system never carries errors.
    pub fn validate(&self) -> Vec<Violation> {
        self.keys
            .iter()
            .zip(&self.key_probs)
            .filter(|(_, p)| p.is_zero())
            .map(|(k, _)| Violation::ZeroProbabilityKey { key: k.clone() })
            .collect()
    }

    pub fn with_prior(&self, prior: Dist) -> Result<Self, CryptoError> {
        FiniteCryptosystem::new(CryptosystemParts {
            prior,
            ..self.to_parts()
        })
    }

    pub fn with_key_dist(&self, key_dist: Dist) -> Result<Self, CryptoError> {
        FiniteCryptosystem::new(CryptosystemParts {
            key_dist,
            ..self.to_parts()
        })
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn ciphertexts(&self) -> &[String] {
        &self.ciphertexts
    }

    pub fn prior(&self) -> Dist {
        zip_dist(&self.messages, &self.prior_probs)
    }

    pub fn key_dist(&self) -> Dist {
        zip_dist(&self.keys, &self.key_probs)
    }

    pub fn prior_probs(&self) -> &[Prob] {
        &self.prior_probs
    }

    pub fn key_probs(&self) -> &[Prob] {
        &self.key_probs
    }

    /// Ciphertext index at `table[key][message]`, by index.
    pub fn cell(&self, key: usize, message: usize) -> usize {
        self.table[key][message]
    }

    pub fn message_index(&self, label: &str) -> Result<usize, CryptoError> {
        index_of(&self.messages, LabelKind::Message, label)
    }

    pub fn key_index(&self, label: &str) -> Result<usize, CryptoError> {
        index_of(&self.keys, LabelKind::Key, label)
    }

    pub fn cipher_index(&self, label: &str) -> Result<usize, CryptoError> {
        index_of(&self.ciphertexts, LabelKind::Ciphertext, label)
    }

    pub fn encrypt(&self, key: &str, msg: &str) -> Result<&str, CryptoError> {
        let k = self.key_index(key)?;
        let m = self.message_index(msg)?;
        Ok(&self.ciphertexts[self.table[k][m]])
    }

    /// Keys sending `msg` to `cipher`, in key order.
    pub fn keys_mapping(&self, msg: &str, cipher: &str) -> Result<Vec<&str>, CryptoError> {
        let m = self.message_index(msg)?;
        let c = self.cipher_index(cipher)?;
        Ok(self
            .keys
            .iter()
            .enumerate()
            .filter(|&(k, _)| self.table[k][m] == c)
            .map(|(_, l)| l.as_str())
            .collect())
    }

    /// `P_M(E)` for every ciphertext, by index.
    pub(crate) fn conditional_row(&self, m: usize) -> Vec<Prob> {
        let mut row = vec![Prob::zero(); self.ciphertexts.len()];
        for (k, p) in self.key_probs.iter().enumerate() {
            let c = self.table[k][m];
            row[c] = &row[c] + p;
        }
        row
    }

    /// `P(E)` for every ciphertext, by index.
    pub(crate) fn marginal_row(&self) -> Vec<Prob> {
        let mut out = vec![Prob::zero(); self.ciphertexts.len()];
        for (m, pm) in self.prior_probs.iter().enumerate() {
            if pm.is_zero() {
                continue;
            }
            for (c, pe) in self.conditional_row(m).iter().enumerate() {
                out[c] = &out[c] + &(pm * pe);
            }
        }
        out
    }

    /// Distribution of the ciphertext when `msg` is sent.
    pub fn cipher_given_message(&self, msg: &str) -> Result<Dist, CryptoError> {
        let m = self.message_index(msg)?;
        Ok(zip_dist(&self.ciphertexts, &self.conditional_row(m)))
    }

    /// Unconditional ciphertext distribution under the prior.
    pub fn cipher_distribution(&self) -> Dist {
        zip_dist(&self.ciphertexts, &self.marginal_row())
    }

    /// Exact Bayes posterior over messages after observing `cipher`.
    pub fn bayes_posterior(&self, cipher: &str) -> Result<Dist, CryptoError> {
        let c = self.cipher_index(cipher)?;
        let evidence = &self.marginal_row()[c];
        if evidence.is_zero() {
            return Err(CryptoError::ZeroProbabilityCiphertext(cipher.to_string()));
        }
        let masses: Vec<Prob> = (0..self.messages.len())
            .map(|m| {
                let joint = &self.prior_probs[m] * &self.conditional_row(m)[c];
                joint.checked_div(evidence).expect("positive evidence")
            })
            .collect();
        Ok(zip_dist(&self.messages, &masses))
    }

    pub fn posterior_table(&self) -> PosteriorTable {
        let marginal = self.marginal_row();
        let rows = self
            .ciphertexts
            .iter()
            .zip(&marginal)
            .filter(|(_, p)| p.is_positive())
            .map(|(c, _)| {
                (
                    c.clone(),
                    self.bayes_posterior(c).expect("positive ciphertext"),
                )
            })
            .collect();
        PosteriorTable { rows }
    }
}

fn index_of(labels: &[String], kind: LabelKind, label: &str) -> Result<usize, CryptoError> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| CryptoError::UnknownLabel {
            kind,
            label: label.to_string(),
        })
}

/// Pairs labels with masses already known to sum to one.
fn zip_dist(labels: &[String], probs: &[Prob]) -> Dist {
    Dist::new(labels.iter().cloned().zip(probs.iter().cloned()).collect())
        .expect("masses derived from normalized inputs")
}

/// Whether cyclic indices start at 0 (`E0..E{n-1}`) or at 1 (`E1..En`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexBase {
    Zero,
    One,
}

impl IndexBase {
    fn offset(self) -> i64 {
        match self {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        }
    }
}

/// Cyclic-shift cipher on `n` symbols. Key `i` and message `j` are numbered by
/// position from `base`; the ciphertext is `E{s}` with `s = i + j + offset`
/// reduced mod `n` into `base..base + n`. Message and key labels come from
/// `prior` and `key_dist`.
///
/// `IndexBase::Zero` with offset 0 is `s = i + j (mod n)`; `IndexBase::One`
/// with offset -1 is `s = i + j - 1 (mod n)`. Both give the same table.
pub fn modular_shift_system(
    n: usize,
    prior: Dist,
    key_dist: Dist,
    offset: i64,
    base: IndexBase,
) -> Result<FiniteCryptosystem, CryptoError> {
    for got in [prior.len(), key_dist.len()] {
        if got != n {
            return Err(CryptoError::SizeMismatch { expected: n, got });
        }
    }
    let b = base.offset();
    let modulus = n as i64;
    let ciphertexts: Vec<String> = (0..modulus).map(|s| format!("E{}", s + b)).collect();
    let rows: Vec<Vec<String>> = (0..modulus)
        .map(|ki| {
            (0..modulus)
                .map(|mj| {
                    let s = (ki + b) + (mj + b) + offset;
                    let pos = (s - b).rem_euclid(modulus);
                    ciphertexts[pos as usize].clone()
                })
                .collect()
        })
        .collect();
    FiniteCryptosystem::from_rows(
        prior.labels().map(String::from).collect(),
        key_dist.labels().map(String::from).collect(),
        ciphertexts,
        &rows,
        key_dist,
        prior,
    )
}

/// All bitstrings of length `bits`, in increasing numeric order.
pub fn bitstrings(bits: u32) -> Vec<String> {
    (0..1u64 << bits)
        .map(|v| format!("{v:0width$b}", width = bits as usize))
        .collect()
}

fn parse_bits(label: &str, bits: u32) -> Result<u64, CryptoError> {
    if label.len() != bits as usize || !label.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(CryptoError::NotABitstring(label.to_string()));
    }
    Ok(u64::from_str_radix(label, 2).expect("checked digits"))
}

/// Bitwise XOR pad on `bits`-bit strings. Ciphertexts are listed in numeric
/// order; messages and keys keep the order of `prior` and `key_dist`.
pub fn xor_pad_system(
    bits: u32,
    prior: Dist,
    key_dist: Dist,
) -> Result<FiniteCryptosystem, CryptoError> {
    assert!((1..32).contains(&bits), "bit width out of range");
    let n = 1usize << bits;
    for got in [prior.len(), key_dist.len()] {
        if got != n {
            return Err(CryptoError::SizeMismatch { expected: n, got });
        }
    }
    let ciphertexts = bitstrings(bits);
    let msg_vals = prior
        .labels()
        .map(|l| parse_bits(l, bits))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = key_dist
        .labels()
        .map(|k| {
            let kv = parse_bits(k, bits)?;
            Ok(msg_vals
                .iter()
                .map(|mv| ciphertexts[(kv ^ mv) as usize].clone())
                .collect())
        })
        .collect::<Result<Vec<Vec<String>>, CryptoError>>()?;
    FiniteCryptosystem::from_rows(
        prior.labels().map(String::from).collect(),
        key_dist.labels().map(String::from).collect(),
        ciphertexts,
        &rows,
        key_dist,
        prior,
    )
}
