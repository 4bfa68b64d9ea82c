//! JSON description of a cryptosystem, as read by the command-line tool.
//!
//! ```json
//! { "messages": [{"label": "0", "prior": "9/10"}, {"label": "1", "prior": "1/10"}],
//!   "keys": [{"label": "0", "prob": "1/2"}, {"label": "1", "prob": "1/2"}],
//!   "ciphertexts": ["0", "1"],
//!   "table": { "0": {"0": "0", "1": "1"}, "1": {"0": "1", "1": "0"} } }
//! ```

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cryptosystem::{CryptosystemParts, FiniteCryptosystem};
use crate::probability::{Dist, Prob, ProbError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageEntry {
    pub label: String,
    pub prior: Prob,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyEntry {
    pub label: String,
    pub prob: Prob,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub messages: Vec<MessageEntry>,
    pub keys: Vec<KeyEntry>,
    pub ciphertexts: Vec<String>,
    /// key label -> message label -> ciphertext label
    pub table: IndexMap<String, IndexMap<String, String>>,
}

#[derive(Debug, Error)]
pub enum SystemFileError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {source}")]
    Field {
        field: &'static str,
        #[source]
        source: ProbError,
    },
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self, SystemFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Converts to unchecked parts. Fails only when a probability column does
    /// not form a distribution; structural problems are left to `validate`.
    pub fn to_parts(&self) -> Result<CryptosystemParts, SystemFileError> {
        let prior = Dist::new(
            self.messages
                .iter()
                .map(|m| (m.label.clone(), m.prior.clone()))
                .collect(),
        )
        .map_err(|source| SystemFileError::Field {
            field: "messages[].prior",
            source,
        })?;
        let key_dist = Dist::new(
            self.keys
                .iter()
                .map(|k| (k.label.clone(), k.prob.clone()))
                .collect(),
        )
        .map_err(|source| SystemFileError::Field {
            field: "keys[].prob",
            source,
        })?;
        let mut table = HashMap::new();
        for (k, row) in &self.table {
            for (m, c) in row {
                table.insert((k.clone(), m.clone()), c.clone());
            }
        }
        Ok(CryptosystemParts {
            messages: self.messages.iter().map(|m| m.label.clone()).collect(),
            keys: self.keys.iter().map(|k| k.label.clone()).collect(),
            ciphertexts: self.ciphertexts.clone(),
            table,
            key_dist,
            prior,
        })
    }

    pub fn from_system(sys: &FiniteCryptosystem) -> Self {
        let messages = sys
            .messages()
            .iter()
            .zip(sys.prior_probs())
            .map(|(label, prior)| MessageEntry {
                label: label.clone(),
                prior: prior.clone(),
            })
            .collect();
        let keys = sys
            .keys()
            .iter()
            .zip(sys.key_probs())
            .map(|(label, prob)| KeyEntry {
                label: label.clone(),
                prob: prob.clone(),
            })
            .collect();
        let table = sys
            .keys()
            .iter()
            .enumerate()
            .map(|(ki, k)| {
                let row = sys
                    .messages()
                    .iter()
                    .enumerate()
                    .map(|(mi, m)| (m.clone(), sys.ciphertexts()[sys.cell(ki, mi)].clone()))
                    .collect();
                (k.clone(), row)
            })
            .collect();
        SystemFile {
            messages,
            keys,
            ciphertexts: sys.ciphertexts().to_vec(),
            table,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cryptosystem::xor_pad_system;

    const EXAMPLE: &str = r#"{
      "messages": [{"label": "0", "prior": "9/10"}, {"label": "1", "prior": "1/10"}],
      "keys": [{"label": "0", "prob": "1/2"}, {"label": "1", "prob": "1/2"}],
      "ciphertexts": ["0", "1"],
      "table": { "0": {"0": "0", "1": "1"}, "1": {"0": "1", "1": "0"} }
    }"#;

    #[test]
    fn parses_binary_pad() {
        let parts = SystemFile::from_json(EXAMPLE).unwrap().to_parts().unwrap();
        assert!(parts.validate().is_empty());
        let sys = FiniteCryptosystem::new(parts).unwrap();
        let pad = xor_pad_system(
            1,
            Dist::parse(&[("0", "9/10"), ("1", "1/10")]).unwrap(),
            Dist::uniform(["0", "1"]).unwrap(),
        )
        .unwrap();
        assert_eq!(sys, pad);
        assert_eq!(
            SystemFile::from_system(&sys),
            SystemFile::from_json(EXAMPLE).unwrap()
        );
    }

    #[test]
    fn rejects_unknown_fields_and_bad_fractions() {
        let extra = EXAMPLE.replacen("\"ciphertexts\"", "\"colour\": 1, \"ciphertexts\"", 1);
        let err = SystemFile::from_json(&extra).unwrap_err().to_string();
        assert!(err.contains("unknown field"), "{err}");

        let bad = EXAMPLE.replacen("9/10", "9/x", 1);
        let err = SystemFile::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");

        let unnormalized = EXAMPLE.replacen("9/10", "8/10", 1);
        let err = SystemFile::from_json(&unnormalized)
            .unwrap()
            .to_parts()
            .unwrap_err();
        assert!(
            err.to_string().starts_with("field `messages[].prior`"),
            "{err}"
        );
    }
}
