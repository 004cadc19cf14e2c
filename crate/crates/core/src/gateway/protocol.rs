//! Line-delimited JSON wire protocol spoken by every predictor transport.
//!
//! Request: `{"id":..,"context":..,"question":..,"choices":[4 strings]}`.
//! Response: `{"id":..,"chosen":0..3}` or `{"id":..,"error":"message"}`.

use crate::dataset::VariantInstance;
use serde::{Deserialize, Serialize};

/// Id of the liveness probe sent before the first real request.
pub const HEALTH_ID: &str = "__health__";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: String,
    pub context: String,
    pub question: String,
    pub choices: [String; 4],
}

impl Request {
    pub fn for_instance(v: &VariantInstance) -> Self {
        Self {
            id: v.variant_id.clone(),
            context: v.context.clone(),
            question: v.question.clone(),
            choices: v.choices.clone(),
        }
    }

    pub fn health() -> Self {
        Self {
            id: HEALTH_ID.to_string(),
            context: String::new(),
            question: String::new(),
            choices: Default::default(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub id: String,
    /// The chosen index, or the predictor's own error message.
    pub outcome: Result<u8, String>,
}

impl Response {
    pub fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            id: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            chosen: Option<u8>,
            #[serde(skip_serializing_if = "Option::is_none")]
            error: Option<&'a str>,
        }
        let out = Out {
            id: &self.id,
            chosen: self.outcome.as_ref().ok().copied(),
            error: self.outcome.as_ref().err().map(String::as_str),
        };
        serde_json::to_string(&out).expect("response serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed response ({reason}): {bytes:?}")]
    Malformed { bytes: String, reason: String },
    #[error("variant {id}: chosen index {chosen} is outside 0..=3")]
    ChosenOutOfRange { id: String, chosen: i64 },
    #[error("response for unknown id {id:?}")]
    UnknownId { id: String },
    #[error("response id {got:?} does not match request id {expected:?}")]
    IdMismatch { expected: String, got: String },
}

#[derive(Deserialize)]
struct Wire {
    id: String,
    #[serde(default)]
    chosen: Option<serde_json::Number>,
    #[serde(default)]
    error: Option<String>,
}

pub fn parse_response(line: &str) -> Result<Response, ProtocolError> {
    let malformed = |reason: String| ProtocolError::Malformed {
        bytes: line.to_string(),
        reason,
    };
    let wire: Wire = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    let outcome = match (wire.chosen, wire.error) {
        (Some(n), None) => {
            let chosen = n
                .as_i64()
                .ok_or_else(|| malformed(format!("chosen must be an integer, got {n}")))?;
            if !(0..=3).contains(&chosen) {
                return Err(ProtocolError::ChosenOutOfRange { id: wire.id, chosen });
            }
            Ok(chosen as u8)
        }
        (None, Some(e)) => Err(e),
        (Some(_), Some(_)) => return Err(malformed("both chosen and error present".into())),
        (None, None) => return Err(malformed("neither chosen nor error present".into())),
    };
    Ok(Response { id: wire.id, outcome })
}
