//! Deterministic test-double predictors.

use super::protocol::{parse_response, Request, Response, HEALTH_ID};
use super::{GatewayError, Predictor};
use crate::dataset::VariantInstance;
use crate::digest::digest64;
use std::io::{BufRead, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockPredictor {
    /// Answers the gold index.
    Oracle,
    Constant(u8),
    /// `digest64(context + " " + question) mod 4`.
    LexicalHash,
}

pub fn lexical_hash_choice(context: &str, question: &str) -> u8 {
    let text = format!("{context} {question}");
    (digest64(text.as_bytes()) % 4) as u8
}

impl FromStr for MockPredictor {
    type Err = String;

    /// `oracle`, `constant:K` or `lexical-hash`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(MockPredictor::Oracle),
            "lexical-hash" => Ok(MockPredictor::LexicalHash),
            _ => {
                let k = s
                    .strip_prefix("constant:")
                    .ok_or_else(|| format!("unknown mock {s:?} (oracle, constant:K, lexical-hash)"))?;
                let k: u8 = k.parse().map_err(|_| format!("constant needs an index, got {k:?}"))?;
                Ok(MockPredictor::Constant(k))
            }
        }
    }
}

impl Predictor for MockPredictor {
    fn predict(&self, item: &VariantInstance) -> Result<u8, GatewayError> {
        let chosen = match *self {
            MockPredictor::Oracle => item.gold,
            MockPredictor::Constant(k) => k,
            MockPredictor::LexicalHash => lexical_hash_choice(&item.context, &item.question),
        };
        // same range check a wire response gets
        let line = Response {
            id: item.variant_id.clone(),
            outcome: Ok(chosen),
        }
        .to_line();
        Ok(parse_response(&line)?.outcome.expect("mock answers"))
    }
}

/// Serve the wire protocol over `input`/`output` until end of input.
///
/// The oracle is unavailable here because requests carry no gold index.
/// `constant:K` accepts any K, which makes it usable as a misbehaving
/// predictor in tests.
pub fn serve(mock: MockPredictor, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let out = match serde_json::from_str::<Request>(&line) {
            Ok(req) => {
                let outcome = match mock {
                    _ if req.id == HEALTH_ID => Ok(0),
                    MockPredictor::Oracle => Err("oracle mock cannot run over the wire".to_string()),
                    MockPredictor::Constant(k) => Ok(k),
                    MockPredictor::LexicalHash => Ok(lexical_hash_choice(&req.context, &req.question)),
                };
                match outcome {
                    Ok(k) => format!(r#"{{"id":{},"chosen":{k}}}"#, serde_json::to_string(&req.id)?),
                    Err(e) => Response { id: req.id, outcome: Err(e) }.to_line(),
                }
            }
            Err(e) => {
                eprintln!("mock-server: bad request: {e}");
                continue;
            }
        };
        writeln!(output, "{out}")?;
        output.flush()?;
    }
    Ok(())
}
