//! Predictor gateway: drives an external multiple-choice predictor over the
//! wire protocol, with a prediction cache, retries and bounded concurrency.

pub mod http;
pub mod mock;
pub mod protocol;
pub mod runner;
pub mod store;
pub mod subprocess;

pub use mock::{lexical_hash_choice, MockPredictor};
pub use protocol::{parse_response, ProtocolError, Request, Response, HEALTH_ID};
pub use runner::{
    read_predictions, run, write_predictions, FailureRecord, PredictionRecord, PredictionSet, PredictionsFileError,
    RunError, RunOptions, RunOutcome, RunStats,
};
pub use store::{PredictionStore, StoreError};

use crate::dataset::VariantInstance;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("variant {id}: no response within {ms} ms")]
    Timeout { id: String, ms: u64 },
    #[error("variant {id}: predictor reported: {message}")]
    Predictor { id: String, message: String },
    #[error("transport: {0}")]
    Transport(String),
}

impl GatewayError {
    /// Protocol violations abort the run; everything else is retried.
    pub fn is_fatal(&self) -> bool {
        matches!(self, GatewayError::Protocol(_))
    }
}

/// Anything that maps a rendered question to a choice index.
pub trait Predictor: Send + Sync {
    fn predict(&self, item: &VariantInstance) -> Result<u8, GatewayError>;

    /// Liveness probe, sent once before the first uncached request.
    fn health_check(&self) -> Result<(), GatewayError> {
        Ok(())
    }
}

/// Where predictions come from, parsed from the `--predictor` argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorSpec {
    Mock(MockPredictor),
    Http(String),
    /// Shell command run through `sh -c`.
    Command(String),
}

impl std::str::FromStr for PredictorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(kind) = s.strip_prefix("mock:") {
            let m: MockPredictor = kind.parse()?;
            if let MockPredictor::Constant(k) = m {
                if k > 3 {
                    return Err(format!("constant mock index must be 0..=3, got {k}"));
                }
            }
            return Ok(PredictorSpec::Mock(m));
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(PredictorSpec::Http(s.to_string()));
        }
        let cmd = s.strip_prefix("cmd:").unwrap_or(s).trim();
        if cmd.is_empty() {
            return Err("empty predictor command".into());
        }
        Ok(PredictorSpec::Command(cmd.to_string()))
    }
}

/// Open a predictor. Subprocesses are spawned immediately.
pub fn connect(spec: &PredictorSpec, timeout: Duration) -> Result<Box<dyn Predictor>, GatewayError> {
    Ok(match spec {
        PredictorSpec::Mock(m) => Box::new(*m),
        PredictorSpec::Http(url) => Box::new(http::HttpPredictor::new(url, timeout)),
        PredictorSpec::Command(cmd) => Box::new(subprocess::SubprocessPredictor::spawn(cmd, timeout)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictor_specs() {
        assert_eq!("mock:oracle".parse(), Ok(PredictorSpec::Mock(MockPredictor::Oracle)));
        assert!("mock:constant:7".parse::<PredictorSpec>().is_err());
        assert_eq!(
            "http://localhost:8080/predict".parse(),
            Ok(PredictorSpec::Http("http://localhost:8080/predict".into()))
        );
        assert_eq!(
            "cmd:python serve.py".parse(),
            Ok(PredictorSpec::Command("python serve.py".into()))
        );
        assert_eq!("./serve".parse(), Ok(PredictorSpec::Command("./serve".into())));
    }
}
