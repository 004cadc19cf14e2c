use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::BufRead;

/// A curated base question with exactly four answer choices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vignette {
    pub id: String,
    pub context: String,
    pub question: String,
    pub choices: [String; 4],
    pub gold: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum VignetteError {
    #[error("vignette {id}: gold index {gold} is outside 0..=3")]
    GoldOutOfRange { id: String, gold: u8 },
    #[error("vignette with empty id")]
    EmptyId,
    #[error("duplicate vignette id {0}")]
    DuplicateId(String),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Vignette {
    pub fn validate(&self) -> Result<(), VignetteError> {
        if self.id.is_empty() {
            return Err(VignetteError::EmptyId);
        }
        if self.gold > 3 {
            return Err(VignetteError::GoldOutOfRange {
                id: self.id.clone(),
                gold: self.gold,
            });
        }
        Ok(())
    }
}

/// Check every vignette and id uniqueness across the set.
pub fn validate_set(vignettes: &[Vignette]) -> Result<(), VignetteError> {
    let mut seen = HashSet::new();
    for v in vignettes {
        v.validate()?;
        if !seen.insert(v.id.as_str()) {
            return Err(VignetteError::DuplicateId(v.id.clone()));
        }
    }
    Ok(())
}

/// Read one vignette per line (blank lines skipped).
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<Vignette>, VignetteError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vignette =
            serde_json::from_str(&line).map_err(|source| VignetteError::Parse { line: i + 1, source })?;
        out.push(v);
    }
    validate_set(&out)?;
    Ok(out)
}
