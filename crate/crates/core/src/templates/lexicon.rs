//! Gender lexicon: surface tokens mapped to slot kinds.
//!
//! The on-disk format is line oriented, one `token<TAB>slot_kind` entry per
//! line with optional gender and relation-form columns; see
//! `data/lexicon/en-default-1.tsv` for the annotated default.

use super::profile::Gender;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

const BUILTIN: &str = include_str!("../../data/lexicon/en-default-1.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SlotKind {
    /// First-mention descriptor noun phrase ("female", "patient").
    SubjectDesc,
    /// Sentence-initial subject reference ("She", "The patient").
    SubjectRef,
    PronNom,
    PronAcc,
    PronPoss,
    /// Gendered relational noun (wife, husband, mother, Mr.).
    Relation,
}

impl SlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotKind::SubjectDesc => "SUBJECT_DESC",
            SlotKind::SubjectRef => "SUBJECT_REF",
            SlotKind::PronNom => "PRON_NOM",
            SlotKind::PronAcc => "PRON_ACC",
            SlotKind::PronPoss => "PRON_POSS",
            SlotKind::Relation => "RELATION",
        }
    }
}

impl fmt::Display for SlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "SUBJECT_DESC" => SlotKind::SubjectDesc,
            "SUBJECT_REF" => SlotKind::SubjectRef,
            "PRON_NOM" => SlotKind::PronNom,
            "PRON_ACC" => SlotKind::PronAcc,
            "PRON_POSS" => SlotKind::PronPoss,
            "RELATION" => SlotKind::Relation,
            other => return Err(format!("unknown slot kind {other:?}")),
        })
    }
}

/// One reading of a lexicon token: a slot, or "leave the literal text".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SlotChoice {
    Slot(SlotKind),
    None,
}

impl From<SlotChoice> for String {
    fn from(c: SlotChoice) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for SlotChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "NONE" => Ok(SlotChoice::None),
            k => k.parse().map(SlotChoice::Slot),
        }
    }
}

impl fmt::Display for SlotChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotChoice::Slot(k) => k.fmt(f),
            SlotChoice::None => f.write_str("NONE"),
        }
    }
}

/// Surface forms of a relational noun, keyed by the profile's gender.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationForms {
    pub male: String,
    pub female: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Lowercased surface token.
    pub token: String,
    /// Non-empty; more than one entry means the token is ambiguous.
    pub candidates: Vec<SlotChoice>,
    pub gender: Option<Gender>,
    pub relation: Option<RelationForms>,
}

impl LexiconEntry {
    pub fn is_ambiguous(&self) -> bool {
        self.candidates.len() > 1
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("lexicon has no @version line")]
    MissingVersion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenderLexicon {
    version: String,
    entries: BTreeMap<String, LexiconEntry>,
}

impl GenderLexicon {
    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin lexicon parses")
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn lookup(&self, token: &str) -> Option<&LexiconEntry> {
        self.entries.get(&token.to_lowercase())
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    /// True when the token expresses a gender.
    pub fn is_gendered(&self, token: &str) -> bool {
        self.lookup(token).is_some_and(|e| e.gender.is_some())
    }

    pub fn parse(src: &str) -> Result<Self, LexiconError> {
        let mut version = None;
        let mut entries = BTreeMap::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| LexiconError::Line { line, message };
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols[0] == "@version" {
                let v = cols.get(1).map(|s| s.trim()).unwrap_or("");
                if v.is_empty() {
                    return Err(err("empty version".into()));
                }
                version = Some(v.to_string());
                continue;
            }
            if cols.len() < 2 {
                return Err(err(format!("expected token<TAB>slot_kind, got {trimmed:?}")));
            }
            let token = cols[0].trim().to_lowercase();
            if token.is_empty() {
                return Err(err("empty token".into()));
            }
            let mut candidates = Vec::new();
            for part in cols[1].split('|') {
                let choice = match part.trim() {
                    "NONE" => SlotChoice::None,
                    k => {
                        let kind: SlotKind = k.parse().map_err(err)?;
                        if kind == SlotKind::SubjectRef {
                            return Err(err(
                                "SUBJECT_REF is derived from sentence position; use PRON_NOM".into(),
                            ));
                        }
                        SlotChoice::Slot(kind)
                    }
                };
                if candidates.contains(&choice) {
                    return Err(err(format!("duplicate candidate {choice}")));
                }
                candidates.push(choice);
            }
            if candidates == [SlotChoice::None] {
                return Err(err("NONE cannot be the only candidate".into()));
            }
            let gender = match cols.get(2).map(|s| s.trim()) {
                None | Some("-") | Some("") => None,
                Some("M") => Some(Gender::Male),
                Some("F") => Some(Gender::Female),
                Some(other) => return Err(err(format!("gender must be M, F or -, got {other:?}"))),
            };
            let is_relation = candidates.contains(&SlotChoice::Slot(SlotKind::Relation));
            let relation = match cols.get(3).map(|s| s.trim()) {
                Some(forms) if !forms.is_empty() => {
                    if !is_relation {
                        return Err(err("relation forms given for a non-RELATION token".into()));
                    }
                    let parts: Vec<&str> = forms.split('|').map(str::trim).collect();
                    if parts.len() != 3 || parts[0].is_empty() || parts[1].is_empty() {
                        return Err(err(format!(
                            "forms must be male|female|neutral (neutral may be empty), got {forms:?}"
                        )));
                    }
                    Some(RelationForms {
                        male: parts[0].to_string(),
                        female: parts[1].to_string(),
                        neutral: (!parts[2].is_empty()).then(|| parts[2].to_string()),
                    })
                }
                _ if is_relation => return Err(err("RELATION token needs a forms column".into())),
                _ => None,
            };
            if cols.len() > 4 {
                return Err(err("too many columns".into()));
            }
            let entry = LexiconEntry {
                token: token.clone(),
                candidates,
                gender,
                relation,
            };
            if entries.insert(token.clone(), entry).is_some() {
                return Err(err(format!("duplicate token {token:?}")));
            }
        }
        Ok(Self {
            version: version.ok_or(LexiconError::MissingVersion)?,
            entries,
        })
    }
}
