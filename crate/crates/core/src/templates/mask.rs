//! Lexicon-driven masking of demographic tokens.
//!
//! Every lexicon hit becomes a typed slot except where the reading is
//! uncertain. Ambiguous tokens ("her", "they") and repeated subject
//! descriptors are reported and the template is marked for review; masking
//! never picks a reading silently.

use super::lexicon::{GenderLexicon, LexiconEntry, SlotChoice, SlotKind};
use super::template::{MaskedTemplate, Placeholder, Segment};
use super::vignette::Vignette;
use crate::text::{is_sentence_start, words, Word};
use serde::{Deserialize, Serialize};
use std::fmt;

const SYNTHESIZED_SUBJECT: &str = "patient";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Context,
    Question,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Context => "context",
            Field::Question => "question",
        })
    }
}

/// One lexicon match in the raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskHit {
    pub field: Field,
    /// Byte offset of the token in the raw field text.
    pub offset: usize,
    pub token: String,
    /// Slot the token became; `None` when it was left as literal text.
    pub slot: Option<SlotKind>,
    /// The token expresses a gender.
    pub gendered: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<SlotChoice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum MaskIssue {
    /// Neither a descriptor token nor the word "patient" was found.
    NoSubjectSlot,
    /// No descriptor token; the first "patient" became the subject slot.
    SubjectSynthesized { field: Field, offset: usize },
    /// A second descriptor noun, left unmasked.
    RepeatedDescriptor {
        field: Field,
        offset: usize,
        token: String,
    },
    Ambiguous {
        field: Field,
        offset: usize,
        token: String,
        candidates: Vec<SlotChoice>,
    },
    /// An article directly precedes the subject slot; some fillers will
    /// read "a Asian" or "an Black". Not repaired.
    ArticleClash {
        field: Field,
        offset: usize,
        article: String,
    },
}

impl MaskIssue {
    pub fn needs_review(&self) -> bool {
        matches!(
            self,
            MaskIssue::NoSubjectSlot
                | MaskIssue::RepeatedDescriptor { .. }
                | MaskIssue::Ambiguous { .. }
        )
    }
}

impl fmt::Display for MaskIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskIssue::NoSubjectSlot => f.write_str("no subject slot found"),
            MaskIssue::SubjectSynthesized { field, offset } => {
                write!(f, "subject slot synthesized from \"patient\" ({field}@{offset})")
            }
            MaskIssue::RepeatedDescriptor { field, offset, token } => write!(
                f,
                "repeated subject descriptor {token:?} left unmasked ({field}@{offset})"
            ),
            MaskIssue::Ambiguous {
                field,
                offset,
                token,
                candidates,
            } => {
                let c: Vec<String> = candidates.iter().map(ToString::to_string).collect();
                write!(f, "ambiguous token {token:?} ({field}@{offset}): {}", c.join(" or "))
            }
            MaskIssue::ArticleClash {
                field,
                offset,
                article,
            } => write!(
                f,
                "article {article:?} directly precedes the subject slot ({field}@{offset})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskReport {
    pub vignette_id: String,
    pub lexicon_version: String,
    pub hits: Vec<MaskHit>,
    pub issues: Vec<MaskIssue>,
    pub needs_review: bool,
}

impl MaskReport {
    pub fn gendered_hits(&self) -> usize {
        self.hits.iter().filter(|h| h.gendered).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Masked {
    pub template: MaskedTemplate,
    pub report: MaskReport,
}

struct Scan<'l> {
    lexicon: &'l GenderLexicon,
    /// No descriptor token anywhere: the first "patient" becomes the subject.
    synthesize: bool,
    subject_found: bool,
    hits: Vec<MaskHit>,
    issues: Vec<MaskIssue>,
}

/// Resolve a word to a lexicon entry, trying the dotted form first so that
/// "Mr." matches before "Mr".
fn lookup<'l>(lexicon: &'l GenderLexicon, text: &str, w: Word<'_>) -> Option<(&'l LexiconEntry, usize)> {
    if text[w.end..].starts_with('.') {
        if let Some(e) = lexicon.lookup(&format!("{}.", w.text)) {
            return Some((e, w.end + 1));
        }
    }
    lexicon.lookup(w.text).map(|e| (e, w.end))
}

fn is_descriptor(entry: &LexiconEntry) -> bool {
    entry.candidates.first() == Some(&SlotChoice::Slot(SlotKind::SubjectDesc))
}

impl Scan<'_> {
    fn field(&mut self, text: &str, field: Field) -> Vec<Segment> {
        let mut segments = Vec::new();
        let mut cursor = 0;
        for w in words(text) {
            if w.start < cursor {
                continue;
            }
            let Some((slot, end)) = self.classify(text, field, w) else {
                continue;
            };
            if w.start > cursor {
                segments.push(Segment::Text(text[cursor..w.start].to_string()));
            }
            segments.push(Segment::Slot(slot));
            cursor = end;
        }
        if cursor < text.len() {
            segments.push(Segment::Text(text[cursor..].to_string()));
        }
        segments
    }

    /// Decide what happens to one word. Returns the placeholder and the
    /// byte offset where the replaced token ends.
    fn classify(&mut self, text: &str, field: Field, w: Word<'_>) -> Option<(Placeholder, usize)> {
        let sentence_initial = is_sentence_start(text, w.start);
        let Some((entry, end)) = lookup(self.lexicon, text, w) else {
            if self.synthesize && !self.subject_found && w.text.eq_ignore_ascii_case(SYNTHESIZED_SUBJECT) {
                self.subject_found = true;
                self.issues.push(MaskIssue::SubjectSynthesized { field, offset: w.start });
                self.check_article(text, field, w.start);
                return Some((
                    Placeholder {
                        kind: SlotKind::SubjectDesc,
                        capitalized: sentence_initial,
                        original: w.text.to_string(),
                        entity: 0,
                        relation: None,
                        candidates: vec![],
                    },
                    w.end,
                ));
            }
            return None;
        };
        let token = &text[w.start..end];
        let gendered = entry.gender.is_some();
        let ambiguous = entry.is_ambiguous();
        if ambiguous {
            self.issues.push(MaskIssue::Ambiguous {
                field,
                offset: w.start,
                token: token.to_string(),
                candidates: entry.candidates.clone(),
            });
        }
        let kind = match entry.candidates[0] {
            SlotChoice::None => None,
            SlotChoice::Slot(SlotKind::SubjectDesc) if self.subject_found => {
                self.issues.push(MaskIssue::RepeatedDescriptor {
                    field,
                    offset: w.start,
                    token: token.to_string(),
                });
                None
            }
            SlotChoice::Slot(SlotKind::SubjectDesc) => {
                self.subject_found = true;
                self.check_article(text, field, w.start);
                Some(SlotKind::SubjectDesc)
            }
            SlotChoice::Slot(SlotKind::PronNom) if sentence_initial => Some(SlotKind::SubjectRef),
            SlotChoice::Slot(k) => Some(k),
        };
        self.hits.push(MaskHit {
            field,
            offset: w.start,
            token: token.to_string(),
            slot: kind,
            gendered,
            candidates: if ambiguous { entry.candidates.clone() } else { vec![] },
        });
        let kind = kind?;
        Some((
            Placeholder {
                kind,
                capitalized: sentence_initial,
                original: token.to_string(),
                entity: 0,
                relation: if kind == SlotKind::Relation {
                    entry.relation.clone()
                } else {
                    None
                },
                candidates: if ambiguous { entry.candidates.clone() } else { vec![] },
            },
            end,
        ))
    }

    fn check_article(&mut self, text: &str, field: Field, slot_start: usize) {
        let before = &text[..slot_start];
        if !before.ends_with(char::is_whitespace) {
            return;
        }
        let Some(prev) = words(before).last() else {
            return;
        };
        if !before[prev.end..].trim().is_empty() {
            return;
        }
        if prev.text.eq_ignore_ascii_case("a") || prev.text.eq_ignore_ascii_case("an") {
            self.issues.push(MaskIssue::ArticleClash {
                field,
                offset: prev.start,
                article: prev.text.to_string(),
            });
        }
    }
}

/// Mask one raw vignette against a lexicon.
pub fn mask(raw: &Vignette, lexicon: &GenderLexicon) -> Masked {
    let has_descriptor = [&raw.context, &raw.question].iter().any(|text| {
        words(text).any(|w| lookup(lexicon, text, w).is_some_and(|(e, _)| is_descriptor(e)))
    });
    let mut scan = Scan {
        lexicon,
        synthesize: !has_descriptor,
        subject_found: false,
        hits: Vec::new(),
        issues: Vec::new(),
    };
    let context = scan.field(&raw.context, Field::Context);
    let question = scan.field(&raw.question, Field::Question);
    if !scan.subject_found {
        scan.issues.insert(0, MaskIssue::NoSubjectSlot);
    }
    let needs_review = scan.issues.iter().any(MaskIssue::needs_review);
    Masked {
        template: MaskedTemplate {
            vignette_id: raw.id.clone(),
            lexicon_version: lexicon.version().to_string(),
            context,
            question,
            needs_review,
        },
        report: MaskReport {
            vignette_id: raw.id.clone(),
            lexicon_version: lexicon.version().to_string(),
            hits: scan.hits,
            issues: scan.issues,
            needs_review,
        },
    }
}
