use super::lexicon::{RelationForms, SlotChoice, SlotKind};
use serde::{Deserialize, Serialize};

/// A typed hole in a template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placeholder {
    pub kind: SlotKind,
    /// Render with an uppercase first letter (sentence-initial position).
    #[serde(default)]
    pub capitalized: bool,
    /// Token the slot replaced.
    pub original: String,
    /// Entity the slot refers to; 0 is the patient. Slots of any other
    /// entity render their original token unchanged.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub entity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationForms>,
    /// Unresolved alternative readings. Non-empty means `kind` is provisional.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<SlotChoice>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Text(String),
    Slot(Placeholder),
}

/// Vignette text with demographic tokens replaced by typed placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedTemplate {
    pub vignette_id: String,
    pub lexicon_version: String,
    pub context: Vec<Segment>,
    pub question: Vec<Segment>,
    /// Set by masking when a human has to look at the template before it
    /// is expanded. Reviewers clear it after editing.
    pub needs_review: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {id}: expected exactly one SUBJECT_DESC slot, found {found}")]
    SubjectDescCount { id: String, found: usize },
    #[error("template {id}: RELATION slot {original:?} carries no relation forms")]
    RelationWithoutForms { id: String, original: String },
}

impl MaskedTemplate {
    /// Template with the given literal text and no slots.
    pub fn literal(vignette_id: &str, lexicon_version: &str, context: &str, question: &str) -> Self {
        let seg = |s: &str| {
            if s.is_empty() {
                Vec::new()
            } else {
                vec![Segment::Text(s.to_string())]
            }
        };
        Self {
            vignette_id: vignette_id.to_string(),
            lexicon_version: lexicon_version.to_string(),
            context: seg(context),
            question: seg(question),
            needs_review: false,
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = &Placeholder> {
        self.context
            .iter()
            .chain(&self.question)
            .filter_map(|s| match s {
                Segment::Slot(p) => Some(p),
                Segment::Text(_) => None,
            })
    }

    pub fn slot_kinds(&self) -> Vec<SlotKind> {
        self.slots().map(|p| p.kind).collect()
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let found = self
            .slots()
            .filter(|p| p.kind == SlotKind::SubjectDesc && p.entity == 0)
            .count();
        if found != 1 {
            return Err(TemplateError::SubjectDescCount {
                id: self.vignette_id.clone(),
                found,
            });
        }
        if let Some(p) = self
            .slots()
            .find(|p| p.kind == SlotKind::Relation && p.relation.is_none())
        {
            return Err(TemplateError::RelationWithoutForms {
                id: self.vignette_id.clone(),
                original: p.original.clone(),
            });
        }
        Ok(())
    }

    /// Context with slots shown as `[KIND]` markers.
    pub fn display_context(&self) -> String {
        display(&self.context)
    }

    pub fn display_question(&self) -> String {
        display(&self.question)
    }
}

fn display(segments: &[Segment]) -> String {
    segments
        .iter()
        .map(|s| match s {
            Segment::Text(t) => t.clone(),
            Segment::Slot(p) => format!("[{}]", p.kind),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialized_shape() {
        let t = MaskedTemplate {
            vignette_id: "v1".into(),
            lexicon_version: "en-default-1".into(),
            context: vec![
                Segment::Text("A 23-year-old ".into()),
                Segment::Slot(Placeholder {
                    kind: SlotKind::SubjectDesc,
                    capitalized: false,
                    original: "female".into(),
                    entity: 0,
                    relation: None,
                    candidates: vec![],
                }),
                Segment::Text(" presents.".into()),
            ],
            question: vec![],
            needs_review: false,
        };
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"vignette_id":"v1","lexicon_version":"en-default-1","context":[{"text":"A 23-year-old "},{"slot":{"kind":"SUBJECT_DESC","capitalized":false,"original":"female"}},{"text":" presents."}],"question":[],"needs_review":false}"#
        );
        assert_eq!(serde_json::from_str::<MaskedTemplate>(&json).unwrap(), t);
        assert_eq!(t.display_context(), "A 23-year-old [SUBJECT_DESC] presents.");
        assert!(t.validate().is_ok());
    }

    #[test]
    fn literal_template_has_no_subject() {
        let t = MaskedTemplate::literal("x", "v", "The lab result shows elevated glucose.", "");
        assert_eq!(
            t.validate(),
            Err(TemplateError::SubjectDescCount { id: "x".into(), found: 0 })
        );
    }
}
