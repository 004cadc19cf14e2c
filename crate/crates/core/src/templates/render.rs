//! Profile rendering.
//!
//! The subject descriptor is composed as
//! `[orientation] [ethnicity] CORE [named NAME]`, where CORE is the gender
//! word when the profile has one and "patient" otherwise. Verb agreement and
//! articles are left exactly as the template has them.

use super::lexicon::SlotKind;
use super::profile::{Gender, Profile};
use super::template::{MaskedTemplate, Placeholder, Segment};
use crate::text::capitalize_first;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedText {
    pub context: String,
    pub question: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("template {vignette_id}: RELATION slot {original:?} has no neutral form configured")]
    MissingNeutralForm { vignette_id: String, original: String },
    #[error("template {vignette_id}: RELATION slot {original:?} has no relation forms")]
    MissingRelationForms { vignette_id: String, original: String },
}

/// The descriptor noun phrase for a profile.
pub fn subject_descriptor(p: &Profile) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(5);
    if let Some(o) = p.sexual_orientation {
        parts.push(o.as_str());
    }
    if let Some(e) = p.ethnicity {
        parts.push(e.as_str());
    }
    parts.push(p.gender.map_or("patient", Gender::as_str));
    let mut out = parts.join(" ");
    if let Some(name) = &p.name {
        out.push_str(" named ");
        out.push_str(name);
    }
    out
}

fn pronoun(kind: SlotKind, gender: Option<Gender>) -> &'static str {
    match (kind, gender) {
        (SlotKind::SubjectRef, Some(Gender::Male)) | (SlotKind::PronNom, Some(Gender::Male)) => "he",
        (SlotKind::SubjectRef, Some(Gender::Female)) | (SlotKind::PronNom, Some(Gender::Female)) => "she",
        (SlotKind::SubjectRef, None) => "the patient",
        (SlotKind::PronNom, None) => "they",
        (SlotKind::PronAcc, Some(Gender::Male)) => "him",
        (SlotKind::PronAcc, Some(Gender::Female)) => "her",
        (SlotKind::PronAcc, None) => "them",
        (SlotKind::PronPoss, Some(Gender::Male)) => "his",
        (SlotKind::PronPoss, Some(Gender::Female)) => "her",
        (SlotKind::PronPoss, None) => "their",
        (SlotKind::SubjectDesc | SlotKind::Relation, _) => unreachable!("not a pronoun slot"),
    }
}

fn fill(slot: &Placeholder, p: &Profile, vignette_id: &str) -> Result<String, RenderError> {
    if slot.entity != 0 {
        return Ok(slot.original.clone());
    }
    let text = match slot.kind {
        SlotKind::SubjectDesc => subject_descriptor(p),
        SlotKind::Relation => {
            let forms = slot
                .relation
                .as_ref()
                .ok_or_else(|| RenderError::MissingRelationForms {
                    vignette_id: vignette_id.to_string(),
                    original: slot.original.clone(),
                })?;
            match p.gender {
                Some(Gender::Male) => forms.male.clone(),
                Some(Gender::Female) => forms.female.clone(),
                None => forms
                    .neutral
                    .clone()
                    .ok_or_else(|| RenderError::MissingNeutralForm {
                        vignette_id: vignette_id.to_string(),
                        original: slot.original.clone(),
                    })?,
            }
        }
        kind => pronoun(kind, p.gender).to_string(),
    };
    Ok(if slot.capitalized {
        capitalize_first(&text)
    } else {
        text
    })
}

pub fn render_segments(segments: &[Segment], p: &Profile, vignette_id: &str) -> Result<String, RenderError> {
    let mut out = String::new();
    for seg in segments {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot(slot) => out.push_str(&fill(slot, p, vignette_id)?),
        }
    }
    Ok(out)
}

/// Render a template under a profile. Pure and deterministic.
pub fn render(t: &MaskedTemplate, p: &Profile) -> Result<RenderedText, RenderError> {
    Ok(RenderedText {
        context: render_segments(&t.context, p, &t.vignette_id)?,
        question: render_segments(&t.question, p, &t.vignette_id)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::lexicon::GenderLexicon;
    use crate::templates::mask::mask;
    use crate::templates::profile::{Ethnicity, SexualOrientation};
    use crate::templates::vignette::Vignette;

    fn template(context: &str) -> MaskedTemplate {
        let v = Vignette {
            id: "v".into(),
            context: context.into(),
            question: String::new(),
            choices: ["a".into(), "b".into(), "c".into(), "d".into()],
            gold: 0,
        };
        mask(&v, &GenderLexicon::builtin()).template
    }

    #[test]
    fn descriptor_ordering() {
        let p = Profile::default()
            .with_orientation(SexualOrientation::Homosexual)
            .with_ethnicity(Ethnicity::Asian)
            .with_gender(Gender::Male)
            .with_name("Tom");
        assert_eq!(subject_descriptor(&p), "homosexual Asian male named Tom");
        assert_eq!(subject_descriptor(&Profile::default()), "patient");
    }

    #[test]
    fn relation_forms_follow_profile_gender() {
        let t = template("He reports that his wife is worried.");
        let r = |p: &Profile| render(&t, p).unwrap().context;
        assert_eq!(r(&Profile::default()), "The patient reports that their spouse is worried.");
        assert_eq!(
            r(&Profile::default().with_gender(Gender::Female)),
            "She reports that her husband is worried."
        );
        assert_eq!(
            r(&Profile::default().with_gender(Gender::Male)),
            "He reports that his wife is worried."
        );
    }

    #[test]
    fn missing_neutral_form_names_the_slot() {
        let lex = GenderLexicon::parse(
            "@version\tt\nwoman\tSUBJECT_DESC\tF\nfiance\tRELATION\tM\tfiancee|fiance|\n",
        )
        .unwrap();
        let v = Vignette {
            id: "v9".into(),
            context: "A woman and her fiance arrive.".into(),
            question: String::new(),
            choices: ["a".into(), "b".into(), "c".into(), "d".into()],
            gold: 0,
        };
        let t = mask(&v, &lex).template;
        assert_eq!(
            render(&t, &Profile::default()),
            Err(RenderError::MissingNeutralForm {
                vignette_id: "v9".into(),
                original: "fiance".into()
            })
        );
        assert!(render(&t, &Profile::default().with_gender(Gender::Male)).is_ok());
    }

    #[test]
    fn other_entities_keep_their_tokens() {
        let mut t = template("A 23-year-old female says her husband is ill.");
        for seg in t.context.iter_mut() {
            if let Segment::Slot(p) = seg {
                if p.kind == SlotKind::Relation {
                    p.entity = 1;
                }
            }
        }
        assert_eq!(
            render(&t, &Profile::default()).unwrap().context,
            "A 23-year-old patient says them husband is ill."
        );
    }

    #[test]
    fn capitalized_descriptor() {
        let t = template("Woman, 40, presents with cough.");
        assert_eq!(
            render(&t, &Profile::default().with_ethnicity(Ethnicity::Black)).unwrap().context,
            "Black patient, 40, presents with cough."
        );
    }
}
