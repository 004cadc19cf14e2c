//! The "patient" → "person" random-change baseline.

use crate::templates::Vignette;
use crate::text::{first_sentence_end, words};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandomChange {
    Applied(Vignette),
    /// The first sentence has no standalone "patient".
    Inapplicable,
}

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().all(|c| c.is_uppercase()) && original.chars().count() > 1 {
        replacement.to_uppercase()
    } else if original.starts_with(|c: char| c.is_uppercase()) {
        crate::text::capitalize_first(replacement)
    } else {
        replacement.to_string()
    }
}

/// Replace the first whole-word "patient" of the context's first sentence
/// with "person", keeping its case. Everything else is copied unchanged.
pub fn random_change(v: &Vignette) -> RandomChange {
    let end = first_sentence_end(&v.context);
    let hit = words(&v.context[..end]).find(|w| w.text.eq_ignore_ascii_case("patient"));
    match hit {
        Some(w) => {
            let mut context = String::with_capacity(v.context.len());
            context.push_str(&v.context[..w.start]);
            context.push_str(&match_case(w.text, "person"));
            context.push_str(&v.context[w.end..]);
            RandomChange::Applied(Vignette {
                context,
                ..v.clone()
            })
        }
        None => RandomChange::Inapplicable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(context: &str) -> Vignette {
        Vignette {
            id: "v".into(),
            context: context.into(),
            question: "What is the diagnosis?".into(),
            choices: ["a".into(), "b".into(), "c".into(), "d".into()],
            gold: 1,
        }
    }

    fn applied(context: &str) -> String {
        match random_change(&v(context)) {
            RandomChange::Applied(out) => {
                assert_eq!(out.question, "What is the diagnosis?");
                assert_eq!(out.gold, 1);
                out.context
            }
            RandomChange::Inapplicable => panic!("expected a replacement in {context:?}"),
        }
    }

    #[test]
    fn replaces_in_first_sentence() {
        assert_eq!(
            applied("A 23-year-old patient presents with fever. The patient is tired."),
            "A 23-year-old person presents with fever. The patient is tired."
        );
    }

    #[test]
    fn only_first_occurrence() {
        assert_eq!(
            applied("The patient, a patient advocate, reports pain."),
            "The person, a patient advocate, reports pain."
        );
    }

    #[test]
    fn case_preserved() {
        assert_eq!(applied("Patient is a 40-year-old."), "Person is a 40-year-old.");
    }

    #[test]
    fn later_sentences_are_decoys() {
        let ctx = "A 23-year-old male presents with fever. The patient is tired.";
        assert_eq!(random_change(&v(ctx)), RandomChange::Inapplicable);
    }

    #[test]
    fn substrings_do_not_count() {
        assert_eq!(random_change(&v("Outpatients and patients wait.")), RandomChange::Inapplicable);
        assert_eq!(applied("The patient's wife calls."), "The person's wife calls.");
    }

    #[test]
    fn abbreviation_does_not_end_sentence() {
        assert_eq!(
            applied("Seen by Dr. Smith, the patient reports pain. Another patient waits."),
            "Seen by Dr. Smith, the person reports pain. Another patient waits."
        );
    }
}
