//! Plain-text helpers shared by masking and the random-change baseline.
//!
//! Sentence boundaries are a period, question mark or exclamation mark
//! followed by whitespace, except after a known abbreviation ("Mr.",
//! "e.g.", ...).

/// Lowercased abbreviations (without the final period) that never end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "mx", "dr", "st", "vs", "jr", "sr", "no", "fig", "approx", "etc", "e.g",
    "i.e", "inc", "prof",
];

/// A maximal run of alphabetic characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Word<'a> {
    pub start: usize,
    pub end: usize,
    pub text: &'a str,
}

/// Iterate over the alphabetic words of `text` with byte offsets.
pub fn words(text: &str) -> impl Iterator<Item = Word<'_>> {
    let mut chars = text.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some(&(_, c)) = chars.peek() {
            if c.is_alphabetic() {
                break;
            }
            chars.next();
        }
        let &(start, _) = chars.peek()?;
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if !c.is_alphabetic() {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        Some(Word {
            start,
            end,
            text: &text[start..end],
        })
    })
}

/// True when the period at byte `dot` terminates an abbreviation.
fn is_abbreviation_dot(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let token_start = before
        .rfind(|c: char| c.is_whitespace() || "([\"'“‘".contains(c))
        .map(|i| i + before[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let token = before[token_start..].to_ascii_lowercase();
    !token.is_empty() && ABBREVIATIONS.contains(&token.as_str())
}

fn is_terminator(text: &str, idx: usize, c: char) -> bool {
    match c {
        '?' | '!' => true,
        '.' => !is_abbreviation_dot(text, idx),
        _ => false,
    }
}

/// Whether position `pos` begins a sentence: only whitespace or opening
/// punctuation separates it from the start of the text or from a sentence
/// terminator.
pub fn is_sentence_start(text: &str, pos: usize) -> bool {
    let before = &text[..pos];
    let mut saw_space = false;
    for (i, c) in before.char_indices().rev() {
        if c.is_whitespace() {
            saw_space = true;
            continue;
        }
        if "([\"'“‘".contains(c) {
            continue;
        }
        return saw_space && is_terminator(text, i, c);
    }
    true
}

/// Byte offset just past the first sentence's terminator, or `text.len()`
/// when the text is a single sentence.
pub fn first_sentence_end(text: &str) -> usize {
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        let followed_by_space = iter.peek().is_none_or(|&(_, n)| n.is_whitespace());
        if followed_by_space && is_terminator(text, i, c) {
            return i + c.len_utf8();
        }
    }
    text.len()
}

/// Uppercase the first character of `s`.
pub fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_split_on_non_letters() {
        let got: Vec<_> = words("A 23-year-old patient's wife.").map(|w| w.text).collect();
        assert_eq!(got, ["A", "year", "old", "patient", "s", "wife"]);
        let w = words("  he").next().unwrap();
        assert_eq!((w.start, w.end), (2, 4));
    }

    #[test]
    fn sentence_starts() {
        let t = "A woman presents. She reports pain. Mr. Smith is here.";
        assert!(is_sentence_start(t, 0));
        assert!(is_sentence_start(t, t.find("She").unwrap()));
        assert!(!is_sentence_start(t, t.find("reports").unwrap()));
        assert!(is_sentence_start(t, t.find("Mr.").unwrap()));
        assert!(!is_sentence_start(t, t.find("Smith").unwrap()));
        assert!(is_sentence_start("\"He left.\" \"She stayed", 1));
    }

    #[test]
    fn first_sentence_respects_abbreviations() {
        let t = "Dr. Jones sees a patient. The patient is well.";
        assert_eq!(&t[..first_sentence_end(t)], "Dr. Jones sees a patient.");
        assert_eq!(first_sentence_end("no terminator"), 13);
        assert_eq!(first_sentence_end("Dose was 2.5 mg daily. Next."), 22);
        assert_eq!(first_sentence_end("Is it? Yes."), 6);
    }

    #[test]
    fn capitalize() {
        assert_eq!(capitalize_first("the patient"), "The patient");
        assert_eq!(capitalize_first(""), "");
    }
}
