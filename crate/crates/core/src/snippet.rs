//! Partial-sentence snippets with highlight offsets.
//!
//! The window is laid around the first match: `window / 2` bytes to the left
//! of its start and to the right of its end. Each side is then cut at the
//! nearest sentence boundary inside the window when there is one (the snippet
//! starts at the beginning of a sentence, or ends on its terminator), and
//! otherwise pulled inward to a whole word. A side that already reaches the
//! edge of the page is left alone.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 150;
pub const MIN_WINDOW: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snippet {
    pub text: String,
    /// Byte ranges into `text`.
    pub highlights: Vec<(usize, usize)>,
    #[serde(skip)]
    pub page_byte_origin: usize,
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

// `.`, `!` or `?` at `i` followed by whitespace or end of text.
fn sentence_end_at(text: &str, i: usize, c: char) -> bool {
    is_terminator(c)
        && text[i + c.len_utf8()..]
            .chars()
            .next()
            .is_none_or(char::is_whitespace)
}

fn ceil_char_boundary(text: &str, mut i: usize) -> usize {
    while !text.is_char_boundary(i) {
        i += 1;
    }
    i
}

fn floor_char_boundary(text: &str, mut i: usize) -> usize {
    while !text.is_char_boundary(i) {
        i -= 1;
    }
    i
}

fn skip_whitespace(text: &str, from: usize, limit: usize) -> usize {
    text[from..limit]
        .char_indices()
        .find(|(_, c)| !c.is_whitespace())
        .map_or(limit, |(i, _)| from + i)
}

fn left_edge(text: &str, lo: usize, anchor: usize) -> usize {
    if lo == 0 {
        return 0;
    }
    let lo = ceil_char_boundary(text, lo).min(anchor);
    let region = &text[lo..anchor];

    let sentence_start = region
        .char_indices()
        .rfind(|&(i, c)| sentence_end_at(text, lo + i, c))
        .map(|(i, c)| lo + i + c.len_utf8());
    if let Some(after) = sentence_start {
        return skip_whitespace(text, after, anchor);
    }

    let at_word_start = text[..lo].chars().next_back().is_some_and(char::is_whitespace)
        && !text[lo..].starts_with(char::is_whitespace);
    if at_word_start {
        return lo;
    }
    match region.char_indices().find(|(_, c)| c.is_whitespace()) {
        Some((i, _)) => skip_whitespace(text, lo + i, anchor),
        None => anchor,
    }
}

fn right_edge(text: &str, hi: usize, anchor: usize) -> usize {
    if hi >= text.len() {
        return text.len();
    }
    let hi = floor_char_boundary(text, hi).max(anchor);
    let region = &text[anchor..hi];

    if let Some((i, c)) = region
        .char_indices()
        .find(|&(i, c)| sentence_end_at(text, anchor + i, c))
    {
        return anchor + i + c.len_utf8();
    }

    let cut = if text[hi..].starts_with(char::is_whitespace) {
        hi
    } else {
        match region.char_indices().rev().find(|(_, c)| c.is_whitespace()) {
            Some((i, _)) => anchor + i,
            None => return anchor,
        }
    };
    anchor + text[anchor..cut].trim_end().len()
}

/// Cuts a snippet around the first of `match_spans` and re-bases every span
/// that lies fully inside it.
pub fn extract_snippet(
    page_text: &str,
    match_spans: &[(usize, usize)],
    window: usize,
) -> Result<Snippet> {
    if window < MIN_WINDOW {
        return Err(Error::Snippet(format!("window {window} below minimum {MIN_WINDOW}")));
    }
    let Some(&(first_start, first_end)) = match_spans.first() else {
        return Err(Error::Snippet("no match spans".into()));
    };
    let mut prev_end = 0;
    for &(s, e) in match_spans {
        if s >= e || e > page_text.len() {
            return Err(Error::Snippet(format!("span {s}..{e} out of bounds")));
        }
        if !page_text.is_char_boundary(s) || !page_text.is_char_boundary(e) {
            return Err(Error::Snippet(format!("span {s}..{e} splits a character")));
        }
        if s < prev_end {
            return Err(Error::Snippet(format!("span {s}..{e} out of order")));
        }
        prev_end = e;
    }

    let half = window / 2;
    let start = left_edge(page_text, first_start.saturating_sub(half), first_start);
    let end = right_edge(page_text, first_end.saturating_add(half), first_end);

    let highlights = match_spans
        .iter()
        .filter(|&&(s, e)| s >= start && e <= end)
        .map(|&(s, e)| (s - start, e - start))
        .collect();
    Ok(Snippet {
        text: page_text[start..end].to_string(),
        highlights,
        page_byte_origin: start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span_of(text: &str, needle: &str) -> (usize, usize) {
        let s = text.find(needle).unwrap();
        (s, s + needle.len())
    }

    #[test]
    fn whole_short_sentence() {
        let text = "The critical mass of a star.";
        let sn = extract_snippet(text, &[span_of(text, "critical mass")], 150).unwrap();
        assert_eq!(sn.text, text);
        assert_eq!(sn.highlights, vec![(4, 17)]);
        assert_eq!(sn.page_byte_origin, 0);
    }

    #[test]
    fn match_at_start_of_tiny_page() {
        let text = "Pluto orbs";
        let sn = extract_snippet(text, &[(0, 5)], 150).unwrap();
        assert_eq!(sn.text, text);
        assert_eq!(sn.page_byte_origin, 0);
    }

    #[test]
    fn distant_second_match_is_excluded() {
        let mut text = String::from("alpha pluto beta. ");
        while text.len() < 1000 {
            text.push_str("filler words here ");
        }
        let second = text.len();
        text.push_str("pluto again.");
        let sn = extract_snippet(&text, &[(6, 11), (second, second + 5)], 150).unwrap();
        assert_eq!(sn.highlights.len(), 1);
        assert_eq!(&sn.text[sn.highlights[0].0..sn.highlights[0].1], "pluto");
    }

    #[test]
    fn cuts_at_sentence_boundaries_inside_window() {
        let text = "Earlier remarks end here. Professor Eddington spoke of a critical mass \
                    for stars. Later text continues on and on without end in sight";
        let m = span_of(text, "critical");
        let sn = extract_snippet(text, &[m], 100).unwrap();
        assert_eq!(sn.text, "Professor Eddington spoke of a critical mass for stars.");
        assert_eq!(sn.page_byte_origin, text.find("Professor").unwrap());
        assert_eq!(&sn.text[sn.highlights[0].0..sn.highlights[0].1], "critical");
    }

    #[test]
    fn trims_to_words_without_sentence_boundary() {
        let words: Vec<String> = (0..60).map(|i| format!("w{i:02}")).collect();
        let text = words.join(" ");
        let m = span_of(&text, "w30");
        let sn = extract_snippet(&text, &[m], 40).unwrap();
        // "w30" sits at 120..123; the raw window 100..143 lands on word edges
        assert_eq!(sn.text, "w25 w26 w27 w28 w29 w30 w31 w32 w33 w34 w35");
        let sn = extract_snippet(&text, &[m], 44).unwrap();
        // 98..145 cuts "w24" and "w36" mid-word, so both are dropped
        assert_eq!(sn.text, "w25 w26 w27 w28 w29 w30 w31 w32 w33 w34 w35");
        assert!(!sn.text.starts_with(' ') && !sn.text.ends_with(' '));
    }

    #[test]
    fn never_splits_multibyte_characters() {
        let text = "ééééééééééééééééééééééé étoile ééééééééééééééééééééééééééé";
        let m = span_of(text, "étoile");
        let sn = extract_snippet(text, &[m], 32).unwrap();
        assert_eq!(sn.text, "étoile");
    }

    #[test]
    fn contract_violations() {
        let text = "abc def";
        assert!(extract_snippet(text, &[], 150).is_err());
        assert!(extract_snippet(text, &[(4, 99)], 150).is_err());
        assert!(extract_snippet(text, &[(4, 7), (0, 3)], 150).is_err());
        assert!(extract_snippet(text, &[(0, 3)], 16).is_err());
        assert!(extract_snippet("é", &[(0, 1)], 150).is_err());
    }

    #[test]
    fn snippet_is_substring_at_origin() {
        let text = "One. Two three four five six seven eight nine ten eleven twelve. Thirteen";
        for needle in ["One", "six", "twelve", "Thirteen"] {
            let m = span_of(text, needle);
            let sn = extract_snippet(text, &[m], 32).unwrap();
            assert_eq!(&text[sn.page_byte_origin..sn.page_byte_origin + sn.text.len()], sn.text);
            assert_eq!(sn.highlights.len(), 1, "{needle}: {:?}", sn.text);
        }
    }
}
