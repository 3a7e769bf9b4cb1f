//! Tokenization of dirty OCR text and synonym groups.
//!
//! Words are whitespace-delimited. Leading and trailing characters that are
//! neither letters nor digits are stripped; a word that strips to nothing is
//! dropped and consumes no position. Every surviving word gets the next
//! position, even when it is not indexable, so that phrase adjacency never
//! bridges over numbers or OCR garbage.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

pub const MIN_TERM_CHARS: usize = 2;
pub const MAX_TERM_CHARS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub term: String,
    pub position: u32,
    pub byte_start: usize,
    pub byte_end: usize,
    pub indexable: bool,
}

#[inline]
fn is_letter(c: char) -> bool {
    c.is_alphabetic()
}

#[inline]
fn is_digit(c: char) -> bool {
    c.is_ascii_digit()
}

#[inline]
fn is_word_char(c: char) -> bool {
    is_letter(c) || is_digit(c)
}

/// Case-folds a term. Applied to index terms, query words and synonym files alike.
pub fn fold(word: &str) -> String {
    word.chars().flat_map(char::to_lowercase).collect()
}

/// Strips leading/trailing non-letter, non-digit characters and folds case.
/// Returns `None` when nothing is left.
pub fn normalize_word(word: &str) -> Option<String> {
    let stripped = word.trim_matches(|c: char| !is_word_char(c));
    (!stripped.is_empty()).then(|| fold(stripped))
}

/// True when the word carries characters typical of OCR misrecognition.
///
/// A word is spurious when it holds any character other than a letter, a
/// decimal digit, `-` or `'`, or when it switches between letters and digits
/// two or more times ("l0ng3r"). A single switch ("m31", "3c273" is two) is
/// allowed so that catalog designations survive.
pub fn is_spurious(word: &str) -> bool {
    let mut alternations = 0;
    let mut last_was_digit: Option<bool> = None;
    for c in word.chars() {
        if c == '-' || c == '\'' {
            continue;
        }
        let digit = if is_digit(c) {
            true
        } else if is_letter(c) {
            false
        } else {
            return true;
        };
        if let Some(prev) = last_was_digit {
            if prev != digit {
                alternations += 1;
            }
        }
        last_was_digit = Some(digit);
    }
    alternations >= 2
}

fn is_number(word: &str) -> bool {
    !word.is_empty() && word.chars().all(is_digit)
}

/// Whether a case-folded, stripped term may enter the index.
pub fn is_indexable(term: &str) -> bool {
    let len = term.chars().count();
    (MIN_TERM_CHARS..=MAX_TERM_CHARS).contains(&len) && !is_number(term) && !is_spurious(term)
}

/// Splits page text into tokens with byte offsets into `text`.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for_each_token(text, |t| tokens.push(t));
    tokens
}

/// Streaming form of [`tokenize`].
pub fn for_each_token(text: &str, mut f: impl FnMut(Token)) {
    let mut position = 0u32;
    for (word_start, word) in split_words(text) {
        let lead = word.len() - word.trim_start_matches(|c: char| !is_word_char(c)).len();
        let core = word.trim_matches(|c: char| !is_word_char(c));
        if core.is_empty() {
            continue;
        }
        let term = fold(core);
        let indexable = is_indexable(&term);
        let byte_start = word_start + lead;
        f(Token {
            term,
            position,
            byte_start,
            byte_end: byte_start + core.len(),
            indexable,
        });
        position += 1;
    }
}

fn split_words(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = text.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some(&(_, c)) = rest.peek() {
            if !c.is_whitespace() {
                break;
            }
            rest.next();
        }
        let (start, _) = *rest.peek()?;
        let mut end = text.len();
        while let Some(&(i, c)) = rest.peek() {
            if c.is_whitespace() {
                end = i;
                break;
            }
            rest.next();
        }
        Some((start, &text[start..end]))
    })
}

/// Disjoint groups of interchangeable words.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    groups: Vec<BTreeSet<String>>,
    lookup: HashMap<String, usize>,
    // source line per group, for overlap diagnostics
    lines: Vec<usize>,
}

impl PartialEq for SynonymTable {
    fn eq(&self, other: &Self) -> bool {
        self.groups == other.groups
    }
}

impl Eq for SynonymTable {}

impl SynonymTable {
    /// Builds a table from groups, folding every word. Fails if a word appears in two groups.
    pub fn from_groups<I, G, S>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = SynonymTable::default();
        for (i, group) in groups.into_iter().enumerate() {
            let words = group.into_iter().map(|w| fold(w.as_ref())).collect();
            table.push_group(words, i + 1)?;
        }
        Ok(table)
    }

    fn push_group(&mut self, words: BTreeSet<String>, line: usize) -> Result<()> {
        if words.is_empty() {
            return Ok(());
        }
        let id = self.groups.len();
        for w in &words {
            if let Some(&other) = self.lookup.get(w) {
                return Err(Error::SynonymOverlap {
                    word: w.clone(),
                    first_line: self.line_of(other),
                    second_line: line,
                });
            }
        }
        for w in &words {
            self.lookup.insert(w.clone(), id);
        }
        self.groups.push(words);
        self.lines.push(line);
        Ok(())
    }

    fn line_of(&self, group: usize) -> usize {
        self.lines.get(group).copied().unwrap_or(group + 1)
    }

    pub fn groups(&self) -> &[BTreeSet<String>] {
        &self.groups
    }

    pub fn group_of(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.lookup.get(word).map(|&g| &self.groups[g])
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Parses synonym-file text: one group per line, words separated by
    /// single spaces, `#` lines are comments, blank lines are ignored.
    pub fn parse(src: &str) -> Result<Self> {
        let mut table = SynonymTable::default();
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut words = BTreeSet::new();
            for w in raw.split(' ') {
                if w.is_empty() {
                    return Err(Error::SynonymSyntax {
                        line,
                        message: "words must be separated by single spaces".into(),
                    });
                }
                if w.starts_with('#') {
                    return Err(Error::SynonymSyntax {
                        line,
                        message: format!("word '{w}' starts with '#'"),
                    });
                }
                if w.chars().any(char::is_whitespace) {
                    return Err(Error::SynonymSyntax {
                        line,
                        message: format!("word '{w}' contains whitespace"),
                    });
                }
                words.insert(fold(w));
            }
            table.push_group(words, line)?;
        }
        Ok(table)
    }

    /// Canonical text form: groups in table order, words sorted, one group per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let words: Vec<&str> = g.iter().map(String::as_str).collect();
            out.push_str(&words.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Loads a synonym file.
pub fn load_synonyms(path: &Path) -> Result<SynonymTable> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SynonymTable::parse(&src)
}

/// Expands a folded query word to the set of words it should match.
pub fn expand(term: &str, exact: bool, table: &SynonymTable) -> BTreeSet<String> {
    if exact {
        return BTreeSet::from([term.to_string()]);
    }
    match table.group_of(term) {
        Some(group) => group.clone(),
        None => BTreeSet::from([term.to_string()]),
    }
}
