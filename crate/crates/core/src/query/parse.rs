use std::fmt;

use crate::error::QueryError;
use crate::textprep::normalize_word;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryWord {
    pub word: String,
    /// `=`-prefixed: match this spelling only, no synonyms.
    pub exact: bool,
}

impl QueryWord {
    pub fn new(word: impl Into<String>, exact: bool) -> Self {
        QueryWord {
            word: word.into(),
            exact,
        }
    }
}

impl fmt::Display for QueryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact {
            f.write_str("=")?;
        }
        f.write_str(&self.word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Term(QueryWord),
    /// Two or more words that must occur at consecutive positions.
    Phrase(Vec<QueryWord>),
}

impl Atom {
    pub fn words(&self) -> &[QueryWord] {
        match self {
            Atom::Term(w) => std::slice::from_ref(w),
            Atom::Phrase(ws) => ws,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Term(w) => write!(f, "{w}"),
            Atom::Phrase(ws) => {
                f.write_str("\"")?;
                for (i, w) in ws.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str("\"")
            }
        }
    }
}

/// A conjunction of atoms; every atom must match a page.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryAst {
    atoms: Vec<Atom>,
}

impl QueryAst {
    /// Builds an AST from atoms, collapsing one-word phrases to terms.
    pub fn new(atoms: Vec<Atom>) -> Result<Self, QueryError> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter_map(|a| match a {
                Atom::Phrase(mut ws) if ws.len() == 1 => Some(Atom::Term(ws.remove(0))),
                Atom::Phrase(ws) if ws.is_empty() => None,
                other => Some(other),
            })
            .collect();
        if atoms.is_empty() {
            return Err(QueryError::EmptyQuery);
        }
        Ok(QueryAst { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// Renders back to query syntax; `parse_query(ast.to_string()) == ast`.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn push_word(raw: &mut String, into: &mut Vec<QueryWord>) {
    if raw.is_empty() {
        return;
    }
    let exact = raw.starts_with('=');
    if let Some(word) = normalize_word(raw) {
        into.push(QueryWord { word, exact });
    }
    raw.clear();
}

fn close_phrase(words: Vec<QueryWord>, atoms: &mut Vec<Atom>) {
    match words.len() {
        0 => {}
        1 => atoms.push(Atom::Term(words.into_iter().next().unwrap())),
        _ => atoms.push(Atom::Phrase(words)),
    }
}

/// Parses whitespace-separated words, `"quoted phrases"` and `=exact` words.
///
/// Words are stripped of enclosing punctuation and case-folded exactly like
/// page text. Words that strip to nothing are dropped.
pub fn parse_query(input: &str) -> Result<QueryAst, QueryError> {
    let mut atoms = Vec::new();
    let mut raw = String::new();
    let mut loose = Vec::new();
    let mut phrase: Option<(usize, Vec<QueryWord>)> = None;

    for (col, c) in input.chars().enumerate() {
        if c == '"' {
            match phrase.take() {
                Some((_, mut words)) => {
                    push_word(&mut raw, &mut words);
                    close_phrase(words, &mut atoms);
                }
                None => {
                    push_word(&mut raw, &mut loose);
                    atoms.extend(loose.drain(..).map(Atom::Term));
                    phrase = Some((col + 1, Vec::new()));
                }
            }
        } else if c.is_whitespace() {
            match &mut phrase {
                Some((_, words)) => push_word(&mut raw, words),
                None => {
                    push_word(&mut raw, &mut loose);
                    atoms.extend(loose.drain(..).map(Atom::Term));
                }
            }
        } else {
            raw.push(c);
        }
    }
    if let Some((column, _)) = phrase {
        return Err(QueryError::UnbalancedQuote { column });
    }
    push_word(&mut raw, &mut loose);
    atoms.extend(loose.drain(..).map(Atom::Term));
    QueryAst::new(atoms)
}
