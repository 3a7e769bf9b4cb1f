//! Full-scan reference matcher and random query generation.
//!
//! The scanner re-tokenizes every page and applies the match definition
//! literally, without touching the index. `oracle-check` and the tests compare
//! it against [`crate::query::matching_pages`].

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::{CorpusStore, PageRecord};
use crate::query::{Atom, QueryAst, QueryWord, SearchFilters};
use crate::textprep::{expand, tokenize, SynonymTable, Token};

fn slot_matches(token: &Token, word: &QueryWord, synonyms: &SynonymTable) -> bool {
    token.indexable && expand(&word.word, word.exact, synonyms).contains(&token.term)
}

fn atom_matches(tokens: &[Token], atom: &Atom, synonyms: &SynonymTable) -> bool {
    match atom {
        Atom::Term(w) => tokens.iter().any(|t| slot_matches(t, w, synonyms)),
        Atom::Phrase(words) => tokens.windows(words.len()).any(|win| {
            // positions are dense, so a window of tokens is a run of positions
            debug_assert!(win.windows(2).all(|p| p[1].position == p[0].position + 1));
            win.iter().zip(words).all(|(t, w)| slot_matches(t, w, synonyms))
        }),
    }
}

/// Whether one page satisfies the query, ignoring filters.
pub fn page_matches(text: &str, ast: &QueryAst, synonyms: &SynonymTable) -> bool {
    let tokens = tokenize(text);
    ast.atoms().iter().all(|a| atom_matches(&tokens, a, synonyms))
}

/// Page ids of every matching page, in corpus order.
pub fn naive_search(
    corpus: &CorpusStore,
    ast: &QueryAst,
    filters: &SearchFilters,
    synonyms: &SynonymTable,
) -> Vec<String> {
    corpus
        .records()
        .iter()
        .filter(|r| filters.admits(r.year, &r.journal))
        .filter(|r| page_matches(&r.text, ast, synonyms))
        .map(|r| r.page_id.clone())
        .collect()
}

/// Draws a query that usually has matches: words come from a random page,
/// phrases from runs of adjacent tokens, with random exact flags, synonym
/// members and occasional filters.
pub fn random_query<R: Rng>(
    rng: &mut R,
    corpus: &CorpusStore,
    synonyms: &SynonymTable,
) -> Option<(QueryAst, SearchFilters)> {
    let pages: Vec<&PageRecord> = corpus.records().iter().collect();
    let page = pages.choose(rng)?;
    let tokens = tokenize(&page.text);
    let usable: Vec<&Token> = tokens.iter().filter(|t| t.indexable).collect();
    if usable.is_empty() {
        return None;
    }

    let pick_word = |rng: &mut R, term: &str| -> QueryWord {
        let mut word = term.to_string();
        if let Some(group) = synonyms.group_of(term) {
            if rng.random_bool(0.5) {
                let members: Vec<&String> = group.iter().collect();
                word = (*members.choose(rng).unwrap()).clone();
            }
        }
        QueryWord::new(word, rng.random_bool(0.25))
    };

    let mut atoms = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        if rng.random_bool(0.4) && tokens.len() >= 2 {
            let len = rng.random_range(2..=3.min(tokens.len()));
            let start = rng.random_range(0..=tokens.len() - len);
            let words: Vec<QueryWord> = tokens[start..start + len]
                .iter()
                .map(|t| pick_word(rng, &t.term))
                .collect();
            if words.iter().all(|w| !w.word.contains('"')) {
                atoms.push(Atom::Phrase(words));
                continue;
            }
        }
        let t = usable.choose(rng).unwrap();
        atoms.push(Atom::Term(pick_word(rng, &t.term)));
    }
    // occasionally a word from somewhere else in the corpus, often a miss
    if rng.random_bool(0.15) {
        let other = pages.choose(rng)?;
        if let Some(t) = tokenize(&other.text).into_iter().find(|t| t.indexable) {
            atoms.push(Atom::Term(QueryWord::new(t.term, false)));
        }
    }
    let ast = QueryAst::new(atoms).ok()?;

    let mut filters = SearchFilters::default();
    if rng.random_bool(0.3) {
        let span = rng.random_range(0..60);
        let from = page.year - rng.random_range(0..=span);
        filters.year_from = Some(from);
        filters.year_to = Some(from + span);
    }
    if rng.random_bool(0.2) {
        let journals: Vec<&String> = corpus.journals().iter().collect();
        let mut set = BTreeSet::from([page.journal.clone()]);
        if let Some(j) = journals.choose(rng) {
            set.insert((*j).clone());
        }
        filters.journals = Some(set);
    }
    Some((ast, filters))
}
