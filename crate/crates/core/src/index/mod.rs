//! Positional inverted index over a page corpus.
//!
//! The in-memory form mirrors the on-disk segment: the lexicon is a sorted
//! table of terms with offsets into one contiguous postings buffer, and page
//! text is kept verbatim in one contiguous string. Postings stay encoded until
//! a query asks for them.
//!
//! Postings layout per term, repeated `doc_freq` times:
//!
//! ```text
//! varint(page_ordinal - previous_page_ordinal)   first entry: absolute
//! varint(position_count)
//! varint(position gaps) * position_count         first gap: absolute
//! ```

mod segment;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::Serialize;

use crate::codec::{self, DecodeError, Reader};
use crate::corpus::{ingest_corpus, CorpusStore, PageKind, PageRecord};
use crate::error::{Error, Result};
use crate::textprep::{for_each_token, load_synonyms, SynonymTable};

pub use segment::{open_segment, write_segment, FORMAT_VERSION, MAGIC};

pub type PageOrdinal = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub term: String,
    /// Pages containing the term.
    pub doc_freq: u32,
    /// Total occurrences.
    pub coll_freq: u64,
    postings_offset: u64,
    postings_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingEntry {
    pub page: PageOrdinal,
    pub positions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingList {
    pub term_id: u32,
    pub entries: Vec<PostingEntry>,
}

/// Page metadata; the text lives in the index's text store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageMeta {
    pub page_id: String,
    pub article_id: String,
    pub journal: String,
    pub title: String,
    pub year: i32,
    pub month: u8,
    pub page_number: u32,
    pub kind: PageKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PageEntry {
    meta: PageMeta,
    text_offset: u64,
    text_len: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub unique_terms: u64,
    pub page_count: u64,
    pub article_count: u64,
    pub total_postings_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertedIndex {
    lexicon: Vec<LexiconEntry>,
    postings: Vec<u8>,
    pages: Vec<PageEntry>,
    text: String,
    synonyms: SynonymTable,
    journals: BTreeSet<String>,
    page_lookup: HashMap<String, PageOrdinal>,
    article_count: u64,
}

#[derive(Default)]
struct TermAccumulator {
    pages: Vec<PageOrdinal>,
    counts: Vec<u32>,
    positions: Vec<u32>,
}

/// Builds an index from a corpus. Single-threaded and fully deterministic.
pub fn build_index(corpus: &CorpusStore, synonyms: SynonymTable) -> Result<InvertedIndex> {
    let mut terms: HashMap<String, TermAccumulator> = HashMap::new();
    let mut pages = Vec::with_capacity(corpus.record_count());
    let mut text = String::new();

    for (ord, record) in corpus.records().iter().enumerate() {
        let ord = PageOrdinal::try_from(ord)
            .map_err(|_| Error::UnsupportedSegment("more than 2^32 pages".into()))?;
        for_each_token(&record.text, |tok| {
            if !tok.indexable {
                return;
            }
            let acc = terms.entry(tok.term).or_default();
            if acc.pages.last() != Some(&ord) {
                acc.pages.push(ord);
                acc.counts.push(0);
            }
            *acc.counts.last_mut().unwrap() += 1;
            acc.positions.push(tok.position);
        });
        pages.push(PageEntry {
            meta: meta_of(record),
            text_offset: text.len() as u64,
            text_len: record.text.len() as u64,
        });
        text.push_str(&record.text);
    }

    let mut sorted: Vec<(String, TermAccumulator)> = terms.into_iter().collect();
    sorted.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let mut postings = Vec::new();
    let mut lexicon = Vec::with_capacity(sorted.len());
    for (term, acc) in sorted {
        let start = postings.len() as u64;
        let mut prev_page = 0;
        let mut cursor = 0usize;
        for (&page, &count) in acc.pages.iter().zip(&acc.counts) {
            codec::write_varint(&mut postings, u64::from(page - prev_page));
            prev_page = page;
            codec::write_varint(&mut postings, u64::from(count));
            let end = cursor + count as usize;
            codec::encode_deltas(&mut postings, &acc.positions[cursor..end]);
            cursor = end;
        }
        lexicon.push(LexiconEntry {
            term,
            doc_freq: acc.pages.len() as u32,
            coll_freq: acc.positions.len() as u64,
            postings_offset: start,
            postings_len: postings.len() as u64 - start,
        });
    }

    Ok(InvertedIndex::assemble(lexicon, postings, pages, text, synonyms))
}

/// Ingests a manifest and an optional synonym file, then builds.
pub fn build_index_from_files(manifest: &Path, synonyms: Option<&Path>) -> Result<InvertedIndex> {
    let table = match synonyms {
        Some(p) => load_synonyms(p)?,
        None => SynonymTable::default(),
    };
    let corpus = ingest_corpus(manifest)?;
    build_index(&corpus, table)
}

fn meta_of(r: &PageRecord) -> PageMeta {
    PageMeta {
        page_id: r.page_id.clone(),
        article_id: r.article_id.clone(),
        journal: r.journal.clone(),
        title: r.title.clone(),
        year: r.year,
        month: r.month,
        page_number: r.page_number,
        kind: r.kind,
    }
}

impl InvertedIndex {
    fn assemble(
        lexicon: Vec<LexiconEntry>,
        postings: Vec<u8>,
        pages: Vec<PageEntry>,
        text: String,
        synonyms: SynonymTable,
    ) -> Self {
        let journals = pages.iter().map(|p| p.meta.journal.clone()).collect();
        let page_lookup = pages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.meta.page_id.clone(), i as PageOrdinal))
            .collect();
        let article_count = pages
            .iter()
            .filter(|p| !p.meta.article_id.is_empty())
            .map(|p| p.meta.article_id.as_str())
            .collect::<BTreeSet<_>>()
            .len() as u64;
        InvertedIndex {
            lexicon,
            postings,
            pages,
            text,
            synonyms,
            journals,
            page_lookup,
            article_count,
        }
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            unique_terms: self.lexicon.len() as u64,
            page_count: self.pages.len() as u64,
            article_count: self.article_count,
            total_postings_bytes: self.postings.len() as u64,
        }
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn lexicon(&self) -> &[LexiconEntry] {
        &self.lexicon
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.lexicon
            .binary_search_by(|e| e.term.as_str().cmp(term))
            .ok()
            .map(|i| i as u32)
    }

    pub fn lexicon_entry(&self, term: &str) -> Option<&LexiconEntry> {
        self.term_id(term).map(|id| &self.lexicon[id as usize])
    }

    pub fn synonyms(&self) -> &SynonymTable {
        &self.synonyms
    }

    /// Replaces the synonym table used at query time.
    pub fn with_synonyms(mut self, synonyms: SynonymTable) -> Self {
        self.synonyms = synonyms;
        self
    }

    pub fn journals(&self) -> &BTreeSet<String> {
        &self.journals
    }

    pub fn page_meta(&self, page: PageOrdinal) -> &PageMeta {
        &self.pages[page as usize].meta
    }

    pub fn page_text(&self, page: PageOrdinal) -> &str {
        let e = &self.pages[page as usize];
        &self.text[e.text_offset as usize..(e.text_offset + e.text_len) as usize]
    }

    pub fn page_ordinal(&self, page_id: &str) -> Option<PageOrdinal> {
        self.page_lookup.get(page_id).copied()
    }

    fn posting_bytes(&self, entry: &LexiconEntry) -> &[u8] {
        let start = entry.postings_offset as usize;
        &self.postings[start..start + entry.postings_len as usize]
    }

    /// Exact-term lookup; no synonym handling.
    pub fn postings(&self, term: &str) -> Option<PostingList> {
        let term_id = self.term_id(term)?;
        let entry = &self.lexicon[term_id as usize];
        let entries = decode_posting_list(self.posting_bytes(entry), entry.doc_freq)
            .expect("postings validated at build or open");
        Some(PostingList { term_id, entries })
    }

    /// (page, occurrence count) pairs for a term, without materializing positions.
    pub fn page_frequencies(&self, term: &str) -> Vec<(PageOrdinal, u32)> {
        let Some(entry) = self.lexicon_entry(term) else {
            return Vec::new();
        };
        let mut r = Reader::new(self.posting_bytes(entry));
        let mut out = Vec::with_capacity(entry.doc_freq as usize);
        let mut page = 0u32;
        let decode = |r: &mut Reader<'_>, page: &mut u32| -> Result<(u32, u32), DecodeError> {
            *page += r.varint_u32()?;
            let n = r.varint_u32()?;
            r.skip_varints(n as usize)?;
            Ok((*page, n))
        };
        for _ in 0..entry.doc_freq {
            out.push(decode(&mut r, &mut page).expect("postings validated at build or open"));
        }
        out
    }
}

fn decode_posting_list(bytes: &[u8], doc_freq: u32) -> Result<Vec<PostingEntry>, DecodeError> {
    let mut r = Reader::new(bytes);
    let mut entries = Vec::with_capacity(doc_freq as usize);
    let mut page = 0u32;
    for _ in 0..doc_freq {
        page = page.checked_add(r.varint_u32()?).ok_or(DecodeError::Overflow)?;
        let n = r.varint_u32()? as usize;
        let positions = codec::decode_deltas(&mut r, n)?;
        entries.push(PostingEntry { page, positions });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, article: &str, year: i32, text: &str) -> PageRecord {
        PageRecord {
            page_id: id.into(),
            article_id: article.into(),
            journal: "PASP".into(),
            year,
            month: 0,
            page_number: 1,
            kind: if article.is_empty() {
                PageKind::Unattached
            } else {
                PageKind::ArticlePage
            },
            text: text.into(),
            title: String::new(),
        }
    }

    fn build(records: Vec<PageRecord>) -> InvertedIndex {
        build_index(&CorpusStore::from_records(records).unwrap(), SynonymTable::default()).unwrap()
    }

    #[test]
    fn empty_corpus() {
        let ix = build(vec![]);
        assert_eq!(ix.stats(), IndexStats::default());
    }

    #[test]
    fn identical_pages_share_postings() {
        let text = "the critical mass of the star";
        let ix = build(vec![rec("a", "A", 1900, text), rec("b", "B", 1900, text)]);
        for e in ix.lexicon() {
            assert_eq!(e.doc_freq, 2, "{}", e.term);
            let pl = ix.postings(&e.term).unwrap();
            assert_eq!(pl.entries[0].positions, pl.entries[1].positions);
        }
        assert_eq!(ix.postings("the").unwrap().entries[0].positions, vec![0, 4]);
        assert_eq!(ix.stats().article_count, 2);
    }

    #[test]
    fn non_indexable_tokens_keep_positions() {
        let ix = build(vec![rec("a", "", 1900, "critical 1919 mass f1u$x")]);
        assert!(ix.postings("1919").is_none());
        assert_eq!(ix.postings("mass").unwrap().entries[0].positions, vec![2]);
        assert_eq!(ix.stats().unique_terms, 2);
        assert_eq!(ix.stats().article_count, 0);
    }

    #[test]
    fn lexicon_is_sorted_and_dense() {
        let ix = build(vec![rec("a", "", 1900, "zeta alpha mu alpha")]);
        let terms: Vec<_> = ix.lexicon().iter().map(|e| e.term.as_str()).collect();
        assert_eq!(terms, ["alpha", "mu", "zeta"]);
        assert_eq!(ix.term_id("mu"), Some(1));
        let alpha = ix.lexicon_entry("alpha").unwrap();
        assert_eq!((alpha.doc_freq, alpha.coll_freq), (1, 2));
        assert!(ix.postings("zz-never-seen").is_none());
    }

    #[test]
    fn page_frequencies_match_postings() {
        let ix = build(vec![
            rec("a", "", 1900, "mass mass mass"),
            rec("b", "", 1900, "nothing"),
            rec("c", "", 1900, "mass"),
        ]);
        assert_eq!(ix.page_frequencies("mass"), vec![(0, 3), (2, 1)]);
        assert!(ix.page_frequencies("absent").is_empty());
    }

    #[test]
    fn stored_text_is_verbatim() {
        let ix = build(vec![rec("a", "", 1900, "Ünïcode  text."), rec("b", "", 1900, "")]);
        assert_eq!(ix.page_text(0), "Ünïcode  text.");
        assert_eq!(ix.page_text(1), "");
        assert_eq!(ix.page_ordinal("b"), Some(1));
    }
}
