//! Query syntax and execution against an [`InvertedIndex`].

mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::PageKind;
use crate::error::QueryError;
use crate::index::{InvertedIndex, PageOrdinal};
use crate::snippet::{extract_snippet, Snippet, DEFAULT_WINDOW, MIN_WINDOW};
use crate::textprep::{expand, tokenize, SynonymTable, Token};

pub use parse::{parse_query, Atom, QueryAst, QueryWord};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchFilters {
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    pub journals: Option<BTreeSet<String>>,
}

impl SearchFilters {
    pub fn validate(&self) -> Result<(), QueryError> {
        if let (Some(from), Some(to)) = (self.year_from, self.year_to) {
            if from > to {
                return Err(QueryError::BadYearRange { from, to });
            }
        }
        Ok(())
    }

    pub fn admits_year(&self, year: i32) -> bool {
        self.year_from.is_none_or(|f| year >= f) && self.year_to.is_none_or(|t| year <= t)
    }

    pub fn admits(&self, year: i32, journal: &str) -> bool {
        self.admits_year(year) && self.journals.as_ref().is_none_or(|js| js.contains(journal))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    #[default]
    Relevance,
    OldestFirst,
    NewestFirst,
}

impl FromStr for SortOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relevance" => Ok(SortOrder::Relevance),
            "oldest" | "oldest_first" => Ok(SortOrder::OldestFirst),
            "newest" | "newest_first" => Ok(SortOrder::NewestFirst),
            other => Err(format!(
                "unknown sort '{other}', expected relevance, oldest or newest"
            )),
        }
    }
}

/// URL templates with `{article_id}` / `{page_id}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlTemplates {
    pub article: String,
    pub page: String,
}

impl Default for UrlTemplates {
    fn default() -> Self {
        UrlTemplates {
            article: "/abs/{article_id}".into(),
            page: "/page/{page_id}".into(),
        }
    }
}

impl UrlTemplates {
    pub fn article_url(&self, article_id: &str) -> String {
        self.article.replace("{article_id}", article_id)
    }

    pub fn page_url(&self, page_id: &str) -> String {
        self.page.replace("{page_id}", page_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageHit {
    pub page_id: String,
    pub page_number: u32,
    pub url: String,
    pub snippet: Snippet,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleHit {
    /// Empty for an unattached page listed on its own.
    pub article_id: String,
    pub title: String,
    pub journal: String,
    pub year: i32,
    pub month: u8,
    /// Ordered by page number.
    pub page_hits: Vec<PageHit>,
    pub score: f64,
    pub article_url: String,
    pub first_page_url: String,
}

impl ArticleHit {
    pub fn first_page_id(&self) -> &str {
        self.page_hits.first().map_or("", |p| p.page_id.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SearchRequest {
    pub filters: SearchFilters,
    pub sort: SortOrder,
    pub offset: usize,
    pub limit: usize,
    pub snippet_window: usize,
    pub urls: UrlTemplates,
}

impl Default for SearchRequest {
    fn default() -> Self {
        SearchRequest {
            filters: SearchFilters::default(),
            sort: SortOrder::default(),
            offset: 0,
            limit: 20,
            snippet_window: DEFAULT_WINDOW,
            urls: UrlTemplates::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchResults {
    pub hits: Vec<ArticleHit>,
    /// Matching articles before pagination.
    pub total_count: usize,
}

/// `Σ ln(1 + tf) · ln(1 + page_count / max(1, doc_freq))` over atoms.
pub fn score_page(tf_per_atom: &[u32], doc_freqs: &[u32], page_count: u64) -> f64 {
    debug_assert_eq!(tf_per_atom.len(), doc_freqs.len());
    let n = page_count as f64;
    tf_per_atom
        .iter()
        .zip(doc_freqs)
        .map(|(&tf, &df)| (1.0 + f64::from(tf)).ln() * (1.0 + n / f64::from(df.max(1))).ln())
        .sum()
}

/// Total order over article hits. Ties on every sort key fall back to
/// `article_id` and then the first page id, which tells unattached pages apart.
pub fn compare_hits(a: &ArticleHit, b: &ArticleHit, sort: SortOrder) -> Ordering {
    let date = |h: &ArticleHit| (h.year, h.month);
    let ids = |a: &ArticleHit, b: &ArticleHit| {
        a.article_id
            .cmp(&b.article_id)
            .then_with(|| a.first_page_id().cmp(b.first_page_id()))
    };
    match sort {
        SortOrder::OldestFirst => date(a).cmp(&date(b)).then_with(|| ids(a, b)),
        SortOrder::NewestFirst => date(b).cmp(&date(a)).then_with(|| ids(a, b)),
        SortOrder::Relevance => b
            .score
            .total_cmp(&a.score)
            .then_with(|| date(b).cmp(&date(a)))
            .then_with(|| ids(a, b)),
    }
}

/// Per-slot expansion sets for every atom.
struct ExpandedAtom {
    slots: Vec<BTreeSet<String>>,
}

fn expand_ast(ast: &QueryAst, synonyms: &SynonymTable) -> Vec<ExpandedAtom> {
    ast.atoms()
        .iter()
        .map(|a| ExpandedAtom {
            slots: a
                .words()
                .iter()
                .map(|w| expand(&w.word, w.exact, synonyms))
                .collect(),
        })
        .collect()
}

/// (page, tf) pairs, sorted by page.
type AtomPages = Vec<(PageOrdinal, u32)>;

fn term_pages(index: &InvertedIndex, words: &BTreeSet<String>) -> AtomPages {
    let mut lists: Vec<AtomPages> = words.iter().map(|w| index.page_frequencies(w)).collect();
    if lists.len() == 1 {
        return lists.pop().unwrap();
    }
    let mut all: AtomPages = lists.into_iter().flatten().collect();
    all.sort_unstable_by_key(|&(p, _)| p);
    all.dedup_by(|later, kept| {
        if later.0 == kept.0 {
            kept.1 += later.1;
            true
        } else {
            false
        }
    });
    all
}

// Page -> sorted positions of any word in the slot.
fn slot_positions(index: &InvertedIndex, words: &BTreeSet<String>) -> Vec<(PageOrdinal, Vec<u32>)> {
    let mut merged: Vec<(PageOrdinal, Vec<u32>)> = Vec::new();
    for w in words {
        if let Some(pl) = index.postings(w) {
            merged.extend(pl.entries.into_iter().map(|e| (e.page, e.positions)));
        }
    }
    if words.len() > 1 {
        merged.sort_by_key(|(p, _)| *p);
        let mut out: Vec<(PageOrdinal, Vec<u32>)> = Vec::with_capacity(merged.len());
        for (page, positions) in merged {
            match out.last_mut() {
                Some((last, acc)) if *last == page => acc.extend(positions),
                _ => out.push((page, positions)),
            }
        }
        for (_, acc) in &mut out {
            acc.sort_unstable();
        }
        merged = out;
    }
    merged
}

fn phrase_pages(index: &InvertedIndex, slots: &[BTreeSet<String>]) -> AtomPages {
    // Cheap page-level intersection before touching positions.
    let mut candidates: Vec<PageOrdinal> = term_pages(index, &slots[0]).into_iter().map(|(p, _)| p).collect();
    for slot in &slots[1..] {
        if candidates.is_empty() {
            return Vec::new();
        }
        let pages: Vec<PageOrdinal> = term_pages(index, slot).into_iter().map(|(p, _)| p).collect();
        candidates = intersect_sorted(&candidates, &pages);
    }
    if candidates.is_empty() {
        return Vec::new();
    }

    let per_slot: Vec<HashMap<PageOrdinal, Vec<u32>>> = slots
        .iter()
        .map(|s| {
            slot_positions(index, s)
                .into_iter()
                .filter(|(p, _)| candidates.binary_search(p).is_ok())
                .collect()
        })
        .collect();

    candidates
        .into_iter()
        .filter_map(|page| {
            let first = &per_slot[0][&page];
            let count = first
                .iter()
                .filter(|&&start| {
                    per_slot[1..].iter().enumerate().all(|(i, slot)| {
                        let want = start + i as u32 + 1;
                        slot[&page].binary_search(&want).is_ok()
                    })
                })
                .count() as u32;
            (count > 0).then_some((page, count))
        })
        .collect()
}

fn intersect_sorted(a: &[PageOrdinal], b: &[PageOrdinal]) -> Vec<PageOrdinal> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn atom_pages(index: &InvertedIndex, atom: &ExpandedAtom) -> AtomPages {
    if atom.slots.len() == 1 {
        term_pages(index, &atom.slots[0])
    } else {
        phrase_pages(index, &atom.slots)
    }
}

/// Rejects inverted year ranges and journal codes the index has never seen.
pub fn check_filters(index: &InvertedIndex, filters: &SearchFilters) -> Result<(), QueryError> {
    filters.validate()?;
    if let Some(journals) = &filters.journals {
        if let Some(unknown) = journals.iter().find(|j| !index.journals().contains(*j)) {
            return Err(QueryError::UnknownJournal {
                journal: unknown.clone(),
                known: index.journals().iter().cloned().collect(),
            });
        }
    }
    Ok(())
}

struct PageMatch {
    page: PageOrdinal,
    score: f64,
}

fn match_pages(
    index: &InvertedIndex,
    expanded: &[ExpandedAtom],
    filters: &SearchFilters,
) -> Vec<PageMatch> {
    let per_atom: Vec<AtomPages> = expanded.iter().map(|a| atom_pages(index, a)).collect();
    let doc_freqs: Vec<u32> = per_atom.iter().map(|p| p.len() as u32).collect();
    if per_atom.iter().any(Vec::is_empty) {
        return Vec::new();
    }

    // Intersect starting from the rarest atom; tfs stay in atom order.
    let mut order: Vec<usize> = (0..per_atom.len()).collect();
    order.sort_by_key(|&i| per_atom[i].len());
    let mut candidates: Vec<(PageOrdinal, Vec<u32>)> = per_atom[order[0]]
        .iter()
        .map(|&(p, tf)| {
            let mut tfs = vec![0; per_atom.len()];
            tfs[order[0]] = tf;
            (p, tfs)
        })
        .collect();
    for &ai in &order[1..] {
        let list = &per_atom[ai];
        let mut j = 0;
        candidates.retain_mut(|(page, tfs)| {
            while j < list.len() && list[j].0 < *page {
                j += 1;
            }
            if j < list.len() && list[j].0 == *page {
                tfs[ai] = list[j].1;
                true
            } else {
                false
            }
        });
    }

    let page_count = index.page_count() as u64;
    candidates
        .into_iter()
        .filter(|(p, _)| {
            let m = index.page_meta(*p);
            filters.admits(m.year, &m.journal)
        })
        .map(|(page, tfs)| PageMatch {
            page,
            score: score_page(&tfs, &doc_freqs, page_count),
        })
        .collect()
}

/// Ordinals of every page that satisfies the query and filters, ascending.
pub fn matching_pages(
    index: &InvertedIndex,
    ast: &QueryAst,
    filters: &SearchFilters,
) -> Result<Vec<PageOrdinal>, QueryError> {
    check_filters(index, filters)?;
    let expanded = expand_ast(ast, index.synonyms());
    Ok(match_pages(index, &expanded, filters)
        .into_iter()
        .map(|m| m.page)
        .collect())
}

/// Runs a query: AND over atoms, filters, grouping by article, ordering,
/// pagination, then snippets for the returned page only.
pub fn execute(
    index: &InvertedIndex,
    ast: &QueryAst,
    req: &SearchRequest,
) -> Result<SearchResults, QueryError> {
    check_filters(index, &req.filters)?;
    let expanded = expand_ast(ast, index.synonyms());
    let matches = match_pages(index, &expanded, &req.filters);

    struct Group {
        pages: Vec<(u32, PageOrdinal, f64)>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut by_article: HashMap<&str, usize> = HashMap::new();
    for m in &matches {
        let meta = index.page_meta(m.page);
        let entry = (meta.page_number, m.page, m.score);
        if meta.kind == PageKind::Unattached || meta.article_id.is_empty() {
            groups.push(Group { pages: vec![entry] });
            continue;
        }
        match by_article.get(meta.article_id.as_str()) {
            Some(&g) => groups[g].pages.push(entry),
            None => {
                by_article.insert(meta.article_id.as_str(), groups.len());
                groups.push(Group { pages: vec![entry] });
            }
        }
    }

    // Hits without snippets first; snippets only for the requested window.
    let mut hits: Vec<(ArticleHit, Vec<PageOrdinal>)> = groups
        .into_iter()
        .map(|mut g| {
            g.pages.sort_by_key(|&(number, ord, _)| (number, ord));
            let lead = index.page_meta(g.pages[0].1);
            let title = g
                .pages
                .iter()
                .map(|&(_, ord, _)| index.page_meta(ord).title.as_str())
                .find(|t| !t.is_empty())
                .unwrap_or("");
            let score = g.pages.iter().map(|p| p.2).fold(0.0, f64::max);
            let first_page_url = req.urls.page_url(&lead.page_id);
            let article_url = if lead.article_id.is_empty() {
                first_page_url.clone()
            } else {
                req.urls.article_url(&lead.article_id)
            };
            let page_hits = g
                .pages
                .iter()
                .map(|&(number, ord, score)| PageHit {
                    page_id: index.page_meta(ord).page_id.clone(),
                    page_number: number,
                    url: req.urls.page_url(&index.page_meta(ord).page_id),
                    snippet: Snippet {
                        text: String::new(),
                        highlights: Vec::new(),
                        page_byte_origin: 0,
                    },
                    score,
                })
                .collect();
            let ords = g.pages.iter().map(|p| p.1).collect();
            (
                ArticleHit {
                    article_id: lead.article_id.clone(),
                    title: title.to_string(),
                    journal: lead.journal.clone(),
                    year: lead.year,
                    month: lead.month,
                    page_hits,
                    score,
                    article_url,
                    first_page_url,
                },
                ords,
            )
        })
        .collect();

    hits.sort_by(|a, b| compare_hits(&a.0, &b.0, req.sort));
    let total_count = hits.len();
    let window = req.snippet_window.max(MIN_WINDOW);
    let hits = hits
        .into_iter()
        .skip(req.offset)
        .take(req.limit)
        .map(|(mut hit, ords)| {
            for (ph, ord) in hit.page_hits.iter_mut().zip(ords) {
                ph.snippet = page_snippet(index.page_text(ord), &expanded, window);
            }
            hit
        })
        .collect();
    Ok(SearchResults { hits, total_count })
}

/// Byte spans of every token that takes part in a match of any atom.
fn highlight_spans(tokens: &[Token], expanded: &[ExpandedAtom]) -> Vec<(usize, usize)> {
    let mut marked = vec![false; tokens.len()];
    let hits = |t: &Token, slot: &BTreeSet<String>| t.indexable && slot.contains(&t.term);
    for atom in expanded {
        let k = atom.slots.len();
        if k > tokens.len() {
            continue;
        }
        for start in 0..=tokens.len() - k {
            if (0..k).all(|i| hits(&tokens[start + i], &atom.slots[i])) {
                marked[start..start + k].iter_mut().for_each(|m| *m = true);
            }
        }
    }
    tokens
        .iter()
        .zip(marked)
        .filter(|(_, m)| *m)
        .map(|(t, _)| (t.byte_start, t.byte_end))
        .collect()
}

fn page_snippet(text: &str, expanded: &[ExpandedAtom], window: usize) -> Snippet {
    let spans = highlight_spans(&tokenize(text), expanded);
    extract_snippet(text, &spans, window).unwrap_or_else(|_| Snippet {
        text: String::new(),
        highlights: Vec::new(),
        page_byte_origin: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusStore, PageRecord};
    use crate::index::build_index;

    fn rec(id: &str, article: &str, year: i32, month: u8, page: u32, text: &str) -> PageRecord {
        PageRecord {
            page_id: id.into(),
            article_id: article.into(),
            journal: if year < 1900 { "Obs".into() } else { "PASP".into() },
            year,
            month,
            page_number: page,
            kind: if article.is_empty() {
                PageKind::Unattached
            } else {
                PageKind::ArticlePage
            },
            text: text.into(),
            title: String::new(),
        }
    }

    fn index() -> InvertedIndex {
        let records = vec![
            rec("a1", "A", 1919, 10, 2, "Eddington on the critical mass."),
            rec("a2", "A", 1919, 10, 1, "critical remarks on mass"),
            rec("b1", "B", 1950, 0, 7, "the mass is critical here"),
            rec("c1", "", 1919, 10, 0, "critical 1919 mass"),
            rec("d1", "D", 1898, 0, 1, "planet Pluto and the galaxy"),
            rec("e1", "", 1898, 0, 0, "extragalactic planet pluto"),
        ];
        let syn = SynonymTable::parse("galaxy galaxies extragalactic\n").unwrap();
        build_index(&CorpusStore::from_records(records).unwrap(), syn).unwrap()
    }

    fn run(ix: &InvertedIndex, q: &str, sort: SortOrder) -> SearchResults {
        let req = SearchRequest {
            sort,
            limit: usize::MAX,
            ..SearchRequest::default()
        };
        execute(ix, &parse_query(q).unwrap(), &req).unwrap()
    }

    fn page_ids(r: &SearchResults) -> Vec<&str> {
        r.hits
            .iter()
            .flat_map(|h| h.page_hits.iter().map(|p| p.page_id.as_str()))
            .collect()
    }

    #[test]
    fn score_examples() {
        assert_eq!(score_page(&[0, 0], &[3, 5], 10), 0.0);
        let ln2 = 2f64.ln();
        assert!((score_page(&[1], &[7], 7) - ln2 * ln2).abs() < 1e-12);
        assert!(score_page(&[4], &[2], 10) >= score_page(&[2], &[2], 10));
        assert_eq!(score_page(&[1], &[0], 1), score_page(&[1], &[1], 1));
    }

    #[test]
    fn conjunction_groups_pages_by_article() {
        let ix = index();
        let r = run(&ix, "critical mass", SortOrder::OldestFirst);
        assert_eq!(r.total_count, 3);
        let a = r.hits.iter().find(|h| h.article_id == "A").unwrap();
        let numbers: Vec<u32> = a.page_hits.iter().map(|p| p.page_number).collect();
        assert_eq!(numbers, [1, 2]);
        assert!(r.hits.iter().any(|h| h.article_id.is_empty() && h.first_page_id() == "c1"));
    }

    #[test]
    fn phrase_requires_adjacency() {
        let ix = index();
        let r = run(&ix, "\"critical mass\"", SortOrder::OldestFirst);
        assert_eq!(page_ids(&r), ["a1"]);
        let hl = &r.hits[0].page_hits[0].snippet;
        let marked: Vec<&str> = hl.highlights.iter().map(|&(s, e)| &hl.text[s..e]).collect();
        assert_eq!(marked, ["critical", "mass"]);
    }

    #[test]
    fn synonyms_and_exact() {
        let ix = index();
        let loose_results = run(&ix, "galaxy", SortOrder::OldestFirst);
        let mut loose = page_ids(&loose_results);
        loose.sort();
        assert_eq!(loose, ["d1", "e1"]);
        assert_eq!(page_ids(&run(&ix, "=galaxy", SortOrder::OldestFirst)), ["d1"]);
        assert_eq!(page_ids(&run(&ix, "\"=extragalactic planet\"", SortOrder::OldestFirst)), ["e1"]);
        assert!(run(&ix, "\"galaxy planet\"", SortOrder::OldestFirst).hits.len() == 1);
    }

    #[test]
    fn oldest_first_breaks_ties_by_ids() {
        let ix = index();
        let r = run(&ix, "planet pluto", SortOrder::OldestFirst);
        let keys: Vec<(&str, &str)> = r.hits.iter().map(|h| (h.article_id.as_str(), h.first_page_id())).collect();
        assert_eq!(keys, [("", "e1"), ("D", "d1")]);
        let r = run(&ix, "critical mass", SortOrder::NewestFirst);
        assert_eq!(r.hits[0].year, 1950);
    }

    #[test]
    fn filters_and_errors() {
        let ix = index();
        let ast = parse_query("critical").unwrap();
        let mut req = SearchRequest::default();
        req.filters.year_from = Some(1940);
        assert_eq!(execute(&ix, &ast, &req).unwrap().total_count, 1);
        req.filters.year_to = Some(1900);
        assert_eq!(
            execute(&ix, &ast, &req).unwrap_err(),
            QueryError::BadYearRange { from: 1940, to: 1900 }
        );
        let req = SearchRequest {
            filters: SearchFilters {
                journals: Some(BTreeSet::from(["ApJ".to_string()])),
                ..Default::default()
            },
            ..SearchRequest::default()
        };
        match execute(&ix, &ast, &req).unwrap_err() {
            QueryError::UnknownJournal { journal, known } => {
                assert_eq!(journal, "ApJ");
                assert_eq!(known, ["Obs", "PASP"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pagination_and_urls() {
        let ix = index();
        let full = run(&ix, "critical", SortOrder::OldestFirst);
        let mut stitched = Vec::new();
        for offset in 0..full.total_count {
            let req = SearchRequest {
                sort: SortOrder::OldestFirst,
                offset,
                limit: 1,
                ..SearchRequest::default()
            };
            let page = execute(&ix, &parse_query("critical").unwrap(), &req).unwrap();
            assert_eq!(page.total_count, full.total_count);
            stitched.extend(page.hits);
        }
        assert_eq!(stitched, full.hits);
        let a = full.hits.iter().find(|h| h.article_id == "A").unwrap();
        assert_eq!(a.article_url, "/abs/A");
        assert_eq!(a.first_page_url, "/page/a2");
        let c = full.hits.iter().find(|h| h.article_id.is_empty()).unwrap();
        assert_eq!(c.article_url, "/page/c1");
    }

    #[test]
    fn compare_hits_examples() {
        let hit = |id: &str, year, month| ArticleHit {
            article_id: id.into(),
            title: String::new(),
            journal: "PASP".into(),
            year,
            month,
            page_hits: vec![],
            score: 1.0,
            article_url: String::new(),
            first_page_url: String::new(),
        };
        let a = hit("X", 1898, 3);
        let b = hit("Y", 1919, 1);
        assert_eq!(compare_hits(&a, &b, SortOrder::OldestFirst), Ordering::Less);
        assert_eq!(compare_hits(&a, &b, SortOrder::NewestFirst), Ordering::Greater);
        assert_eq!(compare_hits(&a, &a.clone(), SortOrder::Relevance), Ordering::Equal);
        let m0 = hit("Z", 1919, 0);
        assert_eq!(compare_hits(&m0, &b, SortOrder::OldestFirst), Ordering::Less);
    }

    #[test]
    fn sort_order_parsing() {
        assert_eq!("oldest".parse::<SortOrder>(), Ok(SortOrder::OldestFirst));
        assert_eq!("newest_first".parse::<SortOrder>(), Ok(SortOrder::NewestFirst));
        assert!("random".parse::<SortOrder>().is_err());
    }
}
