use std::cmp::Ordering;
use std::collections::HashSet;

use super::{DedupKey, ExternalHit, MergedHit, MergedItem};
use crate::query::{ArticleHit, SortOrder};

/// Lowercases and collapses every run of punctuation or whitespace to one space.
pub fn normalize_key(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut gap = false;
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push(' ');
            }
            gap = false;
            out.push(c);
        } else {
            gap = true;
        }
    }
    out
}

pub fn dedup_key_local(hit: &ArticleHit) -> DedupKey {
    let name = if !hit.title.is_empty() {
        &hit.title
    } else if !hit.article_id.is_empty() {
        &hit.article_id
    } else {
        hit.first_page_id()
    };
    DedupKey {
        name: normalize_key(name),
        year: hit.year,
    }
}

pub fn dedup_key_external(hit: &ExternalHit) -> DedupKey {
    DedupKey {
        name: normalize_key(&hit.title),
        year: hit.year,
    }
}

fn unknown_year(h: &MergedHit) -> bool {
    matches!(&h.item, MergedItem::External(e) if e.year == 0)
}

fn date(h: &MergedHit) -> (i32, u8) {
    match &h.item {
        MergedItem::Local(l) => (l.year, l.month),
        MergedItem::External(e) => (e.year, 0),
    }
}

fn score(h: &MergedHit) -> f64 {
    match &h.item {
        MergedItem::Local(l) => l.score,
        MergedItem::External(_) => 0.0,
    }
}

// Local hits compare exactly like `compare_hits`; externals follow on ties.
fn identity(h: &MergedHit) -> (&str, u8, &str) {
    match &h.item {
        MergedItem::Local(l) => (l.article_id.as_str(), 0, l.first_page_id()),
        MergedItem::External(e) => (h.dedup_key.name.as_str(), 1, e.source.as_str()),
    }
}

/// Ordering of the combined list. Externals without a year always sink to
/// the bottom; otherwise the query module's sort rules apply, with external
/// hits scoring zero and having an unknown month.
pub fn compare_merged(a: &MergedHit, b: &MergedHit, sort: SortOrder) -> Ordering {
    unknown_year(a)
        .cmp(&unknown_year(b))
        .then_with(|| match sort {
            SortOrder::OldestFirst => date(a).cmp(&date(b)),
            SortOrder::NewestFirst => date(b).cmp(&date(a)),
            SortOrder::Relevance => score(b)
                .total_cmp(&score(a))
                .then_with(|| date(b).cmp(&date(a))),
        })
        .then_with(|| identity(a).cmp(&identity(b)))
}

/// Combines local and external results into one deduplicated list.
///
/// Local hits win over external ones with the same key. Between externals,
/// the connector whose name sorts first wins, and within one connector the
/// earlier hit wins. Connector names are expected to be unique.
pub fn merge(
    local: &[ArticleHit],
    externals: &[(String, Vec<ExternalHit>)],
    sort: SortOrder,
) -> Vec<MergedHit> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();

    for hit in local {
        let key = dedup_key_local(hit);
        if seen.insert(key.clone()) {
            out.push(MergedHit {
                item: MergedItem::Local(hit.clone()),
                dedup_key: key,
            });
        }
    }

    let mut sources: Vec<&(String, Vec<ExternalHit>)> = externals.iter().collect();
    sources.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, hits) in sources {
        for hit in hits {
            let key = dedup_key_external(hit);
            if seen.insert(key.clone()) {
                out.push(MergedHit {
                    item: MergedItem::External(hit.clone()),
                    dedup_key: key,
                });
            }
        }
    }

    out.sort_by(|a, b| compare_merged(a, b, sort));
    out
}
