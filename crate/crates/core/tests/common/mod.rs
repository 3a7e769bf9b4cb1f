#![allow(dead_code)]

use std::path::PathBuf;

use folio_core::index::build_index_from_files;
use folio_core::{execute, parse_query, InvertedIndex, SearchRequest, SearchResults, SortOrder};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn heritage() -> InvertedIndex {
    let dir = fixtures().join("heritage");
    build_index_from_files(&dir.join("corpus.jsonl"), Some(&dir.join("synonyms.txt"))).unwrap()
}

pub fn search(index: &InvertedIndex, q: &str, sort: SortOrder) -> SearchResults {
    let req = SearchRequest {
        sort,
        limit: usize::MAX,
        ..SearchRequest::default()
    };
    execute(index, &parse_query(q).unwrap(), &req).unwrap()
}

pub fn page_ids(r: &SearchResults) -> Vec<String> {
    let mut ids: Vec<String> = r
        .hits
        .iter()
        .flat_map(|h| h.page_hits.iter().map(|p| p.page_id.clone()))
        .collect();
    ids.sort();
    ids
}
