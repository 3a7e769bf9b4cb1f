//! Request parameters, response bodies and API errors.

use std::collections::{BTreeMap, BTreeSet};

use axum::http::StatusCode;
use folio_core::federation::{MergedHit, MergedItem, LOCAL};
use folio_core::{ArticleHit, QueryError, SortOrder};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApiError {
    #[error("{message}")]
    BadRequest { code: &'static str, message: String },
    #[error("{0}")]
    NotFound(String),
    #[error("segment unavailable: {0}")]
    Unavailable(String),
}

impl ApiError {
    pub fn bad(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            code,
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest { code, .. } => code,
            ApiError::NotFound(_) => "not_found",
            ApiError::Unavailable(_) => "segment_unavailable",
        }
    }

    pub fn body(&self) -> serde_json::Value {
        serde_json::json!({ "error": { "code": self.code(), "message": self.to_string() } })
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::bad(e.code(), e.to_string())
    }
}

/// Raw `/search` parameters, as strings, before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchParams {
    pub q: Option<String>,
    pub sort: Option<String>,
    pub year_from: Option<String>,
    pub year_to: Option<String>,
    pub journals: Vec<String>,
    pub connectors: Option<String>,
    pub start: Option<String>,
    pub rows: Option<String>,
}

impl SearchParams {
    pub fn query(q: impl Into<String>) -> Self {
        SearchParams {
            q: Some(q.into()),
            ..SearchParams::default()
        }
    }

    /// Parses a URL query string. `journal` may repeat; for any other
    /// parameter the last occurrence wins.
    pub fn from_query_string(raw: &str) -> Result<Self, ApiError> {
        let mut p = SearchParams::default();
        for (key, value) in url::form_urlencoded::parse(raw.as_bytes()) {
            let value = value.into_owned();
            match key.as_ref() {
                "q" => p.q = Some(value),
                "sort" => p.sort = Some(value),
                "year_from" => p.year_from = Some(value),
                "year_to" => p.year_to = Some(value),
                "journal" => p.journals.push(value),
                "connectors" => p.connectors = Some(value),
                "start" => p.start = Some(value),
                "rows" => p.rows = Some(value),
                other => {
                    return Err(ApiError::bad(
                        "unknown_parameter",
                        format!("unknown parameter '{other}'"),
                    ))
                }
            }
        }
        Ok(p)
    }
}

pub(crate) fn parse_sort(raw: Option<&str>) -> Result<SortOrder, ApiError> {
    match raw {
        None | Some("") => Ok(SortOrder::Relevance),
        Some(s) => s.parse().map_err(|m: String| ApiError::bad("bad_sort", m)),
    }
}

pub(crate) fn parse_int<T: std::str::FromStr>(
    name: &str,
    raw: Option<&str>,
) -> Result<Option<T>, ApiError> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| {
            ApiError::bad("bad_parameter", format!("{name} must be an integer, got '{s}'"))
        }),
    }
}

/// External connector names selected by the `connectors` parameter. `local`
/// is accepted and ignored since the index is always searched.
pub(crate) fn parse_connectors(
    raw: Option<&str>,
    known: &BTreeSet<String>,
) -> Result<Vec<String>, ApiError> {
    let mut out = Vec::new();
    for name in raw.unwrap_or("").split(',').map(str::trim).filter(|n| !n.is_empty()) {
        if name == LOCAL {
            continue;
        }
        if !known.contains(name) {
            let list: Vec<&str> = known.iter().map(String::as_str).collect();
            return Err(ApiError::bad(
                "unknown_connector",
                format!("unknown connector '{name}'; known connectors: {}", list.join(", ")),
            ));
        }
        if !out.iter().any(|n| n == name) {
            out.push(name.to_string());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnippetBody {
    pub text: String,
    pub highlights: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageBody {
    pub page_id: String,
    pub page_number: u32,
    pub url: String,
    pub snippet: SnippetBody,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitBody {
    pub article_id: String,
    pub journal: String,
    pub year: i32,
    pub month: u8,
    pub url: String,
    pub pages: Vec<PageBody>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub title: String,
    /// Set on hits that came from an external connector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet_text: Option<String>,
}

impl From<&ArticleHit> for HitBody {
    fn from(h: &ArticleHit) -> Self {
        HitBody {
            article_id: h.article_id.clone(),
            journal: h.journal.clone(),
            year: h.year,
            month: h.month,
            url: h.article_url.clone(),
            pages: h
                .page_hits
                .iter()
                .map(|p| PageBody {
                    page_id: p.page_id.clone(),
                    page_number: p.page_number,
                    url: p.url.clone(),
                    snippet: SnippetBody {
                        text: p.snippet.text.clone(),
                        highlights: p.snippet.highlights.iter().map(|&(s, e)| [s, e]).collect(),
                    },
                })
                .collect(),
            title: h.title.clone(),
            source: None,
            snippet_text: None,
        }
    }
}

impl From<&MergedHit> for HitBody {
    fn from(m: &MergedHit) -> Self {
        match &m.item {
            MergedItem::Local(h) => h.into(),
            MergedItem::External(e) => HitBody {
                article_id: String::new(),
                journal: e.journal.clone(),
                year: e.year,
                month: 0,
                url: e.url.clone(),
                pages: Vec::new(),
                title: e.title.clone(),
                source: Some(e.source.clone()),
                snippet_text: Some(e.snippet_text.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResponse {
    pub query_echo: String,
    pub total_count: usize,
    pub hits: Vec<HitBody>,
    pub connectors: BTreeMap<String, String>,
    pub complete: bool,
}

/// Stored page text and metadata served by `/page/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoredPage {
    pub page_id: String,
    pub article_id: String,
    pub journal: String,
    pub year: i32,
    pub month: u8,
    pub page_number: u32,
    pub kind: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub title: String,
    pub text: String,
}
