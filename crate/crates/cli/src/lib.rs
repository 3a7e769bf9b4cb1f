//! HTTP and command-line front end over `folio-core`.
//!
//! [`Service`] owns one opened segment and the connector registry and turns
//! raw request parameters into JSON-ready responses. [`http::router`] exposes
//! it over HTTP; the `folio` binary reuses it for `search`.

pub mod api;
pub mod config;
pub mod http;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use folio_core::federation::{fan_out, Connector, LatencyModel, LocalSearch, MockConnector, LOCAL};
use folio_core::query::{check_filters, SearchFilters};
use folio_core::textprep::load_synonyms;
use folio_core::{execute, open_segment, parse_query, IndexStats, InvertedIndex, QueryAst, SearchRequest, SortOrder};
use tokio::sync::mpsc;

pub use api::{ApiError, SearchParams, SearchResponse, StoredPage};
pub use config::{ConfigError, ServiceConfig};

/// A validated search, ready to run.
#[derive(Debug, Clone)]
pub struct PreparedSearch {
    pub ast: QueryAst,
    pub filters: SearchFilters,
    pub sort: SortOrder,
    pub start: usize,
    pub rows: usize,
    pub connectors: Vec<String>,
}

pub struct Service {
    config: ServiceConfig,
    index: Result<Arc<InvertedIndex>, String>,
    connectors: BTreeMap<String, Arc<dyn Connector>>,
}

impl Service {
    /// Opens the segment and loads connector fixtures. A segment that fails to
    /// open does not stop the service; index-backed requests then answer 503.
    pub fn from_config(config: ServiceConfig) -> Result<Self, folio_core::Error> {
        let index = open_segment(&config.segment_dir).map_err(|e| e.to_string());
        let index = match (index, &config.synonyms_path) {
            (Ok(ix), Some(path)) => Ok(ix.with_synonyms(load_synonyms(path)?)),
            (other, _) => other,
        };
        Self::assemble(config, index.map(Arc::new))
    }

    /// Wraps an index that is already in memory.
    pub fn with_index(config: ServiceConfig, index: Arc<InvertedIndex>) -> Result<Self, folio_core::Error> {
        Self::assemble(config, Ok(index))
    }

    fn assemble(
        config: ServiceConfig,
        index: Result<Arc<InvertedIndex>, String>,
    ) -> Result<Self, folio_core::Error> {
        let mut connectors: BTreeMap<String, Arc<dyn Connector>> = BTreeMap::new();
        for c in &config.connectors {
            let (min, max) = c.latency_range();
            let name = c.descriptor.name.clone();
            let template = c
                .url_template
                .clone()
                .unwrap_or_else(|| format!("/external/{name}/{{page_id}}"));
            let mock = MockConnector::from_fixture(c.descriptor.clone(), &c.fixture)?
                .with_latency(LatencyModel::uniform(min, max))
                .with_fail_rate(c.fail_rate)
                .with_seed(c.seed)
                .with_url_template(template);
            connectors.insert(name, Arc::new(mock));
        }
        Ok(Service {
            config,
            index,
            connectors,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn index(&self) -> Result<&Arc<InvertedIndex>, ApiError> {
        self.index.as_ref().map_err(|e| ApiError::Unavailable(e.clone()))
    }

    pub fn connector_names(&self) -> BTreeSet<String> {
        self.connectors.keys().cloned().collect()
    }

    pub fn prepare(&self, p: &SearchParams) -> Result<PreparedSearch, ApiError> {
        let index = self.index()?;
        let ast = parse_query(p.q.as_deref().unwrap_or(""))?;
        let sort = api::parse_sort(p.sort.as_deref())?;
        let filters = SearchFilters {
            year_from: api::parse_int("year_from", p.year_from.as_deref())?,
            year_to: api::parse_int("year_to", p.year_to.as_deref())?,
            journals: if p.journals.is_empty() {
                None
            } else {
                Some(p.journals.iter().cloned().collect())
            },
        };
        check_filters(index, &filters)?;
        let start = api::parse_int("start", p.start.as_deref())?.unwrap_or(0);
        let rows = api::parse_int("rows", p.rows.as_deref())?.unwrap_or(self.config.default_rows);
        if rows == 0 {
            return Err(ApiError::bad("bad_parameter", "rows must be at least 1"));
        }
        let connectors = api::parse_connectors(p.connectors.as_deref(), &self.connector_names())?;
        Ok(PreparedSearch {
            ast,
            filters,
            sort,
            start,
            rows,
            connectors,
        })
    }

    fn request(&self, s: &PreparedSearch, offset: usize, limit: usize) -> SearchRequest {
        SearchRequest {
            filters: s.filters.clone(),
            sort: s.sort,
            offset,
            limit,
            snippet_window: self.config.snippet_window,
            urls: self.config.url_templates(),
        }
    }

    /// Local-only search, computed inline.
    pub fn search_local(&self, s: &PreparedSearch) -> Result<SearchResponse, ApiError> {
        let index = self.index()?;
        let results = execute(index, &s.ast, &self.request(s, s.start, s.rows))?;
        Ok(SearchResponse {
            query_echo: s.ast.to_string(),
            total_count: results.total_count,
            hits: results.hits.iter().map(Into::into).collect(),
            connectors: BTreeMap::from([(LOCAL.to_string(), "ok".to_string())]),
            complete: true,
        })
    }

    /// Streams one response per finished source; the last has `complete`.
    /// Dropping the receiver cancels outstanding connectors.
    pub fn stream(&self, s: PreparedSearch) -> Result<mpsc::Receiver<SearchResponse>, ApiError> {
        let index = self.index()?.clone();
        if s.connectors.is_empty() {
            let (tx, rx) = mpsc::channel(1);
            let response = self.search_local(&s)?;
            tx.try_send(response).expect("fresh channel has room");
            return Ok(rx);
        }

        let selected: Vec<Arc<dyn Connector>> =
            s.connectors.iter().map(|n| self.connectors[n].clone()).collect();
        let local = LocalSearch {
            index,
            ast: s.ast.clone(),
            request: self.request(&s, 0, usize::MAX),
        };
        let mut snapshots = fan_out(
            Some(local),
            selected,
            s.ast.to_string(),
            s.filters.clone(),
            s.sort,
            self.config.fanout_deadline(),
        );
        let (tx, rx) = mpsc::channel(s.connectors.len() + 1);
        tokio::spawn(async move {
            while let Some(snap) = snapshots.recv().await {
                let response = SearchResponse {
                    query_echo: s.ast.to_string(),
                    total_count: snap.merged.len(),
                    hits: snap.merged.iter().skip(s.start).take(s.rows).map(Into::into).collect(),
                    connectors: snap
                        .per_connector
                        .iter()
                        .map(|(k, v)| (k.clone(), v.label().to_string()))
                        .collect(),
                    complete: snap.complete,
                };
                if tx.send(response).await.is_err() {
                    return;
                }
            }
        });
        Ok(rx)
    }

    /// Runs a search to completion, fanning out when connectors are selected.
    pub async fn search(&self, p: &SearchParams) -> Result<SearchResponse, ApiError> {
        let prepared = self.prepare(p)?;
        if prepared.connectors.is_empty() {
            return self.search_local(&prepared);
        }
        let mut rx = self.stream(prepared)?;
        let mut last = None;
        while let Some(r) = rx.recv().await {
            last = Some(r);
        }
        Ok(last.expect("a fan-out always yields a final snapshot"))
    }

    pub fn page(&self, page_id: &str) -> Result<StoredPage, ApiError> {
        let index = self.index()?;
        let ord = index
            .page_ordinal(page_id)
            .ok_or_else(|| ApiError::NotFound(format!("unknown page '{page_id}'")))?;
        let meta = index.page_meta(ord);
        Ok(StoredPage {
            page_id: meta.page_id.clone(),
            article_id: meta.article_id.clone(),
            journal: meta.journal.clone(),
            year: meta.year,
            month: meta.month,
            page_number: meta.page_number,
            kind: meta.kind.as_str().to_string(),
            title: meta.title.clone(),
            text: index.page_text(ord).to_string(),
        })
    }

    pub fn stats(&self) -> Result<IndexStats, ApiError> {
        Ok(self.index()?.stats())
    }
}
