use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Connector, ConnectorDescriptor, ExternalHit};
use crate::corpus::{ingest_corpus, PageRecord};
use crate::error::Result;
use crate::oracle::page_matches;
use crate::query::{parse_query, SearchFilters};
use crate::snippet::extract_snippet;
use crate::textprep::{tokenize, SynonymTable};

/// Uniform response delay in milliseconds, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyModel {
    pub min_ms: u64,
    pub max_ms: u64,
}

impl LatencyModel {
    pub fn fixed(ms: u64) -> Self {
        LatencyModel { min_ms: ms, max_ms: ms }
    }

    pub fn uniform(min_ms: u64, max_ms: u64) -> Self {
        LatencyModel {
            min_ms: min_ms.min(max_ms),
            max_ms: min_ms.max(max_ms),
        }
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::fixed(0)
    }
}

/// A stand-in for an external search system, answering from a small page
/// fixture with configurable latency and fault injection.
pub struct MockConnector {
    descriptor: ConnectorDescriptor,
    records: Vec<PageRecord>,
    latency: LatencyModel,
    fail_rate: f64,
    url_template: String,
    rng: Mutex<ChaCha8Rng>,
}

impl MockConnector {
    pub fn new(descriptor: ConnectorDescriptor, records: Vec<PageRecord>) -> Self {
        MockConnector {
            descriptor,
            records,
            latency: LatencyModel::default(),
            fail_rate: 0.0,
            url_template: "{page_id}".into(),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(0)),
        }
    }

    pub fn from_fixture(descriptor: ConnectorDescriptor, path: &Path) -> Result<Self> {
        let store = ingest_corpus(path)?;
        Ok(MockConnector::new(descriptor, store.records().to_vec()))
    }

    pub fn with_latency(mut self, latency: LatencyModel) -> Self {
        self.latency = latency;
        self
    }

    pub fn with_fail_rate(mut self, fail_rate: f64) -> Self {
        self.fail_rate = fail_rate.clamp(0.0, 1.0);
        self
    }

    pub fn with_seed(self, seed: u64) -> Self {
        *self.rng.lock().unwrap() = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    /// `{page_id}` and `{article_id}` are substituted.
    pub fn with_url_template(mut self, template: impl Into<String>) -> Self {
        self.url_template = template.into();
        self
    }

    fn roll(&self) -> (Duration, bool) {
        let mut rng = self.rng.lock().unwrap();
        let ms = rng.random_range(self.latency.min_ms..=self.latency.max_ms);
        let fail = self.fail_rate > 0.0 && rng.random_bool(self.fail_rate);
        (Duration::from_millis(ms), fail)
    }

    fn answer(&self, query: &str, filters: &SearchFilters) -> Result<Vec<ExternalHit>, String> {
        let ast = parse_query(query).map_err(|e| e.to_string())?;
        let none = SynonymTable::default();
        let mut hits = Vec::new();
        for r in &self.records {
            if !filters.admits_year(r.year) {
                continue;
            }
            let haystack = if r.title.is_empty() {
                r.text.clone()
            } else {
                format!("{}\n{}", r.title, r.text)
            };
            if !page_matches(&haystack, &ast, &none) {
                continue;
            }
            let first: Vec<(usize, usize)> = tokenize(&r.text)
                .into_iter()
                .filter(|t| ast.atoms().iter().any(|a| a.words().iter().any(|w| w.word == t.term)))
                .take(1)
                .map(|t| (t.byte_start, t.byte_end))
                .collect();
            let snippet_text = extract_snippet(&r.text, &first, crate::snippet::DEFAULT_WINDOW)
                .map(|s| s.text)
                .unwrap_or_default();
            hits.push(ExternalHit {
                source: self.descriptor.name.clone(),
                title: if r.title.is_empty() { r.page_id.clone() } else { r.title.clone() },
                year: r.year,
                journal: r.journal.clone(),
                url: self
                    .url_template
                    .replace("{page_id}", &r.page_id)
                    .replace("{article_id}", &r.article_id),
                snippet_text,
            });
        }
        Ok(hits)
    }
}

#[async_trait]
impl Connector for MockConnector {
    fn descriptor(&self) -> &ConnectorDescriptor {
        &self.descriptor
    }

    async fn search(&self, query: &str, filters: &SearchFilters) -> Result<Vec<ExternalHit>, String> {
        let (delay, fail) = self.roll();
        tokio::time::sleep(delay).await;
        if fail {
            return Err("injected fault".into());
        }
        self.answer(query, filters)
    }
}
