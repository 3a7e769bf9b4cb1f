//! JSON service configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use folio_core::federation::{ConnectorDescriptor, LOCAL};
use folio_core::query::UrlTemplates;
use folio_core::snippet::{DEFAULT_WINDOW, MIN_WINDOW};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One external connector backed by a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectorConfig {
    #[serde(flatten)]
    pub descriptor: ConnectorDescriptor,
    pub fixture: PathBuf,
    #[serde(default)]
    pub latency_min_ms: u64,
    #[serde(default)]
    pub latency_max_ms: u64,
    #[serde(default)]
    pub fail_rate: f64,
    /// Result link template; `{page_id}` and `{article_id}` are substituted.
    #[serde(default)]
    pub url_template: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub segment_dir: PathBuf,
    /// Replaces the synonym table stored in the segment.
    #[serde(default)]
    pub synonyms_path: Option<PathBuf>,
    #[serde(default = "default_listen")]
    pub listen_address: String,
    #[serde(default = "default_article_template")]
    pub article_url_template: String,
    #[serde(default = "default_page_template")]
    pub page_url_template: String,
    #[serde(default)]
    pub connectors: Vec<ConnectorConfig>,
    #[serde(default = "default_rows")]
    pub default_rows: usize,
    #[serde(default = "default_window")]
    pub snippet_window: usize,
    /// Upper bound on a whole fan-out, local search included.
    #[serde(default = "default_deadline")]
    pub fanout_deadline_ms: u64,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_article_template() -> String {
    UrlTemplates::default().article
}
fn default_page_template() -> String {
    UrlTemplates::default().page
}
fn default_rows() -> usize {
    20
}
fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_deadline() -> u64 {
    5000
}

impl ServiceConfig {
    /// Defaults around a segment directory, with no connectors.
    pub fn for_segment(segment_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            segment_dir: segment_dir.into(),
            synonyms_path: None,
            listen_address: default_listen(),
            article_url_template: default_article_template(),
            page_url_template: default_page_template(),
            connectors: Vec::new(),
            default_rows: default_rows(),
            snippet_window: default_window(),
            fanout_deadline_ms: default_deadline(),
        }
    }

    /// Reads and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg: ServiceConfig =
            serde_json::from_str(&raw).map_err(|source| ConfigError::Parse {
                path: path.to_owned(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.segment_dir);
        if let Some(p) = &mut self.synonyms_path {
            resolve(p);
        }
        for c in &mut self.connectors {
            resolve(&mut c.fixture);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !self.article_url_template.contains("{article_id}") {
            return invalid("article_url_template lacks {article_id}".into());
        }
        if !self.page_url_template.contains("{page_id}") {
            return invalid("page_url_template lacks {page_id}".into());
        }
        if self.default_rows == 0 {
            return invalid("default_rows must be at least 1".into());
        }
        if self.snippet_window < MIN_WINDOW {
            return invalid(format!("snippet_window must be at least {MIN_WINDOW}"));
        }
        let mut names = BTreeSet::new();
        for c in &self.connectors {
            let name = &c.descriptor.name;
            if name.is_empty() || name == LOCAL || name.contains(',') {
                return invalid(format!("bad connector name '{name}'"));
            }
            if !names.insert(name) {
                return invalid(format!("connector '{name}' listed twice"));
            }
            if !(0.0..=1.0).contains(&c.fail_rate) {
                return invalid(format!("connector '{name}': fail_rate must be within 0..=1"));
            }
            if c.descriptor.timeout.is_zero() {
                return invalid(format!("connector '{name}': timeout_ms must be positive"));
            }
        }
        Ok(())
    }

    pub fn url_templates(&self) -> UrlTemplates {
        UrlTemplates {
            article: self.article_url_template.clone(),
            page: self.page_url_template.clone(),
        }
    }

    pub fn fanout_deadline(&self) -> Duration {
        Duration::from_millis(self.fanout_deadline_ms)
    }
}

impl ConnectorConfig {
    /// The configured range, with a missing maximum meaning a fixed delay.
    pub fn latency_range(&self) -> (u64, u64) {
        (self.latency_min_ms, self.latency_max_ms.max(self.latency_min_ms))
    }
}
