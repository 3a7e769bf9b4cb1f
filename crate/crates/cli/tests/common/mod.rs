#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use folio_core::federation::ConnectorDescriptor;
use folio_core::index::build_index_from_files;
use folio_service::config::ConnectorConfig;
use folio_service::{Service, ServiceConfig};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn heritage_corpus() -> PathBuf {
    fixtures().join("heritage/corpus.jsonl")
}

pub fn heritage_synonyms() -> PathBuf {
    fixtures().join("heritage/synonyms.txt")
}

/// Builds the heritage segment into `dir`.
pub fn heritage_segment(dir: &Path) {
    let ix = build_index_from_files(&heritage_corpus(), Some(&heritage_synonyms())).unwrap();
    folio_core::write_segment(&ix, dir).unwrap();
}

pub fn mock(name: &str, latency_ms: u64, fail_rate: f64) -> ConnectorConfig {
    ConnectorConfig {
        descriptor: ConnectorDescriptor::new(name, &[]),
        fixture: fixtures().join(format!("mocks/{name}.jsonl")),
        latency_min_ms: latency_ms,
        latency_max_ms: latency_ms,
        fail_rate,
        url_template: None,
        seed: 1,
    }
}

/// Service over a freshly built heritage segment. The tempdir must outlive it.
pub fn heritage_service(connectors: Vec<ConnectorConfig>) -> (tempfile::TempDir, Arc<Service>) {
    let dir = tempfile::tempdir().unwrap();
    heritage_segment(dir.path());
    let mut cfg = ServiceConfig::for_segment(dir.path());
    cfg.connectors = connectors;
    cfg.validate().unwrap();
    let svc = Service::from_config(cfg).unwrap();
    (dir, Arc::new(svc))
}
