//! Parallel fan-out to the local index and external search connectors.
//!
//! Every selected connector runs as its own task. The coordinator emits one
//! [`FanoutOutcome`] snapshot each time a connector reaches a terminal status;
//! the last snapshot is the complete one.

mod merge;
mod mock;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use tokio::task::JoinSet;

use crate::index::InvertedIndex;
use crate::query::{execute, ArticleHit, QueryAst, SearchFilters, SearchRequest, SortOrder};

pub use merge::{compare_merged, dedup_key_external, dedup_key_local, merge, normalize_key};
pub use mock::{LatencyModel, MockConnector};

/// Status-map name of the local index.
pub const LOCAL: &str = "local";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectorDescriptor {
    pub name: String,
    pub journals_covered: Vec<String>,
    #[serde(with = "millis", rename = "timeout_ms", default = "default_timeout")]
    pub timeout: Duration,
}

fn default_timeout() -> Duration {
    DEFAULT_TIMEOUT
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

impl ConnectorDescriptor {
    pub fn new(name: impl Into<String>, journals: &[&str]) -> Self {
        ConnectorDescriptor {
            name: name.into(),
            journals_covered: journals.iter().map(|j| j.to_string()).collect(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

/// The external systems the fan-out knows about, with the journals each covers.
pub fn default_descriptors() -> Vec<ConnectorDescriptor> {
    vec![
        ConnectorDescriptor::new(
            "google-scholar-mock",
            &[
                "Monthly Notices of the Royal Astronomical Society",
                "Annual Review in Astronomy and Astrophysics",
                "Annual Review of Earth and Planetary Sciences",
                "Applied Optics",
                "Journal of the Optical Society of America",
            ],
        ),
        ConnectorDescriptor::new(
            "ucp-mock",
            &[
                "Astronomical Journal",
                "Astrophysical Journal",
                "Astrophysical Journal Letters",
                "Astrophysical Journal Supplement",
                "Publications of the Astronomical Society of the Pacific",
            ],
        ),
        ConnectorDescriptor::new("edp-mock", &["Astronomy and Astrophysics"]),
        ConnectorDescriptor::new(
            "nature-mock",
            &["Nature", "Nature Physics", "Nature Physical Science"],
        ),
        ConnectorDescriptor::new(
            "nas-mock",
            &["Proceedings of the National Academy of Science"],
        ),
    ]
}

/// A result reported by an external system. `year` is 0 when unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalHit {
    pub source: String,
    pub title: String,
    pub year: i32,
    pub journal: String,
    pub url: String,
    pub snippet_text: String,
}

/// The contract every external search adapter implements.
#[async_trait]
pub trait Connector: Send + Sync {
    fn descriptor(&self) -> &ConnectorDescriptor;

    /// Runs the query. Errors carry a human-readable reason.
    async fn search(&self, query: &str, filters: &SearchFilters) -> Result<Vec<ExternalHit>, String>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectorOutcome {
    Ok(Vec<ExternalHit>, Duration),
    Timeout,
    Failed(String),
}

/// Runs one connector under `min(deadline, descriptor timeout)`.
/// Timeouts and failures come back in-band.
pub async fn connector_search(
    connector: &dyn Connector,
    query: &str,
    filters: &SearchFilters,
    deadline: Duration,
) -> ConnectorOutcome {
    if query.trim().is_empty() {
        return ConnectorOutcome::Failed("empty query".into());
    }
    let limit = deadline.min(connector.descriptor().timeout);
    let started = Instant::now();
    match tokio::time::timeout(limit, connector.search(query, filters)).await {
        Ok(Ok(hits)) => ConnectorOutcome::Ok(hits, started.elapsed()),
        Ok(Err(reason)) => ConnectorOutcome::Failed(reason),
        Err(_) => ConnectorOutcome::Timeout,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectorStatus {
    Pending,
    Ok { hit_count: usize, elapsed: Duration },
    Timeout,
    Failed(String),
}

impl ConnectorStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, ConnectorStatus::Pending)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ConnectorStatus::Pending => "pending",
            ConnectorStatus::Ok { .. } => "ok",
            ConnectorStatus::Timeout => "timeout",
            ConnectorStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey {
    pub name: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MergedItem {
    Local(ArticleHit),
    External(ExternalHit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedHit {
    pub item: MergedItem,
    pub dedup_key: DedupKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FanoutOutcome {
    pub per_connector: BTreeMap<String, ConnectorStatus>,
    pub merged: Vec<MergedHit>,
    pub complete: bool,
}

/// Local side of a fan-out. `request.offset`/`limit` apply to the local list
/// before merging; callers normally pass the whole list and paginate after.
#[derive(Clone)]
pub struct LocalSearch {
    pub index: Arc<InvertedIndex>,
    pub ast: QueryAst,
    pub request: SearchRequest,
}

enum Finished {
    Local(Result<Vec<ArticleHit>, String>, Duration),
    External(ConnectorOutcome),
    TimedOut,
}

/// Starts every connector at once and streams snapshots as they finish.
///
/// Exactly one snapshot is sent per selected connector (the local index
/// included); the last one has `complete = true`. Dropping the receiver
/// cancels whatever is still running.
pub fn fan_out(
    local: Option<LocalSearch>,
    connectors: Vec<Arc<dyn Connector>>,
    query: String,
    filters: SearchFilters,
    sort: SortOrder,
    deadline: Duration,
) -> mpsc::Receiver<FanoutOutcome> {
    let total = connectors.len() + usize::from(local.is_some());
    let (tx, rx) = mpsc::channel(total.max(1));

    tokio::spawn(async move {
        let mut statuses: BTreeMap<String, ConnectorStatus> = BTreeMap::new();
        let mut names = HashMap::new();
        let mut tasks = JoinSet::new();

        if let Some(local) = local {
            statuses.insert(LOCAL.to_string(), ConnectorStatus::Pending);
            let id = tasks
                .spawn(async move {
                    let started = Instant::now();
                    let work = tokio::task::spawn_blocking(move || {
                        execute(&local.index, &local.ast, &local.request)
                            .map(|r| r.hits)
                            .map_err(|e| e.to_string())
                    });
                    match tokio::time::timeout(deadline, work).await {
                        Ok(Ok(result)) => Finished::Local(result, started.elapsed()),
                        Ok(Err(join)) => Finished::Local(Err(format!("local search aborted: {join}")), started.elapsed()),
                        Err(_) => Finished::TimedOut,
                    }
                })
                .id();
            names.insert(id, LOCAL.to_string());
        }
        for connector in connectors {
            let name = connector.descriptor().name.clone();
            statuses.insert(name.clone(), ConnectorStatus::Pending);
            let query = query.clone();
            let filters = filters.clone();
            let id = tasks
                .spawn(async move {
                    Finished::External(
                        connector_search(connector.as_ref(), &query, &filters, deadline).await,
                    )
                })
                .id();
            names.insert(id, name);
        }

        let mut local_hits: Vec<ArticleHit> = Vec::new();
        let mut external: Vec<(String, Vec<ExternalHit>)> = Vec::new();
        while let Some(joined) = tasks.join_next_with_id().await {
            let (name, status) = match joined {
                Ok((id, finished)) => {
                    let name = names[&id].clone();
                    let status = match finished {
                        Finished::Local(Ok(hits), elapsed) => {
                            let status = ConnectorStatus::Ok {
                                hit_count: hits.len(),
                                elapsed,
                            };
                            local_hits = hits;
                            status
                        }
                        Finished::Local(Err(reason), _) => ConnectorStatus::Failed(reason),
                        Finished::External(ConnectorOutcome::Ok(hits, elapsed)) => {
                            let status = ConnectorStatus::Ok {
                                hit_count: hits.len(),
                                elapsed,
                            };
                            external.push((name.clone(), hits));
                            status
                        }
                        Finished::External(ConnectorOutcome::Timeout) | Finished::TimedOut => {
                            ConnectorStatus::Timeout
                        }
                        Finished::External(ConnectorOutcome::Failed(reason)) => {
                            ConnectorStatus::Failed(reason)
                        }
                    };
                    (name, status)
                }
                Err(e) => (names[&e.id()].clone(), ConnectorStatus::Failed("connector panicked".into())),
            };
            statuses.insert(name, status);

            let snapshot = FanoutOutcome {
                complete: statuses.values().all(ConnectorStatus::is_terminal),
                merged: merge(&local_hits, &external, sort),
                per_connector: statuses.clone(),
            };
            if tx.send(snapshot).await.is_err() {
                // receiver gone; dropping the set aborts the rest
                return;
            }
        }
    });
    rx
}

/// Drains a fan-out and returns its final, complete snapshot.
pub async fn fan_out_complete(
    local: Option<LocalSearch>,
    connectors: Vec<Arc<dyn Connector>>,
    query: String,
    filters: SearchFilters,
    sort: SortOrder,
    deadline: Duration,
) -> FanoutOutcome {
    let mut rx = fan_out(local, connectors, query, filters, sort, deadline);
    let mut last = None;
    while let Some(s) = rx.recv().await {
        last = Some(s);
    }
    last.unwrap_or(FanoutOutcome {
        per_connector: BTreeMap::new(),
        merged: Vec::new(),
        complete: true,
    })
}
