//! Full-text search over scanned journal pages.
//!
//! Pages come in through a JSON-lines manifest ([`corpus`]), are tokenized by
//! [`textprep`], and land in a positional inverted index ([`index`]) that can
//! be written to and reopened from a segment directory. [`query`] parses and
//! runs conjunctive term and phrase queries, [`snippet`] cuts highlighted
//! excerpts, and [`federation`] fans a query out to external connectors and
//! merges what comes back.
//!
//! [`oracle`] is a slow full-scan matcher used to cross-check the index, and
//! [`synth`] generates reproducible test corpora.

pub mod codec;
pub mod corpus;
pub mod error;
pub mod federation;
pub mod index;
pub mod oracle;
pub mod query;
pub mod snippet;
pub mod synth;
pub mod textprep;

pub use corpus::{ingest_corpus, CorpusStore, PageKind, PageRecord};
pub use error::{Error, QueryError, Result};
pub use federation::{
    fan_out, fan_out_complete, Connector, ConnectorDescriptor, ConnectorStatus, ExternalHit,
    FanoutOutcome, MergedHit, MergedItem, MockConnector,
};
pub use index::{build_index, open_segment, write_segment, IndexStats, InvertedIndex};
pub use query::{
    execute, parse_query, ArticleHit, PageHit, QueryAst, SearchFilters, SearchRequest,
    SearchResults, SortOrder,
};
pub use snippet::{extract_snippet, Snippet};
pub use textprep::{tokenize, SynonymTable, Token};
