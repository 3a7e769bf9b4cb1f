use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use folio_core::corpus::{ingest_corpus, CorpusStore, PageRecord};
use folio_core::index::build_index_from_files;
use folio_core::oracle::{naive_search, random_query};
use folio_core::query::matching_pages;
use folio_core::synth::{generate, SynthConfig};
use folio_core::{open_segment, write_segment};
use folio_service::{http, ApiError, SearchParams, Service, ServiceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(name = "folio", version, about = "Full-text search over scanned journal pages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a segment directory from a corpus manifest.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one search and print the JSON response.
    Search(SearchArgs),
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print index statistics as JSON.
    Stats {
        #[arg(long)]
        segment: PathBuf,
    },
    /// Compare indexed search against a full scan on random queries.
    OracleCheck {
        #[arg(long)]
        segment: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Write a corpus manifest back out, from a segment or a manifest.
    DumpCorpus {
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        segment: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded synthetic corpus and synonym file.
    GenCorpus {
        #[arg(long, default_value_t = 500)]
        pages: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        vocabulary: usize,
        #[arg(long, default_value_t = 5)]
        synonym_groups: usize,
        #[arg(long, default_value_t = 20)]
        min_words: usize,
        #[arg(long, default_value_t = 60)]
        max_words: usize,
        /// Directory receiving corpus.jsonl and synonyms.txt.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Defaults to the config's segment when --config is given.
    #[arg(long, required_unless_present = "config")]
    segment: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    query: String,
    #[arg(long)]
    sort: Option<String>,
    #[arg(long)]
    year_from: Option<String>,
    #[arg(long)]
    year_to: Option<String>,
    #[arg(long = "journal")]
    journals: Vec<String>,
    /// Comma-separated connector names from the config.
    #[arg(long)]
    connectors: Option<String>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    rows: Option<String>,
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Mismatch,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<folio_core::Error> for Failure {
    fn from(e: folio_core::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<folio_service::ConfigError> for Failure {
    fn from(e: folio_service::ConfigError) -> Self {
        Failure::Data(e.into())
    }
}

impl From<folio_core::QueryError> for Failure {
    fn from(e: folio_core::QueryError) -> Self {
        Failure::Data(e.into())
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        match e {
            ApiError::BadRequest { .. } => Failure::Usage(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Mismatch) => ExitCode::from(EXIT_MISMATCH),
    }
}

// The error chain, minus causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::BuildIndex { corpus, synonyms, out } => {
            let started = Instant::now();
            let index = build_index_from_files(&corpus, synonyms.as_deref())?;
            write_segment(&index, &out)?;
            let stats = index.stats();
            eprintln!(
                "indexed {} pages, {} terms in {:.2?}",
                stats.page_count,
                stats.unique_terms,
                started.elapsed()
            );
            print_json(&stats)?;
        }
        Command::Search(args) => search(args)?,
        Command::Serve { config } => {
            let config = ServiceConfig::load(&config)?;
            let service = Service::from_config(config)?;
            if let Err(e) = service.index() {
                eprintln!("warning: {e}");
            }
            runtime()?
                .block_on(http::serve(Arc::new(service)))
                .context("serving HTTP")?;
        }
        Command::Stats { segment } => print_json(&open_segment(&segment)?.stats())?,
        Command::OracleCheck {
            segment,
            corpus,
            queries,
            seed,
        } => oracle_check(&segment, &corpus, queries, seed)?,
        Command::DumpCorpus { segment, corpus, out } => {
            let store = match (segment, corpus) {
                (Some(dir), _) => corpus_from_segment(&dir)?,
                (None, Some(path)) => ingest_corpus(&path)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            match out {
                Some(path) => store.write_manifest_file(&path)?,
                None => store.write_manifest(io::stdout().lock()).context("writing manifest")?,
            }
        }
        Command::GenCorpus {
            pages,
            seed,
            vocabulary,
            synonym_groups,
            min_words,
            max_words,
            out,
        } => {
            if min_words == 0 || min_words > max_words {
                return Err(Failure::Usage(anyhow!("need 1 <= --min-words <= --max-words")));
            }
            let synth = generate(&SynthConfig {
                pages,
                words_per_page: min_words..=max_words,
                vocabulary,
                synonym_groups,
                seed,
            });
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            synth
                .corpus
                .write_manifest_file(&out.join("corpus.jsonl"))
                ?;
            fs::write(out.join("synonyms.txt"), synth.synonyms.to_text())
                .with_context(|| format!("writing {}", out.join("synonyms.txt").display()))?;
            eprintln!("wrote {} pages to {}", synth.corpus.record_count(), out.display());
        }
    }
    Ok(())
}

fn search(args: SearchArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::for_segment(args.segment.clone().expect("clap requires a segment")),
    };
    if let Some(dir) = args.segment {
        config.segment_dir = dir;
    }
    let service = Service::from_config(config)?;
    let params = SearchParams {
        q: Some(args.query),
        sort: args.sort,
        year_from: args.year_from,
        year_to: args.year_to,
        journals: args.journals,
        connectors: args.connectors,
        start: args.start,
        rows: args.rows,
    };
    let response = runtime()?.block_on(service.search(&params))?;
    print_json(&response)?;
    Ok(())
}

fn corpus_from_segment(dir: &Path) -> anyhow::Result<CorpusStore> {
    let index = open_segment(dir)?;
    let records = (0..index.page_count() as u32)
        .map(|ord| {
            let m = index.page_meta(ord);
            PageRecord {
                page_id: m.page_id.clone(),
                article_id: m.article_id.clone(),
                journal: m.journal.clone(),
                year: m.year,
                month: m.month,
                page_number: m.page_number,
                kind: m.kind,
                text: index.page_text(ord).to_string(),
                title: m.title.clone(),
            }
        })
        .collect();
    Ok(CorpusStore::from_records(records)?)
}

fn oracle_check(segment: &Path, corpus: &Path, queries: usize, seed: u64) -> Result<(), Failure> {
    let index = open_segment(segment)?;
    let corpus = ingest_corpus(corpus)?;
    let synonyms = index.synonyms().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let started = Instant::now();

    let mut asked = 0;
    let mut attempts = 0;
    while asked < queries {
        attempts += 1;
        if attempts > queries.saturating_mul(50).max(1000) {
            return Err(Failure::Data(anyhow!(
                "could not draw {queries} queries from this corpus (got {asked})"
            )));
        }
        let Some((ast, filters)) = random_query(&mut rng, &corpus, &synonyms) else {
            continue;
        };
        asked += 1;
        let indexed: BTreeSet<String> = matching_pages(&index, &ast, &filters)?
            .into_iter()
            .map(|p| index.page_meta(p).page_id.clone())
            .collect();
        let scanned: BTreeSet<String> = naive_search(&corpus, &ast, &filters, &synonyms).into_iter().collect();
        if indexed != scanned {
            println!("mismatch on query {asked}: {ast}");
            println!("filters: {filters:?}");
            println!("index only: {:?}", indexed.difference(&scanned).collect::<Vec<_>>());
            println!("scan only: {:?}", scanned.difference(&indexed).collect::<Vec<_>>());
            return Err(Failure::Mismatch);
        }
    }
    println!(
        "oracle-check: {asked} queries, 0 mismatches ({:.2?})",
        started.elapsed()
    );
    Ok(())
}
