//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{fixtures, heritage_corpus, heritage_synonyms};
use folio_core::federation::{
    dedup_key_external, fan_out_complete, merge, Connector, ConnectorDescriptor, ConnectorStatus,
    LatencyModel, LocalSearch, MergedItem, MockConnector,
};
use folio_core::index::build_index_from_files;
use folio_core::query::matching_pages;
use folio_core::synth::{generate, SynthConfig};
use folio_core::textprep::tokenize;
use folio_core::{
    build_index, execute, open_segment, parse_query, write_segment, InvertedIndex, SearchFilters,
    SearchRequest, SortOrder,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn heritage_index() -> InvertedIndex {
    build_index_from_files(&heritage_corpus(), Some(&heritage_synonyms())).unwrap()
}

fn oldest(index: &InvertedIndex, q: &str) -> folio_core::SearchResults {
    let req = SearchRequest {
        sort: SortOrder::OldestFirst,
        limit: usize::MAX,
        ..SearchRequest::default()
    };
    execute(index, &parse_query(q).unwrap(), &req).unwrap()
}

fn heritage_scenarios() -> Outcome {
    let started = Instant::now();
    let ix = heritage_index();

    let r = oldest(&ix, "\"critical mass\"");
    let first = r.hits.first().ok_or("no hits for \"critical mass\"")?;
    ensure(first.year == 1919 && first.journal == "PASP", || {
        format!("first hit {} {}", first.journal, first.year)
    })?;
    ensure(r.hits.iter().all(|h| h.year != 1950), || "1950 page not excluded".into())?;

    let r = oldest(&ix, "planet pluto");
    let first = r.hits.first().ok_or("no hits for planet pluto")?;
    ensure(first.year == 1898 && first.journal == "Obs", || {
        format!("first hit {} {}", first.journal, first.year)
    })?;

    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("1919 PASP and 1898 Obs first, {elapsed:.1?}"))
}

fn synonym_semantics() -> Outcome {
    let ix = heritage_index();
    let corpus = folio_core::ingest_corpus(&heritage_corpus()).unwrap();
    // independent reading of the pages: lowercase alphabetic runs
    let words = |text: &str| -> HashSet<String> {
        text.split(|c: char| !c.is_alphabetic())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect()
    };
    let containing = |any_of: &[&str]| -> BTreeSet<String> {
        corpus
            .records()
            .iter()
            .filter(|r| {
                let ws = words(&r.text);
                any_of.iter().any(|w| ws.contains(*w))
            })
            .map(|r| r.page_id.clone())
            .collect()
    };
    let got = |q: &str| -> BTreeSet<String> {
        matching_pages(&ix, &parse_query(q).unwrap(), &SearchFilters::default())
            .unwrap()
            .into_iter()
            .map(|p| ix.page_meta(p).page_id.clone())
            .collect()
    };

    let expanded = containing(&["galaxy", "galaxies", "extragalactic"]);
    let exact = containing(&["extragalactic"]);
    let galaxy_only = containing(&["galaxy"]);
    ensure(!galaxy_only.is_empty() && galaxy_only.is_disjoint(&exact), || {
        "fixture lacks a page with only \"galaxy\"".into()
    })?;
    let loose = got("extragalactic");
    ensure(loose == expanded, || format!("extragalactic -> {loose:?}, expected {expanded:?}"))?;
    let strict = got("=extragalactic");
    ensure(strict == exact, || format!("=extragalactic -> {strict:?}, expected {exact:?}"))?;
    Ok(format!("{} pages expanded, {} exact", loose.len(), strict.len()))
}

fn folio(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_folio")).args(args).output().unwrap()
}

fn oracle_equivalence(work: &Path) -> Outcome {
    let gen = work.join("gen500");
    let seg = work.join("seg500");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let started = Instant::now();
    let out = folio(&[
        "gen-corpus", "--pages", "500", "--seed", "42", "--vocabulary", "2000",
        "--synonym-groups", "5", "--out", &s(&gen),
    ]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let corpus = s(&gen.join("corpus.jsonl"));
    let out = folio(&[
        "build-index", "--corpus", &corpus, "--synonyms", &s(&gen.join("synonyms.txt")),
        "--out", &s(&seg),
    ]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let check_started = Instant::now();
    let out = folio(&[
        "oracle-check", "--segment", &s(&seg), "--corpus", &corpus, "--queries", "200",
        "--seed", "42",
    ]);
    let check = check_started.elapsed();
    ensure(out.status.code() == Some(0), || {
        format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stdout).trim())
    })?;
    ensure(check < Duration::from_secs(60), || format!("oracle-check took {check:?}"))?;
    Ok(format!(
        "200 queries agree; oracle-check {check:.2?}, end to end {:.2?}",
        started.elapsed()
    ))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn persistence(work: &Path) -> Outcome {
    let cfg = SynthConfig::default();
    let mut terms = 0;
    for (name, build) in [
        ("heritage", Box::new(heritage_index) as Box<dyn Fn() -> InvertedIndex>),
        (
            "synthetic",
            Box::new(move || {
                let s = generate(&cfg);
                build_index(&s.corpus, s.synonyms).unwrap()
            }),
        ),
    ] {
        let (a, b) = (work.join(format!("{name}-a")), work.join(format!("{name}-b")));
        let built = build();
        write_segment(&built, &a).map_err(|e| e.to_string())?;
        let opened = open_segment(&a).map_err(|e| e.to_string())?;
        ensure(built.lexicon() == opened.lexicon(), || format!("{name}: lexicon differs"))?;
        for entry in built.lexicon() {
            ensure(built.postings(&entry.term) == opened.postings(&entry.term), || {
                format!("{name}: postings differ for '{}'", entry.term)
            })?;
        }
        terms += built.lexicon().len();
        write_segment(&build(), &b).map_err(|e| e.to_string())?;
        ensure(dir_bytes(&a) == dir_bytes(&b), || format!("{name}: rebuild not byte-identical"))?;
    }
    Ok(format!("{terms} posting lists identical, rebuilds byte-identical"))
}

fn mock(name: &str, latency: LatencyModel, fail_rate: f64, seed: u64) -> Arc<dyn Connector> {
    let path = fixtures().join(format!("mocks/{name}.jsonl"));
    let mut descriptor = ConnectorDescriptor::new(name, &[]);
    descriptor.timeout = Duration::from_secs(5);
    Arc::new(
        MockConnector::from_fixture(descriptor, &path)
            .unwrap()
            .with_latency(latency)
            .with_fail_rate(fail_rate)
            .with_seed(seed),
    )
}

fn federation(rt: &tokio::runtime::Runtime) -> Outcome {
    let index = Arc::new(heritage_index());
    let queries = ["pluto", "\"critical mass\"", "planet", "critical mass", "mass"];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut slowest = Duration::ZERO;

    for rep in 0..20 {
        let q = *queries.choose(&mut rng).unwrap();
        let sort = *[SortOrder::Relevance, SortOrder::OldestFirst, SortOrder::NewestFirst]
            .choose(&mut rng)
            .unwrap();
        let local = LocalSearch {
            index: index.clone(),
            ast: parse_query(q).unwrap(),
            request: SearchRequest {
                sort,
                limit: usize::MAX,
                ..SearchRequest::default()
            },
        };

        // three connectors at 100 ms each, run in parallel
        let names = ["google-scholar-mock", "nature-mock", "ucp-mock"];
        let parallel: Vec<Arc<dyn Connector>> = names
            .iter()
            .map(|n| mock(n, LatencyModel::fixed(100), 0.0, rng.random()))
            .collect();
        let started = Instant::now();
        let out = rt.block_on(fan_out_complete(
            Some(local.clone()),
            parallel,
            q.into(),
            SearchFilters::default(),
            sort,
            Duration::from_secs(2),
        ));
        let wall = started.elapsed();
        slowest = slowest.max(wall);
        ensure(out.complete, || format!("rep {rep}: parallel fan-out incomplete"))?;
        ensure(wall < Duration::from_millis(250), || format!("rep {rep}: took {wall:?}"))?;
        ensure(out.per_connector.values().all(|s| s.label() == "ok"), || {
            format!("rep {rep}: {:?}", out.per_connector)
        })?;

        // one failing, one timing out, two healthy
        let deadline = Duration::from_millis(rng.random_range(150..=250));
        let healthy = ["nas-mock", "ucp-mock"];
        let mut connectors = vec![
            mock("nature-mock", LatencyModel::uniform(0, 50), 1.0, rng.random()),
            mock("edp-mock", LatencyModel::uniform(400, 800), 0.0, rng.random()),
        ];
        for name in healthy {
            connectors.push(mock(name, LatencyModel::uniform(0, 60), 0.0, rng.random()));
        }
        connectors.shuffle(&mut rng);
        let out = rt.block_on(fan_out_complete(
            Some(local.clone()),
            connectors,
            q.into(),
            SearchFilters::default(),
            sort,
            deadline,
        ));
        ensure(out.complete, || format!("rep {rep}: not complete"))?;
        ensure(matches!(out.per_connector["nature-mock"], ConnectorStatus::Failed(_)), || {
            format!("rep {rep}: nature-mock {:?}", out.per_connector["nature-mock"])
        })?;
        ensure(out.per_connector["edp-mock"] == ConnectorStatus::Timeout, || {
            format!("rep {rep}: edp-mock {:?}", out.per_connector["edp-mock"])
        })?;
        let keys: Vec<_> = out.merged.iter().map(|m| &m.dedup_key).collect();
        ensure(keys.len() == keys.iter().collect::<HashSet<_>>().len(), || {
            format!("rep {rep}: duplicate dedup keys")
        })?;

        // everything the healthy sources returned is accounted for
        let local_hits = execute(&index, &local.ast, &local.request).unwrap().hits;
        let mut externals = Vec::new();
        for name in healthy {
            let m = mock(name, LatencyModel::fixed(0), 0.0, 0);
            let hits = rt.block_on(m.search(q, &SearchFilters::default())).unwrap();
            externals.push((name.to_string(), hits));
        }
        let expected = merge(&local_hits, &externals, sort);
        ensure(out.merged == expected, || format!("rep {rep}: merged list differs from expected"))?;
        let present: HashSet<_> = keys.into_iter().collect();
        for (_, hits) in &externals {
            for h in hits {
                ensure(present.contains(&dedup_key_external(h)), || {
                    format!("rep {rep}: lost '{}' from {}", h.title, h.source)
                })?;
            }
        }
        ensure(
            out.merged
                .iter()
                .filter(|m| matches!(m.item, MergedItem::Local(_)))
                .count()
                > 0
                || local_hits.is_empty(),
            || format!("rep {rep}: local hits missing"),
        )?;
    }
    Ok(format!("20 repetitions; slowest 3x100 ms fan-out {slowest:.1?}"))
}

fn scale() -> Outcome {
    let cfg = SynthConfig {
        pages: 100_000,
        words_per_page: 25..=35,
        vocabulary: 50_000,
        synonym_groups: 20,
        seed: 7,
    };
    let synth = generate(&cfg);

    let started = Instant::now();
    let ix = build_index(&synth.corpus, synth.synonyms.clone()).map_err(|e| e.to_string())?;
    let build = started.elapsed();
    ensure(build < Duration::from_secs(300), || format!("build took {build:?}"))?;

    let naive: HashSet<String> = synth
        .corpus
        .records()
        .iter()
        .flat_map(|r| tokenize(&r.text))
        .filter(|t| t.indexable)
        .map(|t| t.term)
        .collect();
    let unique = ix.stats().unique_terms;
    ensure(unique as usize == naive.len(), || {
        format!("unique_terms {unique} != naive {}", naive.len())
    })?;

    // two-term queries built from words that co-occur on a random page
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut timings = Vec::with_capacity(100);
    let mut matched = 0;
    while timings.len() < 100 {
        let page = synth.corpus.records().choose(&mut rng).unwrap();
        let terms: Vec<String> = tokenize(&page.text)
            .into_iter()
            .filter(|t| t.indexable)
            .map(|t| t.term)
            .collect();
        let (Some(a), Some(b)) = (terms.choose(&mut rng), terms.choose(&mut rng)) else {
            continue;
        };
        if a == b {
            continue;
        }
        let ast = parse_query(&format!("{a} {b}")).unwrap();
        let started = Instant::now();
        let r = execute(&ix, &ast, &SearchRequest::default()).unwrap();
        timings.push(started.elapsed());
        matched += r.total_count;
    }
    timings.sort();
    let median = timings[timings.len() / 2];
    ensure(median < Duration::from_millis(50), || format!("median query {median:?}"))?;
    Ok(format!(
        "build {build:.1?}, {unique} terms, median query {median:.2?} (max {:.2?}, {} articles matched in total)",
        timings[timings.len() - 1],
        matched
    ))
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();

    let criteria: Vec<Criterion> = vec![
        ("heritage scenarios", Box::new(heritage_scenarios)),
        ("synonym semantics", Box::new(synonym_semantics)),
        ("oracle equivalence", Box::new(|| oracle_equivalence(work.path()))),
        ("persistence", Box::new(|| persistence(work.path()))),
        ("federation", Box::new(|| federation(&rt))),
        ("scale smoke", Box::new(scale)),
    ];

    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
