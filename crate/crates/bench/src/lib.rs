//! Shared fixtures for the criterion benchmarks.

use folio_core::synth::{generate, SynthConfig, SynthCorpus};
use folio_core::{build_index, InvertedIndex};

/// A synthetic corpus of `pages` pages and its index, seeded for repeatability.
pub fn indexed_corpus(pages: usize) -> (SynthCorpus, InvertedIndex) {
    let synth = generate(&SynthConfig {
        pages,
        words_per_page: 25..=35,
        vocabulary: 20_000,
        ..SynthConfig::default()
    });
    let index = build_index(&synth.corpus, synth.synonyms.clone()).expect("synthetic corpus indexes");
    (synth, index)
}
