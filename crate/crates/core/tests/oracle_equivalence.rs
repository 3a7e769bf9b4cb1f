//! The index must agree with the full-scan matcher on every query.

use std::collections::BTreeSet;

use folio_core::oracle::{naive_search, random_query};
use folio_core::query::matching_pages;
use folio_core::synth::{generate, SynthConfig};
use folio_core::build_index;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check(pages: usize, vocabulary: usize, seed: u64, queries: usize) -> Result<(), TestCaseError> {
    let synth = generate(&SynthConfig {
        pages,
        vocabulary,
        seed,
        ..SynthConfig::default()
    });
    let ix = build_index(&synth.corpus, synth.synonyms.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut asked = 0;
    for _ in 0..queries * 20 {
        if asked == queries {
            break;
        }
        let Some((ast, filters)) = random_query(&mut rng, &synth.corpus, &synth.synonyms) else {
            continue;
        };
        asked += 1;
        let fast: BTreeSet<String> = matching_pages(&ix, &ast, &filters)
            .unwrap()
            .into_iter()
            .map(|p| ix.page_meta(p).page_id.clone())
            .collect();
        let slow: BTreeSet<String> = naive_search(&synth.corpus, &ast, &filters, &synth.synonyms)
            .into_iter()
            .collect();
        prop_assert_eq!(fast, slow, "query {} filters {:?}", ast, filters);
    }
    prop_assert_eq!(asked, queries);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn index_matches_full_scan(pages in 1usize..=1000, vocabulary in 20usize..=3000, seed in any::<u64>()) {
        check(pages, vocabulary, seed, 25)?;
    }
}

#[test]
fn reference_corpus() {
    check(500, 2000, 42, 200).unwrap();
}

#[test]
fn tiny_vocabulary_stresses_phrases() {
    check(200, 8, 7, 200).unwrap();
}
