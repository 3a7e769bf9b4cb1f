//! Seeded generator for synthetic page corpora.
//!
//! Produces OCR-flavoured text over a pseudo-word vocabulary with a skewed
//! word distribution, multi-page articles, unattached pages, stray numbers,
//! garbled tokens and a handful of synonym groups. Output depends only on the
//! configuration, so fixtures can be regenerated anywhere.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CorpusStore, PageKind, PageRecord};
use crate::textprep::SynonymTable;

const JOURNALS: [&str; 7] = ["ApJ", "AJ", "PASP", "MNRAS", "Obs", "AN", "BAAS"];
const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const GARBAGE: &[char] = &['~', '#', '$', '%', '^', '|', '*', '@'];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub pages: usize,
    pub words_per_page: RangeInclusive<usize>,
    pub vocabulary: usize,
    pub synonym_groups: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pages: 500,
            words_per_page: 20..=60,
            vocabulary: 2000,
            synonym_groups: 5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: CorpusStore,
    pub synonyms: SynonymTable,
    pub vocabulary: Vec<String>,
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(1..=4);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).unwrap() as char);
        w.push(*VOWELS.choose(rng).unwrap() as char);
    }
    if rng.random_bool(0.3) {
        w.push(*CONSONANTS.choose(rng).unwrap() as char);
    }
    w
}

fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut seen = HashSet::with_capacity(size);
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let w = pseudo_word(rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

// Rank-skewed draw: low ranks are much more frequent.
fn draw<'a>(rng: &mut ChaCha8Rng, vocab: &'a [String]) -> &'a str {
    let u: f64 = rng.random();
    let idx = ((vocab.len() as f64) * u.powf(2.5)) as usize;
    &vocab[idx.min(vocab.len() - 1)]
}

fn garble(rng: &mut ChaCha8Rng, word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let at = rng.random_range(0..=chars.len());
    let mut out: String = chars[..at].iter().collect();
    if rng.random_bool(0.5) {
        out.push(*GARBAGE.choose(rng).unwrap());
        out.extend(&chars[at..]);
    } else {
        // two letter/digit switches makes the word spurious
        out.push_str(&rng.random_range(0..10).to_string());
        out.extend(&chars[at..]);
        out.push_str(&rng.random_range(0..10).to_string());
        out.push('x');
    }
    out
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn page_text(rng: &mut ChaCha8Rng, vocab: &[String], words: usize) -> String {
    let mut out = String::new();
    let mut sentence_left = 0;
    for i in 0..words {
        if i > 0 {
            out.push(if rng.random_bool(0.02) { '\n' } else { ' ' });
        }
        let starts_sentence = sentence_left == 0;
        if starts_sentence {
            sentence_left = rng.random_range(5..=12);
        }
        let roll: f64 = rng.random();
        let mut w = if roll < 0.05 {
            rng.random_range(0..3000).to_string()
        } else if roll < 0.08 {
            let base = draw(rng, vocab);
            garble(rng, base)
        } else if roll < 0.09 {
            "a".to_string()
        } else {
            draw(rng, vocab).to_string()
        };
        if starts_sentence {
            w = capitalize(&w);
        }
        out.push_str(&w);
        sentence_left -= 1;
        if sentence_left == 0 || i + 1 == words {
            out.push('.');
            sentence_left = 0;
        } else if rng.random_bool(0.05) {
            out.push(',');
        }
    }
    out
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = vocabulary(&mut rng, cfg.vocabulary.max(8));

    // Groups drawn from mid-frequency ranks so they actually occur. Small
    // vocabularies get fewer groups.
    let band_end = (vocab.len() / 4).max(2).min(vocab.len());
    let band_start = (vocab.len() / 50).max(1).min(band_end);
    let mut band: Vec<&String> = vocab[band_start..band_end].iter().collect();
    band.shuffle(&mut rng);
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut rest = band.as_slice();
    while groups.len() < cfg.synonym_groups && rest.len() >= 2 {
        let size = rng.random_range(2..=3).min(rest.len());
        groups.push(rest[..size].iter().map(|w| (*w).clone()).collect());
        rest = &rest[size..];
    }
    let synonyms = SynonymTable::from_groups(&groups).expect("groups are disjoint");

    let mut records = Vec::with_capacity(cfg.pages);
    let mut article_seq = 0u32;
    let mut unattached_seq = 0u32;
    while records.len() < cfg.pages {
        let journal = *JOURNALS.choose(&mut rng).unwrap();
        let year = rng.random_range(1850..=2005);
        let month = rng.random_range(0..=12u8);
        let words = |rng: &mut ChaCha8Rng| rng.random_range(cfg.words_per_page.clone());

        if rng.random_bool(0.04) {
            unattached_seq += 1;
            let n = words(&mut rng);
            records.push(PageRecord {
                page_id: format!("U{unattached_seq:08}"),
                article_id: String::new(),
                journal: journal.into(),
                year,
                month,
                page_number: 0,
                kind: PageKind::Unattached,
                text: page_text(&mut rng, &vocab, n),
                title: String::new(),
            });
            continue;
        }

        article_seq += 1;
        let article_id = format!("{year}{journal}.{article_seq:07}");
        let title = if rng.random_bool(0.5) {
            let n = rng.random_range(2..=5);
            (0..n)
                .map(|_| capitalize(draw(&mut rng, &vocab)))
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            String::new()
        };
        let first_page = rng.random_range(1..=900);
        let n_pages = rng.random_range(1..=5).min(cfg.pages - records.len());
        for p in 0..n_pages {
            let page_number = first_page + p as u32;
            let n = words(&mut rng);
            records.push(PageRecord {
                page_id: format!("{article_id}.p{page_number}"),
                article_id: article_id.clone(),
                journal: journal.into(),
                year,
                month,
                page_number,
                kind: PageKind::ArticlePage,
                text: page_text(&mut rng, &vocab, n),
                title: title.clone(),
            });
        }
    }

    SynthCorpus {
        corpus: CorpusStore::from_records(records).expect("generated records are valid"),
        synonyms,
        vocabulary: vocab,
    }
}
