//! Synthetic inputs shared by the benchmarks in `benches/`.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textmut::{Dataset, Label, Sample, ScoreRecord};

const WORDS: &[&str] = &[
    "a",
    "an",
    "the",
    "man",
    "woman",
    "dog",
    "large",
    "small",
    "red",
    "quickly",
    "very",
    "riding",
    "sitting",
    "on",
    "top",
    "of",
    "next",
    "to",
    "wave",
    "surfboard",
    "table",
    "plate",
    "pizza",
    "bus",
    "street",
    "happily",
];
const SEPS: &[&str] = &[" ", " ", " ", " ", ", ", ". ", " - "];

/// Caption-like text of `words` words.
pub fn caption(rng: &mut impl Rng, words: usize) -> String {
    let mut s = String::new();
    for _ in 0..words {
        s.push_str(WORDS.choose(rng).unwrap());
        s.push_str(SEPS.choose(rng).unwrap());
    }
    s.truncate(s.trim_end().len());
    s.push('.');
    s
}

/// `n` machine-labeled captions of 8 to 20 words, five per group.
pub fn captions(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(8..=20);
            Sample::new(
                format!("m{i}"),
                format!("g{}", i / 5),
                caption(&mut rng, len),
                Label::Machine,
            )
        })
        .collect()
}

/// `n` scores with balanced labels and a mild signal.
pub fn scores(n: usize, seed: u64) -> Vec<ScoreRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let machine = i % 2 == 0;
            let shift = if machine { 0.1 } else { 0.0 };
            let score = (rng.random::<f64>() * 0.9 + shift).min(1.0);
            let label = if machine {
                Label::Machine
            } else {
                Label::Human
            };
            ScoreRecord::new(format!("r{i}"), score, label)
        })
        .collect()
}
