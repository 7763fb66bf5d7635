//! Random-removing augmentation.
//!
//! For each sample a fair coin decides whether to touch it. If it comes up,
//! `n` is drawn uniformly from `0..=floor(len * cap)` and `n` distinct word
//! positions, sorted ascending, are removed with the word-level operator. The
//! punctuation list is left alone.
//!
//! Every sample gets its own ChaCha8 stream seeded with
//! [`sample_seed`]`(seed, ordinal)`, so serial, parallel and chunked runs
//! produce identical output.

use num_rational::Ratio;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{detokenize, tokenize, Corpus};
use crate::dataset::{Dataset, Sample};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RrConfigError {
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfRange {
        name: &'static str,
        value: Ratio<u32>,
    },
    #[error("{name} has a zero denominator")]
    ZeroDenominator { name: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RrConfig {
    pub seed: u64,
    removal_fraction_cap: Ratio<u32>,
    apply_probability: Ratio<u32>,
}

impl RrConfig {
    /// Cap 1/3, probability 1/2.
    pub fn new(seed: u64) -> Self {
        RrConfig {
            seed,
            removal_fraction_cap: Ratio::new_raw(1, 3),
            apply_probability: Ratio::new_raw(1, 2),
        }
    }

    pub fn with_cap(mut self, cap: Ratio<u32>) -> Result<Self, RrConfigError> {
        self.removal_fraction_cap = check_unit("removal_fraction_cap", cap)?;
        Ok(self)
    }

    pub fn with_probability(mut self, p: Ratio<u32>) -> Result<Self, RrConfigError> {
        self.apply_probability = check_unit("apply_probability", p)?;
        Ok(self)
    }

    pub fn removal_fraction_cap(&self) -> Ratio<u32> {
        self.removal_fraction_cap
    }

    pub fn apply_probability(&self) -> Ratio<u32> {
        self.apply_probability
    }

    /// Largest number of words that may be removed from a text of `len` words.
    pub fn max_removals(&self, len: usize) -> usize {
        let cap = self.removal_fraction_cap;
        (len as u128 * *cap.numer() as u128 / *cap.denom() as u128) as usize
    }
}

fn check_unit(name: &'static str, r: Ratio<u32>) -> Result<Ratio<u32>, RrConfigError> {
    if *r.denom() == 0 {
        return Err(RrConfigError::ZeroDenominator { name });
    }
    if r.numer() > r.denom() {
        return Err(RrConfigError::OutOfRange { name, value: r });
    }
    Ok(r)
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the random stream for the sample at `ordinal`:
/// `splitmix64(seed ^ splitmix64(ordinal))`.
pub fn sample_seed(seed: u64, ordinal: u64) -> u64 {
    splitmix64(seed ^ splitmix64(ordinal))
}

pub fn sample_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(seed, ordinal))
}

/// What happened to one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrRecord {
    pub id: String,
    /// Coin outcome: 1 when removal was attempted.
    pub r: u8,
    pub n: usize,
    pub removed_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrOutcome {
    pub corpus: Corpus,
    pub applied: bool,
    /// Ascending word positions that were removed.
    pub removed: Vec<usize>,
}

pub fn rr_transform<R: Rng + ?Sized>(corpus: &Corpus, config: &RrConfig, rng: &mut R) -> RrOutcome {
    let p = config.apply_probability;
    let applied = rng.random_ratio(*p.numer(), *p.denom());
    if !applied {
        return RrOutcome {
            corpus: corpus.clone(),
            applied,
            removed: Vec::new(),
        };
    }
    let len = corpus.len();
    let n = rng.random_range(0..=config.max_removals(len));
    let mut removed = index::sample(rng, len, n).into_vec();
    removed.sort_unstable();

    let mut out = corpus.clone();
    for &i in &removed {
        out.remove_word(i);
    }
    RrOutcome {
        corpus: out,
        applied,
        removed,
    }
}

/// Augments one sample found at position `ordinal` of its dataset.
pub fn augment_sample(sample: &Sample, config: &RrConfig, ordinal: u64) -> (Sample, RrRecord) {
    let mut rng = sample_rng(config.seed, ordinal);
    let outcome = rr_transform(&tokenize(&sample.text), config, &mut rng);
    let mut out = sample.clone();
    if !outcome.removed.is_empty() {
        out.text = detokenize(&outcome.corpus);
    }
    let mut prov = out.provenance.take().unwrap_or_default();
    prov.seed = Some(config.seed);
    prov.removed = Some(outcome.removed.len());
    out.provenance = Some(prov);
    let record = RrRecord {
        id: sample.id.clone(),
        r: outcome.applied as u8,
        n: outcome.removed.len(),
        removed_indices: outcome.removed,
    };
    (out, record)
}

/// Augments a run of samples whose first element sits at `offset` in the
/// full dataset.
pub fn augment_samples(
    samples: &[Sample],
    config: &RrConfig,
    offset: u64,
) -> Vec<(Sample, RrRecord)> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| augment_sample(s, config, offset + i as u64))
        .collect()
}

pub fn augment_dataset(dataset: &Dataset, config: &RrConfig) -> (Dataset, Vec<RrRecord>) {
    let (samples, records) = augment_samples(&dataset.samples, config, 0)
        .into_iter()
        .unzip();
    (Dataset::new(samples), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    #[test]
    fn four_words_allow_at_most_one_removal() {
        let cfg = RrConfig::new(0);
        assert_eq!(cfg.max_removals(4), 1);
        assert_eq!(cfg.max_removals(2), 0);
        assert_eq!(cfg.max_removals(9), 3);
        let c = tokenize("this is an apple");
        for ordinal in 0..500 {
            let out = rr_transform(&c, &cfg, &mut sample_rng(7, ordinal));
            assert!(out.removed.len() <= 1);
        }
    }

    #[test]
    fn short_text_never_changes() {
        let c = tokenize("two words");
        let cfg = RrConfig::new(1).with_probability(Ratio::new(1, 1)).unwrap();
        for ordinal in 0..200 {
            let out = rr_transform(&c, &cfg, &mut sample_rng(1, ordinal));
            assert!(out.applied);
            assert_eq!(out.corpus, c);
        }
    }

    #[test]
    fn coin_zero_leaves_corpus() {
        let c = tokenize("a b c d e f g h i");
        let cfg = RrConfig::new(0).with_probability(Ratio::new(0, 1)).unwrap();
        let out = rr_transform(&c, &cfg, &mut sample_rng(0, 0));
        assert!(!out.applied);
        assert_eq!(out.corpus, c);
    }

    #[test]
    fn full_cap_can_remove_everything() {
        let c = tokenize("x y z");
        let cfg = RrConfig::new(0)
            .with_probability(Ratio::new(1, 1))
            .unwrap()
            .with_cap(Ratio::new(1, 1))
            .unwrap();
        let mut seen_all = false;
        for ordinal in 0..200 {
            let out = rr_transform(&c, &cfg, &mut sample_rng(3, ordinal));
            seen_all |= out.removed == [0, 1, 2];
        }
        assert!(seen_all);
    }

    #[test]
    fn config_validation() {
        assert!(RrConfig::new(0).with_cap(Ratio::new_raw(4, 3)).is_err());
        assert!(RrConfig::new(0)
            .with_probability(Ratio::new_raw(1, 0))
            .is_err());
    }

    #[test]
    fn dataset_is_deterministic_and_order_preserving() {
        let ds: Dataset = (0..300)
            .map(|i| {
                Sample::new(
                    format!("s{i}"),
                    format!("g{}", i / 5),
                    "a man riding a wave on top of a surfboard.",
                    Label::Machine,
                )
            })
            .collect();
        let cfg = RrConfig::new(42);
        let (a, ra) = augment_dataset(&ds, &cfg);
        let (b, rb) = augment_dataset(&ds, &cfg);
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_eq!(a.len(), 300);
        for (x, y) in a.iter().zip(ds.iter()) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.label, y.label);
        }
        let chunked: Vec<_> = ds
            .samples
            .chunks(64)
            .enumerate()
            .flat_map(|(k, chunk)| augment_samples(chunk, &cfg, (k * 64) as u64))
            .map(|(s, _)| s)
            .collect();
        assert_eq!(chunked, a.samples);
    }

    #[test]
    fn seeds_are_mixed() {
        assert_ne!(sample_seed(0, 0), sample_seed(0, 1));
        assert_ne!(sample_seed(1, 0), sample_seed(0, 1));
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
