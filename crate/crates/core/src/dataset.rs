//! Labeled samples: JSONL storage, COCO caption import, and group-level
//! train/val/test splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("invalid split ratios {0:?}: each must be positive and they must sum to 1")]
    InvalidRatios([f64; 3]),
}

impl DatasetError {
    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Machine,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Machine => "machine",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Label::Human),
            "machine" => Ok(Label::Machine),
            other => Err(format!(
                "unknown label {other:?} (expected human or machine)"
            )),
        }
    }
}

/// Which samples a transform touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelFilter {
    Human,
    #[default]
    Machine,
    All,
}

impl LabelFilter {
    pub fn matches(self, label: Label) -> bool {
        match self {
            LabelFilter::All => true,
            LabelFilter::Human => label == Label::Human,
            LabelFilter::Machine => label == Label::Machine,
        }
    }
}

impl FromStr for LabelFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(LabelFilter::Human),
            "machine" => Ok(LabelFilter::Machine),
            "all" => Ok(LabelFilter::All),
            other => Err(format!(
                "unknown filter {other:?} (expected human, machine or all)"
            )),
        }
    }
}

/// Record of the transform that produced a sample's text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub id: String,
    pub group_id: String,
    pub text: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        group_id: impl Into<String>,
        text: impl Into<String>,
        label: Label,
    ) -> Self {
        Sample {
            id: id.into(),
            group_id: group_id.into(),
            text: text.into(),
            label,
            provenance: None,
        }
    }

    /// Canonical JSONL form: fixed field order, NFC text, no trailing newline.
    pub fn to_json_line(&self) -> String {
        let normalized;
        let sample = if unicode_normalization::is_nfc(&self.text) {
            self
        } else {
            normalized = Sample {
                text: self.text.nfc().collect(),
                ..self.clone()
            };
            &normalized
        };
        serde_json::to_string(sample).expect("sample serialization cannot fail")
    }

    /// Parses one JSONL line. `line_no` is used for error reporting only.
    pub fn from_json_line(line: &str, line_no: usize) -> Result<Self, DatasetError> {
        serde_json::from_str(line).map_err(|e| DatasetError::Schema {
            line: line_no,
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        Dataset { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// Distinct group ids in order of first appearance.
    pub fn groups(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.samples
            .iter()
            .filter(|s| seen.insert(s.group_id.as_str()))
            .map(|s| s.group_id.as_str())
            .collect()
    }

    /// Reads JSONL, rejecting duplicate ids.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, DatasetError> {
        let mut samples = Vec::new();
        let mut ids = HashSet::new();
        for item in SampleReader::new(reader) {
            let (line, sample) = item?;
            if !ids.insert(sample.id.clone()) {
                return Err(DatasetError::Schema {
                    line,
                    message: format!("duplicate id {:?}", sample.id),
                });
            }
            samples.push(sample);
        }
        Ok(Dataset { samples })
    }

    pub fn to_writer<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for s in &self.samples {
            writer.write_all(s.to_json_line().as_bytes())?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    }
}

impl FromIterator<Sample> for Dataset {
    fn from_iter<T: IntoIterator<Item = Sample>>(iter: T) -> Self {
        Dataset {
            samples: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Dataset {
    type Item = Sample;
    type IntoIter = std::vec::IntoIter<Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.into_iter()
    }
}

/// Streaming JSONL reader yielding `(line number, sample)`. Blank lines are
/// skipped.
pub struct SampleReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> SampleReader<R> {
    pub fn new(reader: R) -> Self {
        SampleReader {
            lines: reader.lines(),
            line_no: 0,
        }
    }
}

impl SampleReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
        Ok(SampleReader::new(BufReader::new(file)))
    }
}

impl<R: BufRead> Iterator for SampleReader<R> {
    type Item = Result<(usize, Sample), DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(DatasetError::Schema {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(Sample::from_json_line(&line, self.line_no).map(|s| (self.line_no, s)));
        }
    }
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    Dataset::from_reader(BufReader::new(file))
}

pub fn write_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    dataset
        .to_writer(BufWriter::new(file))
        .map_err(|e| DatasetError::io(path, e))
}

#[derive(Deserialize)]
struct CocoCaptions {
    #[serde(default)]
    images: Option<Vec<CocoImage>>,
    annotations: Vec<CocoAnnotation>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: u64,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    caption: String,
}

/// Parses a COCO captions annotation document. One sample per caption, grouped
/// by image, ordered by `(image_id, annotation id)`.
pub fn parse_coco(json: &str, label: Label) -> Result<Dataset, DatasetError> {
    let doc: CocoCaptions = serde_json::from_str(json).map_err(|e| DatasetError::Schema {
        line: e.line(),
        message: e.to_string(),
    })?;
    if let Some(images) = &doc.images {
        let known: HashSet<u64> = images.iter().map(|i| i.id).collect();
        if let Some(orphan) = doc
            .annotations
            .iter()
            .find(|a| !known.contains(&a.image_id))
        {
            return Err(DatasetError::Schema {
                line: 0,
                message: format!(
                    "annotation {} references unknown image {}",
                    orphan.id, orphan.image_id
                ),
            });
        }
    }
    let mut annotations = doc.annotations;
    annotations.sort_by_key(|a| (a.image_id, a.id));
    let mut samples = Vec::with_capacity(annotations.len());
    let mut ids = HashSet::new();
    for a in annotations {
        if !ids.insert(a.id) {
            return Err(DatasetError::Schema {
                line: 0,
                message: format!("duplicate annotation id {}", a.id),
            });
        }
        samples.push(Sample::new(
            format!("{label}-{}", a.id),
            a.image_id.to_string(),
            a.caption.trim(),
            label,
        ));
    }
    Ok(Dataset { samples })
}

pub fn import_coco(path: impl AsRef<Path>, label: Label) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_coco(&json, label)
}

/// Train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios {
        train: 0.70,
        val: 0.15,
        test: 0.15,
    };

    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, DatasetError> {
        let r = [train, val, test];
        let valid = r.iter().all(|x| x.is_finite() && *x > 0.0)
            && ((train + val + test) - 1.0).abs() <= 1e-9;
        if !valid {
            return Err(DatasetError::InvalidRatios(r));
        }
        Ok(SplitRatios { train, val, test })
    }

    fn as_array(self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios::DEFAULT
    }
}

impl FromStr for SplitRatios {
    type Err = String;

    /// Accepts `0.7,0.15,0.15` or `70:15:15` (the latter is rescaled).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sep = if s.contains(':') { ':' } else { ',' };
        let parts: Vec<f64> = s
            .split(sep)
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let [a, b, c] = parts[..] else {
            return Err(format!("expected three ratios, got {}", parts.len()));
        };
        let (a, b, c) = if sep == ':' {
            let total = a + b + c;
            (a / total, b / total, c / total)
        } else {
            (a, b, c)
        };
        SplitRatios::new(a, b, c).map_err(|e| e.to_string())
    }
}

/// Number of groups per split: each target `n * ratio` is floored and the
/// leftover groups go to the largest fractional remainders.
pub fn split_counts(n_groups: usize, ratios: SplitRatios) -> [usize; 3] {
    let targets = ratios.as_array().map(|r| n_groups as f64 * r);
    let mut counts = targets.map(|t| t.floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().take(n_groups.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Shuffles groups with `seed` and assigns them to train/val/test. Samples
/// keep their original relative order within each split.
pub fn split(dataset: &Dataset, ratios: SplitRatios, seed: u64) -> Splits {
    let mut groups = dataset.groups();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let [n_train, n_val, _] = split_counts(groups.len(), ratios);

    let assignment: HashMap<&str, usize> = groups
        .iter()
        .enumerate()
        .map(|(pos, g)| {
            let bucket = if pos < n_train {
                0
            } else if pos < n_train + n_val {
                1
            } else {
                2
            };
            (*g, bucket)
        })
        .collect();

    let mut buckets: [Vec<Sample>; 3] = Default::default();
    for s in &dataset.samples {
        buckets[assignment[s.group_id.as_str()]].push(s.clone());
    }
    let [train, val, test] = buckets;
    Splits {
        train: Dataset::new(train),
        val: Dataset::new(val),
        test: Dataset::new(test),
    }
}

/// Number of samples per label.
pub fn label_counts(dataset: &Dataset) -> BTreeMap<Label, usize> {
    let mut counts = BTreeMap::new();
    for s in &dataset.samples {
        *counts.entry(s.label).or_insert(0) += 1;
    }
    counts
}
