//! Detector evaluation: AUC, accuracy and F1 per classification task, and the
//! metric-by-task report.
//!
//! The positive class is `machine`. A record is predicted machine when its
//! score is at least the threshold (0.5 by default).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::Label;
use crate::mutation::{PresetId, WordClass};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("AUC needs both classes, got {n_pos} machine and {n_neg} human records")]
    DegenerateClasses { n_pos: usize, n_neg: usize },
    #[error("no records to evaluate")]
    EmptyInput,
    #[error("record {id:?} has score {score} outside [0, 1]")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("record {id:?} in the {expected} set is labeled {found}")]
    LabelMismatch {
        id: String,
        expected: Label,
        found: Label,
    },
    #[error("task {task}: {source}")]
    Task {
        task: TaskId,
        #[source]
        source: Box<MetricError>,
    },
}

/// A detector's score for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub score: f64,
    pub label: Label,
}

impl ScoreRecord {
    pub fn new(id: impl Into<String>, score: f64, label: Label) -> Self {
        ScoreRecord {
            id: id.into(),
            score,
            label,
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if (0.0..=1.0).contains(&self.score) {
            Ok(())
        } else {
            Err(MetricError::ScoreOutOfRange {
                id: self.id.clone(),
                score: self.score,
            })
        }
    }
}

fn validate_all(records: &[ScoreRecord]) -> Result<(), MetricError> {
    records.iter().try_for_each(ScoreRecord::validate)
}

/// AUC as an exact ratio: the Mann-Whitney count with ties as half wins.
///
/// Both fields are doubled so they stay integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactAuc {
    /// `2 * wins + ties` over all (machine, human) pairs.
    pub twice_u: u64,
    /// `2 * n_pos * n_neg`.
    pub twice_pairs: u64,
}

impl ExactAuc {
    pub fn value(self) -> f64 {
        self.twice_u as f64 / self.twice_pairs as f64
    }

    /// The AUC obtained by swapping the two labels.
    pub fn complement(self) -> ExactAuc {
        ExactAuc {
            twice_u: self.twice_pairs - self.twice_u,
            twice_pairs: self.twice_pairs,
        }
    }
}

/// Rank-based Mann-Whitney AUC in O(n log n), with exact tie handling.
pub fn auc_exact(records: &[ScoreRecord]) -> Result<ExactAuc, MetricError> {
    validate_all(records)?;
    let n_pos = records.iter().filter(|r| r.label == Label::Machine).count();
    let n_neg = records.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::DegenerateClasses { n_pos, n_neg });
    }

    let mut sorted: Vec<(f64, Label)> = records.iter().map(|r| (r.score, r.label)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut twice_u = 0u64;
    let mut neg_below = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        let (mut pos, mut neg) = (0u64, 0u64);
        while i < sorted.len() && sorted[i].0 == score {
            match sorted[i].1 {
                Label::Machine => pos += 1,
                Label::Human => neg += 1,
            }
            i += 1;
        }
        twice_u += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
    }
    Ok(ExactAuc {
        twice_u,
        twice_pairs: 2 * n_pos as u64 * n_neg as u64,
    })
}

pub fn auc(records: &[ScoreRecord]) -> Result<f64, MetricError> {
    auc_exact(records).map(ExactAuc::value)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_records(records: &[ScoreRecord], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for r in records {
            let predicted_machine = r.score >= threshold;
            match (predicted_machine, r.label) {
                (true, Label::Machine) => c.tp += 1,
                (true, Label::Human) => c.fp += 1,
                (false, Label::Human) => c.tn += 1,
                (false, Label::Machine) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// `2TP / (2TP + FP + FN)`, 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

pub fn acc(records: &[ScoreRecord], threshold: f64) -> Result<f64, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    validate_all(records)?;
    Ok(Confusion::from_records(records, threshold).accuracy())
}

pub fn f1(records: &[ScoreRecord], threshold: f64) -> Result<f64, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    validate_all(records)?;
    Ok(Confusion::from_records(records, threshold).f1())
}

/// ROC points `(fpr, tpr)` from the strictest threshold down, starting at
/// `(0, 0)` and ending at `(1, 1)`.
pub fn roc_points(records: &[ScoreRecord]) -> Result<Vec<(f64, f64)>, MetricError> {
    auc_exact(records)?;
    let n_pos = records.iter().filter(|r| r.label == Label::Machine).count() as f64;
    let n_neg = records.len() as f64 - n_pos;
    let mut sorted: Vec<&ScoreRecord> = records.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].score;
        while i < sorted.len() && sorted[i].score == s {
            match sorted[i].label {
                Label::Machine => tp += 1,
                Label::Human => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg, tp as f64 / n_pos));
    }
    Ok(points)
}

/// One of the seven classification tasks: human text against unmodified
/// machine text, or against machine text mutated by one operator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskId {
    HvM,
    HvMMwr,
    HvMMwj,
    HvMMwd,
    HvMMcr,
    HvMMcj,
    HvMMcd,
}

impl TaskId {
    /// Report column order.
    pub const ALL: [TaskId; 7] = [
        TaskId::HvM,
        TaskId::HvMMwr,
        TaskId::HvMMwj,
        TaskId::HvMMwd,
        TaskId::HvMMcr,
        TaskId::HvMMcj,
        TaskId::HvMMcd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::HvM => "HvM",
            TaskId::HvMMwr => "HvM_mwr",
            TaskId::HvMMwj => "HvM_mwj",
            TaskId::HvMMwd => "HvM_mwd",
            TaskId::HvMMcr => "HvM_mcr",
            TaskId::HvMMcj => "HvM_mcj",
            TaskId::HvMMcd => "HvM_mcd",
        }
    }

    pub fn is_mutation(self) -> bool {
        self != TaskId::HvM
    }

    /// Both letter variants of a character preset map to the same task.
    pub fn for_preset(id: PresetId) -> TaskId {
        use crate::mutation::OperatorLevel::*;
        match (id.level(), id.word_class()) {
            (Word, WordClass::Articles) => TaskId::HvMMwr,
            (Word, WordClass::Adjectives) => TaskId::HvMMwj,
            (Word, WordClass::Adverbs) => TaskId::HvMMwd,
            (Char, WordClass::Articles) => TaskId::HvMMcr,
            (Char, WordClass::Adjectives) => TaskId::HvMMcj,
            (Char, WordClass::Adverbs) => TaskId::HvMMcd,
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = String;

    /// Accepts task ids (`HvM_mwr`), bare operator codes (`mwr`, `mcr`),
    /// preset ids (`mcr-a`) and `HvM`/`base` for the unmutated task.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(t) = TaskId::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
        {
            return Ok(t);
        }
        if s.eq_ignore_ascii_case("base") || s.eq_ignore_ascii_case("m") {
            return Ok(TaskId::HvM);
        }
        if let Ok(p) = s.parse::<PresetId>() {
            return Ok(TaskId::for_preset(p));
        }
        TaskId::ALL
            .into_iter()
            .find(|t| t.as_str().strip_prefix("HvM_") == Some(s))
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Auc,
    Acc,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Auc, Metric::Acc, Metric::F1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "AUC",
            Metric::Acc => "ACC",
            Metric::F1 => "F1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task_id: TaskId,
    pub auc: f64,
    pub acc: f64,
    pub f1: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl TaskResult {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Auc => self.auc,
            Metric::Acc => self.acc,
            Metric::F1 => self.f1,
        }
    }

    pub fn evaluate(
        task: TaskId,
        records: &[ScoreRecord],
        threshold: f64,
    ) -> Result<Self, MetricError> {
        let auc = auc_exact(records)?;
        let confusion = Confusion::from_records(records, threshold);
        Ok(TaskResult {
            task_id: task,
            auc: auc.value(),
            acc: confusion.accuracy(),
            f1: confusion.f1(),
            n_pos: confusion.tp + confusion.fn_,
            n_neg: confusion.tn + confusion.fp,
        })
    }
}

/// Evaluates every machine set against the shared human set.
pub fn run_tasks(
    human: &[ScoreRecord],
    machine_sets: &BTreeMap<TaskId, Vec<ScoreRecord>>,
    threshold: f64,
) -> Result<Vec<TaskResult>, MetricError> {
    for r in human {
        if r.label != Label::Human {
            return Err(MetricError::LabelMismatch {
                id: r.id.clone(),
                expected: Label::Human,
                found: r.label,
            });
        }
    }
    machine_sets
        .iter()
        .map(|(&task, machine)| {
            let tag = |e: MetricError| MetricError::Task {
                task,
                source: Box::new(e),
            };
            if machine.is_empty() {
                return Err(tag(MetricError::EmptyInput));
            }
            if let Some(r) = machine.iter().find(|r| r.label != Label::Machine) {
                return Err(tag(MetricError::LabelMismatch {
                    id: r.id.clone(),
                    expected: Label::Machine,
                    found: r.label,
                }));
            }
            let mut records = Vec::with_capacity(human.len() + machine.len());
            records.extend_from_slice(human);
            records.extend_from_slice(machine);
            TaskResult::evaluate(task, &records, threshold).map_err(tag)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct MetricRow {
    auc: f64,
    acc: f64,
    f1: f64,
    n_pos: usize,
    n_neg: usize,
}

/// Task results in report column order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub results: Vec<TaskResult>,
}

impl EvalReport {
    pub fn new(mut results: Vec<TaskResult>) -> Self {
        results.sort_by_key(|r| r.task_id);
        EvalReport { results }
    }

    pub fn get(&self, task: TaskId) -> Option<&TaskResult> {
        self.results.iter().find(|r| r.task_id == task)
    }

    /// Arithmetic mean of `metric` over the mutation tasks present.
    pub fn mutation_average(&self, metric: Metric) -> Option<f64> {
        mutation_average(&self.results, metric)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    /// Metric-by-task plain-text table.
    pub fn to_table(&self) -> String {
        let mut headers = vec!["Metric".to_owned()];
        headers.extend(self.results.iter().map(|r| r.task_id.to_string()));
        let mut rows = vec![headers];
        for m in Metric::ALL {
            let mut row = vec![m.name().to_owned()];
            row.extend(self.results.iter().map(|r| format!("{:.4}", r.metric(m))));
            rows.push(row);
        }
        let mut row = vec!["n(M/H)".to_owned()];
        row.extend(
            self.results
                .iter()
                .map(|r| format!("{}/{}", r.n_pos, r.n_neg)),
        );
        rows.push(row);

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (k, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if k == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }
}

impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.results.len()))?;
        for r in &self.results {
            let row = MetricRow {
                auc: r.auc,
                acc: r.acc,
                f1: r.f1,
                n_pos: r.n_pos,
                n_neg: r.n_neg,
            };
            map.serialize_entry(r.task_id.as_str(), &row)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for EvalReport {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, MetricRow>::deserialize(deserializer)?;
        let results = raw
            .into_iter()
            .map(|(k, v)| {
                let task_id = k.parse::<TaskId>().map_err(serde::de::Error::custom)?;
                Ok(TaskResult {
                    task_id,
                    auc: v.auc,
                    acc: v.acc,
                    f1: v.f1,
                    n_pos: v.n_pos,
                    n_neg: v.n_neg,
                })
            })
            .collect::<Result<Vec<_>, D::Error>>()?;
        Ok(EvalReport::new(results))
    }
}

/// Arithmetic mean of `metric` over the mutation tasks in `results`.
pub fn mutation_average(results: &[TaskResult], metric: Metric) -> Option<f64> {
    let values: Vec<f64> = results
        .iter()
        .filter(|r| r.task_id.is_mutation())
        .map(|r| r.metric(metric))
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
