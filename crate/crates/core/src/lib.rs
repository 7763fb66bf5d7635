//! Close-ended adversarial text generation and detector evaluation.
//!
//! * [`corpus`]: lossless word/punctuation decomposition of a text.
//! * [`lexicon`]: word-class lists (articles, adjectives, adverbs).
//! * [`mutation`]: character- and word-level operators and the nine presets.
//! * [`augment`]: random-removing augmentation of training data.
//! * [`dataset`]: labeled samples, COCO caption import, group-level splits.
//! * [`metrics`]: AUC, accuracy, F1 and the per-task report.
//! * [`scorer`]: JSONL protocol to external detectors plus a mock scorer.

pub mod augment;
pub mod corpus;
pub mod dataset;
pub mod lexicon;
pub mod metrics;
pub mod mutation;
pub mod scorer;

pub use augment::{augment_dataset, rr_transform, RrConfig, RrRecord};
pub use corpus::{detokenize, tokenize, Corpus, PunctAnchor, WordToken};
pub use dataset::{
    import_coco, read_jsonl, split, write_jsonl, Dataset, DatasetError, Label, LabelFilter, Sample,
    SplitRatios,
};
pub use lexicon::{load_lexicon, Lexicon, LexiconError, WordClasses};
pub use metrics::{
    acc, auc, f1, run_tasks, EvalReport, Metric, MetricError, ScoreRecord, TaskId, TaskResult,
};
pub use mutation::{
    apply_operator_set, mutate_char, mutate_dataset, mutate_word, CharMutationSpec, MutationError,
    OperatorSet, PresetId, WordMutationSpec,
};
pub use scorer::{
    mock_score, MockScorer, ScoreRequest, ScoreResponse, Scorer, ScorerError, ScorerSpec,
};
