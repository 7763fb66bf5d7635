//! Character-level and word-level mutation operators and the nine presets
//! built from them.
//!
//! A character operator swaps one letter for a look-alike glyph inside every
//! word of its scope lexicon (`a` to Greek `α`, `e` to Greek `ε`). A word
//! operator replaces or removes the scoped words themselves. Presets are named
//! `m{level}{class}`: level `w` (word) or `c` (character), class `r`
//! (articles), `j` (adjectives) or `d` (adverbs). Character presets carry a
//! `-a` or `-e` suffix for the letter they target.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{detokenize, tokenize, Corpus};
use crate::dataset::{Dataset, LabelFilter, Sample};
use crate::lexicon::{Lexicon, WordClasses};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("unknown preset {0:?}; expected one of: {list}", list = PresetId::list())]
    UnknownPreset(String),
    #[error("replacement {0:?} is identical to the target character")]
    IdentityReplacement(char),
    #[error("invalid word to replace: {0}")]
    InvalidWord(String),
    #[error("replacement {replacement:?} for {word:?} contains whitespace")]
    WhitespaceReplacement { word: String, replacement: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OccurrencePolicy {
    #[default]
    All,
    First,
}

impl FromStr for OccurrencePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(OccurrencePolicy::All),
            "first" => Ok(OccurrencePolicy::First),
            other => Err(format!(
                "unknown occurrence policy {other:?} (expected all or first)"
            )),
        }
    }
}

/// Configuration of a character-level operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharMutationSpec {
    target: char,
    replacement: Option<char>,
    scope: Lexicon,
    policy: OccurrencePolicy,
}

impl CharMutationSpec {
    /// `replacement: None` deletes the target character.
    pub fn new(
        target: char,
        replacement: Option<char>,
        scope: Lexicon,
    ) -> Result<Self, MutationError> {
        if replacement == Some(target) {
            return Err(MutationError::IdentityReplacement(target));
        }
        Ok(CharMutationSpec {
            target,
            replacement,
            scope,
            policy: OccurrencePolicy::All,
        })
    }

    pub fn with_policy(mut self, policy: OccurrencePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn target(&self) -> char {
        self.target
    }

    pub fn replacement(&self) -> Option<char> {
        self.replacement
    }

    pub fn scope(&self) -> &Lexicon {
        &self.scope
    }

    pub fn policy(&self) -> OccurrencePolicy {
        self.policy
    }

    fn matches(&self, c: char) -> bool {
        c == self.target || c.to_lowercase().eq(self.target.to_lowercase())
    }
}

/// What a word-level operator does to the words in its scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordReplacement {
    Remove,
    /// Lowercased word to replacement. An empty replacement removes the word.
    Map(BTreeMap<String, String>),
}

/// Configuration of a word-level operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordMutationSpec {
    scope: Lexicon,
    replacement: WordReplacement,
}

impl WordMutationSpec {
    /// Removes every word of `scope`.
    pub fn removal(scope: Lexicon) -> Self {
        WordMutationSpec {
            scope,
            replacement: WordReplacement::Remove,
        }
    }

    /// Replaces each key with its value. Keys match case-insensitively; values
    /// are emitted verbatim.
    pub fn replacements<I, K, V>(pairs: I) -> Result<Self, MutationError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.as_ref().trim().to_lowercase(), v.into());
            if v.chars().any(char::is_whitespace) {
                return Err(MutationError::WhitespaceReplacement {
                    word: k,
                    replacement: v,
                });
            }
            map.insert(k, v);
        }
        let scope = Lexicon::from_words("replacements", map.keys())
            .map_err(|e| MutationError::InvalidWord(e.to_string()))?;
        Ok(WordMutationSpec {
            scope,
            replacement: WordReplacement::Map(map),
        })
    }

    pub fn scope(&self) -> &Lexicon {
        &self.scope
    }

    /// The replacement for `word`, or `None` when the word is out of scope.
    pub fn replacement_for(&self, word: &str) -> Option<&str> {
        if !self.scope.contains(word) {
            return None;
        }
        match &self.replacement {
            WordReplacement::Remove => Some(""),
            WordReplacement::Map(map) => map.get(&word.to_lowercase()).map(String::as_str),
        }
    }
}

/// Character-level operator on a single word. Every occurrence of the target
/// (either case) is replaced, or only the first under
/// [`OccurrencePolicy::First`]. Words without the target come back unchanged.
pub fn mutate_char(word: &str, spec: &CharMutationSpec) -> String {
    let mut out = String::with_capacity(word.len() + 2);
    let mut replaced = false;
    for c in word.chars() {
        let hit = spec.matches(c) && !(replaced && spec.policy == OccurrencePolicy::First);
        if hit {
            replaced = true;
            if let Some(r) = spec.replacement {
                out.push(r);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Word-level operator. Scoped words are replaced in place; removed words
/// stay as empty slots so the word count and the punctuation list are kept.
pub fn mutate_word(corpus: &Corpus, spec: &WordMutationSpec) -> Corpus {
    let mut out = corpus.clone();
    for word in out.words.iter_mut().filter(|w| !w.is_removed()) {
        if let Some(r) = spec.replacement_for(&word.text) {
            word.text = r.to_owned();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordClass {
    Articles,
    Adjectives,
    Adverbs,
}

impl WordClass {
    pub fn code(self) -> char {
        match self {
            WordClass::Articles => 'r',
            WordClass::Adjectives => 'j',
            WordClass::Adverbs => 'd',
        }
    }

    pub fn lexicon(self, classes: &WordClasses) -> &Lexicon {
        match self {
            WordClass::Articles => &classes.articles,
            WordClass::Adjectives => &classes.adjectives,
            WordClass::Adverbs => &classes.adverbs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorLevel {
    Word,
    Char,
}

/// Identifier of one of the nine operator presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetId {
    Mwr,
    Mwj,
    Mwd,
    McrA,
    McjA,
    McdA,
    McrE,
    McjE,
    McdE,
}

impl PresetId {
    pub const ALL: [PresetId; 9] = [
        PresetId::Mwr,
        PresetId::Mwj,
        PresetId::Mwd,
        PresetId::McrA,
        PresetId::McjA,
        PresetId::McdA,
        PresetId::McrE,
        PresetId::McjE,
        PresetId::McdE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::Mwr => "mwr",
            PresetId::Mwj => "mwj",
            PresetId::Mwd => "mwd",
            PresetId::McrA => "mcr-a",
            PresetId::McjA => "mcj-a",
            PresetId::McdA => "mcd-a",
            PresetId::McrE => "mcr-e",
            PresetId::McjE => "mcj-e",
            PresetId::McdE => "mcd-e",
        }
    }

    pub fn list() -> String {
        Self::ALL.map(Self::as_str).join(", ")
    }

    pub fn level(self) -> OperatorLevel {
        match self {
            PresetId::Mwr | PresetId::Mwj | PresetId::Mwd => OperatorLevel::Word,
            _ => OperatorLevel::Char,
        }
    }

    pub fn word_class(self) -> WordClass {
        match self {
            PresetId::Mwr | PresetId::McrA | PresetId::McrE => WordClass::Articles,
            PresetId::Mwj | PresetId::McjA | PresetId::McjE => WordClass::Adjectives,
            PresetId::Mwd | PresetId::McdA | PresetId::McdE => WordClass::Adverbs,
        }
    }

    /// Target letter and its look-alike for character presets.
    pub fn glyph_swap(self) -> Option<(char, char)> {
        match self {
            PresetId::McrA | PresetId::McjA | PresetId::McdA => Some(('a', 'α')),
            PresetId::McrE | PresetId::McjE | PresetId::McdE => Some(('e', 'ε')),
            _ => None,
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| MutationError::UnknownPreset(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperatorKind {
    Char(CharMutationSpec),
    Word(WordMutationSpec),
}

/// A preset id bound to its configured operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSet {
    pub id: PresetId,
    pub kind: OperatorKind,
}

impl OperatorSet {
    pub fn preset(id: PresetId, classes: &WordClasses) -> Self {
        let scope = id.word_class().lexicon(classes).clone();
        let kind = match id.glyph_swap() {
            Some((from, to)) => OperatorKind::Char(
                CharMutationSpec::new(from, Some(to), scope).expect("preset glyphs differ"),
            ),
            None => OperatorKind::Word(WordMutationSpec::removal(scope)),
        };
        OperatorSet { id, kind }
    }

    /// Preset backed by the builtin word lists.
    pub fn builtin(id: PresetId) -> Self {
        Self::preset(id, &WordClasses::default())
    }

    pub fn parse(id: &str, classes: &WordClasses) -> Result<Self, MutationError> {
        Ok(Self::preset(id.parse()?, classes))
    }

    /// Only meaningful for character presets; word presets are returned as is.
    pub fn with_policy(mut self, policy: OccurrencePolicy) -> Self {
        if let OperatorKind::Char(spec) = self.kind {
            self.kind = OperatorKind::Char(spec.with_policy(policy));
        }
        self
    }

    pub fn apply(&self, corpus: &Corpus) -> Corpus {
        apply_operator_set(corpus, self)
    }

    pub fn apply_text(&self, text: &str) -> String {
        detokenize(&self.apply(&tokenize(text)))
    }
}

/// Applies an operator set to every scoped word of the corpus.
pub fn apply_operator_set(corpus: &Corpus, set: &OperatorSet) -> Corpus {
    match &set.kind {
        OperatorKind::Word(spec) => mutate_word(corpus, spec),
        OperatorKind::Char(spec) => {
            let mut out = corpus.clone();
            for word in out.words.iter_mut() {
                if spec.scope.contains(&word.text) {
                    word.text = mutate_char(&word.text, spec);
                }
            }
            out
        }
    }
}

/// Mutates the text of every sample selected by `filter`. Selected samples get
/// the operator id recorded in their provenance. Order and ids are preserved.
pub fn mutate_dataset(dataset: &Dataset, set: &OperatorSet, filter: LabelFilter) -> Dataset {
    let samples = dataset
        .samples
        .par_iter()
        .map(|s| mutate_sample(s, set, filter))
        .collect();
    Dataset::new(samples)
}

pub fn mutate_sample(sample: &Sample, set: &OperatorSet, filter: LabelFilter) -> Sample {
    if !filter.matches(sample.label) {
        return sample.clone();
    }
    let mut out = sample.clone();
    out.text = set.apply_text(&sample.text);
    let mut prov = out.provenance.take().unwrap_or_default();
    prov.operator = Some(match prov.operator {
        Some(prev) => format!("{prev}+{}", set.id),
        None => set.id.to_string(),
    });
    out.provenance = Some(prov);
    out
}
