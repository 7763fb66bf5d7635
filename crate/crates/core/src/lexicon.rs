//! Word-class lists that scope the operator presets.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

const ARTICLES: &str = include_str!("../data/articles.txt");
const ADJECTIVES: &str = include_str!("../data/adjectives.txt");
const ADVERBS: &str = include_str!("../data/adverbs.txt");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: entry {entry:?} must be a single word")]
    Format {
        origin: String,
        line: usize,
        entry: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconSource {
    Builtin,
    File(PathBuf),
}

impl fmt::Display for LexiconSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexiconSource::Builtin => f.write_str("builtin"),
            LexiconSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// A named set of lowercase, whitespace-free words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    name: String,
    entries: BTreeSet<String>,
    source: LexiconSource,
}

impl Lexicon {
    /// Parses the lexicon file format: one word per line, `#` starts a comment
    /// line, blank lines are ignored. Entries are trimmed and lowercased.
    pub fn parse(name: &str, content: &str, source: LexiconSource) -> Result<Self, LexiconError> {
        let mut entries = BTreeSet::new();
        for (no, line) in content.lines().enumerate() {
            let entry = line.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            if entry.chars().any(char::is_whitespace) {
                return Err(LexiconError::Format {
                    origin: source.to_string(),
                    line: no + 1,
                    entry: entry.to_owned(),
                });
            }
            entries.insert(entry.to_lowercase());
        }
        Ok(Lexicon {
            name: name.to_owned(),
            entries,
            source,
        })
    }

    /// Builds a lexicon from in-memory words, normalizing them the same way
    /// the file loader does.
    pub fn from_words<I, S>(name: &str, words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: Vec<String> = words.into_iter().map(|w| w.as_ref().to_owned()).collect();
        Self::parse(name, &joined.join("\n"), LexiconSource::Builtin)
    }

    pub fn articles() -> Self {
        Self::parse("articles", ARTICLES, LexiconSource::Builtin).expect("builtin list is valid")
    }

    pub fn adjectives() -> Self {
        Self::parse("adjectives", ADJECTIVES, LexiconSource::Builtin)
            .expect("builtin list is valid")
    }

    pub fn adverbs() -> Self {
        Self::parse("adverbs", ADVERBS, LexiconSource::Builtin).expect("builtin list is valid")
    }

    /// Case-insensitive membership test.
    pub fn contains(&self, word: &str) -> bool {
        if word.is_empty() {
            return false;
        }
        if self.entries.contains(word) {
            return true;
        }
        self.entries.contains(&word.to_lowercase())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &LexiconSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

/// Loads a lexicon file. The lexicon is named after the file stem.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_owned(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Lexicon::parse(&name, &content, LexiconSource::File(path.to_owned()))
}

/// The three word classes the presets are built on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordClasses {
    pub articles: Lexicon,
    pub adjectives: Lexicon,
    pub adverbs: Lexicon,
}

impl Default for WordClasses {
    fn default() -> Self {
        WordClasses {
            articles: Lexicon::articles(),
            adjectives: Lexicon::adjectives(),
            adverbs: Lexicon::adverbs(),
        }
    }
}
