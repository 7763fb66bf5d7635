//! Lossless decomposition of a text into an ordered word list and an ordered
//! list of anchored punctuation runs.
//!
//! A word is a maximal run of Unicode letters and digits, optionally joined by
//! intra-word apostrophes or hyphens (`don't`, `well-known`). Combining marks
//! that follow a word character stay in the word. Any other non-whitespace
//! character belongs to a punctuation run. Whitespace is never part of a token;
//! it is captured verbatim in front of the token it precedes so that
//! [`detokenize`] reproduces the input bit for bit.

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;

/// One entry of the ordered word list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordToken {
    /// Current surface form. Empty once the word has been removed.
    pub text: String,
    /// Position within the word list.
    pub index: usize,
    /// Whitespace found between the previous token and this word.
    pub leading: String,
}

impl WordToken {
    pub fn is_removed(&self) -> bool {
        self.text.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttachSide {
    /// Glued to the following word, e.g. an opening parenthesis.
    BeforeWord,
    /// Follows a word (directly or after whitespace).
    AfterWord,
}

/// A punctuation run anchored to the word list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PunctAnchor {
    pub text: String,
    /// Ordinal of the word this run follows; `None` when it precedes every word.
    pub attach_word: Option<usize>,
    pub attach_side: AttachSide,
    /// Whitespace found between the previous token and this run.
    pub spacing: String,
}

/// A text together with its word list and punctuation list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub words: Vec<WordToken>,
    pub puncts: Vec<PunctAnchor>,
    /// Whitespace after the last token.
    pub trailing: String,
    pub original: String,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Surface forms of all words, including emptied slots.
    pub fn word_texts(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.text.as_str()).collect()
    }

    /// Replaces the surface form of word `index`. An empty string removes it.
    ///
    /// # Panics
    ///
    /// Panics if `index` is out of bounds.
    pub fn set_word(&mut self, index: usize, text: impl Into<String>) {
        self.words[index].text = text.into();
    }

    pub fn remove_word(&mut self, index: usize) {
        self.set_word(index, String::new());
    }

    /// Punctuation runs anchored after word `index` (or leading, for `None`).
    pub fn puncts_after(&self, index: Option<usize>) -> impl Iterator<Item = &PunctAnchor> {
        self.puncts.iter().filter(move |p| p.attach_word == index)
    }

    pub fn to_text(&self) -> String {
        detokenize(self)
    }
}

const JOINERS: [char; 3] = ['\'', '\u{2019}', '-'];

fn is_word_start(c: char) -> bool {
    c.is_alphanumeric()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Space,
    Word,
    Punct,
}

/// Splits `text` into words and anchored punctuation runs.
pub fn tokenize(text: &str) -> Corpus {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut words = Vec::new();
    let mut puncts = Vec::new();
    let mut pending_space = String::new();

    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        let class = if c.is_whitespace() {
            Class::Space
        } else if is_word_start(c) {
            Class::Word
        } else {
            Class::Punct
        };

        let mut j = i + 1;
        match class {
            Class::Space => {
                while j < chars.len() && chars[j].1.is_whitespace() {
                    j += 1;
                }
            }
            Class::Word => {
                while j < chars.len() {
                    let c = chars[j].1;
                    if c.is_alphanumeric() || is_combining_mark(c) {
                        j += 1;
                    } else if JOINERS.contains(&c)
                        && chars.get(j + 1).is_some_and(|&(_, n)| n.is_alphanumeric())
                    {
                        j += 2;
                    } else {
                        break;
                    }
                }
            }
            Class::Punct => {
                while j < chars.len() {
                    let c = chars[j].1;
                    if c.is_whitespace() || is_word_start(c) {
                        break;
                    }
                    j += 1;
                }
            }
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        let piece = &text[start..end];

        match class {
            Class::Space => pending_space.push_str(piece),
            Class::Word => {
                words.push(WordToken {
                    text: piece.to_owned(),
                    index: words.len(),
                    leading: std::mem::take(&mut pending_space),
                });
            }
            Class::Punct => {
                let attach_word = words.len().checked_sub(1);
                let spacing = std::mem::take(&mut pending_space);
                let glued_next = chars.get(j).is_some_and(|&(_, n)| is_word_start(n));
                let glued_prev = attach_word.is_some() && spacing.is_empty();
                let attach_side = if glued_next && !glued_prev {
                    AttachSide::BeforeWord
                } else {
                    AttachSide::AfterWord
                };
                puncts.push(PunctAnchor {
                    text: piece.to_owned(),
                    attach_word,
                    attach_side,
                    spacing,
                });
            }
        }
        i = j;
    }

    Corpus {
        words,
        puncts,
        trailing: pending_space,
        original: text.to_owned(),
    }
}

enum Piece<'a> {
    Space(&'a str),
    Token(&'a str),
    Removed,
}

/// Rebuilds text from a corpus.
///
/// An unmodified corpus yields its original text exactly. A removed word leaves
/// its attached punctuation in place; the whitespace runs on either side of it
/// collapse into the first non-empty one, or vanish at the start or end of the
/// text.
pub fn detokenize(corpus: &Corpus) -> String {
    let mut pieces = Vec::with_capacity(corpus.words.len() * 2 + corpus.puncts.len() * 2 + 1);
    let mut puncts = corpus.puncts.iter().peekable();
    for anchor in std::iter::once(None).chain((0..corpus.words.len()).map(Some)) {
        if let Some(i) = anchor {
            let word = &corpus.words[i];
            pieces.push(Piece::Space(&word.leading));
            if word.is_removed() {
                pieces.push(Piece::Removed);
            } else {
                pieces.push(Piece::Token(&word.text));
            }
        }
        while let Some(p) = puncts.next_if(|p| p.attach_word == anchor) {
            pieces.push(Piece::Space(&p.spacing));
            pieces.push(Piece::Token(&p.text));
        }
    }
    pieces.push(Piece::Space(&corpus.trailing));

    let mut out = String::with_capacity(corpus.original.len());
    let mut emitted_token = false;
    let mut i = 0;
    while i < pieces.len() {
        match pieces[i] {
            Piece::Token(t) => {
                out.push_str(t);
                emitted_token = true;
                i += 1;
            }
            Piece::Space(_) | Piece::Removed => {
                let run_end = pieces[i..]
                    .iter()
                    .position(|p| matches!(p, Piece::Token(_)))
                    .map_or(pieces.len(), |k| i + k);
                let run = &pieces[i..run_end];
                let spaces = run.iter().filter_map(|p| match p {
                    Piece::Space(s) if !s.is_empty() => Some(*s),
                    _ => None,
                });
                if run.iter().any(|p| matches!(p, Piece::Removed)) {
                    let at_edge = !emitted_token || run_end == pieces.len();
                    if !at_edge {
                        if let Some(first) = spaces.into_iter().next() {
                            out.push_str(first);
                        }
                    }
                } else {
                    spaces.for_each(|s| out.push_str(s));
                }
                i = run_end;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_plain_sentence() {
        let c = tokenize("this is an apple");
        assert_eq!(c.word_texts(), ["this", "is", "an", "apple"]);
        assert!(c.puncts.is_empty());
        assert_eq!(detokenize(&c), "this is an apple");
    }

    #[test]
    fn empty_input() {
        let c = tokenize("");
        assert!(c.words.is_empty());
        assert!(c.puncts.is_empty());
        assert_eq!(detokenize(&c), "");
    }

    #[test]
    fn anchors_punctuation() {
        let c = tokenize("Hello, world!");
        assert_eq!(c.word_texts(), ["Hello", "world"]);
        assert_eq!(c.puncts.len(), 2);
        assert_eq!(c.puncts[0].text, ",");
        assert_eq!(c.puncts[0].attach_word, Some(0));
        assert_eq!(c.puncts[0].attach_side, AttachSide::AfterWord);
        assert_eq!(c.puncts[1].text, "!");
        assert_eq!(c.puncts[1].attach_word, Some(1));
        assert_eq!(detokenize(&c), "Hello, world!");
    }

    #[test]
    fn leading_punctuation_and_side() {
        let c = tokenize("(hello) \"x\"");
        assert_eq!(c.puncts[0].attach_word, None);
        assert_eq!(c.puncts[0].attach_side, AttachSide::BeforeWord);
        assert_eq!(c.puncts[2].text, "\"");
        assert_eq!(c.puncts[2].attach_side, AttachSide::BeforeWord);
        assert_eq!(c.puncts[2].spacing, " ");
        assert_eq!(detokenize(&c), "(hello) \"x\"");
    }

    #[test]
    fn intra_word_joiners() {
        let c = tokenize("don't stop well-known -dash- rock'n'roll 'quoted'");
        assert_eq!(
            c.word_texts(),
            [
                "don't",
                "stop",
                "well-known",
                "dash",
                "rock'n'roll",
                "quoted"
            ]
        );
        assert_eq!(c.puncts.len(), 4);
    }

    #[test]
    fn combining_marks_stay_in_word() {
        let c = tokenize("cafe\u{301} ok");
        assert_eq!(c.word_texts(), ["cafe\u{301}", "ok"]);
    }

    #[test]
    fn irregular_spacing_round_trips() {
        let text = "  A\tman ,  riding\n\na  horse .  ";
        assert_eq!(detokenize(&tokenize(text)), text);
    }

    #[test]
    fn removal_collapses_whitespace() {
        let mut c = tokenize("this is an apple");
        c.remove_word(2);
        assert_eq!(detokenize(&c), "this is apple");
    }

    #[test]
    fn removal_at_edges_drops_whitespace() {
        let mut c = tokenize("a cat and the dog");
        c.remove_word(0);
        c.remove_word(3);
        assert_eq!(detokenize(&c), "cat and dog");

        let mut c = tokenize("see the");
        c.remove_word(1);
        assert_eq!(detokenize(&c), "see");
    }

    #[test]
    fn removal_keeps_attached_punctuation() {
        let mut c = tokenize("Hello, world!");
        c.remove_word(1);
        assert_eq!(detokenize(&c), "Hello, !");
        let mut c = tokenize("a dog, the cat.");
        c.remove_word(2);
        assert_eq!(detokenize(&c), "a dog, cat.");
    }

    #[test]
    fn adjacent_removals() {
        let mut c = tokenize("x  a the   y");
        c.remove_word(1);
        c.remove_word(2);
        assert_eq!(detokenize(&c), "x  y");
    }

    #[test]
    fn replacement_reinserts_anchors() {
        let mut c = tokenize("Hello, world!");
        c.set_word(1, "earth");
        assert_eq!(detokenize(&c), "Hello, earth!");
    }

    #[test]
    fn removing_everything() {
        let mut c = tokenize(" the ");
        c.remove_word(0);
        assert_eq!(detokenize(&c), "");
    }
}
