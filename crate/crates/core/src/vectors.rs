//! Word-length vectors, template word vectors and the two similarity
//! measures defined over them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("vector length mismatch: {left} vs {right}")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

fn check_lengths(left: usize, right: usize) -> Result<(), LengthMismatch> {
    if left == right {
        Ok(())
    } else {
        Err(LengthMismatch { left, right })
    }
}

/// Per-word lengths of a message or cluster. Never empty, every entry ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct WordLengthVector(Vec<u32>);

impl WordLengthVector {
    /// Returns `None` for an empty vector or a zero entry.
    pub fn new(lengths: Vec<u32>) -> Option<Self> {
        if lengths.is_empty() || lengths.contains(&0) {
            None
        } else {
            Some(WordLengthVector(lengths))
        }
    }

    /// Lengths are counted in characters.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Option<Self> {
        Self::new(words.iter().map(|w| w.as_ref().chars().count() as u32).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl<'de> Deserialize<'de> for WordLengthVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let lengths = Vec::<u32>::deserialize(deserializer)?;
        WordLengthVector::new(lengths)
            .ok_or_else(|| serde::de::Error::custom("word length vector must be non-empty with entries >= 1"))
    }
}

/// One position of a template.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Word(String),
    Wildcard,
}

impl Token {
    pub fn is_wildcard(&self) -> bool {
        matches!(self, Token::Wildcard)
    }

    pub fn as_word(&self) -> Option<&str> {
        match self {
            Token::Word(w) => Some(w),
            Token::Wildcard => None,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => f.write_str(w),
            Token::Wildcard => f.write_str("*"),
        }
    }
}

/// Ordered words of a message, or of a cluster template where variable
/// positions have become [`Token::Wildcard`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TemplateWordVector(Vec<Token>);

impl TemplateWordVector {
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        TemplateWordVector(words.iter().map(|w| Token::Word(w.as_ref().to_string())).collect())
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        TemplateWordVector(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut [Token] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn wildcard_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_wildcard())
            .map(|(i, _)| i)
    }

    /// Words joined by single spaces, wildcards printed as `*`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TemplateWordVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{token}")?;
        }
        Ok(())
    }
}

/// Cosine of the angle between two word-length vectors. Positive entries keep
/// the result in (0, 1].
pub fn cosine_similarity(a: &WordLengthVector, b: &WordLengthVector) -> Result<f64, LengthMismatch> {
    check_lengths(a.len(), b.len())?;
    let (mut dot, mut norm_a, mut norm_b) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.0.iter().zip(&b.0) {
        let (x, y) = (u64::from(x), u64::from(y));
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    let cos = dot as f64 / (norm_a as f64 * norm_b as f64).sqrt();
    Ok(cos.min(1.0))
}

/// Number of positions where the template holds a literal word identical to
/// the message word. Wildcards never count.
pub fn positional_similarity(
    template: &TemplateWordVector,
    words: &TemplateWordVector,
) -> Result<usize, LengthMismatch> {
    check_lengths(template.len(), words.len())?;
    Ok(template
        .0
        .iter()
        .zip(&words.0)
        .filter(|(t, w)| matches!((t, w), (Token::Word(a), Token::Word(b)) if a == b))
        .count())
}

/// True when lengths agree and every template position is a wildcard or
/// equals the message word.
pub fn template_matches(template: &TemplateWordVector, words: &TemplateWordVector) -> bool {
    template.len() == words.len() && template.0.iter().zip(&words.0).all(|(t, w)| t.is_wildcard() || t == w)
}
