//! Character-offset helpers shared by the matchers.
//!
//! All public offsets in this crate count Unicode scalar values, never bytes.

use serde::{Deserialize, Serialize};

/// How surfaces are compared against document text.
///
/// The same policy must be used when a dictionary is built and when it is
/// matched; [`crate::dictionary::Dictionary`] carries its own copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub case_fold: bool,
    pub require_word_boundary: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            case_fold: true,
            require_word_boundary: true,
        }
    }
}

impl NormalizationPolicy {
    pub const EXACT: Self = Self {
        case_fold: false,
        require_word_boundary: false,
    };

    pub fn normalize_char(&self, c: char) -> char {
        if self.case_fold {
            fold_char(c)
        } else {
            c
        }
    }

    /// Normalizes a string char by char. The result always has the same
    /// number of chars as the input.
    pub fn normalize(&self, s: &str) -> String {
        s.chars().map(|c| self.normalize_char(c)).collect()
    }

    /// Whether a match over `chars[start..end)` satisfies the boundary rule.
    pub fn accepts(&self, chars: &[char], start: usize, end: usize) -> bool {
        !self.require_word_boundary || is_word_bounded(chars, start, end)
    }
}

/// Lowercases `c` when its lowercase form is a single char; otherwise keeps it.
///
/// This keeps folding length-preserving, so folded offsets equal original
/// offsets. Chars like `İ` whose lowercase expands are compared exactly.
pub fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

pub fn is_letter(c: char) -> bool {
    c.is_alphabetic()
}

/// A boundary at `pos` sits inside a letter sequence when the chars on both
/// sides of it are letters.
pub fn is_word_bounded(chars: &[char], start: usize, end: usize) -> bool {
    let inside = |pos: usize| pos > 0 && pos < chars.len() && is_letter(chars[pos - 1]) && is_letter(chars[pos]);
    !inside(start) && !inside(end)
}

/// Byte offsets of every char boundary of a string, indexed by char offset.
///
/// `offsets[i]` is the byte position of char `i`; the final entry is the
/// byte length, so `offsets.len() == char_count + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharIndex {
    offsets: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut offsets: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        offsets.push(text.len());
        Self { offsets }
    }

    pub fn char_len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn byte_offset(&self, char_offset: usize) -> Option<usize> {
        self.offsets.get(char_offset).copied()
    }

    /// Char offset of a byte position that lies on a char boundary.
    pub fn char_offset(&self, byte_offset: usize) -> Option<usize> {
        self.offsets.binary_search(&byte_offset).ok()
    }

    pub fn slice<'a>(&self, text: &'a str, start: usize, end: usize) -> Option<&'a str> {
        if start > end {
            return None;
        }
        let (b0, b1) = (self.byte_offset(start)?, self.byte_offset(end)?);
        text.get(b0..b1)
    }
}
