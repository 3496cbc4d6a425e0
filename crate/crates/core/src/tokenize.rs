//! Word-level tokenization based on Unicode text segmentation.
//!
//! Tokens are the segments produced by the UAX-29 word-boundary rules with
//! whitespace-only segments dropped. Punctuation segments count as tokens:
//! a run of ten question marks is ten one-character tokens, which is what the
//! n-gram analyses expect to surface.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{CoreError, Result};

/// Byte range of one token inside its document text. Offsets always fall on
/// UTF-8 character boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    #[inline]
    pub fn slice<'t>(&self, text: &'t str) -> &'t str {
        &text[self.start..self.end]
    }
}

/// Pluggable tokenizer interface. The Unicode word-boundary tokenizer is the
/// only built-in; analyses accept any implementation.
pub trait Tokenizer: Send + Sync {
    fn spans(&self, text: &str) -> Vec<TokenSpan>;

    /// Number of tokens in `text`; override when counting can be cheaper
    /// than materializing spans.
    fn count(&self, text: &str) -> u64 {
        self.spans(text).len() as u64
    }
}

/// UAX-29 word segmentation, whitespace segments excluded.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnicodeWordTokenizer;

impl Tokenizer for UnicodeWordTokenizer {
    fn spans(&self, text: &str) -> Vec<TokenSpan> {
        text.split_word_bound_indices()
            .filter(|(_, seg)| !seg.chars().all(char::is_whitespace))
            .map(|(start, seg)| TokenSpan {
                start,
                end: start + seg.len(),
            })
            .collect()
    }

    fn count(&self, text: &str) -> u64 {
        text.split_word_bounds()
            .filter(|seg| !seg.chars().all(char::is_whitespace))
            .count() as u64
    }
}

/// Convenience wrapper: spans of `text` under the built-in tokenizer.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    UnicodeWordTokenizer.spans(text)
}

/// Iterator over the contiguous n-token windows of a tokenized document.
pub struct Ngrams<'t> {
    text: &'t str,
    spans: &'t [TokenSpan],
    n: usize,
    pos: usize,
}

impl<'t> Ngrams<'t> {
    /// Renders the window starting at `pos` by joining token strings with a
    /// single space into `buf` (cleared first). Returns false past the end.
    pub fn render_next(&mut self, buf: &mut String) -> bool {
        if self.pos + self.n > self.spans.len() {
            return false;
        }
        buf.clear();
        for (i, span) in self.spans[self.pos..self.pos + self.n].iter().enumerate() {
            if i > 0 {
                buf.push(' ');
            }
            buf.push_str(span.slice(self.text));
        }
        self.pos += 1;
        true
    }
}

impl Iterator for Ngrams<'_> {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        let mut buf = String::new();
        if self.render_next(&mut buf) {
            Some(buf)
        } else {
            None
        }
    }
}

/// Windows of `n` consecutive tokens, each rendered as the token strings
/// joined by one space. Yields `max(0, len - n + 1)` windows.
pub fn ngrams<'t>(text: &'t str, spans: &'t [TokenSpan], n: usize) -> Result<Ngrams<'t>> {
    if n == 0 {
        return Err(CoreError::InvalidNgramSize);
    }
    Ok(Ngrams {
        text,
        spans,
        n,
        pos: 0,
    })
}
