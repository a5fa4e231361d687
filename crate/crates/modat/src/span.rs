//! Source positions attached to parsed entities and diagnostics.

use std::fmt;
use std::sync::Arc;

/// A contiguous region of a source file, 1-based and inclusive.
///
/// Spans are positional metadata: they do **not** participate in equality or
/// hashing, so model values that differ only in where they were written
/// compare equal (this is what makes `parse ∘ format ∘ parse = parse`
/// checkable with plain `==`).
#[derive(Clone, Debug)]
pub struct Span {
    pub file: Arc<str>,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(file: Arc<str>, start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        debug_assert!((start_line, start_col) <= (end_line, end_col));
        Span { file, start_line, start_col, end_line, end_col }
    }

    /// Span for entities that were built in memory rather than parsed.
    pub fn synthetic() -> Self {
        Span { file: Arc::from("<memory>"), start_line: 1, start_col: 1, end_line: 1, end_col: 1 }
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn merge(&self, other: &Span) -> Span {
        let start = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let end = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        Span { file: self.file.clone(), start_line: start.0, start_col: start.1, end_line: end.0, end_col: end.1 }
    }

    /// Sort key for diagnostic ordering: (file, line, col).
    pub fn order_key(&self) -> (Arc<str>, u32, u32) {
        (self.file.clone(), self.start_line, self.start_col)
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_do_not_affect_equality() {
        let a = Span::new(Arc::from("a.modat"), 1, 1, 1, 5);
        let b = Span::new(Arc::from("b.modat"), 9, 2, 9, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn merge_covers_both() {
        let a = Span::new(Arc::from("f"), 2, 4, 2, 9);
        let b = Span::new(Arc::from("f"), 1, 7, 1, 8);
        let m = a.merge(&b);
        assert_eq!((m.start_line, m.start_col, m.end_line, m.end_col), (1, 7, 2, 9));
    }
}
