//! Diagnostics with stable codes and total ordering.

use std::fmt;

use serde::Serialize;

use crate::span::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// One reported problem. Codes are stable identifiers: E1xx syntax, E2xx
/// reference resolution, E001..E008 validator rules, W001/W002 warnings,
/// E3xx scenario errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, span: Span) -> Self {
        Diagnostic { severity: Severity::Error, code, message: message.into(), span }
    }

    pub fn warning(code: &'static str, message: impl Into<String>, span: Span) -> Self {
        Diagnostic { severity: Severity::Warning, code, message: message.into(), span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[code]: message`
    pub fn render(&self) -> String {
        format!(
            "{}:{}:{}: {}[{}]: {}",
            self.span.file, self.span.start_line, self.span.start_col, self.severity, self.code, self.message
        )
    }

    /// One-object-per-line machine-readable form.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            file: &'a str,
            line: u32,
            col: u32,
            end_line: u32,
            end_col: u32,
            severity: Severity,
            code: &'a str,
            message: &'a str,
        }
        serde_json::to_string(&Line {
            file: &self.span.file,
            line: self.span.start_line,
            col: self.span.start_col,
            end_line: self.span.end_line,
            end_col: self.span.end_col,
            severity: self.severity,
            code: self.code,
            message: &self.message,
        })
        .expect("diagnostic serializes")
    }
}

/// Total diagnostic order: (file, line, col, code).
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.span
            .order_key()
            .cmp(&b.span.order_key())
            .then_with(|| a.code.cmp(b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn render_format() {
        let d = Diagnostic::error("E001", "depth", Span::new(Arc::from("m.modat"), 3, 7, 3, 12));
        assert_eq!(d.render(), "m.modat:3:7: error[E001]: depth");
    }

    #[test]
    fn sorted_by_file_line_col_code() {
        let f = |file: &str, line, col, code| {
            Diagnostic::error(code, "x", Span::new(Arc::from(file), line, col, line, col))
        };
        let mut v = vec![f("b", 1, 1, "E002"), f("a", 9, 9, "E008"), f("b", 1, 1, "E001")];
        sort_diagnostics(&mut v);
        let codes: Vec<_> = v.iter().map(|d| (d.span.file.to_string(), d.code)).collect();
        assert_eq!(
            codes,
            vec![("a".into(), "E008"), ("b".into(), "E001"), ("b".into(), "E002")]
        );
    }
}
