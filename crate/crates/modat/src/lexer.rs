//! Tokenizer shared by the model and scenario parsers.
//!
//! Total over arbitrary input: every failure is a positioned diagnostic,
//! never a panic. Identifiers are ASCII; `//` starts a line comment; LF and
//! CRLF are both accepted.

use std::sync::Arc;

use crate::diag::Diagnostic;
use crate::span::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Time(i64),
    True,
    False,
    // declarations
    KwBlock,
    KwVariant,
    KwOf,
    KwKind,
    KwComponent,
    KwComposite,
    KwSystem,
    KwIn,
    KwOut,
    KwPart,
    KwAttr,
    KwFunction,
    KwOverride,
    KwRoot,
    // behavior
    KwLanes,
    KwNode,
    KwCall,
    KwSet,
    KwEntry,
    KwExit,
    KwStart,
    KwEnd,
    KwOn,
    KwCompletion,
    KwWhen,
    KwPolicy,
    KwResume,
    KwRestart,
    KwContinue,
    KwDo,
    KwSelf,
    // scenarios
    KwInvoke,
    KwAt,
    KwExpect,
    KwMaxcycles,
    // types
    TyBool,
    TyInt,
    TyReal,
    TyTime,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
    Arrow,
    Assign,
    EqEq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Minus,
    Eof,
}

impl Tok {
    /// Human-readable shape for "expected X, found Y" messages.
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Real(v) => format!("real `{v:?}`"),
            Tok::Time(v) => format!("duration `{v}ms`"),
            Tok::True => "`TRUE`".into(),
            Tok::False => "`FALSE`".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::KwBlock => "block",
            Tok::KwVariant => "variant",
            Tok::KwOf => "of",
            Tok::KwKind => "kind",
            Tok::KwComponent => "component",
            Tok::KwComposite => "composite",
            Tok::KwSystem => "system",
            Tok::KwIn => "in",
            Tok::KwOut => "out",
            Tok::KwPart => "part",
            Tok::KwAttr => "attr",
            Tok::KwFunction => "function",
            Tok::KwOverride => "override",
            Tok::KwRoot => "root",
            Tok::KwLanes => "lanes",
            Tok::KwNode => "node",
            Tok::KwCall => "call",
            Tok::KwSet => "set",
            Tok::KwEntry => "entry",
            Tok::KwExit => "exit",
            Tok::KwStart => "start",
            Tok::KwEnd => "end",
            Tok::KwOn => "on",
            Tok::KwCompletion => "completion",
            Tok::KwWhen => "when",
            Tok::KwPolicy => "policy",
            Tok::KwResume => "resume",
            Tok::KwRestart => "restart",
            Tok::KwContinue => "continue",
            Tok::KwDo => "do",
            Tok::KwSelf => "self",
            Tok::KwInvoke => "invoke",
            Tok::KwAt => "at",
            Tok::KwExpect => "expect",
            Tok::KwMaxcycles => "maxcycles",
            Tok::TyBool => "BOOL",
            Tok::TyInt => "INT",
            Tok::TyReal => "REAL",
            Tok::TyTime => "TIME",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::Assign => ":=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Eq => "=",
            Tok::Minus => "-",
            Tok::Ident(_) | Tok::Int(_) | Tok::Real(_) | Tok::Time(_) | Tok::True | Tok::False | Tok::Eof => {
                unreachable!()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "block" => Tok::KwBlock,
        "variant" => Tok::KwVariant,
        "of" => Tok::KwOf,
        "kind" => Tok::KwKind,
        "component" => Tok::KwComponent,
        "composite" => Tok::KwComposite,
        "system" => Tok::KwSystem,
        "in" => Tok::KwIn,
        "out" => Tok::KwOut,
        "part" => Tok::KwPart,
        "attr" => Tok::KwAttr,
        "function" => Tok::KwFunction,
        "override" => Tok::KwOverride,
        "root" => Tok::KwRoot,
        "lanes" => Tok::KwLanes,
        "node" => Tok::KwNode,
        "call" => Tok::KwCall,
        "set" => Tok::KwSet,
        "entry" => Tok::KwEntry,
        "exit" => Tok::KwExit,
        "start" => Tok::KwStart,
        "end" => Tok::KwEnd,
        "on" => Tok::KwOn,
        "completion" => Tok::KwCompletion,
        "when" => Tok::KwWhen,
        "policy" => Tok::KwPolicy,
        "resume" => Tok::KwResume,
        "restart" => Tok::KwRestart,
        "continue" => Tok::KwContinue,
        "do" => Tok::KwDo,
        "self" => Tok::KwSelf,
        "invoke" => Tok::KwInvoke,
        "at" => Tok::KwAt,
        "expect" => Tok::KwExpect,
        "maxcycles" => Tok::KwMaxcycles,
        "BOOL" => Tok::TyBool,
        "INT" => Tok::TyInt,
        "REAL" => Tok::TyReal,
        "TIME" => Tok::TyTime,
        "TRUE" => Tok::True,
        "FALSE" => Tok::False,
        _ => return None,
    })
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    file: Arc<str>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, file: Arc<str>) -> Self {
        Lexer { chars: text.chars().peekable(), file, line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn span_from(&self, start_line: u32, start_col: u32) -> Span {
        let end_col = if self.col > start_col || self.line > start_line { self.col - 1 } else { start_col };
        Span::new(self.file.clone(), start_line, start_col, self.line, end_col.max(1))
    }

    fn here(&self) -> Span {
        Span::new(self.file.clone(), self.line, self.col, self.line, self.col)
    }
}

/// Tokenizes `text`. On failure, returns the first lexical error as a
/// spanned diagnostic (codes E102/E104).
pub fn lex(text: &str, file: &str) -> Result<Vec<Token>, Diagnostic> {
    let file: Arc<str> = Arc::from(file);
    let mut lx = Lexer::new(text, file);
    let mut out = Vec::new();
    loop {
        while matches!(lx.peek(), Some(c) if c.is_whitespace()) {
            lx.bump();
        }
        // line comments
        if lx.peek() == Some('/') {
            let (l, c) = (lx.line, lx.col);
            lx.bump();
            if lx.peek() == Some('/') {
                while matches!(lx.peek(), Some(ch) if ch != '\n') {
                    lx.bump();
                }
                continue;
            }
            return Err(Diagnostic::error("E104", "unexpected character `/`", lx.span_from(l, c)));
        }
        let (start_line, start_col) = (lx.line, lx.col);
        let Some(c) = lx.peek() else {
            out.push(Token { tok: Tok::Eof, span: lx.here() });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while matches!(lx.peek(), Some(ch) if ch.is_ascii_alphanumeric() || ch == '_') {
                word.push(lx.bump().unwrap());
            }
            keyword(&word).unwrap_or(Tok::Ident(word))
        } else if c.is_ascii_digit() {
            lex_number(&mut lx, start_line, start_col)?
        } else {
            lx.bump();
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                ':' => {
                    if lx.peek() == Some('=') {
                        lx.bump();
                        Tok::Assign
                    } else {
                        Tok::Colon
                    }
                }
                '-' => {
                    if lx.peek() == Some('>') {
                        lx.bump();
                        Tok::Arrow
                    } else {
                        Tok::Minus
                    }
                }
                '=' => {
                    if lx.peek() == Some('=') {
                        lx.bump();
                        Tok::EqEq
                    } else {
                        Tok::Eq
                    }
                }
                '!' => {
                    if lx.peek() == Some('=') {
                        lx.bump();
                        Tok::Ne
                    } else {
                        return Err(Diagnostic::error(
                            "E104",
                            "unexpected character `!` (did you mean `!=`?)",
                            lx.span_from(start_line, start_col),
                        ));
                    }
                }
                '<' => {
                    if lx.peek() == Some('=') {
                        lx.bump();
                        Tok::Le
                    } else {
                        Tok::Lt
                    }
                }
                '>' => {
                    if lx.peek() == Some('=') {
                        lx.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                other => {
                    return Err(Diagnostic::error(
                        "E104",
                        format!("unexpected character `{}`", other.escape_default()),
                        lx.span_from(start_line, start_col),
                    ));
                }
            }
        };
        let span = lx.span_from(start_line, start_col);
        out.push(Token { tok, span });
    }
}

/// Numeric forms: `123` (INT), `1.5` / `1e9` / `2.5e-3` (REAL), `500ms` (TIME).
fn lex_number(lx: &mut Lexer<'_>, start_line: u32, start_col: u32) -> Result<Tok, Diagnostic> {
    let mut text = String::new();
    let mut is_real = false;
    while matches!(lx.peek(), Some(ch) if ch.is_ascii_digit()) {
        text.push(lx.bump().unwrap());
    }
    if lx.peek() == Some('.') {
        // a digit must follow, otherwise this is `INT .` (dotted path)
        let mut ahead = lx.chars.clone();
        ahead.next();
        if matches!(ahead.peek(), Some(d) if d.is_ascii_digit()) {
            is_real = true;
            text.push(lx.bump().unwrap());
            while matches!(lx.peek(), Some(ch) if ch.is_ascii_digit()) {
                text.push(lx.bump().unwrap());
            }
        }
    }
    if matches!(lx.peek(), Some('e') | Some('E')) {
        let mut ahead = lx.chars.clone();
        ahead.next();
        let next = ahead.peek().copied();
        let signed = matches!(next, Some('-') | Some('+'));
        if signed {
            ahead.next();
        }
        if matches!(ahead.peek(), Some(d) if d.is_ascii_digit()) {
            is_real = true;
            text.push(lx.bump().unwrap());
            if signed {
                text.push(lx.bump().unwrap());
            }
            while matches!(lx.peek(), Some(ch) if ch.is_ascii_digit()) {
                text.push(lx.bump().unwrap());
            }
        }
    }
    // trailing identifier characters: only the `ms` duration suffix is legal
    let mut suffix = String::new();
    while matches!(lx.peek(), Some(ch) if ch.is_ascii_alphanumeric() || ch == '_') {
        suffix.push(lx.bump().unwrap());
    }
    let span = lx.span_from(start_line, start_col);
    match (suffix.as_str(), is_real) {
        ("", false) => text
            .parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| Diagnostic::error("E102", format!("integer literal `{text}` out of range"), span)),
        ("", true) => text
            .parse::<f64>()
            .map(Tok::Real)
            .map_err(|_| Diagnostic::error("E102", format!("invalid real literal `{text}`"), span)),
        ("ms", false) => text
            .parse::<i64>()
            .map(Tok::Time)
            .map_err(|_| Diagnostic::error("E102", format!("duration literal `{text}ms` out of range"), span)),
        _ => Err(Diagnostic::error("E102", format!("invalid numeric literal `{text}{suffix}`"), span)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        lex(text, "t.modat").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("block X kind composite { }"),
            vec![
                Tok::KwBlock,
                Tok::Ident("X".into()),
                Tok::KwKind,
                Tok::KwComposite,
                Tok::LBrace,
                Tok::RBrace,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_durations() {
        assert_eq!(toks("42 1.5 500ms 1e3"), vec![Tok::Int(42), Tok::Real(1.5), Tok::Time(500), Tok::Real(1e3), Tok::Eof]);
    }

    #[test]
    fn dotted_path_is_not_a_real() {
        assert_eq!(toks("n1 -> n2"), vec![Tok::Ident("n1".into()), Tok::Arrow, Tok::Ident("n2".into()), Tok::Eof]);
        // `a.b` after an int: int, dot, ident
        assert_eq!(toks("1.x"), vec![Tok::Int(1), Tok::Dot, Tok::Ident("x".into()), Tok::Eof]);
    }

    #[test]
    fn operators() {
        assert_eq!(
            toks(":= == != <= >= < > = -"),
            vec![Tok::Assign, Tok::EqEq, Tok::Ne, Tok::Le, Tok::Ge, Tok::Lt, Tok::Gt, Tok::Eq, Tok::Minus, Tok::Eof]
        );
    }

    #[test]
    fn comments_and_crlf() {
        assert_eq!(toks("// header\r\nroot a: B"), vec![Tok::KwRoot, Tok::Ident("a".into()), Tok::Colon, Tok::Ident("B".into()), Tok::Eof]);
    }

    #[test]
    fn bad_character_is_a_diagnostic() {
        let err = lex("block @", "t.modat").unwrap_err();
        assert_eq!(err.code, "E104");
        assert_eq!(err.span.start_col, 7);
    }

    #[test]
    fn bad_suffix_is_a_diagnostic() {
        let err = lex("12abc", "t.modat").unwrap_err();
        assert_eq!(err.code, "E102");
    }

    #[test]
    fn overflow_is_a_diagnostic() {
        let err = lex("99999999999999999999999999", "t.modat").unwrap_err();
        assert_eq!(err.code, "E102");
    }
}
