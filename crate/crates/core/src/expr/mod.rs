//! The feature-transformation token language.
//!
//! Features are the tokens `f1..fn`; a generated feature is an expression
//! over them built from [`BinaryOp`] and [`UnaryOp`], and a set of generated
//! features is a comma-separated sequence such as `f1*f2,log(f3),f4/f5`.
//!
//! ```text
//! sequence := expr (',' expr)*
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := FEATURE | OPNAME '(' expr ')' | '(' expr ')'
//! ```
//!
//! There are no numeric literals and no unary minus.

mod ast;
mod eval;
mod lexer;
mod ops;
mod parser;
mod render;

use std::fmt;

pub use ast::{TransformExpr, TransformSequence};
pub use eval::{evaluate, EvalError, Evaluation, SAFE_EPSILON};
pub use lexer::{tokenize, Token, TokenKind};
pub use ops::{BinaryOp, EmptyOperatorSet, OperatorSet, UnaryOp};
pub use parser::ParseLimits;
pub use render::{canonical_key, canonicalize, render, render_expr};

/// Plain-text grammar summary for error messages.
pub const GRAMMAR_HELP: &str = "\
sequence := expr (',' expr)*
expr     := term (('+' | '-') term)*
term     := factor (('*' | '/') factor)*
factor   := FEATURE | OPNAME '(' expr ')' | '(' expr ')'
FEATURE  := f1 | f2 | ...     (1-based column tokens)
OPNAME   := log | sqrt | square | abs | reciprocal | sin | cos | tanh
";

/// A lexing or parsing failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input; never past its end.
    pub position: usize,
    pub message: String,
    /// Up to 16 characters of input starting at `position`.
    pub fragment: String,
}

impl ParseError {
    pub(crate) fn new(input: &str, position: usize, message: impl Into<String>) -> Self {
        let position = position.min(input.len());
        ParseError {
            position,
            message: message.into(),
            fragment: input[position..].chars().take(16).collect(),
        }
    }

    /// Two-line rendering with a caret under the offending byte.
    pub fn annotate(&self, input: &str) -> String {
        let prefix = &input[..self.position.min(input.len())];
        let pad = prefix.chars().count();
        format!("{input}\n{}^ {}", " ".repeat(pad), self.message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)?;
        if !self.fragment.is_empty() {
            write!(f, " (near `{}`)", self.fragment)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Parses a comma-separated sequence with the default limits
/// (depth 6, 32 expressions).
pub fn parse(input: &str, ops: &OperatorSet) -> Result<TransformSequence, ParseError> {
    parse_with_limits(input, ops, ParseLimits::default())
}

pub fn parse_with_limits(
    input: &str,
    ops: &OperatorSet,
    limits: ParseLimits,
) -> Result<TransformSequence, ParseError> {
    parser::Parser::new(input, ops, limits)?.sequence()
}

/// Parses exactly one expression using every operator.
pub fn parse_expr(input: &str) -> Result<TransformExpr, ParseError> {
    let ops = OperatorSet::default();
    parser::Parser::new(input, &ops, ParseLimits::default())?.single()
}

/// Reads an `.fts` document: one sequence per non-empty line.
pub fn parse_fts(
    text: &str,
    ops: &OperatorSet,
) -> Result<Vec<TransformSequence>, (usize, ParseError)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(n, line)| parse(line, ops).map_err(|e| (n + 1, e)))
        .collect()
}

/// Writes sequences in canonical form, one per LF-terminated line.
pub fn render_fts<'a>(seqs: impl IntoIterator<Item = &'a TransformSequence>) -> String {
    let mut out = String::new();
    for seq in seqs {
        out.push_str(&render(seq));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_help_lists_every_unary_operator() {
        for op in UnaryOp::ALL {
            assert!(GRAMMAR_HELP.contains(op.name()), "{}", op.name());
        }
    }

    #[test]
    fn annotate_points_at_error() {
        let input = "f1**f2";
        let err = parse(input, &OperatorSet::default()).unwrap_err();
        assert_eq!(
            err.annotate(input),
            "f1**f2\n   ^ expected a feature, operator or `(`, found `*`"
        );
    }

    #[test]
    fn fts_round_trip() {
        let text = "(f1*f2),log(f3)\n\nf4/f5\n";
        let seqs = parse_fts(text, &OperatorSet::default()).unwrap();
        assert_eq!(render_fts(&seqs), "f1*f2,log(f3)\nf4/f5\n");
        let (line, _) = parse_fts("f1\nf1**f2\n", &OperatorSet::default()).unwrap_err();
        assert_eq!(line, 2);
    }

    #[test]
    fn serde_uses_canonical_text() {
        let seq = parse("(f2+f1)/f3", &OperatorSet::default()).unwrap();
        let json = serde_json::to_string(&seq).unwrap();
        assert_eq!(json, "\"(f2+f1)/f3\"");
        let back: TransformSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, seq);
    }
}
