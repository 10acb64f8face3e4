use super::ast::{TransformExpr, TransformSequence};
use super::lexer::{tokenize, Token, TokenKind};
use super::ops::{BinaryOp, OperatorSet, UnaryOp};
use super::ParseError;

/// Bounds applied while parsing generator output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseLimits {
    pub max_depth: usize,
    pub max_len: usize,
}

impl Default for ParseLimits {
    fn default() -> Self {
        ParseLimits {
            max_depth: 6,
            max_len: 32,
        }
    }
}

// Parenthesis nesting does not add tree depth, so bound it separately.
const MAX_NESTING: usize = 256;

pub(crate) struct Parser<'a> {
    input: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    ops: &'a OperatorSet,
    limits: ParseLimits,
    nesting: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(
        input: &'a str,
        ops: &'a OperatorSet,
        limits: ParseLimits,
    ) -> Result<Self, ParseError> {
        Ok(Parser {
            input,
            tokens: tokenize(input)?,
            pos: 0,
            ops,
            limits,
            nesting: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eos {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::new(self.input, offset, message)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        self.error(
            tok.offset,
            format!("expected {expected}, found {}", tok.kind.describe()),
        )
    }

    pub(crate) fn sequence(&mut self) -> Result<TransformSequence, ParseError> {
        let mut exprs = vec![self.checked_expr()?];
        while self.peek().kind == TokenKind::Comma {
            self.bump();
            if exprs.len() == self.limits.max_len {
                return Err(self.error(
                    self.peek().offset,
                    format!("sequence longer than {} expressions", self.limits.max_len),
                ));
            }
            exprs.push(self.checked_expr()?);
        }
        if self.peek().kind != TokenKind::Eos {
            return Err(self.unexpected("`,` or end of input"));
        }
        Ok(TransformSequence::new(exprs).expect("at least one expression"))
    }

    pub(crate) fn single(&mut self) -> Result<TransformExpr, ParseError> {
        let expr = self.checked_expr()?;
        if self.peek().kind != TokenKind::Eos {
            return Err(self.unexpected("end of input"));
        }
        Ok(expr)
    }

    fn checked_expr(&mut self) -> Result<TransformExpr, ParseError> {
        let start = self.peek().offset;
        let expr = self.expr()?;
        let depth = expr.depth();
        if depth > self.limits.max_depth {
            return Err(self.error(
                start,
                format!(
                    "expression depth {depth} exceeds the limit of {}",
                    self.limits.max_depth
                ),
            ));
        }
        Ok(expr)
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<TransformExpr, ParseError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(left),
            };
            let tok = self.bump();
            self.require_binary(op, tok.offset)?;
            let right = self.term()?;
            left = TransformExpr::binary(op, left, right);
        }
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<TransformExpr, ParseError> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(left),
            };
            let tok = self.bump();
            self.require_binary(op, tok.offset)?;
            let right = self.factor()?;
            left = TransformExpr::binary(op, left, right);
        }
    }

    // factor := FEATURE | OPNAME '(' expr ')' | '(' expr ')'
    fn factor(&mut self) -> Result<TransformExpr, ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Feature(i) => {
                self.bump();
                Ok(TransformExpr::Feature(i))
            }
            TokenKind::OpName(ref name) => {
                let op: UnaryOp = name
                    .parse()
                    .map_err(|_| self.error(tok.offset, format!("unknown operator `{name}`")))?;
                if !self.ops.contains_unary(op) {
                    return Err(self.error(
                        tok.offset,
                        format!("operator `{name}` is not in the operator set"),
                    ));
                }
                self.bump();
                if self.peek().kind != TokenKind::LParen {
                    return Err(self.unexpected(&format!("`(` after `{name}`")));
                }
                let child = self.parenthesized()?;
                Ok(TransformExpr::unary(op, child))
            }
            TokenKind::LParen => self.parenthesized(),
            TokenKind::Minus => Err(self.error(
                tok.offset,
                "unary minus is not supported; subtract one feature from another",
            )),
            _ => Err(self.unexpected("a feature, operator or `(`")),
        }
    }

    fn parenthesized(&mut self) -> Result<TransformExpr, ParseError> {
        let open = self.bump();
        debug_assert_eq!(open.kind, TokenKind::LParen);
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.error(open.offset, "parentheses nested too deeply"));
        }
        let inner = self.expr()?;
        if self.peek().kind != TokenKind::RParen {
            return Err(self.unexpected("`)`"));
        }
        self.bump();
        self.nesting -= 1;
        Ok(inner)
    }

    fn require_binary(&self, op: BinaryOp, offset: usize) -> Result<(), ParseError> {
        if self.ops.contains_binary(op) {
            Ok(())
        } else {
            Err(self.error(
                offset,
                format!("operator `{}` is not in the operator set", op.symbol()),
            ))
        }
    }
}
