use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// `f<digits>`, 1-based.
    Feature(usize),
    /// Lowercased operator name such as `log`.
    OpName(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Eos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the first character.
    pub offset: usize,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Feature(i) => format!("feature f{i}"),
            TokenKind::OpName(name) => format!("operator `{name}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Eos => "end of input".into(),
        }
    }
}

/// Splits a sequence into tokens, appending a final [`TokenKind::Eos`].
pub fn tokenize(input: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;

    while pos < bytes.len() {
        let c = bytes[pos];
        let single = match c {
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b',' => Some(TokenKind::Comma),
            _ => None,
        };
        if let Some(kind) = single {
            tokens.push(Token { kind, offset: pos });
            pos += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = pos;
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let word = &input[start..pos];
            tokens.push(Token {
                kind: classify_word(input, word, start)?,
                offset: start,
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            return Err(ParseError::new(
                input,
                pos,
                "numeric literals are not part of the feature language",
            ));
        }
        return Err(ParseError::new(input, pos, "unrecognized character"));
    }

    tokens.push(Token {
        kind: TokenKind::Eos,
        offset: input.len(),
    });
    Ok(tokens)
}

fn classify_word(input: &str, word: &str, offset: usize) -> Result<TokenKind, ParseError> {
    let lower = word.to_ascii_lowercase();
    if let Some(digits) = lower.strip_prefix('f') {
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            return match digits.parse::<usize>() {
                Ok(0) => Err(ParseError::new(
                    input,
                    offset,
                    "feature indices start at f1",
                )),
                Ok(i) => Ok(TokenKind::Feature(i)),
                Err(_) => Err(ParseError::new(input, offset, "feature index too large")),
            };
        }
    }
    Ok(TokenKind::OpName(lower))
}
