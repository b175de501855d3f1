use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Number,
    String,
    Punctuation,
    Keyword,
}

/// One lexeme. `text` is the exact source slice, `start..end` its byte range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punctuation && self.text == p
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == k
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

pub const KEYWORDS: &[&str] = &["in", "null", "true", "false"];

// Longest first so that `:-` wins over `:` and `==` over `=`.
const PUNCTUATION: &[&str] = &[
    ":-", "->", "==", "!=", "<=", ">=", "(", ")", "{", "}", "[", "]", ",", ";", "|", ".", ":", "=",
    "+", "-", "*", "/", "<", ">",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

/// Splits `source` into tokens, skipping whitespace and `#` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let (start, line, column) = (cur.pos, cur.line, cur.column);
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            if KEYWORDS.contains(&&source[start..cur.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            lex_number(&mut cur)?;
            TokenKind::Number
        } else if c == '"' {
            cur.bump();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(LexError {
                            line,
                            column,
                            message: "unterminated string literal".to_string(),
                        })
                    }
                    Some('\\') => match cur.bump() {
                        Some('"' | '\\' | 'n' | 't' | 'r') => {}
                        _ => {
                            return Err(LexError {
                                line: cur.line,
                                column: cur.column.saturating_sub(1).max(1),
                                message: "invalid escape sequence".to_string(),
                            })
                        }
                    },
                    Some('"') => break,
                    Some(_) => {}
                }
            }
            TokenKind::String
        } else if let Some(p) = PUNCTUATION
            .iter()
            .find(|p| source[cur.pos..].starts_with(**p))
        {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punctuation
        } else {
            return Err(cur.error(alloc::format!("illegal character {c:?}")));
        };
        tokens.push(Token {
            kind,
            text: source[start..cur.pos].to_string(),
            line,
            column,
            start,
            end: cur.pos,
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<(), LexError> {
    while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && matches!(cur.peek_at(1), Some(c) if c.is_ascii_digit()) {
        cur.bump();
        while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let signed = matches!(cur.peek_at(1), Some('+' | '-'));
        let digit_at = if signed { 2 } else { 1 };
        if matches!(cur.peek_at(digit_at), Some(c) if c.is_ascii_digit()) {
            for _ in 0..digit_at {
                cur.bump();
            }
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    if matches!(cur.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
        return Err(cur.error("malformed number literal"));
    }
    Ok(())
}

/// Like [`tokenize`] but accepts arbitrary bytes; invalid UTF-8 is reported
/// at the position of the first bad byte.
pub fn tokenize_bytes(bytes: &[u8]) -> Result<Vec<Token>, LexError> {
    match core::str::from_utf8(bytes) {
        Ok(s) => tokenize(s),
        Err(e) => {
            let valid = core::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let line = 1 + valid.matches('\n').count();
            let column = 1 + valid.rsplit('\n').next().map_or(0, |l| l.chars().count());
            Err(LexError {
                line,
                column,
                message: "invalid UTF-8".to_string(),
            })
        }
    }
}

/// Decodes the body of a string token (without quotes) into its value.
pub(crate) fn unescape(text: &str) -> String {
    let inner = &text[1..text.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}
