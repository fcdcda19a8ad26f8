use std::sync::Arc;

use super::{ParseDiagnostic, Severity};
use crate::span::SourceSpan;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident(String),
    Int(u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Semi,
    DotDot,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Int(n) => format!("integer `{n}`"),
            TokenKind::Str(_) => "string literal".to_owned(),
            TokenKind::LBrace => "`{`".to_owned(),
            TokenKind::RBrace => "`}`".to_owned(),
            TokenKind::LParen => "`(`".to_owned(),
            TokenKind::RParen => "`)`".to_owned(),
            TokenKind::LBracket => "`[`".to_owned(),
            TokenKind::RBracket => "`]`".to_owned(),
            TokenKind::Comma => "`,`".to_owned(),
            TokenKind::Equals => "`=`".to_owned(),
            TokenKind::Semi => "`;`".to_owned(),
            TokenKind::DotDot => "`..`".to_owned(),
            TokenKind::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits `text` into tokens. Stops at the first lexical error.
pub(crate) fn tokenize(file: &Arc<str>, text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut cursor = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    loop {
        while let Some(c) = cursor.peek() {
            if c.is_whitespace() {
                cursor.bump();
            } else if c == '#' {
                while cursor.peek().is_some_and(|c| c != '\n') {
                    cursor.bump();
                }
            } else {
                break;
            }
        }
        let span = SourceSpan::new(file.clone(), cursor.line, cursor.column);
        let error = |message: String| ParseDiagnostic {
            severity: Severity::Error,
            message,
            span: span.clone(),
        };
        let Some(c) = cursor.bump() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                span,
            });
            return Ok(tokens);
        };
        let kind = match c {
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '[' => TokenKind::LBracket,
            ']' => TokenKind::RBracket,
            ',' => TokenKind::Comma,
            '=' => TokenKind::Equals,
            ';' => TokenKind::Semi,
            '.' => {
                if cursor.peek() == Some('.') {
                    cursor.bump();
                    TokenKind::DotDot
                } else {
                    return Err(error("expected `..`".to_owned()));
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match cursor.bump() {
                        None | Some('\n') => return Err(error("unterminated string literal".to_owned())),
                        Some('"') => break,
                        Some('\\') => match cursor.bump() {
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(error("invalid escape in string literal".to_owned())),
                        },
                        Some(c) => s.push(c),
                    }
                }
                TokenKind::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(d) = cursor.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cursor.bump();
                }
                match digits.parse() {
                    Ok(n) => TokenKind::Int(n),
                    Err(_) => return Err(error(format!("integer `{digits}` is too large"))),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::from(c);
                while let Some(d) = cursor.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                    ident.push(d);
                    cursor.bump();
                }
                TokenKind::Ident(ident)
            }
            other => return Err(error(format!("unexpected character `{other}`"))),
        };
        tokens.push(Token { kind, span });
    }
}
