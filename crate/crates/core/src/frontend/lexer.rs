// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use thiserror::Error;

use super::ast::Pos;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    // keywords
    Function,
    End,
    If,
    ElseIf,
    Else,
    While,
    Return,
    True,
    False,
    // punctuation and operators
    LParen,
    RParen,
    Comma,
    ColonColon,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Semicolon,
    Newline,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => return write!(f, "integer `{v}`"),
            TokenKind::Float(v) => return write!(f, "float `{v:?}`"),
            TokenKind::Function => "`function`",
            TokenKind::End => "`end`",
            TokenKind::If => "`if`",
            TokenKind::ElseIf => "`elseif`",
            TokenKind::Else => "`else`",
            TokenKind::While => "`while`",
            TokenKind::Return => "`return`",
            TokenKind::True => "`true`",
            TokenKind::False => "`false`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::Comma => "`,`",
            TokenKind::ColonColon => "`::`",
            TokenKind::Assign => "`=`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Percent => "`%`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
            TokenKind::EqEq => "`==`",
            TokenKind::Ne => "`!=`",
            TokenKind::AndAnd => "`&&`",
            TokenKind::OrOr => "`||`",
            TokenKind::Bang => "`!`",
            TokenKind::Semicolon => "`;`",
            TokenKind::Newline => "newline",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{pos}: unexpected character {found:?}{}", if .detail.is_empty() { String::new() } else { format!(" ({})", .detail) })]
pub struct LexError {
    pub pos: Pos,
    pub found: char,
    pub detail: String,
}

struct Cursor<'a> {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.idx + ahead).copied()
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits source text into tokens. Newlines are significant (statement
/// separators) except inside parentheses.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        idx: 0,
        line: 1,
        col: 1,
        _src: text,
    };
    let mut tokens = Vec::new();
    let mut paren_depth = 0usize;

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        match c {
            ' ' | '\t' | '\r' => {
                cur.bump();
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '\n' => {
                cur.bump();
                if paren_depth == 0
                    && !matches!(
                        tokens.last(),
                        Some(Token {
                            kind: TokenKind::Newline,
                            ..
                        })
                    )
                {
                    tokens.push(Token {
                        kind: TokenKind::Newline,
                        pos,
                    });
                }
            }
            '0'..='9' => tokens.push(lex_number(&mut cur)?),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                let kind = match ident.as_str() {
                    "function" => TokenKind::Function,
                    "end" => TokenKind::End,
                    "if" => TokenKind::If,
                    "elseif" => TokenKind::ElseIf,
                    "else" => TokenKind::Else,
                    "while" => TokenKind::While,
                    "return" => TokenKind::Return,
                    "true" => TokenKind::True,
                    "false" => TokenKind::False,
                    _ => TokenKind::Ident(ident),
                };
                tokens.push(Token { kind, pos });
            }
            _ => {
                cur.bump();
                let next = cur.peek();
                let two = |cur: &mut Cursor, kind: TokenKind| {
                    cur.bump();
                    kind
                };
                let kind = match (c, next) {
                    ('(', _) => {
                        paren_depth += 1;
                        TokenKind::LParen
                    }
                    (')', _) => {
                        paren_depth = paren_depth.saturating_sub(1);
                        TokenKind::RParen
                    }
                    (',', _) => TokenKind::Comma,
                    (';', _) => TokenKind::Semicolon,
                    (':', Some(':')) => two(&mut cur, TokenKind::ColonColon),
                    ('=', Some('=')) => two(&mut cur, TokenKind::EqEq),
                    ('=', _) => TokenKind::Assign,
                    ('!', Some('=')) => two(&mut cur, TokenKind::Ne),
                    ('!', _) => TokenKind::Bang,
                    ('<', Some('=')) => two(&mut cur, TokenKind::Le),
                    ('<', _) => TokenKind::Lt,
                    ('>', Some('=')) => two(&mut cur, TokenKind::Ge),
                    ('>', _) => TokenKind::Gt,
                    ('&', Some('&')) => two(&mut cur, TokenKind::AndAnd),
                    ('|', Some('|')) => two(&mut cur, TokenKind::OrOr),
                    ('+', _) => TokenKind::Plus,
                    ('-', _) => TokenKind::Minus,
                    ('*', _) => TokenKind::Star,
                    ('/', _) => TokenKind::Slash,
                    ('%', _) => TokenKind::Percent,
                    _ => {
                        return Err(LexError {
                            pos,
                            found: c,
                            detail: String::new(),
                        })
                    }
                };
                tokens.push(Token { kind, pos });
            }
        }
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor) -> Result<Token, LexError> {
    let pos = cur.pos();
    let mut text = String::new();
    let mut is_float = false;
    let digits = |cur: &mut Cursor, text: &mut String| {
        while let Some(c) = cur.peek() {
            if c.is_ascii_digit() || c == '_' {
                if c != '_' {
                    text.push(c);
                }
                cur.bump();
            } else {
                break;
            }
        }
    };
    digits(cur, &mut text);
    if cur.peek() == Some('.') {
        let dot_pos = cur.pos();
        if !cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            return Err(LexError {
                pos: dot_pos,
                found: '.',
                detail: "expected digits after decimal point".into(),
            });
        }
        is_float = true;
        cur.bump();
        text.push('.');
        digits(cur, &mut text);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let e_pos = cur.pos();
        let sign = cur.peek_at(1);
        let has_sign = matches!(sign, Some('+' | '-'));
        let first_digit = if has_sign { cur.peek_at(2) } else { sign };
        if !first_digit.is_some_and(|c| c.is_ascii_digit()) {
            return Err(LexError {
                pos: e_pos,
                found: cur.peek().unwrap_or('e'),
                detail: "malformed exponent".into(),
            });
        }
        is_float = true;
        cur.bump();
        text.push('e');
        if has_sign {
            text.push(cur.bump().unwrap_or('+'));
        }
        digits(cur, &mut text);
    }
    // A number running straight into a dot or a letter is malformed (`1.5.2`, `12abc`).
    if let Some(c) = cur.peek() {
        if c == '.' || c.is_ascii_alphabetic() {
            return Err(LexError {
                pos: cur.pos(),
                found: c,
                detail: "malformed numeric literal".into(),
            });
        }
    }
    let kind = if is_float {
        TokenKind::Float(text.parse().map_err(|_| LexError {
            pos,
            found: text.chars().next().unwrap_or('0'),
            detail: "invalid float literal".into(),
        })?)
    } else {
        TokenKind::Int(text.parse().map_err(|_| LexError {
            pos,
            found: text.chars().next().unwrap_or('0'),
            detail: "integer literal out of range for Int64".into(),
        })?)
    };
    Ok(Token { kind, pos })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text)
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn simple_assignment() {
        assert_eq!(
            kinds("x = 1"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Assign,
                TokenKind::Int(1)
            ]
        );
    }

    #[test]
    fn keywords() {
        assert_eq!(
            kinds("while n > 0"),
            vec![
                TokenKind::While,
                TokenKind::Ident("n".into()),
                TokenKind::Gt,
                TokenKind::Int(0)
            ]
        );
    }

    #[test]
    fn malformed_literals_report_the_offending_position() {
        let err = tokenize("1.5.2").unwrap_err();
        assert_eq!(err.pos, Pos::new(1, 4));
        assert_eq!(err.found, '.');

        // Hand-enumerated rejects and where each one fails.
        let rejects = [
            ("1.", Pos::new(1, 2), '.'),
            ("x = 3.x", Pos::new(1, 6), '.'),
            ("2e", Pos::new(1, 2), 'e'),
            ("2e+", Pos::new(1, 2), 'e'),
            ("12ab", Pos::new(1, 3), 'a'),
            ("a $ b", Pos::new(1, 3), '$'),
            ("a & b", Pos::new(1, 3), '&'),
            ("99999999999999999999", Pos::new(1, 1), '9'),
        ];
        for (text, pos, found) in rejects {
            let err = tokenize(text).unwrap_err();
            assert_eq!((err.pos, err.found), (pos, found), "input {text:?}");
        }
    }

    #[test]
    fn float_forms() {
        assert_eq!(kinds("1.5"), vec![TokenKind::Float(1.5)]);
        assert_eq!(kinds("1e-12"), vec![TokenKind::Float(1e-12)]);
        assert_eq!(kinds("2.5E3"), vec![TokenKind::Float(2500.0)]);
        assert_eq!(kinds("1_000"), vec![TokenKind::Int(1000)]);
    }

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("# header\nfunction f(a::Int64)\n  return a # trailing\nend").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Newline);
        assert_eq!(toks[1].kind, TokenKind::Function);
        assert_eq!(toks[1].pos, Pos::new(2, 1));
        let ret = toks.iter().find(|t| t.kind == TokenKind::Return).unwrap();
        assert_eq!(ret.pos, Pos::new(3, 3));
        assert!(toks.iter().any(|t| t.kind == TokenKind::ColonColon));
    }

    #[test]
    fn newlines_inside_parens_are_dropped() {
        let k = kinds("f(a,\n  b)\n\n\nx");
        assert_eq!(
            k.iter().filter(|k| **k == TokenKind::Newline).count(),
            1,
            "{k:?}"
        );
    }
}
