//! Tokenizer shared by graph files and reasoning programs.

use thiserror::Error;

use crate::kg_store::{is_entity_char, EntityId, Literal, LiteralKind, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct LexError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Var(u32),
    Entity(EntityId),
    Str(String),
    Literal(Literal),
    Integer(i64),
    Equals,
    LParen,
    RParen,
    Comma,
    LBracket,
    RBracket,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Var(n) => format!("variable `v{n}`"),
            TokenKind::Entity(e) => format!("entity `{e}`"),
            TokenKind::Str(_) => "string".to_string(),
            TokenKind::Literal(l) => format!("literal `{l}`"),
            TokenKind::Integer(i) => format!("integer `{i}`"),
            TokenKind::Equals => "`=`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub column: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut tokens = Vec::new();
    while pos < chars.len() {
        let c = chars[pos];
        let column = pos + 1;
        let err = |message: String| LexError { column, message };
        if c.is_whitespace() {
            pos += 1;
            continue;
        }
        let kind = match c {
            '=' => {
                pos += 1;
                TokenKind::Equals
            }
            '(' => {
                pos += 1;
                TokenKind::LParen
            }
            ')' => {
                pos += 1;
                TokenKind::RParen
            }
            ',' => {
                pos += 1;
                TokenKind::Comma
            }
            '[' => {
                pos += 1;
                TokenKind::LBracket
            }
            ']' => {
                pos += 1;
                TokenKind::RBracket
            }
            '#' => {
                let start = pos;
                pos += 1;
                while pos < chars.len() && is_entity_char(chars[pos]) {
                    pos += 1;
                }
                let token: String = chars[start..pos].iter().collect();
                TokenKind::Entity(EntityId::new(&token).map_err(|e| err(e.to_string()))?)
            }
            '"' => {
                let (body, next) = lex_quoted(&chars, pos)?;
                pos = next;
                if chars.get(pos) == Some(&'^') && chars.get(pos + 1) == Some(&'^') {
                    pos += 2;
                    let start = pos;
                    while pos < chars.len() && chars[pos].is_ascii_alphanumeric() {
                        pos += 1;
                    }
                    let tag: String = chars[start..pos].iter().collect();
                    let kind = LiteralKind::from_tag(&tag).map_err(|e| LexError {
                        column: start + 1,
                        message: e.to_string(),
                    })?;
                    TokenKind::Literal(Literal::new(kind, &body).map_err(|e| err(e.to_string()))?)
                } else {
                    TokenKind::Str(body)
                }
            }
            c if c.is_ascii_digit() || (c == '-' && next_is_digit(&chars, pos)) => {
                let start = pos;
                pos += 1;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                let digits: String = chars[start..pos].iter().collect();
                TokenKind::Integer(
                    digits
                        .parse()
                        .map_err(|_| err(format!("integer `{digits}` out of range")))?,
                )
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = pos;
                while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_')
                {
                    pos += 1;
                }
                let word: String = chars[start..pos].iter().collect();
                match parse_var(&word) {
                    Some(n) => TokenKind::Var(n),
                    None => TokenKind::Ident(word),
                }
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        };
        tokens.push(Token { kind, column });
    }
    Ok(tokens)
}

fn next_is_digit(chars: &[char], pos: usize) -> bool {
    chars.get(pos + 1).is_some_and(|c| c.is_ascii_digit())
}

/// `v0`, `v1`, ... without leading zeros.
fn parse_var(word: &str) -> Option<u32> {
    let digits = word.strip_prefix('v')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Lexes a quoted string starting at `start` (the opening quote). Returns the
/// unescaped body and the position after the closing quote.
fn lex_quoted(chars: &[char], start: usize) -> Result<(String, usize), LexError> {
    let mut out = String::new();
    let mut pos = start + 1;
    loop {
        match chars.get(pos) {
            None => {
                return Err(LexError {
                    column: start + 1,
                    message: "unterminated string".to_string(),
                })
            }
            Some('"') => return Ok((out, pos + 1)),
            Some('\\') => {
                let escaped = match chars.get(pos + 1) {
                    Some('"') => '"',
                    Some('\\') => '\\',
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('r') => '\r',
                    other => {
                        return Err(LexError {
                            column: pos + 1,
                            message: match other {
                                Some(c) => format!("unknown escape `\\{c}`"),
                                None => "unterminated escape".to_string(),
                            },
                        })
                    }
                };
                out.push(escaped);
                pos += 2;
            }
            Some(c) => {
                out.push(*c);
                pos += 1;
            }
        }
    }
}

/// Parses text holding exactly one entity token or typed literal.
pub fn parse_value(text: &str) -> Result<Value, LexError> {
    let mut tokens = tokenize(text)?;
    if tokens.len() != 1 {
        return Err(LexError {
            column: tokens.get(1).map_or(1, |t| t.column),
            message: format!("expected a single entity or literal, found `{text}`"),
        });
    }
    let token = tokens.remove(0);
    match token.kind {
        TokenKind::Entity(e) => Ok(Value::Entity(e)),
        TokenKind::Literal(l) => Ok(Value::Literal(l)),
        other => Err(LexError {
            column: token.column,
            message: format!("expected entity or literal, found {}", other.describe()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn call_tokens() {
        let ks = kinds(r#"v2 = get_entity_by_constraint(v1, "roster_from", "<=", "2011"^^year)"#);
        assert_eq!(ks[0], TokenKind::Var(2));
        assert_eq!(ks[1], TokenKind::Equals);
        assert_eq!(ks[2], TokenKind::Ident("get_entity_by_constraint".into()));
        assert_eq!(ks[6], TokenKind::Str("roster_from".into()));
        assert_eq!(
            ks[10],
            TokenKind::Literal(Literal::new(LiteralKind::Year, "2011").unwrap())
        );
        assert_eq!(ks.len(), 12);
    }

    #[test]
    fn leading_zero_var_is_an_identifier() {
        assert_eq!(kinds("v01"), vec![TokenKind::Ident("v01".into())]);
        assert_eq!(kinds("v0"), vec![TokenKind::Var(0)]);
    }

    #[test]
    fn entity_stops_at_punctuation() {
        assert_eq!(
            kinds("(#a,#b)"),
            vec![
                TokenKind::LParen,
                TokenKind::Entity(EntityId::new("#a").unwrap()),
                TokenKind::Comma,
                TokenKind::Entity(EntityId::new("#b").unwrap()),
                TokenKind::RParen,
            ]
        );
    }

    #[test]
    fn errors_carry_columns() {
        let e = tokenize(r#"v1 = f("abc"#).unwrap_err();
        assert_eq!(e.column, 8);
        let e = tokenize("v1 = f(%)").unwrap_err();
        assert_eq!(e.column, 8);
        let e = tokenize(r#""x"^^color"#).unwrap_err();
        assert_eq!(e.column, 6);
    }

    #[test]
    fn single_values() {
        assert_eq!(
            parse_value("#ManU").unwrap(),
            Value::Entity(EntityId::new("#ManU").unwrap())
        );
        assert_eq!(
            parse_value(r#""Real Madrid"^^string"#).unwrap(),
            Value::Literal(Literal::string("Real Madrid"))
        );
        assert!(parse_value(r#""untyped""#).is_err());
        assert!(parse_value("#a #b").is_err());
    }
}
