//! Graph terms: entity ids, typed literals and the values built from them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Characters that terminate an entity token in program text.
const TOKEN_TERMINATORS: &[char] = &[',', '(', ')', '[', ']', '"', '='];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid entity id `{0}`: expected `#` followed by a non-empty token without whitespace or `,()[]\"=`")]
    InvalidEntity(String),
    #[error("invalid {kind} literal `{text}`: {reason}")]
    InvalidLiteral {
        kind: LiteralKind,
        text: String,
        reason: String,
    },
    #[error("unknown literal kind `{0}` (expected string, int, float, year or date)")]
    UnknownKind(String),
    #[error("cannot compare {left} literal with {right} literal")]
    KindMismatch { left: LiteralKind, right: LiteralKind },
}

/// An entity id. Always carries its leading `#` sigil.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(Box<str>);

impl EntityId {
    pub fn new(token: &str) -> Result<Self, TermError> {
        if is_entity_token(token) {
            Ok(EntityId(token.into()))
        } else {
            Err(TermError::InvalidEntity(token.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The id without its sigil.
    pub fn name(&self) -> &str {
        &self.0[1..]
    }
}

pub(crate) fn is_entity_char(c: char) -> bool {
    !c.is_whitespace() && !TOKEN_TERMINATORS.contains(&c)
}

fn is_entity_token(token: &str) -> bool {
    match token.strip_prefix('#') {
        Some(rest) => !rest.is_empty() && rest.chars().all(is_entity_char),
        None => false,
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for EntityId {
    type Err = TermError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityId::new(s)
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        EntityId::new(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralKind {
    String,
    Integer,
    Decimal,
    Year,
    Date,
}

impl LiteralKind {
    pub const ALL: [LiteralKind; 5] = [
        LiteralKind::String,
        LiteralKind::Integer,
        LiteralKind::Decimal,
        LiteralKind::Year,
        LiteralKind::Date,
    ];

    /// Tag used after `^^` in graph files and programs.
    pub fn tag(self) -> &'static str {
        match self {
            LiteralKind::String => "string",
            LiteralKind::Integer => "int",
            LiteralKind::Decimal => "float",
            LiteralKind::Year => "year",
            LiteralKind::Date => "date",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self, TermError> {
        LiteralKind::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| TermError::UnknownKind(tag.to_string()))
    }
}

impl fmt::Display for LiteralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Typed literal. The stored text is canonical for its kind, so structural
/// equality agrees with same-kind comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    kind: LiteralKind,
    text: Box<str>,
}

impl Literal {
    pub fn new(kind: LiteralKind, text: &str) -> Result<Self, TermError> {
        let invalid = |reason: &str| TermError::InvalidLiteral {
            kind,
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let canonical: String = match kind {
            LiteralKind::String => text.to_string(),
            LiteralKind::Integer => text
                .trim()
                .parse::<i64>()
                .map_err(|_| invalid("not a 64-bit integer"))?
                .to_string(),
            LiteralKind::Decimal => {
                let v: f64 = text.trim().parse().map_err(|_| invalid("not a number"))?;
                if !v.is_finite() {
                    return Err(invalid("not finite"));
                }
                // -0 and 0 compare equal, keep one spelling
                let v = if v == 0.0 { 0.0 } else { v };
                v.to_string()
            }
            LiteralKind::Year => {
                let t = text.trim();
                if t.len() != 4 || !t.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(invalid("expected a 4-digit year"));
                }
                t.to_string()
            }
            LiteralKind::Date => NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
                .map_err(|e| invalid(&e.to_string()))?
                .format("%Y-%m-%d")
                .to_string(),
        };
        Ok(Literal {
            kind,
            text: canonical.into(),
        })
    }

    pub fn string(text: &str) -> Self {
        Literal {
            kind: LiteralKind::String,
            text: text.into(),
        }
    }

    pub fn year(year: u16) -> Result<Self, TermError> {
        Literal::new(LiteralKind::Year, &format!("{year:04}"))
    }

    pub fn kind(&self) -> LiteralKind {
        self.kind
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Same-kind comparison: numeric for int/float/year, chronological for
    /// dates, lexicographic for strings. Different kinds never compare.
    pub fn compare(&self, other: &Literal) -> Result<Ordering, TermError> {
        if self.kind != other.kind {
            return Err(TermError::KindMismatch {
                left: self.kind,
                right: other.kind,
            });
        }
        Ok(match self.kind {
            LiteralKind::String | LiteralKind::Date | LiteralKind::Year => {
                // canonical date and year text sorts chronologically
                self.text.cmp(&other.text)
            }
            LiteralKind::Integer => {
                let a: i64 = self.text.parse().expect("canonical integer");
                let b: i64 = other.text.parse().expect("canonical integer");
                a.cmp(&b)
            }
            LiteralKind::Decimal => {
                let a: f64 = self.text.parse().expect("canonical decimal");
                let b: f64 = other.text.parse().expect("canonical decimal");
                a.total_cmp(&b)
            }
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_quoted(f, &self.text)?;
        write!(f, "^^{}", self.kind.tag())
    }
}

/// Writes `text` as a double-quoted string with `\"`, `\\`, `\n`, `\t`, `\r`
/// escapes.
pub(crate) fn write_quoted(out: &mut impl fmt::Write, text: &str) -> fmt::Result {
    out.write_char('"')?;
    for c in text.chars() {
        match c {
            '"' => out.write_str("\\\"")?,
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            '\t' => out.write_str("\\t")?,
            '\r' => out.write_str("\\r")?,
            c => out.write_char(c)?,
        }
    }
    out.write_char('"')
}

/// A graph value: the tail position of a triple, or a member of a value set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Entity(EntityId),
    Literal(Literal),
}

impl Value {
    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            Value::Entity(e) => Some(e),
            Value::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Value::Literal(l) => Some(l),
            Value::Entity(_) => None,
        }
    }

    /// Canonical text: `#id` for entities, `"text"^^kind` for literals.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Entity(e) => e.fmt(f),
            Value::Literal(l) => l.fmt(f),
        }
    }
}

impl From<EntityId> for Value {
    fn from(e: EntityId) -> Self {
        Value::Entity(e)
    }
}

impl From<Literal> for Value {
    fn from(l: Literal) -> Self {
        Value::Literal(l)
    }
}

/// Values order by their canonical text.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Entity(a), Value::Entity(b)) => a.as_str().cmp(b.as_str()),
            // `"` (0x22) sorts before `#` (0x23)
            (Value::Literal(_), Value::Entity(_)) => Ordering::Less,
            (Value::Entity(_), Value::Literal(_)) => Ordering::Greater,
            (a, b) => a.canonical().cmp(&b.canonical()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        crate::lexer::parse_value(&s).map_err(serde::de::Error::custom)
    }
}
