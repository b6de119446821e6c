//! Immutable, indexed in-memory knowledge graph.
//!
//! Graph files are UTF-8 with one record per line:
//!
//! ```text
//! // comment
//! #CristianoRonaldo	teams	#cvt1
//! #cvt1	roster_from	"2003"^^year
//! #Isolated
//! ```
//!
//! Fields are tab-separated. Entity tokens start with `#`; literals are
//! `"text"^^kind` with kind one of `string`, `int`, `float`, `year`, `date`.
//! A line holding a single entity token declares an entity with no triples.
#![allow(clippy::tabs_in_doc_comments)]

mod graph;
mod term;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use graph::{
    label_tokens, normalize_label, DirectedRelation, Direction, GraphBuilder, GraphSchema,
    KnowledgeGraph, Triple,
};
pub(crate) use graph::TermId;
pub(crate) use term::{is_entity_char, write_quoted};
pub use term::{EntityId, Literal, LiteralKind, TermError, Value};

#[derive(Debug, Error)]
pub enum KgError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: literal `{literal}` in head position")]
    LiteralHead { line: usize, literal: String },
    #[error("invalid relation name `{0}`")]
    InvalidRelation(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<KnowledgeGraph, KgError> {
    load_graph_with_schema(path, GraphSchema::default())
}

pub fn load_graph_with_schema(
    path: impl AsRef<Path>,
    schema: GraphSchema,
) -> Result<KnowledgeGraph, KgError> {
    let path = path.as_ref();
    let io_err = |source| KgError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut builder = GraphBuilder::new(schema);
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        parse_record(&mut builder, &line, idx + 1)?;
    }
    Ok(builder.build())
}

/// Parses graph text held in memory.
pub fn parse_graph(text: &str, schema: GraphSchema) -> Result<KnowledgeGraph, KgError> {
    let mut builder = GraphBuilder::new(schema);
    for (idx, line) in text.lines().enumerate() {
        parse_record(&mut builder, line, idx + 1)?;
    }
    Ok(builder.build())
}

fn parse_record(builder: &mut GraphBuilder, line: &str, line_no: usize) -> Result<(), KgError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with("//") {
        return Ok(());
    }
    let parse_err = |message: String| KgError::Parse {
        line: line_no,
        message,
    };
    let fields: Vec<&str> = trimmed.split('\t').collect();
    match fields.as_slice() {
        [single] => {
            let entity = EntityId::new(single).map_err(|_| {
                parse_err(format!(
                    "expected `head<TAB>relation<TAB>tail` or a single entity token, found `{single}`"
                ))
            })?;
            builder.declare_entity(entity);
            Ok(())
        }
        [head, relation, tail] => {
            let head = parse_term(head).map_err(|m| parse_err(format!("head: {m}")))?;
            let head = match head {
                Value::Entity(e) => e,
                Value::Literal(l) => {
                    return Err(KgError::LiteralHead {
                        line: line_no,
                        literal: l.to_string(),
                    })
                }
            };
            let tail = parse_term(tail).map_err(|m| parse_err(format!("tail: {m}")))?;
            builder.add(head, relation, tail).map_err(|e| match e {
                KgError::InvalidRelation(r) => parse_err(format!("invalid relation name `{r}`")),
                other => other,
            })
        }
        other => Err(parse_err(format!(
            "expected 3 tab-separated fields, found {}",
            other.len()
        ))),
    }
}

fn parse_term(field: &str) -> Result<Value, String> {
    if field.starts_with('#') {
        return EntityId::new(field)
            .map(Value::Entity)
            .map_err(|e| e.to_string());
    }
    crate::lexer::parse_value(field).map_err(|e| e.message)
}
