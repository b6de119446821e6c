//! The bundled reference fixtures: graph G0, question Q0, program P0 and the
//! query-graph samples built over G0.

use crate::kg_store::{parse_graph, GraphSchema, KnowledgeGraph};

/// Cristiano Ronaldo's club history with CVT roster nodes.
pub const G0_TSV: &str = include_str!("../fixtures/g0.tsv");

pub const Q0: &str = "Which team did Cristiano Ronaldo play for in 2011?";

/// Reference program answering [`Q0`] on G0.
pub const P0: &str = include_str!("../fixtures/p0.kgp");

/// Query-graph samples over G0, one JSON object per line.
pub const SAMPLES_JSONL: &str = include_str!("../fixtures/samples.jsonl");

pub fn g0() -> KnowledgeGraph {
    parse_graph(G0_TSV, GraphSchema::default()).expect("bundled fixture parses")
}
