//! Instruction data from annotated questions: query graph, reasoning chain,
//! reasoning program, per-step instruction pairs, and weighted corpus mixing.
//!
//! Query graphs are read as JSON Lines:
//!
//! ```text
//! {"id": "q0", "dataset": "webqsp", "question": "...", "start_node": "n0",
//!  "nodes": [{"id": "n0", "kind": "entity", "value": "#CristianoRonaldo"},
//!            {"id": "n1", "kind": "variable"}, {"id": "n2", "kind": "answer"}],
//!  "edges": [{"from": "n0", "to": "n1", "relation": "teams"},
//!            {"from": "n1", "to": "n2", "relation": "roster_team"}],
//!  "constraints": [{"node": "n1", "relation": "roster_from", "operator": "<=",
//!                   "value": "\"2011\"^^year"}],
//!  "superlatives": [], "answers": ["#RealMadrid"]}
//! ```

mod chain;
mod mix;
mod pairs;
mod query_graph;

use thiserror::Error;

pub use chain::{extract_reasoning_chain, generate_program, Condition, Hop, ProbePolicy, ReasoningChain};
pub use mix::{mix_corpus, quotas, MixError, MixSource, MixedCorpus, Shortfall, SourceReport};
pub use pairs::{
    build_instruction_pairs, pairs_to_jsonl, parse_pairs_jsonl, synthesize_sample, InstructionPair,
    PairBuild, Rejection, RejectionStage, Synthesized, SynthesisOptions,
};
pub use query_graph::{
    parse_query_graphs, ConstraintSpec, Edge, Node, NodeKind, QueryGraph, SuperlativeSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("query graph `{id}`: {message}")]
    Invalid { id: String, message: String },
    #[error("query graph `{id}`: unsupported shape: {message}")]
    Unsupported { id: String, message: String },
}
