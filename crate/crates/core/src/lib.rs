//! Knowledge-graph reasoning runtime.
//!
//! - [`kg_store`]: immutable indexed triple store.
//! - [`toolbox`]: the KG tools (extraction, logic, semantic) and their registry.
//! - [`program`]: the reasoning-program language: parser and serializer.
//! - [`memory`]: knowledge memory and deterministic prompt rendering.
//! - [`executor`]: validating interpreter for reasoning programs.
//! - [`agent`]: planner-driven iteration loop.
//! - [`synthesis`]: query graph to instruction-data pipeline.
//! - [`evalkit`]: answer-set metrics.

pub mod kg_store;
pub mod lexer;
pub mod fixtures;
pub mod toolbox;
pub mod program;
pub mod memory;
pub mod executor;
pub mod agent;
pub mod synthesis;
pub mod evalkit;
