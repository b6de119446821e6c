//! Scoring contracts behind `retrieve_relation` and `disambiguate_entity`,
//! with deterministic lexical defaults.

use std::collections::BTreeSet;

use crate::kg_store::{DirectedRelation, EntityId, KnowledgeGraph};

/// Relevance of a relation to a question. Higher is better.
pub trait RelationScorer: Send + Sync {
    fn score(&self, question: &str, relation: &DirectedRelation) -> f64;
}

/// Fitness of a candidate entity for a question. Higher is better.
pub trait EntityScorer: Send + Sync {
    fn score(&self, graph: &KnowledgeGraph, question: &str, entity: &EntityId) -> f64;
}

/// Lowercased alphanumeric runs with a trailing plural `s` removed
/// (`teams` and `team` both become `team`). Underscores split tokens.
pub fn lexical_tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| stem(&t.to_lowercase()))
        .collect()
}

fn stem(token: &str) -> String {
    if token.chars().count() > 3 && token.ends_with('s') && !token.ends_with("ss") {
        token[..token.len() - 1].to_string()
    } else {
        token.to_string()
    }
}

fn overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> usize {
    a.intersection(b).count()
}

/// Number of relation-name tokens that also occur in the question.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalRelationScorer;

impl RelationScorer for LexicalRelationScorer {
    fn score(&self, question: &str, relation: &DirectedRelation) -> f64 {
        overlap(&lexical_tokens(question), &lexical_tokens(&relation.relation)) as f64
    }
}

/// Label-token overlap with the question plus overlap between the question
/// and the tokens of the candidate's one-hop relation names.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalEntityScorer;

impl EntityScorer for LexicalEntityScorer {
    fn score(&self, graph: &KnowledgeGraph, question: &str, entity: &EntityId) -> f64 {
        let q = lexical_tokens(question);
        let label_tokens: BTreeSet<String> = graph
            .labels_of(entity)
            .into_iter()
            .flat_map(lexical_tokens)
            .collect();
        let relation_tokens: BTreeSet<String> = graph
            .neighboring_relations([entity])
            .unwrap_or_default()
            .iter()
            .flat_map(|r| lexical_tokens(&r.relation))
            .collect();
        (overlap(&q, &label_tokens) + overlap(&q, &relation_tokens)) as f64
    }
}
