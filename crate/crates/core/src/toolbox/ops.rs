//! Tool semantics. Every function is pure in (graph, arguments).

use std::cmp::Ordering;

use super::semantic::{EntityScorer, RelationScorer};
use super::value::{RelationSet, ValueSet};
use super::{Comparison, ConstraintOp, ToolError};
use crate::kg_store::{DirectedRelation, EntityId, KnowledgeGraph, TermId, Value};

fn entity_members<'a>(es: &'a ValueSet, tool: &str) -> Result<Vec<&'a EntityId>, ToolError> {
    es.entities().map_err(|lit| {
        ToolError::Type(format!("{tool} expects entities, found literal {lit}"))
    })
}

fn require_ids(g: &KnowledgeGraph, entities: &[&EntityId]) -> Result<Vec<TermId>, ToolError> {
    entities
        .iter()
        .map(|e| {
            g.entity_id(e)
                .ok_or_else(|| ToolError::UnknownEntity((*e).clone()))
        })
        .collect()
}

fn ids_to_set(g: &KnowledgeGraph, mut ids: Vec<TermId>) -> ValueSet {
    ids.sort_unstable();
    ids.dedup();
    // term ids are assigned in canonical order
    ValueSet::from_sorted(ids.into_iter().map(|id| g.term(id).clone()).collect())
}

pub fn get_relation(g: &KnowledgeGraph, es: &ValueSet) -> Result<RelationSet, ToolError> {
    if es.is_empty() {
        return Err(ToolError::Argument("get_relation needs a non-empty entity set".into()));
    }
    let entities = entity_members(es, "get_relation")?;
    let rels = g
        .neighboring_relations(entities.iter().copied())
        .map_err(ToolError::from)?;
    Ok(RelationSet::sorted(rels))
}

pub fn get_tail_entity(g: &KnowledgeGraph, es: &ValueSet, relation: &str) -> Result<ValueSet, ToolError> {
    let ids = require_ids(g, &entity_members(es, "get_tail_entity")?)?;
    let Some(r) = g.relation_id(relation) else {
        return Ok(ValueSet::new());
    };
    let tails = ids.into_iter().flat_map(|h| g.tail_ids(h, r)).collect();
    Ok(ids_to_set(g, tails))
}

pub fn get_head_entity(g: &KnowledgeGraph, es: &ValueSet, relation: &str) -> Result<ValueSet, ToolError> {
    let ids = require_ids(g, &entity_members(es, "get_head_entity")?)?;
    let Some(r) = g.relation_id(relation) else {
        return Ok(ValueSet::new());
    };
    let heads = ids.into_iter().flat_map(|t| g.head_ids(t, r)).collect();
    Ok(ids_to_set(g, heads))
}

pub fn get_entity_by_type(g: &KnowledgeGraph, type_entity: &EntityId) -> ValueSet {
    ValueSet::from_sorted(
        g.entities_of_type(type_entity)
            .into_iter()
            .map(Value::Entity)
            .collect(),
    )
}

/// Ordering between a tail value and a constraint value. Literals compare
/// within their kind; entities only support equality.
fn compare_values(tail: &Value, value: &Value, op: Comparison) -> Result<bool, ToolError> {
    match (tail, value) {
        (Value::Literal(a), Value::Literal(b)) => {
            let ord = a.compare(b).map_err(|e| ToolError::Type(e.to_string()))?;
            Ok(op.holds(ord))
        }
        (Value::Entity(a), Value::Entity(b)) if op == Comparison::Eq => Ok(a == b),
        (Value::Entity(_), Value::Entity(_)) => Err(ToolError::Type(format!(
            "operator {op} is not defined between entities"
        ))),
        _ => Err(ToolError::Type(format!(
            "cannot compare {tail} with {value}"
        ))),
    }
}

fn order_values(a: &Value, b: &Value) -> Result<Ordering, ToolError> {
    match (a, b) {
        (Value::Literal(x), Value::Literal(y)) => {
            x.compare(y).map_err(|e| ToolError::Type(e.to_string()))
        }
        _ => Err(ToolError::Type(format!(
            "superlatives need literal values, found {a} and {b}"
        ))),
    }
}

pub fn get_entity_by_constraint(
    g: &KnowledgeGraph,
    es: &ValueSet,
    relation: &str,
    op: ConstraintOp,
    value: Option<&Value>,
) -> Result<ValueSet, ToolError> {
    let entities = entity_members(es, "get_entity_by_constraint")?;
    let ids = require_ids(g, &entities)?;
    let relation_id = g.relation_id(relation);
    let tails_of = |id: TermId| -> Vec<&Value> {
        match relation_id {
            Some(r) => g.tail_ids(id, r).map(|t| g.term(t)).collect(),
            None => Vec::new(),
        }
    };

    match (op, value) {
        (ConstraintOp::Compare(cmp), Some(v)) => {
            let mut kept = Vec::new();
            for (e, &id) in entities.iter().zip(&ids) {
                let mut satisfied = false;
                // every tail is checked so kind errors do not depend on order
                for tail in tails_of(id) {
                    satisfied |= compare_values(tail, v, cmp)?;
                }
                if satisfied {
                    kept.push(Value::Entity((*e).clone()));
                }
            }
            Ok(ValueSet::from_sorted(kept))
        }
        (ConstraintOp::Superlative(sup), None) => {
            let mut extremes: Vec<(&EntityId, &Value)> = Vec::new();
            for (e, &id) in entities.iter().zip(&ids) {
                let mut best: Option<&Value> = None;
                for tail in tails_of(id) {
                    if tail.as_entity().is_some() {
                        return Err(ToolError::Type(format!(
                            "superlatives need literal values, found {tail}"
                        )));
                    }
                    best = match best {
                        Some(b) if !sup.prefers(order_values(tail, b)?) => Some(b),
                        _ => Some(tail),
                    };
                }
                if let Some(b) = best {
                    extremes.push((e, b));
                }
            }
            let mut overall: Option<&Value> = None;
            for &(_, v) in &extremes {
                overall = match overall {
                    None => Some(v),
                    Some(o) if sup.prefers(order_values(v, o)?) => Some(v),
                    keep => keep,
                };
            }
            let Some(overall) = overall else {
                return Ok(ValueSet::new());
            };
            let mut kept = Vec::new();
            for (e, v) in extremes {
                if order_values(v, overall)? == Ordering::Equal {
                    kept.push(Value::Entity(e.clone()));
                }
            }
            Ok(ValueSet::from_sorted(kept))
        }
        (ConstraintOp::Compare(cmp), None) => Err(ToolError::Argument(format!(
            "operator {cmp} needs a comparison value"
        ))),
        (ConstraintOp::Superlative(sup), Some(v)) => Err(ToolError::Argument(format!(
            "operator {sup} takes an empty value, found {v}"
        ))),
    }
}

pub fn get_candidate_entity(g: &KnowledgeGraph, mention: &str) -> Result<ValueSet, ToolError> {
    if mention.trim().is_empty() {
        return Err(ToolError::Argument("get_candidate_entity needs a non-empty mention".into()));
    }
    let exact = g.entities_by_label(mention);
    let found = if exact.is_empty() {
        g.entities_by_label_tokens(mention)
    } else {
        exact
    };
    Ok(found.into_iter().collect())
}

pub fn count(es: &ValueSet) -> i64 {
    es.len() as i64
}

fn require_list(sets: &[ValueSet], tool: &str) -> Result<(), ToolError> {
    if sets.len() < 2 {
        return Err(ToolError::Argument(format!(
            "{tool} needs at least 2 sets, found {}",
            sets.len()
        )));
    }
    Ok(())
}

pub fn intersect(sets: &[ValueSet]) -> Result<ValueSet, ToolError> {
    require_list(sets, "intersect")?;
    Ok(sets[1..]
        .iter()
        .fold(sets[0].clone(), |acc, s| acc.intersection(s)))
}

pub fn union(sets: &[ValueSet]) -> Result<ValueSet, ToolError> {
    require_list(sets, "union")?;
    Ok(sets[1..].iter().fold(sets[0].clone(), |acc, s| acc.union(s)))
}

/// Quantifier used by `judge`: every entity must keep some satisfying tail.
/// Replacing this with `!kept.is_empty()` gives the existential reading.
fn judge_quantifier(kept: &ValueSet, candidates: &ValueSet) -> bool {
    kept == candidates
}

pub fn judge(
    g: &KnowledgeGraph,
    es: &ValueSet,
    relation: &str,
    op: Comparison,
    value: &Value,
) -> Result<bool, ToolError> {
    let kept = get_entity_by_constraint(g, es, relation, ConstraintOp::Compare(op), Some(value))?;
    Ok(judge_quantifier(&kept, es))
}

/// Ranks relations by descending score, ties by (name, direction), and keeps
/// the first `k`.
pub fn retrieve_relation(
    relations: &RelationSet,
    question: &str,
    k: usize,
    scorer: &dyn RelationScorer,
) -> Result<RelationSet, ToolError> {
    if k == 0 {
        return Err(ToolError::Argument("retrieve_relation needs k >= 1".into()));
    }
    let mut scored: Vec<(f64, &DirectedRelation)> = relations
        .iter()
        .map(|r| (scorer.score(question, r), r))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(RelationSet::ranked(
        scored.into_iter().take(k).map(|(_, r)| r.clone()).collect(),
    ))
}

/// Best candidate by descending score, ties by canonical id order.
pub fn disambiguate_entity(
    g: &KnowledgeGraph,
    es: &ValueSet,
    question: &str,
    scorer: &dyn EntityScorer,
) -> Result<ValueSet, ToolError> {
    if es.is_empty() {
        return Err(ToolError::Argument(
            "disambiguate_entity needs at least one candidate".into(),
        ));
    }
    let entities = entity_members(es, "disambiguate_entity")?;
    require_ids(g, &entities)?;
    let mut best: Option<(f64, &EntityId)> = None;
    // entities arrive in canonical order, so strict > keeps the first on ties
    for e in entities {
        let s = scorer.score(g, question, e);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, e));
        }
    }
    let (_, e) = best.expect("non-empty");
    Ok(ValueSet::singleton(e.clone()))
}
