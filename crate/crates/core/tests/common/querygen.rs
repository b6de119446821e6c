//! Random query graphs grounded in a random graph: a walk from a start
//! entity, with conditions chosen so the walked answer survives them.

use kg_agent::kg_store::{Direction, EntityId, Value};
use kg_agent::synthesis::{ConstraintSpec, Edge, Node, NodeKind, QueryGraph, SuperlativeSpec};
use rand::seq::IndexedRandom;
use rand::Rng;

use super::{RandomGraph, ENTITY_RELATIONS, LITERAL_RELATIONS};

struct Step<'a> {
    relation: &'a str,
    direction: Direction,
    to: Value,
}

fn literal_facts<'a>(rg: &'a RandomGraph, e: &EntityId) -> Vec<(&'a str, &'a Value)> {
    rg.facts
        .iter()
        .filter(|(h, r, t)| h == e && LITERAL_RELATIONS.iter().any(|(l, _)| l == r) && t.as_literal().is_some())
        .map(|(_, r, t)| (r.as_str(), t))
        .collect()
}

fn moves<'a>(rg: &'a RandomGraph, at: &EntityId, last: bool) -> Vec<Step<'a>> {
    let mut out = Vec::new();
    for (h, r, t) in &rg.facts {
        let entity_rel = ENTITY_RELATIONS.contains(&r.as_str());
        if h == at && (entity_rel || (last && t.as_literal().is_some() && r != "label")) {
            out.push(Step {
                relation: r,
                direction: Direction::Out,
                to: t.clone(),
            });
        }
        if entity_rel && t.as_entity() == Some(at) {
            out.push(Step {
                relation: r,
                direction: Direction::In,
                to: Value::Entity(h.clone()),
            });
        }
    }
    out
}

/// `None` when the walk cannot leave the chosen start entity.
pub fn random_query_graph(rng: &mut impl Rng, rg: &RandomGraph, id: &str) -> Option<QueryGraph> {
    let start = rg.entities.choose(rng)?.clone();
    let hops = rng.random_range(1..=3);
    let mut nodes = vec![Node {
        id: "n0".into(),
        kind: NodeKind::Entity,
        value: Some(start.to_string()),
    }];
    let mut edges = Vec::new();
    let mut constraints = Vec::new();
    let mut superlatives = Vec::new();
    let mut at = Value::Entity(start);
    let mut leaves = 0;
    for hop in 0..hops {
        let Value::Entity(e) = &at else { break };
        let options = moves(rg, e, hop + 1 == hops);
        let Some(step) = options.choose(rng) else {
            if hop == 0 {
                return None;
            }
            break;
        };
        let to_id = format!("n{}", hop + 1);
        nodes.push(Node {
            id: to_id.clone(),
            kind: NodeKind::Variable,
            value: None,
        });
        let parent = format!("n{hop}");
        if rng.random_bool(0.15) {
            // the same fact, written from the child's end
            let flipped = match step.direction {
                Direction::Out => Direction::In,
                Direction::In => Direction::Out,
            };
            edges.push(Edge {
                from: to_id.clone(),
                to: parent,
                relation: step.relation.to_string(),
                direction: flipped,
            });
        } else {
            edges.push(Edge {
                from: parent,
                to: to_id.clone(),
                relation: step.relation.to_string(),
                direction: step.direction,
            });
        }
        at = step.to.clone();
        if let Value::Entity(x) = &at {
            let lits = literal_facts(rg, x);
            if let Some((r, v)) = lits.choose(rng).filter(|_| rng.random_bool(0.4)) {
                let op = *["=", "<=", ">="].choose(rng).unwrap();
                constraints.push(ConstraintSpec {
                    node: to_id.clone(),
                    relation: r.to_string(),
                    operator: op.to_string(),
                    value: v.to_string(),
                });
            }
            if rng.random_bool(0.25) {
                let leaf_facts: Vec<_> = rg
                    .facts
                    .iter()
                    .filter(|(h, r, _)| h == x && r != "label")
                    .collect();
                if let Some((_, r, t)) = leaf_facts.choose(rng) {
                    let leaf = format!("l{leaves}");
                    leaves += 1;
                    nodes.push(Node {
                        id: leaf.clone(),
                        kind: if t.as_entity().is_some() { NodeKind::Entity } else { NodeKind::Literal },
                        value: Some(t.to_string()),
                    });
                    edges.push(Edge {
                        from: to_id.clone(),
                        to: leaf,
                        relation: r.clone(),
                        direction: Direction::Out,
                    });
                }
            }
        }
    }
    let last = format!("n{}", nodes.iter().filter(|n| n.id.starts_with('n')).count() - 1);
    for n in &mut nodes {
        if n.id == last {
            n.kind = NodeKind::Answer;
        }
    }
    if let Value::Entity(x) = &at {
        let lits = literal_facts(rg, x);
        if let Some((r, _)) = lits.choose(rng).filter(|_| rng.random_bool(0.3)) {
            superlatives.push(SuperlativeSpec {
                node: last.clone(),
                relation: r.to_string(),
                operator: if rng.random_bool(0.5) { "argmax" } else { "argmin" }.to_string(),
            });
        }
    }
    Some(QueryGraph {
        id: id.to_string(),
        dataset: "generated".into(),
        question: format!("Generated question {id}?"),
        start_node: "n0".into(),
        nodes,
        edges,
        constraints,
        superlatives,
        answers: Vec::new(),
    })
}
