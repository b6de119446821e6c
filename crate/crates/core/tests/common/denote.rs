//! Query-graph denotation by direct pattern matching over the fact list.
//!
//! Bindings propagate along the start-to-answer path. A node's bindings are
//! the values reachable from the previous node's bindings that satisfy the
//! node's constraints and grounded leaves; superlatives on a node then keep
//! the bindings holding the extreme value.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use kg_agent::kg_store::{Direction, Value};
use kg_agent::lexer::parse_value;
use kg_agent::synthesis::{NodeKind, QueryGraph};

use super::oracle::{satisfies, value_order};
use super::Fact;

fn parse(text: &str) -> Result<Value, String> {
    parse_value(text).map_err(|e| format!("`{text}`: {e}"))
}

/// `true` when the fact reads (a, relation, b) for an edge stored as
/// (from, to); `from_is_a` says whether `a` sits at the edge's `from` end.
fn holds(facts: &[Fact], relation: &str, direction: Direction, from_is_a: bool, a: &Value, b: &Value) -> bool {
    let (head, tail) = match (direction, from_is_a) {
        (Direction::Out, true) | (Direction::In, false) => (a, b),
        _ => (b, a),
    };
    let Value::Entity(h) = head else { return false };
    facts.iter().any(|(fh, fr, ft)| fh == h && fr == relation && ft == tail)
}

fn neighbours(facts: &[Fact], relation: &str, direction: Direction, from_is_a: bool, a: &Value) -> Vec<Value> {
    let forward = matches!((direction, from_is_a), (Direction::Out, true) | (Direction::In, false));
    facts
        .iter()
        .filter(|(_, r, _)| r == relation)
        .filter_map(|(h, _, t)| {
            if forward {
                (a.as_entity() == Some(h)).then(|| t.clone())
            } else {
                (t == a).then(|| Value::Entity(h.clone()))
            }
        })
        .collect()
}

/// Answer values as canonical text.
pub fn denote(qg: &QueryGraph, facts: &[Fact]) -> Result<BTreeSet<String>, String> {
    let kinds: BTreeMap<&str, (NodeKind, Option<&str>)> = qg
        .nodes
        .iter()
        .map(|n| (n.id.as_str(), (n.kind, n.value.as_deref())))
        .collect();
    let answer = qg
        .nodes
        .iter()
        .find(|n| n.kind == NodeKind::Answer)
        .ok_or("no answer node")?
        .id
        .as_str();

    // depth-first search for the start-to-answer path in the undirected tree
    let mut path: Vec<&str> = vec![qg.start_node.as_str()];
    let mut via: Vec<usize> = Vec::new();
    fn dfs<'q>(qg: &'q QueryGraph, target: &str, path: &mut Vec<&'q str>, via: &mut Vec<usize>) -> bool {
        let here = *path.last().unwrap();
        if here == target {
            return true;
        }
        for (i, e) in qg.edges.iter().enumerate() {
            let next = if e.from == here {
                e.to.as_str()
            } else if e.to == here {
                e.from.as_str()
            } else {
                continue;
            };
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            via.push(i);
            if dfs(qg, target, path, via) {
                return true;
            }
            path.pop();
            via.pop();
        }
        false
    }
    if !dfs(qg, answer, &mut path, &mut via) {
        return Err("answer not reachable".into());
    }

    let local_ok = |node: &str, x: &Value| -> Result<bool, String> {
        for c in qg.constraints.iter().filter(|c| c.node == node) {
            let v = parse(&c.value)?;
            let Value::Entity(e) = x else { return Ok(false) };
            let mut any = false;
            for (h, r, t) in facts {
                if h == e && *r == c.relation {
                    any |= satisfies(t, &c.operator, &v).map_err(|_| "incomparable constraint".to_string())?;
                }
            }
            if !any {
                return Ok(false);
            }
        }
        for e in &qg.edges {
            let (other, from_is_x) = if e.from == node {
                (e.to.as_str(), true)
            } else if e.to == node {
                (e.from.as_str(), false)
            } else {
                continue;
            };
            if path.contains(&other) {
                continue;
            }
            let (_, value) = kinds[other];
            let leaf = parse(value.ok_or("off-path node without a value")?)?;
            if !holds(facts, &e.relation, e.direction, from_is_x, x, &leaf) {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let superlatives = |node: &str, mut set: BTreeSet<Value>| -> Result<BTreeSet<Value>, String> {
        for s in qg.superlatives.iter().filter(|s| s.node == node) {
            let want = if s.operator == "argmax" { Ordering::Greater } else { Ordering::Less };
            let mut best: Vec<(Value, Value)> = Vec::new();
            for x in &set {
                let Value::Entity(e) = x else { continue };
                let mut top: Option<&Value> = None;
                for (h, r, t) in facts {
                    if h == e && *r == s.relation {
                        let better = match top {
                            None => true,
                            Some(b) => value_order(t, b).map_err(|_| "incomparable superlative")? == want,
                        };
                        if better {
                            top = Some(t);
                        }
                    }
                }
                if let Some(t) = top {
                    best.push((x.clone(), t.clone()));
                }
            }
            let mut extreme: Option<&Value> = None;
            for (_, t) in &best {
                if extreme.is_none_or(|m| value_order(t, m).unwrap() == want) {
                    extreme = Some(t);
                }
            }
            set = best
                .iter()
                .filter(|(_, t)| extreme.is_some_and(|m| value_order(t, m).unwrap() == Ordering::Equal))
                .map(|(x, _)| x.clone())
                .collect();
        }
        Ok(set)
    };

    let (_, start_value) = kinds[path[0]];
    let start = parse(start_value.ok_or("start node without a value")?)?;
    let mut current: BTreeSet<Value> = BTreeSet::new();
    if local_ok(path[0], &start)? {
        current.insert(start);
    }
    current = superlatives(path[0], current)?;
    for (step, &edge) in via.iter().enumerate() {
        let e = &qg.edges[edge];
        let from_is_prev = e.from == path[step];
        let mut next = BTreeSet::new();
        for x in &current {
            for y in neighbours(facts, &e.relation, e.direction, from_is_prev, x) {
                if local_ok(path[step + 1], &y)? {
                    next.insert(y);
                }
            }
        }
        current = superlatives(path[step + 1], next)?;
    }
    Ok(current.iter().map(Value::canonical).collect())
}
