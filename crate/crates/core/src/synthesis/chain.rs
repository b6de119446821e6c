use serde::{Deserialize, Serialize};

use super::query_graph::{NodeKind, QueryGraph};
use super::SynthesisError;
use crate::kg_store::{DirectedRelation, Direction, EntityId, Value};
use crate::lexer::parse_value;
use crate::program::{Argument, FunctionCall, ReasoningProgram};
use crate::toolbox::{Comparison, ConstraintOp, Superlative, ToolName};

/// A filter applied to the current entity set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Constraint {
        relation: String,
        op: Comparison,
        value: Value,
    },
    Superlative { relation: String, op: Superlative },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hop {
    pub relation: DirectedRelation,
    /// Conditions on the node this hop reaches.
    pub conditions: Vec<Condition>,
}

/// Relation path from the start entity to the answer node, with conditions
/// attached where their nodes are reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningChain {
    pub start: EntityId,
    /// Conditions on the start node itself.
    pub start_conditions: Vec<Condition>,
    pub hops: Vec<Hop>,
}

impl ReasoningChain {
    /// `teams→roster_team` style rendering; incoming hops are marked `^`.
    pub fn relation_path(&self) -> String {
        self.hops
            .iter()
            .map(|h| match h.relation.direction {
                Direction::Out => h.relation.relation.clone(),
                Direction::In => format!("^{}", h.relation.relation),
            })
            .collect::<Vec<_>>()
            .join("→")
    }
}

/// Where `get_relation` probes are emitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePolicy {
    /// One probe, on the start entity.
    #[default]
    StartOnly,
    /// A probe on the current set before every hop.
    EveryHop,
}

/// Walks the query graph breadth-first from its start node. The
/// start-to-answer path gives the hops; grounded leaves hanging off the path
/// become equality constraints, followed by the node's explicit constraints
/// and then its superlatives.
pub fn extract_reasoning_chain(qg: &QueryGraph) -> Result<ReasoningChain, SynthesisError> {
    let tree = qg.tree()?;
    let unsupported = |message: String| SynthesisError::Unsupported {
        id: qg.id.clone(),
        message,
    };
    let path = tree.path();
    let on_path = |n: usize| path.contains(&n);

    for (i, &n) in path.iter().enumerate().skip(1) {
        let kind = qg.nodes[n].kind;
        let last = i + 1 == path.len();
        if !last && kind != NodeKind::Variable {
            return Err(unsupported(format!(
                "path node `{}` must be a variable node",
                qg.nodes[n].id
            )));
        }
    }
    for c in &qg.constraints {
        if !on_path(tree.index[c.node.as_str()]) {
            return Err(unsupported(format!("constraint on off-path node `{}`", c.node)));
        }
    }
    for s in &qg.superlatives {
        if !on_path(tree.index[s.node.as_str()]) {
            return Err(unsupported(format!("superlative on off-path node `{}`", s.node)));
        }
    }

    let conditions_at = |n: usize| -> Result<Vec<Condition>, SynthesisError> {
        let mut out = Vec::new();
        for (child, ei) in tree.children(n) {
            if on_path(child) {
                continue;
            }
            let node = &qg.nodes[child];
            let edge = &qg.edges[ei];
            if !tree.children(child).is_empty() {
                return Err(unsupported(format!(
                    "branch at `{}` is deeper than one grounded leaf",
                    node.id
                )));
            }
            if !matches!(node.kind, NodeKind::Entity | NodeKind::Literal) {
                return Err(unsupported(format!("off-path leaf `{}` is not grounded", node.id)));
            }
            if tree.walk_direction(n, ei) != Direction::Out {
                return Err(unsupported(format!(
                    "off-path leaf `{}` is reached by an incoming `{}` edge",
                    node.id, edge.relation
                )));
            }
            let value = parse_value(node.value.as_deref().unwrap_or_default())
                .map_err(|e| qg.invalid(format!("node `{}`: {}", node.id, e.message)))?;
            out.push(Condition::Constraint {
                relation: edge.relation.clone(),
                op: Comparison::Eq,
                value,
            });
        }
        let id = qg.nodes[n].id.as_str();
        for c in qg.constraints.iter().filter(|c| c.node == id) {
            let op = match c.operator.parse::<ConstraintOp>() {
                Ok(ConstraintOp::Compare(op)) => op,
                _ => {
                    return Err(qg.invalid(format!(
                        "constraint operator `{}` must be one of = > >= < <=",
                        c.operator
                    )))
                }
            };
            let value = parse_value(&c.value)
                .map_err(|e| qg.invalid(format!("constraint value `{}`: {}", c.value, e.message)))?;
            out.push(Condition::Constraint {
                relation: c.relation.clone(),
                op,
                value,
            });
        }
        for s in qg.superlatives.iter().filter(|s| s.node == id) {
            let op = match s.operator.parse::<ConstraintOp>() {
                Ok(ConstraintOp::Superlative(op)) => op,
                _ => {
                    return Err(qg.invalid(format!(
                        "superlative operator `{}` must be argmax or argmin",
                        s.operator
                    )))
                }
            };
            out.push(Condition::Superlative {
                relation: s.relation.clone(),
                op,
            });
        }
        Ok(out)
    };

    let start = super::query_graph::entity_of(&qg.nodes[tree.start]).map_err(|_| {
        qg.invalid("start node has no entity value".into())
    })?;
    let start_conditions = conditions_at(tree.start)?;
    let mut hops = Vec::new();
    for &n in &path[1..] {
        let (parent, ei) = tree.parent[n].expect("path nodes after the start have parents");
        hops.push(Hop {
            relation: DirectedRelation::new(
                qg.edges[ei].relation.clone(),
                tree.walk_direction(parent, ei),
            ),
            conditions: conditions_at(n)?,
        });
    }
    Ok(ReasoningChain {
        start,
        start_conditions,
        hops,
    })
}

/// Turns a chain into a straight-line program: a `get_relation` probe, one
/// traversal call per hop, one `get_entity_by_constraint` per condition, and
/// a final `end`.
pub fn generate_program(chain: &ReasoningChain, probe: ProbePolicy) -> ReasoningProgram {
    let mut calls: Vec<FunctionCall> = Vec::new();
    let mut emit = |tool: ToolName, args: Vec<Argument>| -> Argument {
        let output = calls.len() as u32;
        calls.push(FunctionCall::new(output, tool, args).expect("generated calls match their signatures"));
        Argument::Var(output)
    };
    let apply = |emit: &mut dyn FnMut(ToolName, Vec<Argument>) -> Argument,
                 cur: Argument,
                 cond: &Condition|
     -> Argument {
        let (relation, op, value) = match cond {
            Condition::Constraint { relation, op, value } => (
                relation,
                op.as_str(),
                match value {
                    Value::Entity(e) => Argument::Entity(e.clone()),
                    Value::Literal(l) => Argument::Literal(l.clone()),
                },
            ),
            Condition::Superlative { relation, op } => (relation, op.as_str(), Argument::Str(String::new())),
        };
        emit(
            ToolName::GetEntityByConstraint,
            vec![cur, Argument::Str(relation.clone()), Argument::Str(op.to_string()), value],
        )
    };

    let start = Argument::Entity(chain.start.clone());
    emit(ToolName::GetRelation, vec![start.clone()]);
    let mut cur = start;
    for cond in &chain.start_conditions {
        cur = apply(&mut emit, cur, cond);
    }
    for (i, hop) in chain.hops.iter().enumerate() {
        if i > 0 && probe == ProbePolicy::EveryHop {
            emit(ToolName::GetRelation, vec![cur.clone()]);
        }
        let tool = match hop.relation.direction {
            Direction::Out => ToolName::GetTailEntity,
            Direction::In => ToolName::GetHeadEntity,
        };
        cur = emit(tool, vec![cur, Argument::Str(hop.relation.relation.clone())]);
        for cond in &hop.conditions {
            cur = apply(&mut emit, cur, cond);
        }
    }
    emit(ToolName::End, vec![cur]);
    ReasoningProgram::new(calls).expect("generated programs bind before use")
}
