use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::kg_store::{Direction, EntityId, Value};
use crate::lexer::parse_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// A grounded entity; `value` holds its token.
    Entity,
    /// The node whose bindings are the answers.
    Answer,
    /// A grounded literal; `value` holds `"text"^^kind`.
    Literal,
    /// An ungrounded intermediate node, such as a CVT.
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

fn is_out(d: &Direction) -> bool {
    *d == Direction::Out
}

/// `direction: out` states the fact (from, relation, to); `in` states
/// (to, relation, from).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub relation: String,
    #[serde(default = "Edge::default_direction", skip_serializing_if = "is_out")]
    pub direction: Direction,
}

impl Edge {
    fn default_direction() -> Direction {
        Direction::Out
    }
}

/// Keeps bindings of `node` with a `relation` value satisfying
/// `operator value`. `value` is an entity token or a typed literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub node: String,
    pub relation: String,
    pub operator: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperlativeSpec {
    pub node: String,
    pub relation: String,
    /// `argmax` or `argmin`.
    pub operator: String,
}

/// One annotated question: a tree-shaped pattern rooted at the mentioned
/// entity with exactly one answer node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryGraph {
    pub id: String,
    #[serde(default)]
    pub dataset: String,
    pub question: String,
    pub start_node: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub superlatives: Vec<SuperlativeSpec>,
    /// Gold answers as entity tokens or typed literals, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub answers: Vec<String>,
}

/// Validated view of a query graph with BFS order and parent links.
#[derive(Debug, Clone)]
pub(crate) struct Tree<'q> {
    pub qg: &'q QueryGraph,
    pub index: BTreeMap<&'q str, usize>,
    pub start: usize,
    pub answer: usize,
    /// Nodes in BFS order from the start node.
    pub order: Vec<usize>,
    /// Parent node and connecting edge, for every non-start node.
    pub parent: Vec<Option<(usize, usize)>>,
}

impl QueryGraph {
    pub fn start_entity(&self) -> Result<EntityId, SynthesisError> {
        let tree = self.tree()?;
        entity_of(&self.nodes[tree.start])
    }

    /// Gold answers, parsed.
    pub fn gold_answers(&self) -> Result<Vec<Value>, SynthesisError> {
        self.answers
            .iter()
            .map(|a| {
                parse_value(a).map_err(|e| self.invalid(format!("answer `{a}`: {}", e.message)))
            })
            .collect()
    }

    pub(crate) fn invalid(&self, message: String) -> SynthesisError {
        SynthesisError::Invalid {
            id: self.id.clone(),
            message,
        }
    }

    pub(crate) fn tree(&self) -> Result<Tree<'_>, SynthesisError> {
        let mut index = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(self.invalid(format!("duplicate node id `{}`", n.id)));
            }
            match n.kind {
                NodeKind::Entity => {
                    entity_of(n).map_err(|_| self.invalid(format!("node `{}` needs an entity token value", n.id)))?;
                }
                NodeKind::Literal => {
                    let ok = n
                        .value
                        .as_deref()
                        .is_some_and(|v| matches!(parse_value(v), Ok(Value::Literal(_))));
                    if !ok {
                        return Err(self.invalid(format!("node `{}` needs a typed literal value", n.id)));
                    }
                }
                NodeKind::Answer | NodeKind::Variable => {}
            }
        }
        let node = |id: &str| -> Result<usize, SynthesisError> {
            index
                .get(id)
                .copied()
                .ok_or_else(|| self.invalid(format!("unknown node `{id}`")))
        };

        let answers: Vec<usize> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Answer)
            .map(|(i, _)| i)
            .collect();
        let answer = match answers.as_slice() {
            [a] => *a,
            other => {
                return Err(self.invalid(format!(
                    "expected exactly one answer node, found {}",
                    other.len()
                )))
            }
        };
        let start = node(&self.start_node)?;
        if self.nodes[start].kind != NodeKind::Entity {
            return Err(self.invalid(format!("start node `{}` is not an entity node", self.start_node)));
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return Err(self.invalid(format!(
                "a tree with {} nodes needs {} edges, found {}",
                self.nodes.len(),
                self.nodes.len().saturating_sub(1),
                self.edges.len()
            )));
        }

        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.nodes.len()];
        for (ei, e) in self.edges.iter().enumerate() {
            let (a, b) = (node(&e.from)?, node(&e.to)?);
            if e.relation.is_empty() || e.relation.chars().any(char::is_whitespace) {
                return Err(self.invalid(format!("invalid relation name `{}`", e.relation)));
            }
            adjacency[a].push((b, ei));
            adjacency[b].push((a, ei));
        }
        for c in &self.constraints {
            node(&c.node)?;
        }
        for s in &self.superlatives {
            node(&s.node)?;
        }

        let mut parent = vec![None; self.nodes.len()];
        let mut seen = BTreeSet::from([start]);
        let mut order = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &(m, ei) in &adjacency[n] {
                if seen.insert(m) {
                    parent[m] = Some((n, ei));
                    order.push(m);
                    queue.push_back(m);
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(self.invalid("query graph is not connected".into()));
        }
        Ok(Tree {
            qg: self,
            index,
            start,
            answer,
            order,
            parent,
        })
    }
}

pub(crate) fn entity_of(n: &Node) -> Result<EntityId, SynthesisError> {
    n.value
        .as_deref()
        .and_then(|v| EntityId::new(v).ok())
        .ok_or_else(|| SynthesisError::Invalid {
            id: String::new(),
            message: format!("node `{}` has no entity value", n.id),
        })
}

impl Tree<'_> {
    /// Path from the start node to the answer, both included.
    pub fn path(&self) -> Vec<usize> {
        let mut path = vec![self.answer];
        let mut cur = self.answer;
        while let Some((p, _)) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn children(&self, n: usize) -> Vec<(usize, usize)> {
        self.order
            .iter()
            .filter_map(|&m| match self.parent[m] {
                Some((p, ei)) if p == n => Some((m, ei)),
                _ => None,
            })
            .collect()
    }

    /// Direction of walking edge `ei` from node `from`.
    pub fn walk_direction(&self, from: usize, ei: usize) -> Direction {
        let e = &self.qg.edges[ei];
        let from_is_source = self.index[e.from.as_str()] == from;
        match (from_is_source, e.direction) {
            (true, Direction::Out) | (false, Direction::In) => Direction::Out,
            _ => Direction::In,
        }
    }
}

/// Parses query graphs, one JSON object per non-blank line.
pub fn parse_query_graphs(text: &str) -> Result<Vec<QueryGraph>, SynthesisError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SynthesisError::Format {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
