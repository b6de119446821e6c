//! The KG toolbox: extraction, logic and semantic tools over a shared
//! immutable graph, plus the descriptor registry that planners, the program
//! parser and the executor agree on.

pub mod ops;
mod registry;
mod semantic;
mod value;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::{EntityId, KgError, KnowledgeGraph, Value};

pub use registry::{
    Param, ParamType, ReturnType, ToolCategory, ToolConfig, ToolDescriptor, ToolName, ToolRegistry,
};
pub use semantic::{
    lexical_tokens, EntityScorer, LexicalEntityScorer, LexicalRelationScorer, RelationScorer,
};
pub use value::{RelationSet, ValueSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("type error: {0}")]
    Type(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("tool config: {0}")]
    Config(String),
}

impl From<KgError> for ToolError {
    fn from(e: KgError) -> Self {
        match e {
            KgError::UnknownEntity(id) => ToolError::UnknownEntity(id),
            other => ToolError::Argument(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Eq,
    Gt,
    Ge,
    Lt,
    Le,
}

impl Comparison {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Comparison::Eq => ord == Ordering::Equal,
            Comparison::Gt => ord == Ordering::Greater,
            Comparison::Ge => ord != Ordering::Less,
            Comparison::Lt => ord == Ordering::Less,
            Comparison::Le => ord != Ordering::Greater,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::Eq => "=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
            Comparison::Lt => "<",
            Comparison::Le => "<=",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Superlative {
    ArgMax,
    ArgMin,
}

impl Superlative {
    /// Whether a candidate ordered `ord` against the current best replaces it.
    pub fn prefers(self, ord: Ordering) -> bool {
        match self {
            Superlative::ArgMax => ord == Ordering::Greater,
            Superlative::ArgMin => ord == Ordering::Less,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Superlative::ArgMax => "argmax",
            Superlative::ArgMin => "argmin",
        }
    }
}

impl fmt::Display for Superlative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintOp {
    Compare(Comparison),
    Superlative(Superlative),
}

impl FromStr for ConstraintOp {
    type Err = ToolError;
    fn from_str(s: &str) -> Result<Self, ToolError> {
        Ok(match s {
            "=" => ConstraintOp::Compare(Comparison::Eq),
            ">" => ConstraintOp::Compare(Comparison::Gt),
            ">=" => ConstraintOp::Compare(Comparison::Ge),
            "<" => ConstraintOp::Compare(Comparison::Lt),
            "<=" => ConstraintOp::Compare(Comparison::Le),
            "argmax" => ConstraintOp::Superlative(Superlative::ArgMax),
            "argmin" => ConstraintOp::Superlative(Superlative::ArgMin),
            other => {
                return Err(ToolError::Argument(format!(
                    "unknown operator `{other}` (expected =, >, >=, <, <=, argmax or argmin)"
                )))
            }
        })
    }
}

impl fmt::Display for ConstraintOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintOp::Compare(c) => c.fmt(f),
            ConstraintOp::Superlative(s) => s.fmt(f),
        }
    }
}

/// A resolved tool argument.
#[derive(Debug, Clone, PartialEq)]
pub enum ToolInput {
    Entities(ValueSet),
    Relation(String),
    Operator(String),
    /// `None` is the empty value of superlative constraints.
    Value(Option<Value>),
    Type(EntityId),
    Mention(String),
    SetList(Vec<ValueSet>),
    Relations(RelationSet),
    Integer(i64),
}

/// What a tool returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ToolValue {
    Entities(ValueSet),
    Relations(RelationSet),
    Integer(i64),
    Boolean(bool),
}

impl ToolValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ToolValue::Entities(_) => "entity_set",
            ToolValue::Relations(_) => "relation_set",
            ToolValue::Integer(_) => "integer",
            ToolValue::Boolean(_) => "boolean",
        }
    }

    /// Set size for sets, 1 for scalars.
    pub fn cardinality(&self) -> usize {
        match self {
            ToolValue::Entities(s) => s.len(),
            ToolValue::Relations(r) => r.len(),
            ToolValue::Integer(_) | ToolValue::Boolean(_) => 1,
        }
    }

    pub fn as_entities(&self) -> Option<&ValueSet> {
        match self {
            ToolValue::Entities(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_relations(&self) -> Option<&RelationSet> {
        match self {
            ToolValue::Relations(r) => Some(r),
            _ => None,
        }
    }

    /// One-line description, listing at most `limit` members.
    pub fn summary(&self, limit: usize) -> String {
        fn list<T: fmt::Display>(items: impl ExactSizeIterator<Item = T>, limit: usize) -> String {
            let n = items.len();
            let mut shown: Vec<String> = items.take(limit).map(|i| i.to_string()).collect();
            if n > limit {
                shown.push(format!("... {} more", n - limit));
            }
            shown.join(", ")
        }
        match self {
            ToolValue::Entities(s) => format!("entity_set[{}] {{{}}}", s.len(), list(s.iter(), limit)),
            ToolValue::Relations(r) => format!("relation_set[{}] {{{}}}", r.len(), list(r.iter(), limit)),
            ToolValue::Integer(i) => format!("integer {i}"),
            ToolValue::Boolean(b) => format!("boolean {b}"),
        }
    }
}

/// Registry, configuration and scorers. Holds no graph; every call takes the
/// graph explicitly.
#[derive(Clone)]
pub struct Toolbox {
    registry: ToolRegistry,
    config: ToolConfig,
    relation_scorer: Arc<dyn RelationScorer>,
    entity_scorer: Arc<dyn EntityScorer>,
}

impl fmt::Debug for Toolbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Toolbox")
            .field("registry", &self.registry)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Default for Toolbox {
    fn default() -> Self {
        Toolbox::new(ToolConfig::default()).expect("default config is valid")
    }
}

impl Toolbox {
    pub fn new(config: ToolConfig) -> Result<Self, ToolError> {
        config.validate()?;
        Ok(Toolbox {
            registry: ToolRegistry::from_config(&config),
            config,
            relation_scorer: Arc::new(LexicalRelationScorer),
            entity_scorer: Arc::new(LexicalEntityScorer),
        })
    }

    pub fn with_relation_scorer(mut self, scorer: Arc<dyn RelationScorer>) -> Self {
        self.relation_scorer = scorer;
        self
    }

    pub fn with_entity_scorer(mut self, scorer: Arc<dyn EntityScorer>) -> Self {
        self.entity_scorer = scorer;
        self
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    pub fn config(&self) -> &ToolConfig {
        &self.config
    }

    pub fn relation_scorer(&self) -> &dyn RelationScorer {
        self.relation_scorer.as_ref()
    }

    pub fn entity_scorer(&self) -> &dyn EntityScorer {
        self.entity_scorer.as_ref()
    }

    /// Runs `tool` on resolved inputs. `question` feeds the semantic tools.
    pub fn dispatch(
        &self,
        graph: &KnowledgeGraph,
        tool: ToolName,
        inputs: Vec<ToolInput>,
        question: &str,
    ) -> Result<ToolValue, ToolError> {
        if self.registry.descriptor(tool).is_none() {
            return Err(ToolError::Argument(format!("tool `{tool}` is disabled")));
        }
        let mut args = Inputs {
            tool,
            items: inputs.into_iter(),
        };
        let value = match tool {
            ToolName::GetRelation => ToolValue::Relations(ops::get_relation(graph, &args.entities()?)?),
            ToolName::GetHeadEntity => {
                let es = args.entities()?;
                ToolValue::Entities(ops::get_head_entity(graph, &es, &args.relation()?)?)
            }
            ToolName::GetTailEntity => {
                let es = args.entities()?;
                ToolValue::Entities(ops::get_tail_entity(graph, &es, &args.relation()?)?)
            }
            ToolName::GetEntityByType => ToolValue::Entities(ops::get_entity_by_type(graph, &args.type_name()?)),
            ToolName::GetEntityByConstraint => {
                let es = args.entities()?;
                let relation = args.relation()?;
                let op: ConstraintOp = args.operator()?.parse()?;
                let value = args.value()?;
                ToolValue::Entities(ops::get_entity_by_constraint(
                    graph,
                    &es,
                    &relation,
                    op,
                    value.as_ref(),
                )?)
            }
            ToolName::GetCandidateEntity => {
                ToolValue::Entities(ops::get_candidate_entity(graph, &args.mention()?)?)
            }
            ToolName::Count => ToolValue::Integer(ops::count(&args.entities()?)),
            ToolName::Intersect => ToolValue::Entities(ops::intersect(&args.set_list()?)?),
            ToolName::Union => ToolValue::Entities(ops::union(&args.set_list()?)?),
            ToolName::Judge => {
                let es = args.entities()?;
                let relation = args.relation()?;
                let op = match args.operator()?.parse()? {
                    ConstraintOp::Compare(c) => c,
                    ConstraintOp::Superlative(s) => {
                        return Err(ToolError::Argument(format!("judge does not accept {s}")))
                    }
                };
                let value = args
                    .value()?
                    .ok_or_else(|| ToolError::Argument("judge needs a comparison value".into()))?;
                ToolValue::Boolean(ops::judge(graph, &es, &relation, op, &value)?)
            }
            ToolName::End => ToolValue::Entities(args.entities()?),
            ToolName::RetrieveRelation => {
                let relations = args.relations()?;
                let k = match args.optional_integer()? {
                    Some(k) if k < 1 => {
                        return Err(ToolError::Argument(format!("retrieve_relation needs k >= 1, found {k}")))
                    }
                    Some(k) => k as usize,
                    None => self.config.retrieve_relation_k,
                };
                ToolValue::Relations(ops::retrieve_relation(
                    &relations,
                    question,
                    k,
                    self.relation_scorer(),
                )?)
            }
            ToolName::DisambiguateEntity => ToolValue::Entities(ops::disambiguate_entity(
                graph,
                &args.entities()?,
                question,
                self.entity_scorer(),
            )?),
        };
        args.finish()?;
        Ok(value)
    }
}

struct Inputs {
    tool: ToolName,
    items: std::vec::IntoIter<ToolInput>,
}

impl Inputs {
    fn next(&mut self, expected: &str) -> Result<ToolInput, ToolError> {
        self.items.next().ok_or_else(|| {
            ToolError::Argument(format!("{} is missing its {expected} argument", self.tool))
        })
    }

    fn mismatch(&self, expected: &str, found: &ToolInput) -> ToolError {
        ToolError::Type(format!("{} expects {expected}, found {found:?}", self.tool))
    }

    fn entities(&mut self) -> Result<ValueSet, ToolError> {
        match self.next("entity set")? {
            ToolInput::Entities(s) => Ok(s),
            other => Err(self.mismatch("an entity set", &other)),
        }
    }

    fn relation(&mut self) -> Result<String, ToolError> {
        match self.next("relation")? {
            ToolInput::Relation(r) => Ok(r),
            other => Err(self.mismatch("a relation", &other)),
        }
    }

    fn operator(&mut self) -> Result<String, ToolError> {
        match self.next("operator")? {
            ToolInput::Operator(o) => Ok(o),
            other => Err(self.mismatch("an operator", &other)),
        }
    }

    fn value(&mut self) -> Result<Option<Value>, ToolError> {
        match self.next("value")? {
            ToolInput::Value(v) => Ok(v),
            other => Err(self.mismatch("a value", &other)),
        }
    }

    fn type_name(&mut self) -> Result<EntityId, ToolError> {
        match self.next("type")? {
            ToolInput::Type(t) => Ok(t),
            other => Err(self.mismatch("a type", &other)),
        }
    }

    fn mention(&mut self) -> Result<String, ToolError> {
        match self.next("mention")? {
            ToolInput::Mention(m) => Ok(m),
            other => Err(self.mismatch("a mention", &other)),
        }
    }

    fn set_list(&mut self) -> Result<Vec<ValueSet>, ToolError> {
        match self.next("set list")? {
            ToolInput::SetList(l) => Ok(l),
            other => Err(self.mismatch("a set list", &other)),
        }
    }

    fn relations(&mut self) -> Result<RelationSet, ToolError> {
        match self.next("relation set")? {
            ToolInput::Relations(r) => Ok(r),
            other => Err(self.mismatch("a relation set", &other)),
        }
    }

    fn optional_integer(&mut self) -> Result<Option<i64>, ToolError> {
        match self.items.next() {
            None => Ok(None),
            Some(ToolInput::Integer(i)) => Ok(Some(i)),
            Some(other) => Err(self.mismatch("an integer", &other)),
        }
    }

    fn finish(mut self) -> Result<(), ToolError> {
        match self.items.next() {
            None => Ok(()),
            Some(extra) => Err(ToolError::Argument(format!(
                "{} received an unexpected extra argument {extra:?}",
                self.tool
            ))),
        }
    }
}
