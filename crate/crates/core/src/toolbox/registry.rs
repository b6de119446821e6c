//! Tool descriptors and the registry shared by planner prompts, the program
//! parser and the executor.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ToolError;
use crate::kg_store::GraphSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToolName {
    GetRelation,
    GetHeadEntity,
    GetTailEntity,
    GetEntityByType,
    GetEntityByConstraint,
    GetCandidateEntity,
    Count,
    Intersect,
    Union,
    Judge,
    End,
    RetrieveRelation,
    DisambiguateEntity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToolCategory {
    Extraction,
    Logic,
    Semantic,
}

impl ToolCategory {
    fn heading(self) -> &'static str {
        match self {
            ToolCategory::Extraction => "Extraction tools",
            ToolCategory::Logic => "Logic tools",
            ToolCategory::Semantic => "Semantic tools",
        }
    }
}

impl ToolName {
    /// Rendering order: extraction, logic, semantic.
    pub const ALL: [ToolName; 13] = [
        ToolName::GetRelation,
        ToolName::GetHeadEntity,
        ToolName::GetTailEntity,
        ToolName::GetEntityByType,
        ToolName::GetEntityByConstraint,
        ToolName::GetCandidateEntity,
        ToolName::Count,
        ToolName::Intersect,
        ToolName::Union,
        ToolName::Judge,
        ToolName::End,
        ToolName::RetrieveRelation,
        ToolName::DisambiguateEntity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolName::GetRelation => "get_relation",
            ToolName::GetHeadEntity => "get_head_entity",
            ToolName::GetTailEntity => "get_tail_entity",
            ToolName::GetEntityByType => "get_entity_by_type",
            ToolName::GetEntityByConstraint => "get_entity_by_constraint",
            ToolName::GetCandidateEntity => "get_candidate_entity",
            ToolName::Count => "count",
            ToolName::Intersect => "intersect",
            ToolName::Union => "union",
            ToolName::Judge => "judge",
            ToolName::End => "end",
            ToolName::RetrieveRelation => "retrieve_relation",
            ToolName::DisambiguateEntity => "disambiguate_entity",
        }
    }

    pub fn category(self) -> ToolCategory {
        use ToolName::*;
        match self {
            GetRelation | GetHeadEntity | GetTailEntity | GetEntityByType
            | GetEntityByConstraint | GetCandidateEntity => ToolCategory::Extraction,
            Count | Intersect | Union | Judge | End => ToolCategory::Logic,
            RetrieveRelation | DisambiguateEntity => ToolCategory::Semantic,
        }
    }

    pub fn returns(self) -> ReturnType {
        use ToolName::*;
        match self {
            GetRelation | RetrieveRelation => ReturnType::RelationSet,
            Count => ReturnType::Integer,
            Judge => ReturnType::Boolean,
            DisambiguateEntity => ReturnType::Entity,
            _ => ReturnType::EntitySet,
        }
    }
}

impl fmt::Display for ToolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolName {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        ToolName::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

/// Semantic type of a tool parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    /// A variable holding an entity set, or a single `#entity` token.
    EntitySet,
    /// Quoted relation name.
    Relation,
    /// Quoted operator: `=`, `>`, `>=`, `<`, `<=`, `argmax`, `argmin`.
    Operator,
    /// Typed literal, entity token, or a quoted string (`""` for none).
    ConstraintValue,
    /// Entity token or quoted type name.
    TypeName,
    /// Quoted surface mention.
    Mention,
    /// `[v1, v2, ...]`.
    SetList,
    /// A variable holding a relation set.
    RelationSet,
    Integer,
}

impl ParamType {
    pub fn label(self) -> &'static str {
        match self {
            ParamType::EntitySet => "entity set",
            ParamType::Relation => "relation",
            ParamType::Operator => "operator",
            ParamType::ConstraintValue => "value",
            ParamType::TypeName => "type",
            ParamType::Mention => "mention",
            ParamType::SetList => "entity set list",
            ParamType::RelationSet => "relation set",
            ParamType::Integer => "integer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReturnType {
    EntitySet,
    RelationSet,
    Integer,
    Boolean,
    /// A single-entity set.
    Entity,
}

impl ReturnType {
    pub fn label(self) -> &'static str {
        match self {
            ReturnType::EntitySet => "entity set",
            ReturnType::RelationSet => "relation set",
            ReturnType::Integer => "integer",
            ReturnType::Boolean => "boolean",
            ReturnType::Entity => "entity",
        }
    }

    /// Whether values of this type can be passed where an entity set is
    /// expected.
    pub fn is_entity_set(self) -> bool {
        matches!(self, ReturnType::EntitySet | ReturnType::Entity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: &'static str,
    pub ty: ParamType,
    pub optional: bool,
}

const fn param(name: &'static str, ty: ParamType) -> Param {
    Param {
        name,
        ty,
        optional: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolDescriptor {
    pub name: ToolName,
    pub params: Vec<Param>,
    pub returns: ReturnType,
    pub description: &'static str,
}

impl ToolDescriptor {
    pub fn for_tool(name: ToolName) -> Self {
        use ParamType::*;
        let (params, description) = match name {
            ToolName::GetRelation => (
                vec![param("entities", EntitySet)],
                "Relations that enter or leave any entity in the set, with their direction.",
            ),
            ToolName::GetHeadEntity => (
                vec![param("entities", EntitySet), param("relation", Relation)],
                "Entities h such that (h, relation, e) holds for some e in the set.",
            ),
            ToolName::GetTailEntity => (
                vec![param("entities", EntitySet), param("relation", Relation)],
                "Values t such that (e, relation, t) holds for some e in the set.",
            ),
            ToolName::GetEntityByType => (
                vec![param("type", TypeName)],
                "Entities typed with the given type.",
            ),
            ToolName::GetEntityByConstraint => (
                vec![
                    param("entities", EntitySet),
                    param("relation", Relation),
                    param("operator", Operator),
                    param("value", ConstraintValue),
                ],
                "Keeps entities whose value along the relation compares to the value with one of = > >= < <=; with an empty value and argmax or argmin, keeps the entities holding the extreme value.",
            ),
            ToolName::GetCandidateEntity => (
                vec![param("mention", Mention)],
                "Entities whose label matches the mention.",
            ),
            ToolName::Count => (
                vec![param("entities", EntitySet)],
                "Number of members of the set.",
            ),
            ToolName::Intersect => (
                vec![param("sets", SetList)],
                "Members common to every listed set (at least two sets).",
            ),
            ToolName::Union => (
                vec![param("sets", SetList)],
                "Members of any listed set (at least two sets).",
            ),
            ToolName::Judge => (
                vec![
                    param("entities", EntitySet),
                    param("relation", Relation),
                    param("operator", Operator),
                    param("value", ConstraintValue),
                ],
                "True when every entity in the set has a value along the relation that compares to the value with the operator.",
            ),
            ToolName::End => (
                vec![param("entities", EntitySet)],
                "Returns the set as the final answer and stops.",
            ),
            ToolName::RetrieveRelation => (
                vec![
                    param("relations", RelationSet),
                    Param {
                        name: "k",
                        ty: Integer,
                        optional: true,
                    },
                ],
                "The k relations of the set most relevant to the question.",
            ),
            ToolName::DisambiguateEntity => (
                vec![param("entities", EntitySet)],
                "Picks the candidate entity that best fits the question and its neighboring relations.",
            ),
        };
        ToolDescriptor {
            name,
            params,
            returns: name.returns(),
            description,
        }
    }

    pub fn min_arity(&self) -> usize {
        self.params.iter().filter(|p| !p.optional).count()
    }

    pub fn max_arity(&self) -> usize {
        self.params.len()
    }

    /// `name(p: type, ...) -> type: description`
    pub fn render(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|p| {
                format!(
                    "{}{}: {}",
                    p.name,
                    if p.optional { "?" } else { "" },
                    p.ty.label()
                )
            })
            .collect();
        format!(
            "{}({}) -> {}: {}",
            self.name,
            params.join(", "),
            self.returns.label(),
            self.description
        )
    }
}

/// Tool registry configuration, read from TOML:
///
/// ```toml
/// retrieve_relation_k = 10
///
/// [reserved]
/// type_relation = "type"
/// label_relation = "label"
///
/// [tools]
/// judge = false
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub retrieve_relation_k: usize,
    pub reserved: GraphSchema,
    /// Per-tool enable flags; absent tools are enabled.
    pub tools: BTreeMap<String, bool>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            retrieve_relation_k: 10,
            reserved: GraphSchema::default(),
            tools: BTreeMap::new(),
        }
    }
}

impl ToolConfig {
    pub fn from_toml(text: &str) -> Result<Self, ToolError> {
        let config: ToolConfig =
            toml::from_str(text).map_err(|e| ToolError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ToolError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))?;
        ToolConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ToolError> {
        if self.retrieve_relation_k == 0 {
            return Err(ToolError::Config("retrieve_relation_k must be at least 1".into()));
        }
        for (name, &enabled) in &self.tools {
            let tool = ToolName::from_str(name)
                .map_err(|_| ToolError::Config(format!("unknown tool `{name}` in [tools]")))?;
            if tool == ToolName::End && !enabled {
                return Err(ToolError::Config("`end` cannot be disabled".into()));
            }
        }
        let reserved = [&self.reserved.type_relation, &self.reserved.label_relation];
        if reserved.iter().any(|r| r.is_empty() || r.chars().any(char::is_whitespace)) {
            return Err(ToolError::Config("reserved relation names must be non-empty tokens".into()));
        }
        Ok(())
    }

    pub fn is_enabled(&self, tool: ToolName) -> bool {
        self.tools.get(tool.as_str()).copied().unwrap_or(true)
    }
}

/// The enabled tools, in rendering order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolRegistry {
    descriptors: Vec<ToolDescriptor>,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        ToolRegistry::full()
    }
}

impl ToolRegistry {
    pub fn full() -> Self {
        ToolRegistry {
            descriptors: ToolName::ALL.into_iter().map(ToolDescriptor::for_tool).collect(),
        }
    }

    pub fn from_config(config: &ToolConfig) -> Self {
        ToolRegistry {
            descriptors: ToolName::ALL
                .into_iter()
                .filter(|&t| config.is_enabled(t))
                .map(ToolDescriptor::for_tool)
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ToolDescriptor> {
        self.descriptors.iter().find(|d| d.name.as_str() == name)
    }

    pub fn descriptor(&self, tool: ToolName) -> Option<&ToolDescriptor> {
        self.descriptors.iter().find(|d| d.name == tool)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ToolDescriptor> {
        self.descriptors.iter()
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    /// The toolbox-definition block of the planner prompt.
    pub fn render_definition(&self) -> String {
        let mut out = String::new();
        let mut current: Option<ToolCategory> = None;
        for d in &self.descriptors {
            let category = d.name.category();
            if current != Some(category) {
                if current.is_some() {
                    out.push('\n');
                }
                out.push_str(category.heading());
                out.push_str(":\n");
                current = Some(category);
            }
            out.push_str("- ");
            out.push_str(&d.render());
            out.push('\n');
        }
        out.pop();
        out
    }
}
