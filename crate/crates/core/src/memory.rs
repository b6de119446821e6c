//! Knowledge memory: the question, the toolbox definition, the relations
//! observed so far and the program executed so far, rendered into one
//! planner prompt.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::EntityId;
use crate::program::FunctionCall;
use crate::toolbox::{RelationSet, ToolName, ToolRegistry, ToolValue};

/// Prompt template text. Placeholders are `{name}`; substitution is a single
/// pass, so values containing braces are inserted literally.
pub const PROMPT_TEMPLATE: &str = include_str!("../assets/prompt_v1.txt");
pub const TEMPLATE_VERSION: &str = "kg-agent-prompt/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("question must not be empty")]
    EmptyQuestion,
    #[error("memory is finished; `{0}` was recorded after `end`")]
    Finished(String),
}

/// How observed relation sets are rendered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KgInfoMode {
    /// Only the most recent `get_relation`, plus a count of older ones.
    #[default]
    Latest,
    /// Every observed relation set.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KgObservation {
    /// 0-based position of the producing call in the history.
    pub step: usize,
    pub relations: RelationSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeMemory {
    question: String,
    topic_entities: Vec<EntityId>,
    toolbox_definition: String,
    kg_information: Vec<KgObservation>,
    history: Vec<FunctionCall>,
    finished: bool,
    mode: KgInfoMode,
}

/// Fresh memory with no topic entities.
pub fn init_memory(question: &str, registry: &ToolRegistry) -> Result<KnowledgeMemory, MemoryError> {
    KnowledgeMemory::new(question, Vec::new(), registry)
}

impl KnowledgeMemory {
    /// `topic_entities` are the entities given with the question.
    pub fn new(
        question: &str,
        topic_entities: Vec<EntityId>,
        registry: &ToolRegistry,
    ) -> Result<Self, MemoryError> {
        if question.trim().is_empty() {
            return Err(MemoryError::EmptyQuestion);
        }
        Ok(KnowledgeMemory {
            question: question.to_string(),
            topic_entities,
            toolbox_definition: registry.render_definition(),
            kg_information: Vec::new(),
            history: Vec::new(),
            finished: false,
            mode: KgInfoMode::default(),
        })
    }

    pub fn with_mode(mut self, mode: KgInfoMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn topic_entities(&self) -> &[EntityId] {
        &self.topic_entities
    }

    pub fn toolbox_definition(&self) -> &str {
        &self.toolbox_definition
    }

    pub fn kg_information(&self) -> &[KgObservation] {
        &self.kg_information
    }

    pub fn history(&self) -> &[FunctionCall] {
        &self.history
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn mode(&self) -> KgInfoMode {
        self.mode
    }

    /// Appends a successfully executed call. `get_relation` results also
    /// extend the KG information.
    pub fn record_step(&mut self, call: &FunctionCall, result: &ToolValue) -> Result<(), MemoryError> {
        if self.finished {
            return Err(MemoryError::Finished(call.canonical()));
        }
        if call.tool == ToolName::GetRelation {
            if let ToolValue::Relations(relations) = result {
                self.kg_information.push(KgObservation {
                    step: self.history.len(),
                    relations: relations.clone(),
                });
            }
        }
        self.history.push(call.clone());
        self.finished = call.is_end();
        Ok(())
    }

    pub fn render_prompt(&self) -> String {
        self.render_with_feedback(None)
    }

    /// Prompt with a FEEDBACK section describing why the previous output was
    /// rejected.
    pub fn render_with_feedback(&self, feedback: Option<&str>) -> String {
        let topic = if self.topic_entities.is_empty() {
            "(none)".to_string()
        } else {
            self.topic_entities
                .iter()
                .map(EntityId::as_str)
                .collect::<Vec<_>>()
                .join(", ")
        };
        let history = if self.history.is_empty() {
            "(none)".to_string()
        } else {
            self.history
                .iter()
                .map(FunctionCall::canonical)
                .collect::<Vec<_>>()
                .join("\n")
        };
        let feedback = match feedback {
            Some(text) => format!("\nFEEDBACK:\n{}\n", text.trim_end()),
            None => String::new(),
        };
        substitute(PROMPT_TEMPLATE, |name| match name {
            "question" => Some(self.question.clone()),
            "topic_entities" => Some(topic.clone()),
            "toolbox" => Some(self.toolbox_definition.clone()),
            "kg_information" => Some(self.render_kg_information()),
            "history_program" => Some(history.clone()),
            "feedback" => Some(feedback.clone()),
            _ => None,
        })
    }

    fn render_kg_information(&self) -> String {
        let line = |o: &KgObservation| format!("step {}: {}", o.step, o.relations);
        match (self.mode, self.kg_information.split_last()) {
            (_, None) => "(none)".to_string(),
            (KgInfoMode::Latest, Some((last, earlier))) => {
                let mut out = line(last);
                if !earlier.is_empty() {
                    out.push_str(&format!("\n(+{} earlier relation sets)", earlier.len()));
                }
                out
            }
            (KgInfoMode::All, Some(_)) => self
                .kg_information
                .iter()
                .map(line)
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }
}

fn substitute(template: &str, value: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').and_then(|close| value(&after[..close]).map(|v| (close, v))) {
            Some((close, v)) => {
                out.push_str(&v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
