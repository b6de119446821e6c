//! Planner-driven iteration: render memory, ask the planner for one call,
//! execute it, repeat until `end` or a limit.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{Environment, ExecLimits, Executor};
use crate::kg_store::{EntityId, KnowledgeGraph};
use crate::memory::{KgInfoMode, KnowledgeMemory, MemoryError};
use crate::program::{parse_call_in, Argument, FunctionCall, ReasoningProgram};
use crate::toolbox::{ToolName, Toolbox, ValueSet};

pub const DEFAULT_MAX_STEPS: usize = 20;
pub const DEFAULT_REPAIR_ATTEMPTS: usize = 2;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
/// Members listed per set in trajectory summaries.
const SUMMARY_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("planner has no more calls")]
    Exhausted,
    #[error("planner transport: {0}")]
    Transport(String),
    #[error("planner returned HTTP {0}")]
    Status(u16),
    #[error("planner response malformed: {0}")]
    Malformed(String),
}

/// Produces the next call text for a rendered prompt.
pub trait Planner {
    fn next_call(&mut self, prompt: &str) -> Result<String, PlannerError>;
}

impl<P: Planner + ?Sized> Planner for Box<P> {
    fn next_call(&mut self, prompt: &str) -> Result<String, PlannerError> {
        (**self).next_call(prompt)
    }
}

/// Replays fixed lines, ignoring the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedPlanner {
    lines: Vec<String>,
    next: usize,
}

impl ScriptedPlanner {
    /// Replays `program`; when it lacks a final `end`, one is appended over
    /// the last call that returns an entity set.
    pub fn new(program: &ReasoningProgram) -> Self {
        let mut lines: Vec<String> = program.calls().iter().map(FunctionCall::canonical).collect();
        if !program.is_terminated() {
            let last_set = program
                .calls()
                .iter()
                .rev()
                .find(|c| c.tool.returns().is_entity_set());
            if let Some(src) = last_set {
                let output = program.calls().iter().map(|c| c.output).max().unwrap_or(0) + 1;
                let end = FunctionCall::new(output, ToolName::End, vec![Argument::Var(src.output)])
                    .expect("end takes one variable");
                lines.push(end.canonical());
            }
        }
        ScriptedPlanner { lines, next: 0 }
    }

    /// Replays raw text lines verbatim.
    pub fn from_lines<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedPlanner {
            lines: lines.into_iter().map(Into::into).collect(),
            next: 0,
        }
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}

impl Planner for ScriptedPlanner {
    fn next_call(&mut self, _prompt: &str) -> Result<String, PlannerError> {
        let line = self.lines.get(self.next).ok_or(PlannerError::Exhausted)?;
        self.next += 1;
        Ok(line.clone())
    }
}

/// Extra request fields forwarded to a remote planner.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodingParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<String>,
}

#[derive(Serialize)]
struct NextCallRequest<'a> {
    prompt: &'a str,
    #[serde(flatten)]
    params: &'a DecodingParams,
}

#[derive(Deserialize)]
struct NextCallResponse {
    text: String,
}

/// HTTP planner: `POST {base}/v1/next-call` with `{"prompt": ...}`, answered
/// by `{"text": ...}`. Cloning shares the connection pool.
#[derive(Debug, Clone)]
pub struct RemotePlanner {
    url: String,
    params: DecodingParams,
    agent: ureq::Agent,
}

impl RemotePlanner {
    pub fn new(endpoint: &str) -> Self {
        Self::with_options(endpoint, DEFAULT_TIMEOUT, DecodingParams::default())
    }

    /// `endpoint` is the service base URL; a URL already ending in
    /// `/v1/next-call` is used as is.
    pub fn with_options(endpoint: &str, timeout: Duration, params: DecodingParams) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/v1/next-call") {
            base.to_string()
        } else {
            format!("{base}/v1/next-call")
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemotePlanner { url, params, agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Planner for RemotePlanner {
    fn next_call(&mut self, prompt: &str) -> Result<String, PlannerError> {
        let request = NextCallRequest {
            prompt,
            params: &self.params,
        };
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(&request)
            .map_err(|e| PlannerError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(PlannerError::Status(status));
        }
        let body: NextCallResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| PlannerError::Malformed(e.to_string()))?;
        Ok(first_line(&body.text))
    }
}

fn first_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentLimits {
    /// Executed calls allowed per run.
    pub max_steps: usize,
    /// Rejected planner outputs tolerated in a row before giving up.
    pub repair_attempts: usize,
    pub max_result_size: usize,
    pub kg_info: KgInfoMode,
}

impl Default for AgentLimits {
    fn default() -> Self {
        AgentLimits {
            max_steps: DEFAULT_MAX_STEPS,
            repair_attempts: DEFAULT_REPAIR_ATTEMPTS,
            max_result_size: ExecLimits::default().max_result_size,
            kg_info: KgInfoMode::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Ended,
    StepBudget,
    PlannerError,
    ExecutionError,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Ended => "ended",
            Termination::StepBudget => "step_budget",
            Termination::PlannerError => "planner_error",
            Termination::ExecutionError => "execution_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepOutcome {
    Executed { result: String },
    ParseError { message: String },
    ExecutionError { message: String },
}

/// One planner request and what became of its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    /// Executed calls before this request.
    pub step: usize,
    pub prompt: String,
    pub emitted: String,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone)]
pub struct AgentResult {
    /// Present only when the run ended with `end`.
    pub answers: Option<ValueSet>,
    pub trajectory: Vec<TrajectoryEntry>,
    pub termination: Termination,
    /// Why a run terminated abnormally.
    pub error: Option<String>,
    pub env: Environment,
    pub memory: KnowledgeMemory,
}

impl AgentResult {
    /// Executed calls.
    pub fn steps(&self) -> usize {
        self.env.steps()
    }

    /// One JSON object per trajectory entry.
    pub fn trajectory_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.trajectory {
            out.push_str(&serde_json::to_string(entry).expect("entries serialize"));
            out.push('\n');
        }
        out
    }
}

/// The question plus the entities given with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub question: String,
    pub topic_entities: Vec<EntityId>,
}

impl Task {
    pub fn new(question: impl Into<String>, topic_entities: Vec<EntityId>) -> Self {
        Task {
            question: question.into(),
            topic_entities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

pub fn run_agent(
    graph: &KnowledgeGraph,
    toolbox: &Toolbox,
    task: &Task,
    planner: &mut dyn Planner,
    limits: AgentLimits,
) -> Result<AgentResult, AgentError> {
    let mut memory = KnowledgeMemory::new(&task.question, task.topic_entities.clone(), toolbox.registry())?
        .with_mode(limits.kg_info);
    let executor = Executor::new(graph, toolbox).with_limits(ExecLimits {
        max_steps: limits.max_steps,
        max_result_size: limits.max_result_size,
    });
    let mut env = Environment::new();
    let mut trajectory = Vec::new();
    let mut feedback: Option<String> = None;
    let mut rejected = 0usize;

    let (termination, error) = loop {
        if env.is_finished() {
            break (Termination::Ended, None);
        }
        if env.steps() >= limits.max_steps {
            break (
                Termination::StepBudget,
                Some(format!("no `end` within {} steps", limits.max_steps)),
            );
        }
        let prompt = memory.render_with_feedback(feedback.as_deref());
        let emitted = match planner.next_call(&prompt) {
            Ok(text) => first_line(&text),
            Err(e) => break (Termination::PlannerError, Some(e.to_string())),
        };
        let step = env.steps();
        let attempt = parse_call_in(&emitted, toolbox.registry())
            .map_err(|e| (Termination::PlannerError, StepOutcome::ParseError { message: e.to_string() }))
            .and_then(|call| {
                executor
                    .execute_call(&mut env, &mut memory, &call)
                    .map_err(|e| {
                        (
                            Termination::ExecutionError,
                            StepOutcome::ExecutionError { message: e.to_string() },
                        )
                    })
            });
        match attempt {
            Ok(value) => {
                log::debug!("step {step}: {emitted}");
                trajectory.push(TrajectoryEntry {
                    step,
                    prompt,
                    emitted,
                    outcome: StepOutcome::Executed {
                        result: value.summary(SUMMARY_LIMIT),
                    },
                });
                feedback = None;
                rejected = 0;
            }
            Err((termination, outcome)) => {
                let message = match &outcome {
                    StepOutcome::ParseError { message } | StepOutcome::ExecutionError { message } => {
                        message.clone()
                    }
                    StepOutcome::Executed { .. } => unreachable!(),
                };
                log::debug!("step {step}: rejected `{emitted}`: {message}");
                trajectory.push(TrajectoryEntry {
                    step,
                    prompt,
                    emitted: emitted.clone(),
                    outcome,
                });
                rejected += 1;
                if rejected > limits.repair_attempts {
                    break (termination, Some(message));
                }
                feedback = Some(format!("The previous call `{emitted}` was rejected: {message}"));
            }
        }
    };

    let answers = match termination {
        Termination::Ended => env.answers().cloned(),
        _ => None,
    };
    Ok(AgentResult {
        answers,
        trajectory,
        termination,
        error,
        env,
        memory,
    })
}
