//! Validating interpreter for reasoning programs.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::{EntityId, KnowledgeGraph, Literal, Value};
use crate::memory::{KnowledgeMemory, MemoryError};
use crate::program::{Argument, FunctionCall, ReasoningProgram};
use crate::toolbox::{
    ParamType, ToolDescriptor, ToolError, ToolInput, ToolValue, Toolbox, ValueSet,
};

pub const DEFAULT_MAX_RESULT_SIZE: usize = 10_000;
pub const DEFAULT_MAX_STEPS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecLimits {
    /// Calls allowed per run.
    pub max_steps: usize,
    /// Largest set a single call may return.
    pub max_result_size: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            max_steps: DEFAULT_MAX_STEPS,
            max_result_size: DEFAULT_MAX_RESULT_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecErrorKind {
    #[error("`v{0}` is not bound")]
    UnboundVariable(u32),
    #[error("`v{0}` is already bound")]
    Rebinding(u32),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error(transparent)]
    Tool(#[from] ToolError),
    #[error("the program already ended")]
    Finished,
    #[error("result has {size} members, over the cap of {cap}")]
    ResultTooLarge { size: usize, cap: usize },
    #[error("step budget of {0} calls exhausted")]
    StepBudget(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{call}`: {kind}")]
pub struct ExecError {
    /// Canonical text of the failing call.
    pub call: String,
    pub kind: ExecErrorKind,
}

/// Variable bindings of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Environment {
    bindings: BTreeMap<u32, ToolValue>,
    finished: bool,
    answers: Option<ValueSet>,
    steps: usize,
    last_bound: Option<u32>,
}

impl Environment {
    pub fn new() -> Self {
        Environment::default()
    }

    pub fn get(&self, var: u32) -> Option<&ToolValue> {
        self.bindings.get(&var)
    }

    pub fn bindings(&self) -> &BTreeMap<u32, ToolValue> {
        &self.bindings
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn answers(&self) -> Option<&ValueSet> {
        self.answers.as_ref()
    }

    /// Calls executed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Value bound by the most recent call.
    pub fn last_value(&self) -> Option<&ToolValue> {
        self.last_bound.and_then(|v| self.bindings.get(&v))
    }
}

/// One executed call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub call: String,
    pub result_kind: String,
    pub cardinality: usize,
    pub elapsed_ms: f64,
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub answers: Option<ValueSet>,
    pub env: Environment,
    pub memory: KnowledgeMemory,
    pub trace: Vec<TraceRecord>,
    /// Set when the program has no `end` call.
    pub unterminated: bool,
}

#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct ExecFailure {
    pub error: ExecError,
    /// Records of the calls that succeeded before the failure.
    pub trace: Vec<TraceRecord>,
    pub env: Environment,
    pub memory: KnowledgeMemory,
}

/// Runs calls against one graph with one toolbox.
#[derive(Debug, Clone, Copy)]
pub struct Executor<'a> {
    graph: &'a KnowledgeGraph,
    toolbox: &'a Toolbox,
    limits: ExecLimits,
}

impl<'a> Executor<'a> {
    pub fn new(graph: &'a KnowledgeGraph, toolbox: &'a Toolbox) -> Self {
        Executor {
            graph,
            toolbox,
            limits: ExecLimits::default(),
        }
    }

    pub fn with_limits(mut self, limits: ExecLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn limits(&self) -> ExecLimits {
        self.limits
    }

    /// Executes one call, binds its result and records it in `mem`. On error
    /// neither `env` nor `mem` is modified.
    pub fn execute_call(
        &self,
        env: &mut Environment,
        mem: &mut KnowledgeMemory,
        call: &FunctionCall,
    ) -> Result<ToolValue, ExecError> {
        let fail = |kind: ExecErrorKind| ExecError {
            call: call.canonical(),
            kind,
        };
        if env.finished || mem.is_finished() {
            return Err(fail(ExecErrorKind::Finished));
        }
        if env.steps >= self.limits.max_steps {
            return Err(fail(ExecErrorKind::StepBudget(self.limits.max_steps)));
        }
        if env.bindings.contains_key(&call.output) {
            return Err(fail(ExecErrorKind::Rebinding(call.output)));
        }
        if self.toolbox.registry().descriptor(call.tool).is_none() {
            return Err(fail(ExecErrorKind::Tool(ToolError::Argument(format!(
                "tool `{}` is disabled",
                call.tool
            )))));
        }
        let inputs = resolve_inputs(env, call).map_err(fail)?;
        let value = self
            .toolbox
            .dispatch(self.graph, call.tool, inputs, mem.question())
            .map_err(|e| fail(ExecErrorKind::Tool(e)))?;
        if matches!(value, ToolValue::Entities(_) | ToolValue::Relations(_))
            && value.cardinality() > self.limits.max_result_size
        {
            return Err(fail(ExecErrorKind::ResultTooLarge {
                size: value.cardinality(),
                cap: self.limits.max_result_size,
            }));
        }
        mem.record_step(call, &value).map_err(|e| match e {
            MemoryError::Finished(_) => fail(ExecErrorKind::Finished),
            MemoryError::EmptyQuestion => unreachable!("memory exists"),
        })?;
        if call.is_end() {
            env.finished = true;
            env.answers = value.as_entities().cloned();
        }
        env.bindings.insert(call.output, value.clone());
        env.last_bound = Some(call.output);
        env.steps += 1;
        Ok(value)
    }

    /// Runs `program` from a fresh environment, starting from `memory`.
    pub fn run(
        &self,
        program: &ReasoningProgram,
        memory: KnowledgeMemory,
    ) -> Result<ExecutionResult, Box<ExecFailure>> {
        let mut env = Environment::new();
        let mut mem = memory;
        let mut trace = Vec::with_capacity(program.len());
        for call in program.calls() {
            let started = Instant::now();
            match self.execute_call(&mut env, &mut mem, call) {
                Ok(value) => trace.push(TraceRecord {
                    call: call.canonical(),
                    result_kind: value.kind_name().to_string(),
                    cardinality: value.cardinality(),
                    elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
                }),
                Err(error) => {
                    return Err(Box::new(ExecFailure {
                        error,
                        trace,
                        env,
                        memory: mem,
                    }))
                }
            }
        }
        let unterminated = !env.finished;
        let answers = if env.finished {
            env.answers.clone()
        } else {
            env.last_value().and_then(ToolValue::as_entities).cloned()
        };
        Ok(ExecutionResult {
            answers,
            env,
            memory: mem,
            trace,
            unterminated,
        })
    }
}

#[derive(Debug, Error)]
pub enum ProgramRunError {
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Exec(#[from] Box<ExecFailure>),
}

/// Runs `program` with the default toolbox and limits.
pub fn execute_program(
    graph: &KnowledgeGraph,
    program: &ReasoningProgram,
    question: &str,
) -> Result<ExecutionResult, ProgramRunError> {
    let toolbox = Toolbox::default();
    let memory = KnowledgeMemory::new(question, Vec::new(), toolbox.registry())?;
    Ok(Executor::new(graph, &toolbox).run(program, memory)?)
}

fn resolve_inputs(env: &Environment, call: &FunctionCall) -> Result<Vec<ToolInput>, ExecErrorKind> {
    let desc = ToolDescriptor::for_tool(call.tool);
    call.args
        .iter()
        .zip(&desc.params)
        .map(|(arg, param)| resolve(env, arg, param.ty, call))
        .collect()
}

fn lookup(env: &Environment, var: u32) -> Result<&ToolValue, ExecErrorKind> {
    env.bindings
        .get(&var)
        .ok_or(ExecErrorKind::UnboundVariable(var))
}

fn entity_set(env: &Environment, var: u32, call: &FunctionCall) -> Result<ValueSet, ExecErrorKind> {
    match lookup(env, var)? {
        ToolValue::Entities(s) => Ok(s.clone()),
        other => Err(ExecErrorKind::TypeMismatch(format!(
            "{} expects an entity set, but v{var} holds {}",
            call.tool,
            other.kind_name()
        ))),
    }
}

fn resolve(
    env: &Environment,
    arg: &Argument,
    ty: ParamType,
    call: &FunctionCall,
) -> Result<ToolInput, ExecErrorKind> {
    let mismatch = || {
        ExecErrorKind::TypeMismatch(format!(
            "{} cannot take a {} as its {} argument",
            call.tool,
            arg.kind_name(),
            ty.label()
        ))
    };
    Ok(match (ty, arg) {
        (ParamType::EntitySet, Argument::Var(v)) => ToolInput::Entities(entity_set(env, *v, call)?),
        (ParamType::EntitySet, Argument::Entity(e)) => ToolInput::Entities(ValueSet::singleton(e.clone())),
        (ParamType::Relation, Argument::Str(s)) => ToolInput::Relation(s.clone()),
        (ParamType::Operator, Argument::Str(s)) => ToolInput::Operator(s.clone()),
        (ParamType::Mention, Argument::Str(s)) => ToolInput::Mention(s.clone()),
        (ParamType::ConstraintValue, Argument::Literal(l)) => {
            ToolInput::Value(Some(Value::Literal(l.clone())))
        }
        (ParamType::ConstraintValue, Argument::Entity(e)) => ToolInput::Value(Some(Value::Entity(e.clone()))),
        (ParamType::ConstraintValue, Argument::Str(s)) if s.is_empty() => ToolInput::Value(None),
        (ParamType::ConstraintValue, Argument::Str(s)) => ToolInput::Value(Some(Value::Literal(Literal::string(s)))),
        (ParamType::TypeName, Argument::Entity(e)) => ToolInput::Type(e.clone()),
        (ParamType::TypeName, Argument::Str(s)) => {
            let token = if s.starts_with('#') { s.clone() } else { format!("#{s}") };
            let id = EntityId::new(&token).map_err(|e| {
                ExecErrorKind::Tool(ToolError::Argument(format!("invalid type name: {e}")))
            })?;
            ToolInput::Type(id)
        }
        (ParamType::SetList, Argument::SetList(vars)) => ToolInput::SetList(
            vars.iter()
                .map(|v| entity_set(env, *v, call))
                .collect::<Result<_, _>>()?,
        ),
        (ParamType::RelationSet, Argument::Var(v)) => match lookup(env, *v)? {
            ToolValue::Relations(r) => ToolInput::Relations(r.clone()),
            other => {
                return Err(ExecErrorKind::TypeMismatch(format!(
                    "{} expects a relation set, but v{v} holds {}",
                    call.tool,
                    other.kind_name()
                )))
            }
        },
        (ParamType::Integer, Argument::Integer(i)) => ToolInput::Integer(*i),
        _ => return Err(mismatch()),
    })
}
