use serde::{Deserialize, Serialize};

use super::chain::{extract_reasoning_chain, generate_program, ProbePolicy, ReasoningChain};
use super::query_graph::QueryGraph;
use super::SynthesisError;
use crate::agent::Task;
use crate::executor::{Environment, ExecLimits, Executor};
use crate::kg_store::KnowledgeGraph;
use crate::memory::{KgInfoMode, KnowledgeMemory, TEMPLATE_VERSION};
use crate::program::ReasoningProgram;
use crate::toolbox::{Toolbox, ValueSet};

/// One supervised step: the prompt before a call and the call itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionPair {
    pub id: String,
    /// 0-based position of the call in its program.
    pub step: usize,
    pub input: String,
    pub output: String,
    pub dataset: String,
    pub template_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionStage {
    /// Malformed or structurally invalid query graph.
    Invalid,
    /// Query graph shape outside what program generation handles.
    Unsupported,
    /// The generated program failed on the graph.
    Execution,
    /// The program ran but produced no answers.
    EmptyAnswer,
    /// The program's answers differ from the listed gold answers.
    AnswerMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub dataset: String,
    pub stage: RejectionStage,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisOptions {
    pub probe: ProbePolicy,
    pub kg_info: KgInfoMode,
    pub limits: ExecLimits,
}

/// Pairs for one executed program and the answers it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBuild {
    pub pairs: Vec<InstructionPair>,
    pub answers: ValueSet,
}

/// Executes `program` call by call, rendering the memory before each call.
/// Pair `t` holds the prompt seen before call `t` and that call's text.
pub fn build_instruction_pairs(
    graph: &KnowledgeGraph,
    toolbox: &Toolbox,
    task: &Task,
    program: &ReasoningProgram,
    id: &str,
    dataset: &str,
    options: &SynthesisOptions,
) -> Result<PairBuild, Rejection> {
    let reject = |stage, reason: String| Rejection {
        id: id.to_string(),
        dataset: dataset.to_string(),
        stage,
        reason,
    };
    let mut memory = KnowledgeMemory::new(&task.question, task.topic_entities.clone(), toolbox.registry())
        .map_err(|e| reject(RejectionStage::Invalid, e.to_string()))?
        .with_mode(options.kg_info);
    let executor = Executor::new(graph, toolbox).with_limits(options.limits);
    let mut env = Environment::new();
    let mut pairs = Vec::with_capacity(program.len());
    for (step, call) in program.calls().iter().enumerate() {
        let input = memory.render_prompt();
        executor
            .execute_call(&mut env, &mut memory, call)
            .map_err(|e| reject(RejectionStage::Execution, e.to_string()))?;
        pairs.push(InstructionPair {
            id: id.to_string(),
            step,
            input,
            output: call.canonical(),
            dataset: dataset.to_string(),
            template_version: TEMPLATE_VERSION.to_string(),
        });
    }
    let answers = env
        .answers()
        .cloned()
        .ok_or_else(|| reject(RejectionStage::Execution, "program has no `end` call".into()))?;
    Ok(PairBuild { pairs, answers })
}

/// Everything produced for one accepted sample.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub chain: ReasoningChain,
    pub program: ReasoningProgram,
    pub task: Task,
    pub pairs: Vec<InstructionPair>,
    pub answers: ValueSet,
}

/// Query graph to instruction pairs, with the quality gates: the program
/// must execute, produce answers, and match the gold answers when listed.
pub fn synthesize_sample(
    graph: &KnowledgeGraph,
    toolbox: &Toolbox,
    qg: &QueryGraph,
    options: &SynthesisOptions,
) -> Result<Synthesized, Rejection> {
    let reject = |stage, reason: String| Rejection {
        id: qg.id.clone(),
        dataset: qg.dataset.clone(),
        stage,
        reason,
    };
    let from_error = |e: SynthesisError| match e {
        SynthesisError::Unsupported { message, .. } => reject(RejectionStage::Unsupported, message),
        other => reject(RejectionStage::Invalid, other.to_string()),
    };
    let chain = extract_reasoning_chain(qg).map_err(from_error)?;
    if !graph.contains_entity(&chain.start) {
        return Err(reject(
            RejectionStage::Invalid,
            format!("start entity {} is not in the graph", chain.start),
        ));
    }
    let gold = qg.gold_answers().map_err(from_error)?;
    let program = generate_program(&chain, options.probe);
    let task = Task::new(qg.question.clone(), vec![chain.start.clone()]);
    let built = build_instruction_pairs(graph, toolbox, &task, &program, &qg.id, &qg.dataset, options)?;
    if built.answers.is_empty() {
        return Err(reject(RejectionStage::EmptyAnswer, "program returned no answers".into()));
    }
    if !gold.is_empty() {
        let gold: ValueSet = gold.into_iter().collect();
        if gold != built.answers {
            return Err(reject(
                RejectionStage::AnswerMismatch,
                format!("program returned {}, expected {gold}", built.answers),
            ));
        }
    }
    Ok(Synthesized {
        chain,
        program,
        task,
        pairs: built.pairs,
        answers: built.answers,
    })
}

pub fn pairs_to_jsonl(pairs: &[InstructionPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pairs serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_pairs_jsonl(text: &str) -> Result<Vec<InstructionPair>, SynthesisError> {
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
