use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use kg_agent::agent::{run_agent, Planner, RemotePlanner, ScriptedPlanner, Task};
use kg_agent::evalkit::{answer_strings, evaluate as score, join_records, Prediction};
use kg_agent::kg_store::{load_graph_with_schema, EntityId, KnowledgeGraph};
use kg_agent::synthesis::{
    mix_corpus, pairs_to_jsonl, parse_pairs_jsonl, parse_query_graphs, synthesize_sample, MixError,
    MixSource,
};
use kg_agent::toolbox::{ToolConfig, Toolbox};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{require_file, PlannerSpec, RunConfig};
use crate::exit::{for_termination, Failure, WithCode, EXIT_INPUT, EXIT_IO, EXIT_USAGE};

fn tool_config(cfg: &RunConfig) -> Result<ToolConfig, Failure> {
    match &cfg.registry {
        Some(path) => ToolConfig::load(path).code(EXIT_USAGE),
        None => Ok(ToolConfig::default()),
    }
}

fn load(cfg: &RunConfig) -> Result<(KnowledgeGraph, Toolbox), Failure> {
    let tools = tool_config(cfg)?;
    let path = cfg.graph()?;
    let graph = load_graph_with_schema(path, tools.reserved.clone())
        .with_context(|| format!("cannot load graph {}", path.display()))
        .code(EXIT_INPUT)?;
    let toolbox = Toolbox::new(tools).code(EXIT_USAGE)?;
    Ok((graph, toolbox))
}

fn read(path: &Path) -> Result<String, Failure> {
    require_file(path)?;
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .code(EXIT_INPUT)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .code(EXIT_IO)
}

fn out_path(cfg: &RunConfig) -> Result<&Path, Failure> {
    cfg.out
        .as_deref()
        .ok_or_else(|| anyhow!("this command needs --out"))
        .code(EXIT_USAGE)
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

pub fn ingest(cfg: &RunConfig) -> Result<(), Failure> {
    let tools = tool_config(cfg)?;
    let path = cfg.graph()?;
    let graph = load_graph_with_schema(path, tools.reserved)
        .with_context(|| format!("cannot load graph {}", path.display()))
        .code(EXIT_INPUT)?;
    let health = graph.audit();
    println!("entities: {}", graph.entity_count());
    println!("relations: {}", graph.relation_count());
    println!("triples: {}", graph.triple_count());
    println!("literals: {}", graph.literal_count());
    match &health {
        Ok(()) => println!("index: ok"),
        Err(e) => println!("index: inconsistent: {e}"),
    }
    if let Some(out) = &cfg.out {
        let report = json!({
            "entities": graph.entity_count(),
            "relations": graph.relation_count(),
            "triples": graph.triple_count(),
            "literals": graph.literal_count(),
            "index_ok": health.is_ok(),
        });
        write(out, &format!("{report:#}\n"))?;
    }
    health.map_err(|e| anyhow!("index audit failed: {e}")).code(EXIT_INPUT)
}

fn planner(cfg: &RunConfig) -> Result<Box<dyn Planner>, Failure> {
    match &cfg.planner {
        Some(PlannerSpec::Scripted(path)) => {
            let text = read(path)?;
            let lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
            Ok(Box::new(ScriptedPlanner::from_lines(lines)))
        }
        Some(PlannerSpec::Remote(url)) => Ok(Box::new(RemotePlanner::with_options(
            url,
            cfg.timeout,
            cfg.decoding.clone(),
        ))),
        None => Err(anyhow!(
            "no planner given; pass --planner or set KG_AGENT_PLANNER_URL"
        ))
        .code(EXIT_USAGE),
    }
}

pub fn run(cfg: &RunConfig, question: &str, topics: &[String]) -> Result<(), Failure> {
    let topic_entities = topics
        .iter()
        .map(|t| EntityId::new(t).with_context(|| format!("bad topic entity `{t}`")))
        .collect::<anyhow::Result<Vec<_>>>()
        .code(EXIT_USAGE)?;
    let mut planner = planner(cfg)?;
    let (graph, toolbox) = load(cfg)?;
    let task = Task::new(question, topic_entities);
    let result = run_agent(&graph, &toolbox, &task, planner.as_mut(), cfg.limits).code(EXIT_USAGE)?;
    if let Some(out) = &cfg.out {
        write(out, &result.trajectory_jsonl())?;
    }
    eprintln!("termination: {} after {} steps", result.termination.as_str(), result.steps());
    match &result.answers {
        Some(answers) => {
            for answer in answer_strings(&graph, answers) {
                println!("{answer}");
            }
            Ok(())
        }
        None => Err(anyhow!(
            "run stopped with {}: {}",
            result.termination.as_str(),
            result.error.as_deref().unwrap_or("no answers")
        ))
        .code(for_termination(result.termination)),
    }
}

pub fn synthesize(cfg: &RunConfig, input: &Path, rejections: Option<PathBuf>) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let out = out_path(cfg)?;
    let rejections = rejections.unwrap_or_else(|| out.with_extension("rejections.jsonl"));
    let samples = parse_query_graphs(&read(input)?)
        .with_context(|| format!("in {}", input.display()))
        .code(EXIT_INPUT)?;
    let (graph, toolbox) = load(cfg)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .code(EXIT_USAGE)?;
    let results: Vec<_> = pool.install(|| {
        samples
            .par_iter()
            .map(|qg| synthesize_sample(&graph, &toolbox, qg, &cfg.synthesis))
            .collect()
    });

    let mut corpus = String::new();
    let mut rejected = String::new();
    let (mut accepted, mut pairs) = (0usize, 0usize);
    for result in results {
        match result {
            Ok(sample) => {
                accepted += 1;
                pairs += sample.pairs.len();
                corpus.push_str(&pairs_to_jsonl(&sample.pairs));
            }
            Err(rejection) => {
                log::info!("rejected {}: {}", rejection.id, rejection.reason);
                rejected.push_str(&serde_json::to_string(&rejection).expect("rejection serializes"));
                rejected.push('\n');
            }
        }
    }
    write(out, &corpus)?;
    write(&rejections, &rejected)?;
    print_json(&json!({
        "seed": seed,
        "samples": samples.len(),
        "accepted": accepted,
        "rejected": samples.len() - accepted,
        "pairs": pairs,
        "corpus": out,
        "rejections": rejections,
    }));
    Ok(())
}

/// `NAME:WEIGHT:PATH`; the path may itself contain colons.
fn parse_source(spec: &str) -> Result<(String, f64, PathBuf), Failure> {
    let mut parts = spec.splitn(3, ':');
    let (Some(name), Some(weight), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(anyhow!("source `{spec}` must be NAME:WEIGHT:PATH")).code(EXIT_USAGE);
    };
    let weight = weight
        .parse::<f64>()
        .with_context(|| format!("source `{spec}`: bad weight `{weight}`"))
        .code(EXIT_USAGE)?;
    Ok((name.to_string(), weight, PathBuf::from(path)))
}

pub fn mix(cfg: &RunConfig, specs: &[String], total: usize) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let out = out_path(cfg)?;
    let parsed = specs.iter().map(|s| parse_source(s)).collect::<Result<Vec<_>, _>>()?;
    for (_, _, path) in &parsed {
        require_file(path)?;
    }
    let mut sources = Vec::with_capacity(parsed.len());
    for (name, weight, path) in parsed {
        let pairs = parse_pairs_jsonl(&read(&path)?)
            .with_context(|| format!("in {}", path.display()))
            .code(EXIT_INPUT)?;
        sources.push(MixSource { name, weight, pairs });
    }
    let mixed = mix_corpus(&sources, total, seed).map_err(|e| {
        let code = match e {
            MixError::Shortfall(_) => EXIT_INPUT,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            error: e.into(),
        }
    })?;
    write(out, &pairs_to_jsonl(&mixed.pairs))?;
    print_json(&json!({
        "seed": seed,
        "total": total,
        "pairs": mixed.pairs.len(),
        "sources": mixed.report,
    }));
    Ok(())
}

/// One line of a predictions or gold file; `answers` is a list of strings
/// or a single string.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerLine {
    id: String,
    answers: Prediction,
}

fn read_answers(path: &Path) -> Result<Vec<(String, Prediction)>, Failure> {
    let text = read(path)?;
    let mut seen = BTreeMap::new();
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: AnswerLine = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), idx + 1))
            .code(EXIT_INPUT)?;
        if let Some(first) = seen.insert(row.id.clone(), idx + 1) {
            return Err(anyhow!(
                "{}:{}: id `{}` already appears on line {first}",
                path.display(),
                idx + 1,
                row.id
            ))
            .code(EXIT_INPUT);
        }
        rows.push((row.id, row.answers));
    }
    Ok(rows)
}

pub fn evaluate(cfg: &RunConfig, predictions: &Path, gold: &Path) -> Result<(), Failure> {
    let seed = cfg.seed()?;
    let predicted: BTreeMap<String, Prediction> = read_answers(predictions)?.into_iter().collect();
    let gold: Vec<(String, Vec<String>)> = read_answers(gold)?
        .into_iter()
        .map(|(id, p)| (id, p.members().into_iter().collect()))
        .collect();
    let gold_ids: BTreeSet<&str> = gold.iter().map(|(id, _)| id.as_str()).collect();
    let unmatched = predicted.keys().filter(|id| !gold_ids.contains(id.as_str())).count();
    let records = join_records(&predicted, &gold);
    let report = score(&records, cfg.repeats, seed).code(EXIT_USAGE)?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["unmatched_predictions"] = json!(unmatched);
    if let Some(out) = &cfg.out {
        write(out, &format!("{value:#}\n"))?;
    }
    print_json(&value);
    Ok(())
}
