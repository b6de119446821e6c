//! Answer-set metrics: F1, sampled Hits@1 and normalized exact match.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::{KnowledgeGraph, Value};
use crate::toolbox::ValueSet;

/// Identifies the exact-match normalization rules below.
pub const NORMALIZATION_VERSION: &str =
    "em-v1: lowercase, drop punctuation, collapse whitespace, drop leading a/an/the";
pub const DEFAULT_REPEATS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold answer set is empty")]
    EmptyGold,
    #[error("repeats must be at least 1")]
    NoRepeats,
}

pub fn f1(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let hit = pred.intersection(gold).count() as f64;
    let precision = if pred.is_empty() { 0.0 } else { hit / pred.len() as f64 };
    let recall = hit / gold.len() as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Mean over `repeats` draws of whether a uniformly chosen predicted answer
/// is gold. An empty prediction scores 0. Draws walk through successive
/// random permutations of the prediction, so every draw is uniform and every
/// completed permutation contributes exactly |pred ∩ gold| hits.
pub fn hits_at_1_with<R: Rng + ?Sized>(
    pred: &BTreeSet<String>,
    gold: &BTreeSet<String>,
    repeats: usize,
    rng: &mut R,
) -> Result<f64, EvalError> {
    if repeats == 0 {
        return Err(EvalError::NoRepeats);
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let mut members: Vec<&String> = pred.iter().collect();
    let mut hits = 0usize;
    let mut drawn = 0usize;
    while drawn < repeats {
        members.shuffle(rng);
        let take = members.len().min(repeats - drawn);
        hits += members[..take].iter().filter(|m| gold.contains(**m)).count();
        drawn += take;
    }
    Ok(hits as f64 / repeats as f64)
}

pub fn hits_at_1(
    pred: &BTreeSet<String>,
    gold: &BTreeSet<String>,
    repeats: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    hits_at_1_with(pred, gold, repeats, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    let mut tokens: Vec<&str> = stripped.split_whitespace().collect();
    let leading = tokens
        .iter()
        .take_while(|t| matches!(**t, "a" | "an" | "the"))
        .count();
    tokens.drain(..leading);
    tokens.join(" ")
}

pub fn exact_match<S: AsRef<str>>(pred: &str, gold: impl IntoIterator<Item = S>) -> bool {
    let p = normalize_answer(pred);
    !p.is_empty() && gold.into_iter().any(|g| normalize_answer(g.as_ref()) == p)
}

/// Answer strings for a value set: an entity's label when it has one, else
/// its id; a literal's text.
pub fn answer_strings(graph: &KnowledgeGraph, answers: &ValueSet) -> Vec<String> {
    answers
        .iter()
        .map(|v| match v {
            Value::Entity(e) => graph
                .label_of(e)
                .map(str::to_string)
                .unwrap_or_else(|| e.as_str().to_string()),
            Value::Literal(l) => l.text().to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prediction {
    Set(Vec<String>),
    Single(String),
}

impl Prediction {
    pub fn members(&self) -> BTreeSet<String> {
        match self {
            Prediction::Set(v) => v.iter().cloned().collect(),
            Prediction::Single(s) if s.is_empty() => BTreeSet::new(),
            Prediction::Single(s) => BTreeSet::from([s.clone()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub predicted: Prediction,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub id: String,
    pub f1: f64,
    pub hits_at_1: f64,
    pub exact_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub normalization: String,
    pub seed: u64,
    pub repeats: usize,
    pub scored: usize,
    /// Records excluded because their gold set is empty.
    pub skipped_empty_gold: usize,
    pub mean_f1: f64,
    pub mean_hits_at_1: f64,
    pub exact_match_rate: f64,
    pub records: Vec<RecordScore>,
}

/// Exact match for a record: a single prediction must equal some gold
/// answer; a set prediction must equal the gold set, both normalized.
fn record_exact_match(pred: &Prediction, gold: &[String]) -> bool {
    match pred {
        Prediction::Single(s) => exact_match(s, gold),
        Prediction::Set(v) => {
            let p: BTreeSet<String> = v.iter().map(|s| normalize_answer(s)).collect();
            let g: BTreeSet<String> = gold.iter().map(|s| normalize_answer(s)).collect();
            !p.is_empty() && !p.contains("") && p == g
        }
    }
}

/// Scores records in order with one seeded generator, so the report is a
/// function of (records, repeats, seed).
pub fn evaluate(records: &[EvalRecord], repeats: usize, seed: u64) -> Result<EvalReport, EvalError> {
    if repeats == 0 {
        return Err(EvalError::NoRepeats);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::new();
    let mut skipped = 0;
    for r in records {
        let gold: BTreeSet<String> = r.gold.iter().cloned().collect();
        if gold.is_empty() {
            skipped += 1;
            continue;
        }
        let pred = r.predicted.members();
        scores.push(RecordScore {
            id: r.id.clone(),
            f1: f1(&pred, &gold)?,
            hits_at_1: hits_at_1_with(&pred, &gold, repeats, &mut rng)?,
            exact_match: record_exact_match(&r.predicted, &r.gold),
        });
    }
    let n = scores.len();
    let mean = |f: &dyn Fn(&RecordScore) -> f64| {
        if n == 0 {
            0.0
        } else {
            scores.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(EvalReport {
        normalization: NORMALIZATION_VERSION.to_string(),
        seed,
        repeats,
        scored: n,
        skipped_empty_gold: skipped,
        mean_f1: mean(&|s| s.f1),
        mean_hits_at_1: mean(&|s| s.hits_at_1),
        exact_match_rate: mean(&|s| if s.exact_match { 1.0 } else { 0.0 }),
        records: scores,
    })
}

/// Joins predictions and gold answers by id, in gold order. Gold ids without
/// a prediction get an empty prediction.
pub fn join_records(
    predictions: &BTreeMap<String, Prediction>,
    gold: &[(String, Vec<String>)],
) -> Vec<EvalRecord> {
    gold.iter()
        .map(|(id, answers)| EvalRecord {
            id: id.clone(),
            predicted: predictions
                .get(id)
                .cloned()
                .unwrap_or(Prediction::Set(Vec::new())),
            gold: answers.clone(),
        })
        .collect()
}
