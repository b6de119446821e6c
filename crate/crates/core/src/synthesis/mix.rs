use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pairs::InstructionPair;

#[derive(Debug, Clone, PartialEq)]
pub struct MixSource {
    pub name: String,
    pub weight: f64,
    pub pairs: Vec<InstructionPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub source: String,
    pub quota: usize,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("no sources to mix")]
    NoSources,
    #[error("source `{name}` has weight {weight}; weights must be positive and finite")]
    InvalidWeight { name: String, weight: f64 },
    #[error("not enough trajectories: {}", .0.iter().map(|s| format!("{} needs {} of {}", s.source, s.quota, s.available)).collect::<Vec<_>>().join(", "))]
    Shortfall(Vec<Shortfall>),
}

/// Splits `total` in proportion to `weights` by largest remainder; equal
/// remainders go to the earlier weight.
pub fn quotas(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceReport {
    pub source: String,
    pub quota: usize,
    pub available: usize,
    pub trajectories: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedCorpus {
    pub pairs: Vec<InstructionPair>,
    pub report: Vec<SourceReport>,
}

/// Pairs grouped by sample id, in order of first appearance.
fn trajectories(pairs: &[InstructionPair]) -> Vec<Vec<&InstructionPair>> {
    let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<&InstructionPair>> = Vec::new();
    for p in pairs {
        let i = *slot.entry(p.id.as_str()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(p);
    }
    groups
}

/// Samples whole trajectories from each source, without replacement, so that
/// the trajectory counts follow the weights and sum to `total`. Output keeps
/// source order, and source file order within a source.
pub fn mix_corpus(sources: &[MixSource], total: usize, seed: u64) -> Result<MixedCorpus, MixError> {
    if sources.is_empty() {
        return Err(MixError::NoSources);
    }
    for s in sources {
        if !(s.weight.is_finite() && s.weight > 0.0) {
            return Err(MixError::InvalidWeight {
                name: s.name.clone(),
                weight: s.weight,
            });
        }
    }
    let weights: Vec<f64> = sources.iter().map(|s| s.weight).collect();
    let quota = quotas(&weights, total);
    let grouped: Vec<Vec<Vec<&InstructionPair>>> = sources.iter().map(|s| trajectories(&s.pairs)).collect();

    let shortfalls: Vec<Shortfall> = sources
        .iter()
        .zip(&quota)
        .zip(&grouped)
        .filter(|((_, &q), g)| q > g.len())
        .map(|((s, &q), g)| Shortfall {
            source: s.name.clone(),
            quota: q,
            available: g.len(),
        })
        .collect();
    if !shortfalls.is_empty() {
        return Err(MixError::Shortfall(shortfalls));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut report = Vec::new();
    for ((source, &q), groups) in sources.iter().zip(&quota).zip(&grouped) {
        let mut picked = rand::seq::index::sample(&mut rng, groups.len(), q).into_vec();
        picked.sort_unstable();
        let before = pairs.len();
        for i in picked {
            pairs.extend(groups[i].iter().map(|p| (*p).clone()));
        }
        report.push(SourceReport {
            source: source.name.clone(),
            quota: q,
            available: groups.len(),
            trajectories: q,
            pairs: pairs.len() - before,
        });
    }
    Ok(MixedCorpus { pairs, report })
}
