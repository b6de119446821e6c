//! Generators, oracles and fakes shared by the integration tests.
#![allow(dead_code)]

pub mod denote;
pub mod mock_planner;
pub mod oracle;
pub mod programs;
pub mod querygen;

use std::collections::BTreeSet;

use kg_agent::kg_store::{parse_graph, EntityId, GraphSchema, KnowledgeGraph, Literal, LiteralKind, Value};
use rand::seq::IndexedRandom;
use rand::Rng;

pub type Fact = (EntityId, String, Value);

/// Relations whose tails are entities.
pub const ENTITY_RELATIONS: [&str; 5] = ["r0", "r1", "r2", "r3", "r4"];
/// Relations with literal tails, each of a single kind.
pub const LITERAL_RELATIONS: [(&str, LiteralKind); 4] = [
    ("year_a", LiteralKind::Year),
    ("count_b", LiteralKind::Integer),
    ("score_c", LiteralKind::Decimal),
    ("date_d", LiteralKind::Date),
];
/// Tails drawn from two literal kinds, so comparisons can fail.
pub const MIXED_RELATION: &str = "mixed";
pub const WORDS: [&str; 8] = ["red", "blue", "united", "city", "real", "madrid", "club", "star"];
pub const TYPES: [&str; 3] = ["#T0", "#T1", "#T2"];

pub struct RandomGraph {
    /// Distinct facts in generation order.
    pub facts: Vec<Fact>,
    pub graph: KnowledgeGraph,
    /// Every entity appearing in a fact.
    pub entities: Vec<EntityId>,
    pub tsv: String,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphSpec {
    pub max_triples: usize,
    pub max_entities: usize,
    pub mixed_kinds: bool,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec {
            max_triples: 1000,
            max_entities: 60,
            mixed_kinds: true,
        }
    }
}

pub fn random_literal(rng: &mut impl Rng, kind: LiteralKind) -> Literal {
    let text = match kind {
        LiteralKind::Year => format!("{}", rng.random_range(1990..2000)),
        LiteralKind::Integer => format!("{}", rng.random_range(-5..6)),
        LiteralKind::Decimal => format!("{}", rng.random_range(-8..9) as f64 / 4.0),
        LiteralKind::Date => format!("2020-0{}-1{}", rng.random_range(1..4), rng.random_range(0..4)),
        LiteralKind::String => label(rng),
    };
    Literal::new(kind, &text).expect("generated literal is valid")
}

pub fn label(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=3);
    let mut words: Vec<String> = (0..n)
        .map(|_| {
            let w = *WORDS.choose(rng).unwrap();
            if rng.random_bool(0.3) {
                w.to_uppercase()
            } else {
                w.to_string()
            }
        })
        .collect();
    if rng.random_bool(0.2) {
        words[0].insert(0, '"');
    }
    if rng.random_bool(0.2) {
        words.last_mut().unwrap().push('.');
    }
    words.join(if rng.random_bool(0.2) { "  " } else { " " })
}

pub fn random_graph(rng: &mut impl Rng, spec: GraphSpec) -> RandomGraph {
    let n_entities = rng.random_range(3..=spec.max_entities.max(3));
    let pool: Vec<EntityId> = (0..n_entities)
        .map(|i| EntityId::new(&format!("#e{i}")).unwrap())
        .collect();
    let types: Vec<EntityId> = TYPES.iter().map(|t| EntityId::new(t).unwrap()).collect();
    let n_triples = rng.random_range(1..=spec.max_triples.max(1));
    let mut seen = BTreeSet::new();
    let mut facts = Vec::new();
    for _ in 0..n_triples {
        let head = pool.choose(rng).unwrap().clone();
        let roll = rng.random_range(0..100);
        let (relation, tail): (String, Value) = if roll < 45 {
            let r = *ENTITY_RELATIONS.choose(rng).unwrap();
            (r.to_string(), Value::Entity(pool.choose(rng).unwrap().clone()))
        } else if roll < 75 {
            let (r, kind) = *LITERAL_RELATIONS.choose(rng).unwrap();
            (r.to_string(), Value::Literal(random_literal(rng, kind)))
        } else if roll < 85 {
            ("type".to_string(), Value::Entity(types.choose(rng).unwrap().clone()))
        } else if roll < 95 || !spec.mixed_kinds {
            ("label".to_string(), Value::Literal(Literal::string(&label(rng))))
        } else {
            let kind = if rng.random_bool(0.5) {
                LiteralKind::Year
            } else {
                LiteralKind::Integer
            };
            (MIXED_RELATION.to_string(), Value::Literal(random_literal(rng, kind)))
        };
        if seen.insert((head.clone(), relation.clone(), tail.clone())) {
            facts.push((head, relation, tail));
        }
    }
    let tsv = to_tsv(&facts);
    let graph = parse_graph(&tsv, GraphSchema::default()).expect("generated graph parses");
    let mut entities = BTreeSet::new();
    for (h, _, t) in &facts {
        entities.insert(h.clone());
        if let Value::Entity(e) = t {
            entities.insert(e.clone());
        }
    }
    RandomGraph {
        facts,
        graph,
        entities: entities.into_iter().collect(),
        tsv,
    }
}

pub fn to_tsv(facts: &[Fact]) -> String {
    let mut out = String::new();
    for (h, r, t) in facts {
        out.push_str(&format!("{h}\t{r}\t{t}\n"));
    }
    out
}

/// Canonical text of each member, in the order given.
pub fn canon<'a>(values: impl IntoIterator<Item = &'a Value>) -> Vec<String> {
    values.into_iter().map(Value::canonical).collect()
}
