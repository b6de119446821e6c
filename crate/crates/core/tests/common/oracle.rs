//! Linear-scan reference semantics for the extraction and logic tools. Every
//! query walks the whole fact list; nothing here touches the store indexes.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use kg_agent::kg_store::{EntityId, Literal, LiteralKind, Value};

use super::Fact;

/// The oracle only distinguishes success from failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fail;

pub type Out<T> = Result<T, Fail>;

pub struct Oracle<'a> {
    facts: &'a [Fact],
    label_relation: &'a str,
    type_relation: &'a str,
}

fn literal_order(a: &Literal, b: &Literal) -> Out<Ordering> {
    if a.kind() != b.kind() {
        return Err(Fail);
    }
    let (x, y) = (a.text(), b.text());
    Ok(match a.kind() {
        LiteralKind::Integer | LiteralKind::Year => {
            x.parse::<i64>().unwrap().cmp(&y.parse::<i64>().unwrap())
        }
        LiteralKind::Decimal => x.parse::<f64>().unwrap().total_cmp(&y.parse::<f64>().unwrap()),
        LiteralKind::Date => {
            let parts = |s: &str| -> Vec<u32> { s.split('-').map(|p| p.parse().unwrap()).collect() };
            parts(x).cmp(&parts(y))
        }
        LiteralKind::String => x.cmp(y),
    })
}

pub fn compare_op(op: &str, ord: Ordering) -> bool {
    match op {
        "=" => ord == Ordering::Equal,
        ">" => ord == Ordering::Greater,
        ">=" => ord != Ordering::Less,
        "<" => ord == Ordering::Less,
        "<=" => ord != Ordering::Greater,
        _ => unreachable!("not a comparison: {op}"),
    }
}

/// `tail op value`, failing where the comparison is undefined.
pub fn satisfies(tail: &Value, op: &str, value: &Value) -> Out<bool> {
    match (tail, value) {
        (Value::Literal(a), Value::Literal(b)) => Ok(compare_op(op, literal_order(a, b)?)),
        (Value::Entity(a), Value::Entity(b)) if op == "=" => Ok(a == b),
        _ => Err(Fail),
    }
}

pub fn value_order(a: &Value, b: &Value) -> Out<Ordering> {
    match (a, b) {
        (Value::Literal(x), Value::Literal(y)) => literal_order(x, y),
        _ => Err(Fail),
    }
}

fn normalize(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

fn tokens(text: &str) -> Vec<String> {
    normalize(text)
        .split(' ')
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

impl<'a> Oracle<'a> {
    pub fn new(facts: &'a [Fact]) -> Self {
        Oracle {
            facts,
            label_relation: "label",
            type_relation: "type",
        }
    }

    fn known(&self, e: &EntityId) -> bool {
        self.facts
            .iter()
            .any(|(h, _, t)| h == e || t.as_entity() == Some(e))
    }

    /// Entity members of `values`, failing on literals and unknown entities.
    fn members<'v>(&self, values: &'v [Value]) -> Out<Vec<&'v EntityId>> {
        values
            .iter()
            .map(|v| match v {
                Value::Entity(e) if self.known(e) => Ok(e),
                _ => Err(Fail),
            })
            .collect()
    }

    fn tails<'s>(&'s self, e: &'s EntityId, relation: &'s str) -> impl Iterator<Item = &'a Value> + 's {
        self.facts
            .iter()
            .filter(move |(h, r, _)| h == e && r == relation)
            .map(|(_, _, t)| t)
    }

    /// `(relation, outgoing)` pairs, sorted with outgoing first per name.
    pub fn get_relation(&self, values: &[Value]) -> Out<Vec<(String, bool)>> {
        if values.is_empty() {
            return Err(Fail);
        }
        let es = self.members(values)?;
        let mut found: BTreeSet<(String, u8)> = BTreeSet::new();
        for (h, r, t) in self.facts {
            if es.contains(&h) {
                found.insert((r.clone(), 0));
            }
            if let Value::Entity(te) = t {
                if es.contains(&te) {
                    found.insert((r.clone(), 1));
                }
            }
        }
        Ok(found.into_iter().map(|(r, d)| (r, d == 0)).collect())
    }

    pub fn get_tail_entity(&self, values: &[Value], relation: &str) -> Out<BTreeSet<String>> {
        let es = self.members(values)?;
        Ok(self
            .facts
            .iter()
            .filter(|(h, r, _)| r == relation && es.contains(&h))
            .map(|(_, _, t)| t.canonical())
            .collect())
    }

    pub fn get_head_entity(&self, values: &[Value], relation: &str) -> Out<BTreeSet<String>> {
        let es = self.members(values)?;
        Ok(self
            .facts
            .iter()
            .filter(|(_, r, t)| r == relation && t.as_entity().is_some_and(|te| es.contains(&te)))
            .map(|(h, _, _)| h.to_string())
            .collect())
    }

    pub fn get_entity_by_type(&self, ty: &EntityId) -> BTreeSet<String> {
        self.facts
            .iter()
            .filter(|(_, r, t)| r == self.type_relation && t.as_entity() == Some(ty))
            .map(|(h, _, _)| h.to_string())
            .collect()
    }

    /// `op` is a comparison or `argmax`/`argmin`; superlatives take no value.
    pub fn get_entity_by_constraint(
        &self,
        values: &[Value],
        relation: &str,
        op: &str,
        value: Option<&Value>,
    ) -> Out<BTreeSet<String>> {
        let es = self.members(values)?;
        match (op, value) {
            ("argmax" | "argmin", None) => {
                let want = if op == "argmax" { Ordering::Greater } else { Ordering::Less };
                let mut bests: Vec<(&EntityId, &Value)> = Vec::new();
                let mut kinds = BTreeSet::new();
                for e in &es {
                    let mut best: Option<&Value> = None;
                    for t in self.tails(e, relation) {
                        let Value::Literal(l) = t else { return Err(Fail) };
                        kinds.insert(l.kind().tag());
                        if kinds.len() > 1 {
                            return Err(Fail);
                        }
                        if best.is_none_or(|b| value_order(t, b).unwrap() == want) {
                            best = Some(t);
                        }
                    }
                    if let Some(b) = best {
                        bests.push((e, b));
                    }
                }
                let Some(&(_, mut top)) = bests.first() else {
                    return Ok(BTreeSet::new());
                };
                for &(_, b) in &bests {
                    if value_order(b, top)? == want {
                        top = b;
                    }
                }
                Ok(bests
                    .into_iter()
                    .filter(|(_, b)| value_order(b, top).unwrap() == Ordering::Equal)
                    .map(|(e, _)| e.to_string())
                    .collect())
            }
            ("=" | ">" | ">=" | "<" | "<=", Some(v)) => {
                let mut kept = BTreeSet::new();
                for e in &es {
                    let mut any = false;
                    for t in self.tails(e, relation) {
                        any |= satisfies(t, op, v)?;
                    }
                    if any {
                        kept.insert(e.to_string());
                    }
                }
                Ok(kept)
            }
            _ => Err(Fail),
        }
    }

    pub fn get_candidate_entity(&self, mention: &str) -> Out<BTreeSet<String>> {
        if mention.trim().is_empty() {
            return Err(Fail);
        }
        let labels = || {
            self.facts.iter().filter_map(|(h, r, t)| match t {
                Value::Literal(l) if r == self.label_relation && l.kind() == LiteralKind::String => {
                    Some((h, l.text()))
                }
                _ => None,
            })
        };
        let wanted = normalize(mention);
        let exact: BTreeSet<String> = labels()
            .filter(|(_, l)| normalize(l) == wanted)
            .map(|(h, _)| h.to_string())
            .collect();
        if !exact.is_empty() {
            return Ok(exact);
        }
        let needle = tokens(mention);
        if needle.is_empty() {
            return Ok(BTreeSet::new());
        }
        Ok(labels()
            .filter(|(_, l)| {
                let hay = tokens(l);
                let mut i = 0;
                for w in &hay {
                    if i < needle.len() && *w == needle[i] {
                        i += 1;
                    }
                }
                i == needle.len()
            })
            .map(|(h, _)| h.to_string())
            .collect())
    }

    pub fn count(values: &[Value]) -> i64 {
        values.iter().map(Value::canonical).collect::<BTreeSet<_>>().len() as i64
    }

    pub fn intersect(sets: &[Vec<Value>]) -> Out<BTreeSet<String>> {
        if sets.len() < 2 {
            return Err(Fail);
        }
        let canon = |s: &Vec<Value>| s.iter().map(Value::canonical).collect::<BTreeSet<_>>();
        let mut acc = canon(&sets[0]);
        for s in &sets[1..] {
            let c = canon(s);
            acc.retain(|x| c.contains(x));
        }
        Ok(acc)
    }

    pub fn union(sets: &[Vec<Value>]) -> Out<BTreeSet<String>> {
        if sets.len() < 2 {
            return Err(Fail);
        }
        Ok(sets.iter().flatten().map(Value::canonical).collect())
    }

    /// Every entity has some tail satisfying the comparison.
    pub fn judge(&self, values: &[Value], relation: &str, op: &str, value: &Value) -> Out<bool> {
        if !matches!(op, "=" | ">" | ">=" | "<" | "<=") {
            return Err(Fail);
        }
        let es = self.members(values)?;
        let mut all = true;
        for e in &es {
            let mut any = false;
            for t in self.tails(e, relation) {
                any |= satisfies(t, op, value)?;
            }
            all &= any;
        }
        Ok(all)
    }
}

use kg_agent::kg_store::Direction;
use kg_agent::toolbox::{ToolInput, ToolName, ToolValue, Toolbox, ValueSet};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_graph, random_literal, GraphSpec, RandomGraph, LITERAL_RELATIONS, TYPES};

const COMPARISONS: [&str; 5] = ["=", ">", ">=", "<", "<="];

#[derive(Debug, Default, Clone, Copy)]
pub struct SuiteStats {
    pub graphs: usize,
    pub triples: usize,
    pub calls: usize,
    pub errors: usize,
}

fn random_members(rng: &mut impl Rng, rg: &RandomGraph) -> Vec<Value> {
    let n = rng.random_range(0..=4);
    let mut out: Vec<Value> = (0..n)
        .map(|_| Value::Entity(rg.entities.choose(rng).unwrap().clone()))
        .collect();
    match rng.random_range(0..40) {
        0 => out.push(Value::Entity(EntityId::new("#ghost").unwrap())),
        1 => out.push(Value::Literal(Literal::string("loose"))),
        _ => {}
    }
    out
}

fn random_relation(rng: &mut impl Rng) -> String {
    let pool = [
        "r0", "r1", "r2", "r3", "r4", "year_a", "count_b", "score_c", "date_d", "mixed", "type", "label",
        "absent",
    ];
    pool.choose(rng).unwrap().to_string()
}

fn random_value(rng: &mut impl Rng, rg: &RandomGraph) -> Value {
    match rng.random_range(0..10) {
        0..=5 => {
            let (_, kind) = *LITERAL_RELATIONS.choose(rng).unwrap();
            Value::Literal(random_literal(rng, kind))
        }
        6 => Value::Literal(random_literal(rng, LiteralKind::Year)),
        7 | 8 => Value::Entity(rg.entities.choose(rng).unwrap().clone()),
        _ => Value::Literal(Literal::string("red")),
    }
}

fn set_of(values: &[Value]) -> ValueSet {
    values.iter().cloned().collect()
}

fn engine_set(v: ToolValue) -> Vec<String> {
    let ToolValue::Entities(s) = v else { panic!("expected an entity set, got {v:?}") };
    let items: Vec<&Value> = s.iter().collect();
    assert!(items.windows(2).all(|w| w[0] < w[1]), "value set not canonical: {s}");
    items.into_iter().map(Value::canonical).collect()
}

/// Panics with the failing call when the toolbox and the oracle disagree.
fn agree<T: PartialEq + std::fmt::Debug>(what: &str, engine: Result<T, String>, oracle: Out<T>, stats: &mut SuiteStats) {
    stats.calls += 1;
    match (engine, oracle) {
        (Ok(a), Ok(b)) => assert_eq!(a, b, "{what}"),
        (Err(_), Err(Fail)) => stats.errors += 1,
        (Ok(a), Err(Fail)) => panic!("{what}: toolbox returned {a:?}, oracle failed"),
        (Err(e), Ok(b)) => panic!("{what}: toolbox failed ({e}), oracle returned {b:?}"),
    }
}

pub fn check_graph(rg: &RandomGraph, rng: &mut impl Rng, calls: usize, stats: &mut SuiteStats) {
    let tb = Toolbox::default();
    let o = Oracle::new(&rg.facts);
    let g = &rg.graph;
    assert_eq!(g.triple_count(), rg.facts.len());
    let run = |tool, inputs: Vec<ToolInput>| tb.dispatch(g, tool, inputs, "q").map_err(|e| e.to_string());
    let as_set = |r: Result<ToolValue, String>| r.map(|v| engine_set(v).into_iter().collect::<BTreeSet<_>>());

    for _ in 0..calls {
        let es = random_members(rng, rg);
        let relation = random_relation(rng);
        let what = format!("es={} relation={relation}", set_of(&es));
        match rng.random_range(0..10) {
            0 => {
                let got = run(ToolName::GetRelation, vec![ToolInput::Entities(set_of(&es))]).map(|v| {
                    let ToolValue::Relations(rs) = v else { panic!("{v:?}") };
                    rs.iter()
                        .map(|d| (d.relation.clone(), d.direction == Direction::Out))
                        .collect::<Vec<_>>()
                });
                agree(&format!("get_relation {what}"), got, o.get_relation(&es), stats);
            }
            1 => {
                let got = run(
                    ToolName::GetTailEntity,
                    vec![ToolInput::Entities(set_of(&es)), ToolInput::Relation(relation.clone())],
                );
                agree(&format!("get_tail_entity {what}"), as_set(got), o.get_tail_entity(&es, &relation), stats);
            }
            2 => {
                let got = run(
                    ToolName::GetHeadEntity,
                    vec![ToolInput::Entities(set_of(&es)), ToolInput::Relation(relation.clone())],
                );
                agree(&format!("get_head_entity {what}"), as_set(got), o.get_head_entity(&es, &relation), stats);
            }
            3 => {
                let ty = if rng.random_bool(0.9) { *TYPES.choose(rng).unwrap() } else { "#T9" };
                let ty = EntityId::new(ty).unwrap();
                let got = run(ToolName::GetEntityByType, vec![ToolInput::Type(ty.clone())]);
                agree(&format!("get_entity_by_type {ty}"), as_set(got), Ok(o.get_entity_by_type(&ty)), stats);
            }
            4 | 5 => {
                let superlative = rng.random_bool(0.35);
                let op = if superlative {
                    *["argmax", "argmin"].choose(rng).unwrap()
                } else {
                    *COMPARISONS.choose(rng).unwrap()
                };
                // occasionally pair an operator with the wrong value shape
                let value = if superlative ^ rng.random_bool(0.05) {
                    None
                } else {
                    Some(random_value(rng, rg))
                };
                let got = run(
                    ToolName::GetEntityByConstraint,
                    vec![
                        ToolInput::Entities(set_of(&es)),
                        ToolInput::Relation(relation.clone()),
                        ToolInput::Operator(op.to_string()),
                        ToolInput::Value(value.clone()),
                    ],
                );
                let expected = o.get_entity_by_constraint(&es, &relation, op, value.as_ref());
                agree(&format!("get_entity_by_constraint {what} {op} {value:?}"), as_set(got), expected, stats);
            }
            6 => {
                let mention = match rng.random_range(0..6) {
                    0 => "  ".to_string(),
                    1 => "nothing here".to_string(),
                    _ => super::label(rng),
                };
                let got = run(ToolName::GetCandidateEntity, vec![ToolInput::Mention(mention.clone())]);
                agree(&format!("get_candidate_entity {mention:?}"), as_set(got), o.get_candidate_entity(&mention), stats);
            }
            7 => {
                let got = run(ToolName::Count, vec![ToolInput::Entities(set_of(&es))]).map(|v| match v {
                    ToolValue::Integer(n) => n,
                    other => panic!("{other:?}"),
                });
                agree(&format!("count {what}"), got, Ok(Oracle::count(&es)), stats);
            }
            8 => {
                let n = rng.random_range(1..=4);
                let sets: Vec<Vec<Value>> = (0..n).map(|_| random_members(rng, rg)).collect();
                let list = || ToolInput::SetList(sets.iter().map(|s| set_of(s)).collect());
                let got = as_set(run(ToolName::Intersect, vec![list()]));
                agree(&format!("intersect {sets:?}"), got, Oracle::intersect(&sets), stats);
                let got = as_set(run(ToolName::Union, vec![list()]));
                agree(&format!("union {sets:?}"), got, Oracle::union(&sets), stats);
            }
            _ => {
                let op = if rng.random_bool(0.05) { "argmax" } else { *COMPARISONS.choose(rng).unwrap() };
                let value = random_value(rng, rg);
                let got = run(
                    ToolName::Judge,
                    vec![
                        ToolInput::Entities(set_of(&es)),
                        ToolInput::Relation(relation.clone()),
                        ToolInput::Operator(op.to_string()),
                        ToolInput::Value(Some(value.clone())),
                    ],
                )
                .map(|v| match v {
                    ToolValue::Boolean(b) => b,
                    other => panic!("{other:?}"),
                });
                agree(&format!("judge {what} {op} {value}"), got, o.judge(&es, &relation, op, &value), stats);
            }
        }
    }
}

/// Runs the toolbox against the oracle on `graphs` random graphs.
pub fn run_suite(seed: u64, graphs: usize, calls_per_graph: usize, spec: GraphSpec) -> SuiteStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SuiteStats::default();
    for _ in 0..graphs {
        let rg = random_graph(&mut rng, spec);
        stats.graphs += 1;
        stats.triples += rg.facts.len();
        check_graph(&rg, &mut rng, calls_per_graph, &mut stats);
    }
    stats
}
