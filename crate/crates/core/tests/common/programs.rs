//! Random well-formed reasoning programs.

use kg_agent::kg_store::{EntityId, Literal, LiteralKind};
use kg_agent::program::{Argument, FunctionCall, ReasoningProgram};
use kg_agent::toolbox::{ParamType, ReturnType, ToolDescriptor, ToolName};
use rand::seq::IndexedRandom;
use rand::Rng;

const PIECES: [&str; 12] = [
    "a", "teams", "roster_from", " ", "\"", "\\", "\n", "\t", "é", "日本", "(x, y)", "=",
];

pub fn random_text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(0..5);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

pub fn random_entity(rng: &mut impl Rng) -> EntityId {
    let names = ["#CristianoRonaldo", "#m.0abc", "#e1", "#Q42", "#ñandú", "#a/b:c"];
    EntityId::new(names.choose(rng).unwrap()).unwrap()
}

pub fn random_any_literal(rng: &mut impl Rng) -> Literal {
    let (kind, text) = match rng.random_range(0..5) {
        0 => (LiteralKind::Year, format!("{:04}", rng.random_range(0..3000))),
        1 => (LiteralKind::Integer, rng.random_range(-1_000_000i64..1_000_000).to_string()),
        2 => (LiteralKind::Decimal, (rng.random_range(-10_000i64..10_000) as f64 / 7.0).to_string()),
        3 => (
            LiteralKind::Date,
            format!("{:04}-{:02}-{:02}", rng.random_range(1000..2100), rng.random_range(1..13), rng.random_range(1..29)),
        ),
        _ => (LiteralKind::String, random_text(rng)),
    };
    Literal::new(kind, &text).unwrap()
}

fn pick(rng: &mut impl Rng, vars: &[u32]) -> Option<u32> {
    vars.choose(rng).copied()
}

fn argument(rng: &mut impl Rng, ty: ParamType, sets: &[u32], relations: &[u32]) -> Option<Argument> {
    Some(match ty {
        ParamType::EntitySet => match pick(rng, sets) {
            Some(v) if rng.random_bool(0.8) => Argument::Var(v),
            _ => Argument::Entity(random_entity(rng)),
        },
        ParamType::Relation | ParamType::Mention => Argument::Str(random_text(rng)),
        ParamType::Operator => {
            let ops = ["=", ">", ">=", "<", "<=", "argmax", "argmin"];
            Argument::Str(ops.choose(rng).unwrap().to_string())
        }
        ParamType::ConstraintValue => match rng.random_range(0..4) {
            0 => Argument::Entity(random_entity(rng)),
            1 => Argument::Str(String::new()),
            _ => Argument::Literal(random_any_literal(rng)),
        },
        ParamType::TypeName => {
            if rng.random_bool(0.5) {
                Argument::Entity(random_entity(rng))
            } else {
                Argument::Str(random_text(rng))
            }
        }
        ParamType::SetList => {
            if sets.is_empty() {
                return None;
            }
            let n = rng.random_range(2..=4);
            Argument::SetList((0..n).map(|_| pick(rng, sets).unwrap()).collect())
        }
        ParamType::RelationSet => Argument::Var(pick(rng, relations)?),
        ParamType::Integer => Argument::Integer(rng.random_range(-50i64..50)),
    })
}

/// A program of up to `max_calls` calls; output numbers are unique but not
/// necessarily consecutive, and an `end` closes most programs.
pub fn random_program(rng: &mut impl Rng, max_calls: usize) -> ReasoningProgram {
    let n = rng.random_range(1..=max_calls);
    let mut calls = Vec::with_capacity(n + 1);
    let mut sets: Vec<u32> = Vec::new();
    let mut relations: Vec<u32> = Vec::new();
    let mut next_var = rng.random_range(0..3);
    let tools: Vec<ToolName> = ToolName::ALL.into_iter().filter(|t| *t != ToolName::End).collect();
    while calls.len() < n {
        let tool = *tools.choose(rng).unwrap();
        let desc = ToolDescriptor::for_tool(tool);
        let mut args = Vec::new();
        let mut ok = true;
        for p in &desc.params {
            if p.optional && rng.random_bool(0.5) {
                break;
            }
            match argument(rng, p.ty, &sets, &relations) {
                Some(a) => args.push(a),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let output = next_var;
        next_var += rng.random_range(1..3);
        calls.push(FunctionCall::new(output, tool, args).expect("generated call fits its signature"));
        match tool.returns() {
            r if r.is_entity_set() => sets.push(output),
            ReturnType::RelationSet => relations.push(output),
            _ => {}
        }
    }
    if rng.random_bool(0.8) {
        let src = pick(rng, &sets).map_or_else(|| Argument::Entity(random_entity(rng)), Argument::Var);
        calls.push(FunctionCall::new(next_var, ToolName::End, vec![src]).unwrap());
    }
    ReasoningProgram::new(calls).expect("generated program is well formed")
}
