//! Straight-line reasoning programs: one `vN = tool(arg, ...)` call per line.
//!
//! ```text
//! program   := { call NEWLINE } ;
//! call      := var "=" tool "(" [ arg { "," arg } ] ")" ;
//! var       := "v" digits ;
//! arg       := var | entity | string | literal | integer | setlist ;
//! entity    := "#" token ;
//! literal   := string "^^" kind ;
//! setlist   := "[" var { "," var } "]" ;
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::kg_store::{write_quoted, EntityId, Literal};
use crate::lexer::{tokenize, Token, TokenKind};
use crate::toolbox::{ParamType, ToolDescriptor, ToolName, ToolRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Argument {
    Var(u32),
    Entity(EntityId),
    /// Relation names, operators, mentions and plain values.
    Str(String),
    Literal(Literal),
    Integer(i64),
    SetList(Vec<u32>),
}

impl Argument {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Argument::Var(_) => "variable",
            Argument::Entity(_) => "entity",
            Argument::Str(_) => "string",
            Argument::Literal(_) => "literal",
            Argument::Integer(_) => "integer",
            Argument::SetList(_) => "set list",
        }
    }

    fn fits(&self, ty: ParamType) -> bool {
        use Argument as A;
        match ty {
            ParamType::EntitySet => matches!(self, A::Var(_) | A::Entity(_)),
            ParamType::Relation | ParamType::Operator | ParamType::Mention => {
                matches!(self, A::Str(_))
            }
            ParamType::ConstraintValue => matches!(self, A::Literal(_) | A::Entity(_) | A::Str(_)),
            ParamType::TypeName => matches!(self, A::Entity(_) | A::Str(_)),
            ParamType::SetList => matches!(self, A::SetList(_)),
            ParamType::RelationSet => matches!(self, A::Var(_)),
            ParamType::Integer => matches!(self, A::Integer(_)),
        }
    }
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Argument::Var(n) => write!(f, "v{n}"),
            Argument::Entity(e) => e.fmt(f),
            Argument::Str(s) => write_quoted(f, s),
            Argument::Literal(l) => l.fmt(f),
            Argument::Integer(i) => i.fmt(f),
            Argument::SetList(vars) => {
                f.write_str("[")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "v{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionCall {
    pub output: u32,
    pub tool: ToolName,
    pub args: Vec<Argument>,
}

impl FunctionCall {
    /// Builds a call, checking arity and argument kinds against the tool's
    /// descriptor.
    pub fn new(output: u32, tool: ToolName, args: Vec<Argument>) -> Result<Self, CallError> {
        check_signature(&ToolDescriptor::for_tool(tool), &args)?;
        Ok(FunctionCall { output, tool, args })
    }

    pub fn is_end(&self) -> bool {
        self.tool == ToolName::End
    }

    /// Variables read by this call, in argument order.
    pub fn var_refs(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for arg in &self.args {
            match arg {
                Argument::Var(v) => out.push(*v),
                Argument::SetList(vs) => out.extend(vs),
                _ => {}
            }
        }
        out
    }

    /// Canonical text, e.g. `v1 = get_tail_entity(#CristianoRonaldo, "teams")`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FunctionCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{} = {}(", self.output, self.tool)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            arg.fmt(f)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CallError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("tool `{0}` is not enabled")]
    DisabledTool(ToolName),
    #[error("{tool} takes {} argument(s), found {found}", arity_range(*.min, *.max))]
    Arity {
        tool: ToolName,
        min: usize,
        max: usize,
        found: usize,
    },
    #[error("argument {position} of {tool} must be {}, found {found}", .expected.label())]
    ArgumentKind {
        tool: ToolName,
        /// 1-based.
        position: usize,
        expected: ParamType,
        found: &'static str,
    },
}

fn arity_range(min: usize, max: usize) -> String {
    if min == max {
        min.to_string()
    } else {
        format!("{min} to {max}")
    }
}

fn check_signature(desc: &ToolDescriptor, args: &[Argument]) -> Result<(), CallError> {
    if args.len() < desc.min_arity() || args.len() > desc.max_arity() {
        return Err(CallError::Arity {
            tool: desc.name,
            min: desc.min_arity(),
            max: desc.max_arity(),
            found: args.len(),
        });
    }
    for (i, (arg, param)) in args.iter().zip(&desc.params).enumerate() {
        if !arg.fits(param.ty) {
            return Err(CallError::ArgumentKind {
                tool: desc.name,
                position: i + 1,
                expected: param.ty,
                found: arg.kind_name(),
            });
        }
    }
    Ok(())
}

/// Parses one call against the full tool set.
pub fn parse_call(text: &str) -> Result<FunctionCall, CallError> {
    let (output, tool, args) = parse_surface(text)?;
    let tool: ToolName = tool.parse().map_err(|_| CallError::UnknownTool(tool))?;
    FunctionCall::new(output, tool, args)
}

/// Parses one call, also rejecting tools missing from `registry`.
pub fn parse_call_in(text: &str, registry: &ToolRegistry) -> Result<FunctionCall, CallError> {
    let call = parse_call(text)?;
    if registry.descriptor(call.tool).is_none() {
        return Err(CallError::DisabledTool(call.tool));
    }
    Ok(call)
}

struct Cursor {
    tokens: std::vec::IntoIter<Token>,
    end_column: usize,
}

impl Cursor {
    fn next(&mut self, expected: &str) -> Result<Token, CallError> {
        self.tokens.next().ok_or_else(|| CallError::Syntax {
            column: self.end_column,
            message: format!("expected {expected}, found end of input"),
        })
    }
}

fn unexpected(token: &Token, expected: &str) -> CallError {
    CallError::Syntax {
        column: token.column,
        message: format!("expected {expected}, found {}", token.kind.describe()),
    }
}

fn parse_surface(text: &str) -> Result<(u32, String, Vec<Argument>), CallError> {
    let tokens = tokenize(text).map_err(|e| CallError::Syntax {
        column: e.column,
        message: e.message,
    })?;
    let mut cur = Cursor {
        tokens: tokens.into_iter(),
        end_column: text.chars().count() + 1,
    };

    let t = cur.next("an output variable")?;
    let TokenKind::Var(output) = t.kind else {
        return Err(unexpected(&t, "an output variable like `v0`"));
    };
    let t = cur.next("`=`")?;
    if t.kind != TokenKind::Equals {
        return Err(unexpected(&t, "`=`"));
    }
    let t = cur.next("a tool name")?;
    let TokenKind::Ident(tool) = t.kind else {
        return Err(unexpected(&t, "a tool name"));
    };
    let t = cur.next("`(`")?;
    if t.kind != TokenKind::LParen {
        return Err(unexpected(&t, "`(`"));
    }

    let mut args = Vec::new();
    let t = cur.next("an argument or `)`")?;
    if t.kind != TokenKind::RParen {
        let mut t = t;
        loop {
            args.push(parse_argument(t, &mut cur)?);
            let sep = cur.next("`,` or `)`")?;
            match sep.kind {
                TokenKind::Comma => t = cur.next("an argument")?,
                TokenKind::RParen => break,
                _ => return Err(unexpected(&sep, "`,` or `)`")),
            }
        }
    }
    if let Some(extra) = cur.tokens.next() {
        return Err(unexpected(&extra, "end of call"));
    }
    Ok((output, tool, args))
}

fn parse_argument(t: Token, cur: &mut Cursor) -> Result<Argument, CallError> {
    Ok(match t.kind {
        TokenKind::Var(v) => Argument::Var(v),
        TokenKind::Entity(e) => Argument::Entity(e),
        TokenKind::Str(s) => Argument::Str(s),
        TokenKind::Literal(l) => Argument::Literal(l),
        TokenKind::Integer(i) => Argument::Integer(i),
        TokenKind::LBracket => {
            let mut vars = Vec::new();
            loop {
                let v = cur.next("a variable")?;
                let TokenKind::Var(n) = v.kind else {
                    return Err(unexpected(&v, "a variable"));
                };
                vars.push(n);
                let sep = cur.next("`,` or `]`")?;
                match sep.kind {
                    TokenKind::Comma => continue,
                    TokenKind::RBracket => break,
                    _ => return Err(unexpected(&sep, "`,` or `]`")),
                }
            }
            Argument::SetList(vars)
        }
        _ => return Err(unexpected(&t, "an argument")),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramIssue {
    #[error(transparent)]
    Call(#[from] CallError),
    #[error("`v{0}` is used before it is bound")]
    Unbound(u32),
    #[error("`v{0}` is already bound")]
    Rebound(u32),
    #[error("`end` must be the last call")]
    EndNotLast,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {issue}")]
pub struct LineIssue {
    /// 1-based text line, or call position for programs built from calls.
    pub line: usize,
    pub issue: ProgramIssue,
}

/// Every problem found in a program, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ProgramError {
    pub issues: Vec<LineIssue>,
}

/// A validated straight-line program: single assignment, references only to
/// earlier outputs, and `end` only as the final call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ReasoningProgram {
    calls: Vec<FunctionCall>,
}

impl ReasoningProgram {
    pub fn new(calls: Vec<FunctionCall>) -> Result<Self, ProgramError> {
        let lines: Vec<usize> = (1..=calls.len()).collect();
        let issues = validate(&calls, &lines);
        if issues.is_empty() {
            Ok(ReasoningProgram { calls })
        } else {
            Err(ProgramError { issues })
        }
    }

    pub fn calls(&self) -> &[FunctionCall] {
        &self.calls
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn into_calls(self) -> Vec<FunctionCall> {
        self.calls
    }

    /// Whether the program finishes with an `end` call.
    pub fn is_terminated(&self) -> bool {
        self.calls.last().is_some_and(FunctionCall::is_end)
    }

    /// One canonical call per line, each followed by a newline.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for call in &self.calls {
            out.push_str(&call.canonical());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ReasoningProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn validate(calls: &[FunctionCall], lines: &[usize]) -> Vec<LineIssue> {
    let mut issues = Vec::new();
    let mut bound = BTreeSet::new();
    for (i, call) in calls.iter().enumerate() {
        let line = lines[i];
        let mut reported = BTreeSet::new();
        for v in call.var_refs() {
            if !bound.contains(&v) && reported.insert(v) {
                issues.push(LineIssue {
                    line,
                    issue: ProgramIssue::Unbound(v),
                });
            }
        }
        if !bound.insert(call.output) {
            issues.push(LineIssue {
                line,
                issue: ProgramIssue::Rebound(call.output),
            });
        }
        if call.is_end() && i + 1 != calls.len() {
            issues.push(LineIssue {
                line,
                issue: ProgramIssue::EndNotLast,
            });
        }
    }
    issues
}

/// Parses and validates a program. Blank lines are skipped; every parse and
/// validation problem is reported.
pub fn parse_program(text: &str) -> Result<ReasoningProgram, ProgramError> {
    let mut calls = Vec::new();
    let mut lines = Vec::new();
    let mut issues = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_call(line) {
            Ok(call) => {
                calls.push(call);
                lines.push(idx + 1);
            }
            Err(e) => issues.push(LineIssue {
                line: idx + 1,
                issue: e.into(),
            }),
        }
    }
    issues.extend(validate(&calls, &lines));
    if issues.is_empty() {
        Ok(ReasoningProgram { calls })
    } else {
        issues.sort_by_key(|i| i.line);
        Err(ProgramError { issues })
    }
}

pub fn serialize_call(call: &FunctionCall) -> String {
    call.canonical()
}

pub fn serialize_program(program: &ReasoningProgram) -> String {
    program.serialize()
}
