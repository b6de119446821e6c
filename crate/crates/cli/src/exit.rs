//! Process exit codes. These values are stable.

use std::fmt;

use kg_agent::agent::Termination;

pub const EXIT_OK: u8 = 0;
/// Writing an output file failed.
pub const EXIT_IO: u8 = 1;
/// Bad flags, config, or missing files.
pub const EXIT_USAGE: u8 = 2;
/// Malformed graph, program, sample, or prediction input.
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_PLANNER: u8 = 4;
pub const EXIT_EXECUTION: u8 = 5;
pub const EXIT_STEP_BUDGET: u8 = 6;

pub fn for_termination(t: Termination) -> u8 {
    match t {
        Termination::Ended => EXIT_OK,
        Termination::PlannerError => EXIT_PLANNER,
        Termination::ExecutionError => EXIT_EXECUTION,
        Termination::StepBudget => EXIT_STEP_BUDGET,
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub trait WithCode<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}
