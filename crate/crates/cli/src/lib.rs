//! Library surface of the scenario runner: configuration schema, scenario
//! resolution and run orchestration.  The binary in `main.rs` is a thin
//! argument-parsing wrapper so every path is exercisable from tests.

pub mod config;
pub mod exec;
pub mod scenario;

/// Process-level failures, each mapped to a documented exit code:
/// `2` configuration, `3` hypothesis gate, `4` run/verification abort.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Hypothesis(String),
    Abort(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Abort(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Hypothesis(m) => write!(f, "hypothesis gate: {m}"),
            CliError::Abort(m) => write!(f, "run aborted: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
