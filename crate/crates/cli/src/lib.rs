//! Configuration, serialisation and subcommands of the `qumem` tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod csv;
pub mod report;
pub mod schedule;
pub mod units;

/// Example configuration: four cells, crossing anchored at 220 pH, 1 kΩ OFF junction.
pub const SEED_CONFIG: &str = include_str!("../../../configs/four_cell.json");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qumem_core::Error),
}

impl CliError {
    /// 1 for anything the user can fix in the input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) => 2,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }
}
