// SPDX-License-Identifier: Apache-2.0
//! CLI failures and their exit codes.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// At least one verification suite exceeded its tolerance.
    VerifyFailed(usize),
    Config(String),
    Numeric(String),
    Precondition(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Precondition(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::VerifyFailed(n) => write!(f, "{n} verification suite(s) failed"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Precondition(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<stieltjes::Error> for CliError {
    fn from(e: stieltjes::Error) -> Self {
        use stieltjes::Error as E;
        match e {
            E::InvalidDerivator(_) | E::Contract(_) => CliError::Config(e.to_string()),
            E::Domain { .. } | E::NonFinite { .. } | E::DerivativeUndefined { .. } => CliError::Numeric(e.to_string()),
            E::NotRegressive { .. } | E::CondPQ { .. } | E::Precondition { .. } | E::Singular(_) => {
                CliError::Precondition(e.to_string())
            }
        }
    }
}
