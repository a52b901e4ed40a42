// SPDX-License-Identifier: Apache-2.0
use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants carry the offending abscissa whenever one exists so callers can
/// report where a formula broke down.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("t = {t} lies outside [0, {t_end}]")]
    Domain { t: f64, t_end: f64 },

    #[error("invalid derivator: {}", .0.join("; "))]
    InvalidDerivator(Vec<String>),

    #[error("{0}")]
    Contract(String),

    #[error("non-finite integrand value at t = {t}")]
    NonFinite { t: f64 },

    #[error("g-derivative undefined at t = {t}: {reason}")]
    DerivativeUndefined { t: f64, reason: String },

    #[error("coefficient not regressive at jump t = {t}: |1 + p(t)Δg(t)| = {modulus:e}")]
    NotRegressive { t: f64, modulus: f64 },

    #[error("1 - PΔg + QΔg² vanishes at jump t = {t}")]
    CondPQ { t: f64 },

    #[error("precondition violated at t = {t}: {what}")]
    Precondition { t: f64, what: String },

    #[error("singular system: {0}")]
    Singular(String),
}

impl Error {
    /// True for violations of a mathematical precondition (regressivity,
    /// nondegeneracy, singular systems) as opposed to numerical failures.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::NotRegressive { .. }
                | Error::CondPQ { .. }
                | Error::Precondition { .. }
                | Error::Singular(_)
                | Error::InvalidDerivator(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
