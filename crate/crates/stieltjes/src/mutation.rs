// SPDX-License-Identifier: Apache-2.0
//! Deliberate fault injection used to check that the verification suites
//! actually detect broken formulas. Faults are scoped to the current thread.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Flip the sign of the integrand defining `c1` in the particular solution.
    DefC1SignFlip,
    /// Drop the `Δg²` term from the g-Wronskian.
    DropWronskianDg2,
    /// Omit the `ln(1 + pΔg)` jump terms of the g-exponential.
    OmitExpJumpLog,
}

impl Mutation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "c1-sign" => Some(Mutation::DefC1SignFlip),
            "wronskian-dg2" => Some(Mutation::DropWronskianDg2),
            "exp-jump-log" => Some(Mutation::OmitExpJumpLog),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DefC1SignFlip => "c1-sign",
            Mutation::DropWronskianDg2 => "wronskian-dg2",
            Mutation::OmitExpJumpLog => "exp-jump-log",
        }
    }
}

thread_local! {
    static ACTIVE: Cell<Option<Mutation>> = const { Cell::new(None) };
}

/// Keeps a mutation active until dropped.
pub struct Guard {
    previous: Option<Mutation>,
}

impl Drop for Guard {
    fn drop(&mut self) {
        ACTIVE.with(|a| a.set(self.previous));
    }
}

pub fn inject(m: Mutation) -> Guard {
    let previous = ACTIVE.with(|a| a.replace(Some(m)));
    Guard { previous }
}

pub fn active(m: Mutation) -> bool {
    ACTIVE.with(|a| a.get() == Some(m))
}
