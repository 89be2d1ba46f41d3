//! MCMC samplers over the segmented growth model.
//!
//! [`fixed`] holds the random-walk Metropolis–Hastings sampler for a known
//! segment count; [`auto`] adds reversible-jump birth and death moves that
//! treat the segment count as unknown. Both share one internal engine that
//! caches per-segment likelihood and prior terms, so a sweep costs one pass
//! over the data rather than one pass per proposal.

pub mod auto;
mod engine;
pub mod fixed;

use serde::{Deserialize, Serialize};

use crate::params::ModelState;

/// Which update produced a [`MoveOutcome`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    LocalSwap,
    GlobalSwap,
    Shift,
    ParamLambda,
    ParamK,
    ParamP,
    Dispersion,
    Birth,
    Death,
}

/// Which of a segment's parameters a single-site update targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Lambda,
    K,
    P,
}

impl ParamKind {
    pub(crate) fn move_kind(self) -> MoveKind {
        match self {
            ParamKind::Lambda => MoveKind::ParamLambda,
            ParamKind::K => MoveKind::ParamK,
            ParamKind::P => MoveKind::ParamP,
        }
    }
}

/// Diagnostic record of one Metropolis–Hastings step.
///
/// `proposed_state` is the state that was put forward, whether or not it was
/// accepted. For rejected trans-dimensional or structurally broken proposals
/// it may violate `ModelState` invariants; it is a record of what was tried,
/// not a state the chain ever occupied.
#[derive(Clone, Debug)]
pub struct MoveOutcome {
    pub proposed_state: ModelState,
    pub log_hastings: f64,
    pub accepted: bool,
    pub move_kind: MoveKind,
}
