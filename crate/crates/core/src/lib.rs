//! Bayesian persuasion without commitment.
//!
//! A sender who cannot commit to an experiment, but may run a random number
//! of private experiments and disclose verifiable results, can still attain
//! the full-commitment benchmark. This crate computes that benchmark and
//! builds auditable equilibria attaining it.
//!
//! ```
//! use persuasion::{bp::solve_bp, presets};
//!
//! let game = presets::product_adoption(0.5).unwrap();
//! let bp = solve_bp(&game).unwrap();
//! assert!((bp.sender_value - 2.0 / 3.0).abs() < 1e-9);
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bp;
pub mod decision;
pub mod error;
pub mod fixpoint;
pub mod lp;
pub mod model;
pub mod presets;
pub mod root;
pub mod transparent;
pub mod verify;

pub use bp::{find_punishing_action, solve_bp, BpSolution, PunishingAction};
pub use error::{Error, Result};
pub use model::{Belief, Experiment, GameSpec, SignalMultiset, TypeDistribution};
pub use verify::{verify, EquilibriumCertificate, VerificationReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/benchmark.md")]
    mod benchmark {}
    #[doc = include_str!("../../../book/src/disclosure.md")]
    mod disclosure {}
    #[doc = include_str!("../../../book/src/fixed_point.md")]
    mod fixed_point {}
    #[doc = include_str!("../../../book/src/transparent.md")]
    mod transparent {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/robustness.md")]
    mod robustness {}
}
