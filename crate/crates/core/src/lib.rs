//! Budget-aware, coverage-guided data selection.
//!
//! * [`dataset`]: embeddings, metadata, warm-up split, budget ledger.
//! * [`cluster`]: diagonal GMM / k-means regions over the selection pool.
//! * [`select`]: difficulty + diversity scoring, quota allocation, top-q selection.
//! * [`coverage`]: coverage radii, farthest-first traversal, exact k-center, certificates.
//! * [`theory`]: two-stage vs direct distillation bounds and their advantage decomposition.
//! * [`distillsim`]: a small synthetic simulator of teacher -> assistant -> student distillation.
//! * [`cli`]: the `corebudget` command-line driver.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod coverage;
pub mod dataset;
pub mod distillsim;
mod error;
pub mod rng;
pub mod select;
pub mod theory;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
