//! Identical parallel machine scheduling with serial batching and
//! non-anticipatory family setup times, minimising total weighted
//! completion time.
//!
//! The crate provides the domain model and evaluator, a dispatching-rule
//! constructive heuristic, two batch MIP formulations with a built-in
//! branch-and-bound, MIP-based neighbourhood searches, ILS/GRASP
//! matheuristics, an instance generator and a benchmark harness.

pub mod bench;
pub mod codec;
pub mod construct;
pub mod gantt;
pub mod instance;
pub mod instgen;
pub mod mip;
pub mod oracle;
pub mod precedence;
pub mod schedule;
pub mod search;
pub mod subsolve;
pub mod util;

#[doc(hidden)]
pub mod cli;

pub use instance::{Family, Instance, Job, Machine, Operation, Time};
pub use schedule::{evaluate, Batch, EvalResult, Schedule};
