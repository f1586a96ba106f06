//! Learning bounded-LTL task specifications from positive demonstrations.
//!
//! The library recovers three things from demonstrations of a task:
//! the logical structure of a bounded linear temporal logic formula, the
//! parameters of the atomic-proposition regions it talks about, and the
//! weights of the demonstrator's cost function. Demonstrations are assumed
//! to be feasible for the (unknown) formula and boundedly suboptimal for
//! the cost. The machinery is a family of mixed-integer encodings of the
//! KKT conditions and of formula satisfaction, wrapped in a
//! counterexample-guided falsification loop.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`ltl`]: formula AST, text syntax, finite-trace semantics (the oracle
//!   every boolean encoding is checked against).
//! - [`problem`]: demonstrations, AP region templates, costs, known
//!   constraints.
//! - [`milp`]: solver-agnostic mixed-integer model builder with big-M
//!   utilities; single choke point for all encodings.
//! - [`kkt`]: KKT condition blocks and fixed-structure parameter learning.
//! - [`structure`]: DAG representation of unknown formula structure,
//!   satisfaction matrices, spec-optimality, joint structure+parameter
//!   search.
//! - [`falsify`]: the counterexample-guided loops (known and unknown cost).
//! - [`queries`]: guaranteed-membership queries and volume extraction over
//!   the feasible parameter set.
//! - [`planner`]: forward problem (plan under a concrete formula), used to
//!   generate demonstrations and as the global-optimality oracle.

pub mod config;
pub mod experiments;
pub mod falsify;
pub mod kkt;
pub mod ltl;
pub mod milp;
pub(crate) mod par;
pub mod planner;
pub mod problem;
pub mod queries;
pub mod structure;

pub use config::Config;

/// Cap the library's worker pool (0 keeps the default). Call once, before
/// the first parallel operation.
pub fn par_limit(jobs: usize) {
    par::limit_jobs(jobs);
}
