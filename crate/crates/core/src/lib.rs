//! Patterns in simple random walks.
//!
//! Exact expected waiting times for collections of equal-length ±1 patterns
//! (overlap matrices solved in exact rational arithmetic, cross-checked by an
//! automaton-based absorbing chain), Monte Carlo counterparts with a
//! sliding-window detector, α-potential capacities with hitting-probability
//! bounds, and a filling-scheme sampler that turns i.i.d. discrete meanders
//! into Bessel-3 or co-meander paths.

pub mod capacity;
pub mod cli;
pub mod error;
pub mod exact;
pub mod filling;
pub mod lattice;
pub mod matching;
pub mod montecarlo;
pub mod stats;
pub mod waiting;

pub use error::{Error, Result};
pub use lattice::{LatticePath, PatternClass, PatternCollection, PatternKind};
pub use matching::MatchingMatrix;
pub use waiting::WaitReport;
