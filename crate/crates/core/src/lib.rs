//! Approximate symmetries (near-automorphisms) of undirected graphs.
//!
//! Two solvers search for a permutation `P` minimising the number of
//! adjacency disagreements between `A` and `PAPᵀ`:
//!
//! * [`qsa`]: Frank–Wolfe on the doubly stochastic relaxation of the
//!   fixed-point penalised trace objective, followed by projection onto the
//!   nearest permutation;
//! * [`afp`]: simulated annealing over transpositions with logarithmic
//!   cooling and a hard cap on the number of fixed points.
//!
//! Around them sit the random graph models used to benchmark them
//! ([`generators`]), a paired experiment harness with its statistics
//! ([`harness`], [`stats`]), and ingestion of weighted connectivity matrices
//! ([`brain`]).

pub mod afp;
pub mod assignment;
pub mod brain;
pub mod doubly_stochastic;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod init;
pub mod metrics;
pub mod perm;
pub mod qsa;
pub mod report;
pub mod stats;

pub use doubly_stochastic::DoublyStochastic;
pub use error::{Error, Result};
pub use graph::Graph;
pub use metrics::PenaltyVector;
pub use perm::Permutation;
pub use report::SolverReport;
