//! Exponential-family random graph models for bipartite networks, with
//! node-centric and edge-centric homophily statistics.
//!
//! - [`graph`]: two-mode network storage, two-path counts, projections.
//! - [`attrs`]: nodal attribute tables.
//! - [`terms`]: model terms, statistics and exact change statistics.
//! - [`formula`]: textual model formulas.
//! - [`sampler`]: Metropolis–Hastings simulation.
//! - [`estimate`]: pseudo-likelihood, Monte-Carlo MLE, profile likelihood.
//! - [`oracle`]: exhaustive enumeration on tiny networks.
//! - [`io`]: edge-list and attribute file formats.

pub mod attrs;
pub mod error;
pub mod estimate;
pub mod formula;
pub mod graph;
pub mod hull;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod parallel;
pub mod sampler;
pub mod terms;

pub use attrs::{AttributeTable, Attributes};
pub use graph::{BipartiteNetwork, Mode, WeightedProjection};
pub use parallel::Execution;
pub use terms::{Exponent, ExponentKind, Model, ModelSpec, ModelTerm, TermKind};
