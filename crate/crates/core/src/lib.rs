//! Monoidal e-graphs as e-hypergraphs with extended-interface cospans,
//! convex double-pushout rewriting, the semilattice structural rules, term
//! interpretation, normalization, extraction, and import of classical
//! e-graphs with rewrite replay.

pub mod cospan;
pub mod egraph;
pub mod engine;
pub mod graph;
pub mod io;
pub mod rewrite;
pub mod signature;
pub mod term;

use num_rational::Rational64;

pub use engine::CostModel;

/// Costs as exact rationals.
pub type RationalCostModel = CostModel<Rational64>;
/// Costs as floating point numbers.
pub type FloatCostModel = CostModel<f64>;
