//! Limit-cycle structure of conjunctive and disjunctive Boolean networks,
//! predicted from the dependency graph and checked by exhaustive simulation.

pub mod cycles;
pub mod graph;
pub mod matrix;
pub mod network;
pub mod oracle;
pub mod report;
