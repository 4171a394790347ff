//! Numerical-aggregation question answering over GEDCOM family trees.
//!
//! The pipeline runs [`gedcom`] parsing, [`graph`] assembly, [`tabulator`]
//! materialization into one of six relational designs, [`qgen`] question
//! synthesis, and [`qa`] answering on top of the [`aggcore`] arithmetic.
//! [`eval`] scores predictions.

pub mod aggcore;
pub mod eval;
pub mod gedcom;
pub mod graph;
pub mod qa;
pub mod qgen;
pub mod tabulator;
