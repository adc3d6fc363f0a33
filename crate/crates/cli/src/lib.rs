//! Scenario-driven front end for the stratification-regularity toolkit:
//! schema parsing, check execution, and report rendering. The binary in
//! `main.rs` is a thin argument layer over this library so integration
//! tests can drive the same paths.

pub mod report;
pub mod runner;
pub mod scenario;
