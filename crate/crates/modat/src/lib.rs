//! Compiler toolchain for the modAT4rMS modeling language.
//!
//! The pipeline mirrors how the pieces are used from the `modat-lc` CLI:
//!
//! 1. [`parser::parse_model`] turns `.modat` text into a resolved [`model::Model`]
//!    (or positioned diagnostics),
//! 2. [`validate::validate`] enforces the structural and behavioral
//!    well-formedness rules (E001..E008, W001/W002),
//! 3. [`variant`] computes lock statuses, interface diffs, and performs the
//!    base-block change (rebase),
//! 4. [`sim`] executes behavior models under cyclic PLC scan semantics against
//!    scripted [`scenario::Scenario`]s,
//! 5. [`codegen`] emits IEC 61131-3 Structured Text; [`st`] holds the
//!    test-oriented ST-subset parser and evaluator used for differential
//!    checking against the simulator.

pub mod behavior;
pub mod codegen;
pub mod diag;
pub mod formatter;
pub mod lexer;
pub mod model;
pub mod modelgen;
pub mod parser;
pub mod scenario;
pub mod sim;
pub mod span;
pub mod st;
pub mod validate;
pub mod variant;

/// DSL grammar version emitted in the canonical header comment.
pub const DSL_VERSION: &str = "v1";
