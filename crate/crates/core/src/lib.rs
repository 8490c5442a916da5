//! Core library for a trait-composition language with design-by-contract
//! verification.
//!
//! A program is a set of trait/class definitions; traits carry methods with
//! pre/postcondition contracts. The pipeline parses source text, checks
//! well-formedness, type-checks and verifies each method body against its
//! contract, flattens trait expressions into complete bodies while checking
//! contract compatibility of colliding methods, detects specification
//! circularity, and can execute flattened programs with a small-step
//! interpreter.

pub mod flatten;
pub mod logic;
pub mod report;
pub mod runtime;
pub mod syntax;
pub mod testkit;
pub mod typing;

pub use logic::{Formula, Prover, Spec, Term, VerificationResult};
pub use syntax::{parse_program, pretty_print, Program};
