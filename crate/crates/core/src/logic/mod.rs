//! The specification logic: formulas, substitution, the built-in decision
//! procedure, SMT-LIB emission, and the spec-circularity detector.

mod cc;
mod lia;
pub mod prover;
pub mod smtlib;
pub mod specgraph;
pub mod subst;
mod term;

pub use prover::{
    builtin_implies, find_countermodel, BackendChoice, BackendError, Prover, SortHints,
    VerificationResult,
};
pub use smtlib::{emit_smtlib, lint_smtlib};
pub use specgraph::{build_spec_graph, detect_circularity, SpecGraph, SpecNode};
pub use subst::{alpha_equal, subst_of, substitute, substitute_term, Substitution};
pub use term::{ArithOp, Binder, CmpOp, Formula, Spec, Term};
