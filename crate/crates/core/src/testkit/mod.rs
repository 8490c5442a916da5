//! Deterministic program generation, shrinking, and the soundness
//! harnesses exercised by the test suite and the `testkit` CLI command.

mod gen;
mod shrink;

pub use gen::{gen_program, gen_refinement_chain, getter_case, weaken_post, GenConfig};
pub use shrink::shrink;

use crate::flatten::{flatten_program, FlattenOptions, FlattenOutcome};
use crate::logic::{Prover, VerificationResult};
use crate::syntax::{check_well_formed, Program};
use serde::{Deserialize, Serialize};

/// Result of pushing one generated seed through the whole pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub well_formed: bool,
    /// Structural flattening succeeded with no composition errors.
    pub flattened: bool,
    /// Every BFlat-time verification returned Valid.
    pub verified: bool,
    /// Every method of every flattened body re-verified (Theorem-1 check).
    pub recheck_ok: bool,
    pub methods_checked: usize,
}

impl SeedOutcome {
    /// The Theorem-1 property: whatever flattens re-verifies.
    pub fn sound(&self) -> bool {
        !self.flattened || (self.verified && self.recheck_ok)
    }
}

/// Runs the full pipeline over one generated program.
pub fn check_seed(cfg: &GenConfig) -> (SeedOutcome, Program, FlattenOutcome) {
    let program = gen_program(cfg);
    let well_formed = check_well_formed(&program).is_empty();
    let prover = Prover::builtin();
    let outcome = flatten_program(
        &program,
        &prover,
        FlattenOptions {
            recheck_flattened: true,
        },
    );

    let flattened = !outcome.has_composition_errors()
        && outcome.table.len() == program.definitions.len()
        && !outcome.has_cycles();
    let mut verified = true;
    let mut recheck_ok = true;
    let mut methods_checked = 0;
    for record in outcome.records.values() {
        for (_, result) in &record.methods {
            methods_checked += 1;
            if !matches!(result, Ok(VerificationResult::Valid)) {
                verified = false;
            }
        }
        for (_, result) in &record.recheck {
            if !matches!(result, Ok(VerificationResult::Valid)) {
                recheck_ok = false;
            }
        }
    }

    (
        SeedOutcome {
            seed: cfg.seed,
            well_formed,
            flattened,
            verified,
            recheck_ok,
            methods_checked,
        },
        program,
        outcome,
    )
}
