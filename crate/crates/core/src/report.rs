//! The machine-readable result document produced by every pipeline run.
//! Field order is fixed by the struct layout and all collections are
//! emitted in deterministic order, so identical inputs yield byte-identical
//! reports.

use crate::flatten::{FlattenOutcome, MethodEntry};
use crate::logic::VerificationResult;
use crate::syntax::{DefKind, Program, WellFormednessError};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub file: String,
    pub backend: String,
    pub strict: bool,
    pub allow_spec_cycles: bool,
    pub parse_error: Option<String>,
    pub well_formedness: Vec<String>,
    pub definitions: Vec<DefinitionReport>,
    pub run: Option<RunReport>,
    pub summary: Summary,
    /// Populated only on request; omitted by default so repeated runs are
    /// byte-identical.
    pub timing_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefinitionReport {
    pub name: String,
    pub kind: String,
    pub status: String,
    pub methods: Vec<MethodReport>,
    pub recheck: Vec<MethodReport>,
    pub errors: Vec<String>,
    pub cycles: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    pub name: String,
    pub verification: String,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub outcome: String,
    pub value: Option<String>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub definitions: usize,
    pub methods_checked: usize,
    pub valid: usize,
    pub invalid: usize,
    pub unknown: usize,
    pub type_errors: usize,
    pub composition_errors: usize,
    pub cycles: usize,
}

impl Report {
    pub fn new(file: impl Into<String>, backend: &str, strict: bool, allow_cycles: bool) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            file: file.into(),
            backend: backend.to_string(),
            strict,
            allow_spec_cycles: allow_cycles,
            parse_error: None,
            well_formedness: Vec::new(),
            definitions: Vec::new(),
            run: None,
            summary: Summary::default(),
            timing_ms: None,
        }
    }

    pub fn record_well_formedness(&mut self, errors: &[WellFormednessError]) {
        self.well_formedness = errors.iter().map(|e| e.to_string()).collect();
    }

    pub fn record_flatten(&mut self, program: &Program, outcome: &FlattenOutcome) {
        for name in &outcome.order {
            let record = &outcome.records[name];
            let kind = program
                .definition(name)
                .map(|d| d.kind)
                .unwrap_or(DefKind::Trait);
            let methods: Vec<MethodReport> =
                record.methods.iter().map(method_report).collect();
            let recheck: Vec<MethodReport> =
                record.recheck.iter().map(method_report).collect();
            let errors: Vec<String> = record.errors.iter().map(|e| e.to_string()).collect();
            let cycles: Vec<Vec<String>> = record
                .cycles
                .iter()
                .map(|c| c.iter().map(|n| n.method.clone()).collect())
                .collect();
            let ok = errors.is_empty()
                && cycles.is_empty()
                && methods
                    .iter()
                    .chain(recheck.iter())
                    .all(|m| m.verification != "invalid" && m.verification != "type-error");
            self.definitions.push(DefinitionReport {
                name: name.clone(),
                kind: match kind {
                    DefKind::Trait => "trait".into(),
                    DefKind::Class => "class".into(),
                },
                status: if ok { "ok".into() } else { "error".into() },
                methods,
                recheck,
                errors,
                cycles,
            });
        }
        self.rebuild_summary();
    }

    fn rebuild_summary(&mut self) {
        let mut s = Summary {
            definitions: self.definitions.len(),
            ..Summary::default()
        };
        for d in &self.definitions {
            for m in d.methods.iter().chain(d.recheck.iter()) {
                s.methods_checked += 1;
                match m.verification.as_str() {
                    "valid" => s.valid += 1,
                    "invalid" => s.invalid += 1,
                    "unknown" => s.unknown += 1,
                    "type-error" => s.type_errors += 1,
                    _ => {}
                }
            }
            s.composition_errors += d.errors.len();
            s.cycles += d.cycles.len();
        }
        self.summary = s;
    }

    /// Exit code, a pure function of the report contents. Severity order:
    /// parse/type/well-formedness (3), composition (2), circularity (4),
    /// verification failure (1), runtime stuck (5), out of fuel (6).
    pub fn exit_code(&self) -> i32 {
        if self.parse_error.is_some()
            || !self.well_formedness.is_empty()
            || self.summary.type_errors > 0
        {
            return 3;
        }
        let real_composition_errors = self.definitions.iter().any(|d| {
            d.errors
                .iter()
                .any(|e| !e.starts_with("skipped:"))
        });
        if real_composition_errors {
            return 2;
        }
        if self.summary.cycles > 0 && !self.allow_spec_cycles {
            return 4;
        }
        if self.summary.invalid > 0 || (self.strict && self.summary.unknown > 0) {
            return 1;
        }
        if let Some(run) = &self.run {
            match run.outcome.as_str() {
                "stuck" => return 5,
                "out-of-fuel" => return 6,
                _ => {}
            }
        }
        0
    }
}

fn method_report(entry: &MethodEntry) -> MethodReport {
    let (name, result) = entry;
    match result {
        Ok(VerificationResult::Valid) => MethodReport {
            name: name.clone(),
            verification: "valid".into(),
            detail: None,
        },
        Ok(VerificationResult::Invalid(model)) => MethodReport {
            name: name.clone(),
            verification: "invalid".into(),
            detail: model.clone(),
        },
        Ok(VerificationResult::Unknown(reason)) => MethodReport {
            name: name.clone(),
            verification: "unknown".into(),
            detail: Some(reason.clone()),
        },
        Err(e) => MethodReport {
            name: name.clone(),
            verification: "type-error".into(),
            detail: Some(e.to_string()),
        },
    }
}
