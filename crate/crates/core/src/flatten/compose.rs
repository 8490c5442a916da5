//! The composition algebra on bodies and methods, with Liskov
//! contract-compatibility checks on name collisions.

use crate::logic::{alpha_equal, subst_of, substitute, Formula, Prover, Spec, Term};
use crate::syntax::{Body, Method, MethodHeader};
use crate::typing::saturate_contracts;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompositionError {
    /// Two concrete implementations of the same method.
    ConflictingConcrete { method: String },
    /// Neither contract refines the other as Definition-of-composition
    /// requires; `direction` names the failed implication.
    IncompatibleSpecs { method: String, direction: String },
    SignatureMismatch { method: String },
    NotInstantiable { class: String, offenders: Vec<String> },
    MissingMethod { method: String },
}

impl fmt::Display for CompositionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionError::ConflictingConcrete { method } => {
                write!(f, "conflicting concrete implementations of `{method}`")
            }
            CompositionError::IncompatibleSpecs { method, direction } => {
                write!(f, "incompatible contracts for `{method}`: {direction}")
            }
            CompositionError::SignatureMismatch { method } => {
                write!(f, "signature mismatch for `{method}`")
            }
            CompositionError::NotInstantiable { class, offenders } => write!(
                f,
                "class `{class}` is not instantiable; non-getter abstract methods: {}",
                offenders.join(", ")
            ),
            CompositionError::MissingMethod { method } => {
                write!(f, "no method `{method}` to make abstract")
            }
        }
    }
}

/// Implication checker for composition: an alpha-equality fast path backed
/// by the prover, with contracts of the surrounding bodies in scope so
/// spec-level method references resolve. Prover calls are counted
/// separately from method verification.
pub struct ImplicationOracle<'a> {
    prover: &'a Prover,
    /// Method name to every header contributed by an operand body.
    specs: BTreeMap<String, Vec<MethodHeader>>,
    calls: AtomicU64,
}

impl<'a> ImplicationOracle<'a> {
    pub fn new(prover: &'a Prover, bodies: &[&Body]) -> Self {
        let mut specs: BTreeMap<String, Vec<MethodHeader>> = BTreeMap::new();
        for body in bodies {
            for m in &body.methods {
                specs
                    .entry(m.header.name.clone())
                    .or_default()
                    .push(m.header.clone());
            }
        }
        ImplicationOracle {
            prover,
            specs,
            calls: AtomicU64::new(0),
        }
    }

    pub fn prover_calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Does `antecedent` imply `consequent`? Alpha-equal formulas discharge
    /// without consulting the prover.
    pub fn implication_holds(&self, antecedent: &Formula, consequent: &Formula) -> bool {
        if alpha_equal(antecedent, consequent) {
            return true;
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut hypotheses = vec![antecedent.clone()];
        hypotheses.extend(saturate_contracts(
            &|name, arity| {
                self.specs
                    .get(name)
                    .map(|hs| {
                        hs.iter()
                            .filter(|h| h.params.len() == arity)
                            .cloned()
                            .collect()
                    })
                    .unwrap_or_default()
            },
            &[antecedent, consequent],
        ));
        self.prover
            .implies(&hypotheses, consequent)
            .map(|r| r.is_valid())
            .unwrap_or(false)
    }
}

/// Renames `spec`'s parameter occurrences to another header's parameter
/// names, positionally. Signatures must already match.
fn align_spec(spec: &Spec, from: &MethodHeader, to: &MethodHeader) -> Spec {
    let mapping = subst_of(
        from.params
            .iter()
            .zip(to.params.iter())
            .filter(|((_, a), (_, b))| a != b)
            .map(|((_, a), (_, b))| (a.clone(), Term::var(b.clone()))),
    );
    Spec {
        pre: substitute(&spec.pre, &mapping),
        post: substitute(&spec.post, &mapping),
    }
}

/// Headers of every method named `m` across the bodies, in input order.
/// Bodies are dropped: the collected methods are signature-and-contract
/// information only.
pub fn all_meth(m: &str, bodies: &[&Body]) -> Vec<MethodHeader> {
    bodies
        .iter()
        .filter_map(|b| b.method(m))
        .map(|method| method.header.clone())
        .collect()
}

/// Checks that `refining` (the implementing side) satisfies `required`
/// (the abstract side): the required precondition implies the refining one,
/// and the refining postcondition implies the required one.
fn liskov_ok(
    oracle: &ImplicationOracle<'_>,
    method: &str,
    required: &Spec,
    refining: &Spec,
) -> Result<(), CompositionError> {
    if !oracle.implication_holds(&required.pre, &refining.pre) {
        return Err(CompositionError::IncompatibleSpecs {
            method: method.to_string(),
            direction: "required precondition does not imply the implementing precondition".into(),
        });
    }
    if !oracle.implication_holds(&refining.post, &required.post) {
        return Err(CompositionError::IncompatibleSpecs {
            method: method.to_string(),
            direction: "implementing postcondition does not imply the required postcondition"
                .into(),
        });
    }
    Ok(())
}

/// Composes two same-named methods.
pub fn method_plus(
    m1: &Method,
    m2: &Method,
    oracle: &ImplicationOracle<'_>,
) -> Result<Method, CompositionError> {
    let name = &m1.header.name;
    debug_assert_eq!(name, &m2.header.name);
    if !m1.header.same_signature(&m2.header) {
        return Err(CompositionError::SignatureMismatch {
            method: name.clone(),
        });
    }
    match (&m1.body, &m2.body) {
        (Some(_), Some(_)) => Err(CompositionError::ConflictingConcrete {
            method: name.clone(),
        }),
        (Some(_), None) => {
            // Concrete + abstract: keep the concrete method when its
            // contract refines the abstract one.
            let required = align_spec(&m2.header.spec, &m2.header, &m1.header);
            liskov_ok(oracle, name, &required, &m1.header.spec)?;
            Ok(m1.clone())
        }
        // Abstract + concrete is the symmetric case.
        (None, Some(_)) => method_plus(m2, m1, oracle),
        (None, None) => {
            let s2_aligned = align_spec(&m2.header.spec, &m2.header, &m1.header);
            // Keep the first header when its contract refines the second's;
            // otherwise keep the second when the refinement runs that way.
            if liskov_ok(oracle, name, &s2_aligned, &m1.header.spec).is_ok() {
                return Ok(m1.clone());
            }
            if liskov_ok(oracle, name, &m1.header.spec, &s2_aligned).is_ok() {
                let mut kept = m1.clone();
                kept.header.spec = s2_aligned;
                return Ok(kept);
            }
            Err(CompositionError::IncompatibleSpecs {
                method: name.clone(),
                direction: "neither abstract contract refines the other".into(),
            })
        }
    }
}

/// Union of two method sequences, composing name collisions. The result
/// keeps the first operand's order, then second-only methods in their
/// order. All collision errors are reported, not just the first.
pub fn methods_plus(
    ms1: &[Method],
    ms2: &[Method],
    oracle: &ImplicationOracle<'_>,
) -> Result<Vec<Method>, Vec<CompositionError>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for m1 in ms1 {
        match ms2.iter().find(|m2| m2.header.name == m1.header.name) {
            None => out.push(m1.clone()),
            Some(m2) => match method_plus(m1, m2, oracle) {
                Ok(m) => out.push(m),
                Err(e) => errors.push(e),
            },
        }
    }
    for m2 in ms2 {
        if !ms1.iter().any(|m1| m1.header.name == m2.header.name) {
            out.push(m2.clone());
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Composes two bodies: interfaces are united (first-operand order), the
/// result is an interface only if both operands are, and methods compose
/// pointwise.
pub fn body_plus(
    b1: &Body,
    b2: &Body,
    oracle: &ImplicationOracle<'_>,
) -> Result<Body, Vec<CompositionError>> {
    let mut interfaces = b1.interfaces.clone();
    for i in &b2.interfaces {
        if !interfaces.contains(i) {
            interfaces.push(i.clone());
        }
    }
    let methods = methods_plus(&b1.methods, &b2.methods, oracle)?;
    Ok(Body {
        is_interface: b1.is_interface && b2.is_interface,
        interfaces,
        methods,
    })
}

/// Removes the implementation of `m`, keeping header and contract.
/// Idempotent on already-abstract methods.
pub fn make_abstract(b: &Body, m: &str) -> Result<Body, CompositionError> {
    let mut out = b.clone();
    match out.methods.iter_mut().find(|method| method.header.name == m) {
        Some(method) => {
            method.body = None;
            Ok(out)
        }
        None => Err(CompositionError::MissingMethod {
            method: m.to_string(),
        }),
    }
}
