//! Flattening: reduces every definition's trait expression to a complete
//! body, verifying body literals as they are flattened and checking
//! contract compatibility at every composition.
//!
//! Flattening is driven in dependency order (references and implemented
//! interfaces), which exists because well-formed programs have no circular
//! definitions. Structure is flattened first for the whole program; method
//! verification then runs against the complete table, so mutually
//! referential class types resolve.

mod compose;

pub use compose::{
    all_meth, body_plus, make_abstract, method_plus, methods_plus, CompositionError,
    ImplicationOracle,
};

use crate::logic::{
    build_spec_graph, detect_circularity, Prover, SpecNode, VerificationResult,
};
use crate::syntax::{Body, DefKind, Method, Program, TraitExpr};
use crate::typing::{check_body, TypeError, TypingCtx, Vc};
use std::collections::BTreeMap;

/// The flattened definition table `Ds'`: every body is literal (no
/// references, sums, or abstractions remain).
#[derive(Debug, Clone, Default)]
pub struct FlattenedTable {
    entries: Vec<(String, DefKind, Body)>,
}

impl FlattenedTable {
    pub fn lookup(&self, name: &str) -> Option<(&DefKind, &Body)> {
        self.entries
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, k, b)| (k, b))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DefKind, &Body)> {
        self.entries.iter().map(|(n, k, b)| (n.as_str(), k, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn insert(&mut self, name: String, kind: DefKind, body: Body) {
        self.entries.push((name, kind, body));
    }
}

/// Errors attributed to one definition during flattening.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FlattenError {
    Composition(CompositionError),
    UnknownInterface { name: String },
    /// The definition depends (possibly via interfaces) on itself.
    CircularDependency { name: String },
    /// A dependency failed to flatten, so this definition was skipped.
    SkippedDependency { name: String },
    /// A reference target is missing (also a well-formedness error).
    MissingRef { name: String },
}

impl std::fmt::Display for FlattenError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlattenError::Composition(e) => write!(f, "{e}"),
            FlattenError::UnknownInterface { name } => write!(f, "unknown interface `{name}`"),
            FlattenError::CircularDependency { name } => {
                write!(f, "circular dependency through `{name}`")
            }
            FlattenError::SkippedDependency { name } => {
                write!(f, "skipped: dependency `{name}` failed to flatten")
            }
            FlattenError::MissingRef { name } => write!(f, "unknown definition `{name}`"),
        }
    }
}

/// Per-method verification entry.
pub type MethodEntry = (String, Result<VerificationResult, TypeError>);

/// Everything recorded about one definition.
#[derive(Debug, Clone, Default)]
pub struct DefinitionRecord {
    pub errors: Vec<FlattenError>,
    /// BFlat-time verification results, one per method of each body
    /// literal, in checking order.
    pub methods: Vec<MethodEntry>,
    /// Results of `--recheck-flattened` over the final body, when requested.
    pub recheck: Vec<MethodEntry>,
    /// Elementary specification cycles found in the flattened body.
    pub cycles: Vec<Vec<SpecNode>>,
}

/// Outcome of flattening a whole program.
#[derive(Debug, Default)]
pub struct FlattenOutcome {
    pub table: FlattenedTable,
    /// Definition name -> record, reported in program order via `order`.
    pub records: BTreeMap<String, DefinitionRecord>,
    pub order: Vec<String>,
    /// Prover calls spent on composition checks (the alpha-equality fast
    /// path does not consult the prover).
    pub composition_prover_calls: u64,
    /// All verification conditions constructed, in checking order.
    pub vcs: Vec<Vc>,
}

impl FlattenOutcome {
    pub fn has_composition_errors(&self) -> bool {
        self.order.iter().any(|n| {
            self.records[n]
                .errors
                .iter()
                .any(|e| !matches!(e, FlattenError::SkippedDependency { .. }))
        })
    }

    pub fn has_cycles(&self) -> bool {
        self.records.values().any(|r| !r.cycles.is_empty())
    }

    pub fn method_results(&self) -> impl Iterator<Item = (&str, &MethodEntry)> {
        self.order.iter().flat_map(move |n| {
            self.records[n]
                .methods
                .iter()
                .chain(self.records[n].recheck.iter())
                .map(move |e| (n.as_str(), e))
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FlattenOptions {
    /// Re-run verification on every flattened table entry (soundness
    /// harness; redundant when the theorems hold).
    pub recheck_flattened: bool,
}

/// Flattens a program. The input should already be well-formed; violations
/// surface as attributed errors rather than panics.
pub fn flatten_program(
    program: &Program,
    prover: &Prover,
    options: FlattenOptions,
) -> FlattenOutcome {
    let mut outcome = FlattenOutcome::default();
    let mut failed: Vec<String> = Vec::new();

    for d in &program.definitions {
        outcome.order.push(d.name.clone());
        outcome.records.entry(d.name.clone()).or_default();
    }

    // Dependency schedule over references and literal interface names.
    let schedule = topo_order(program);

    // Phase 1: structural flattening, in dependency order.
    let mut pending: Vec<(String, DefKind, Body)> = Vec::new();
    for name in &schedule.order {
        let def = match program.definition(name) {
            Some(d) => d,
            None => continue,
        };
        let record = outcome.records.get_mut(name).expect("record exists");
        if let Some(cyclic) = schedule.cyclic.iter().find(|c| *c == name) {
            record.errors.push(FlattenError::CircularDependency {
                name: cyclic.clone(),
            });
            failed.push(name.clone());
            continue;
        }
        let mut flattener = Flattener {
            table: &outcome.table,
            prover,
            errors: Vec::new(),
            literals: Vec::new(),
            prover_calls: 0,
        };
        let body = flattener.flatten_expr(&def.expr, &failed);
        outcome.composition_prover_calls += flattener.prover_calls;
        let errors = flattener.errors;
        let literals = flattener.literals;
        let record = outcome.records.get_mut(name).expect("record exists");
        record.errors.extend(errors);
        match body {
            Some(body) => {
                // Instantiability of classes: remaining abstract methods
                // must be getters.
                if def.kind == DefKind::Class && !body.is_interface {
                    let offenders: Vec<String> = body
                        .abstract_methods()
                        .filter(|m| !m.header.params.is_empty())
                        .map(|m| m.header.name.clone())
                        .collect();
                    if !offenders.is_empty() {
                        record.errors.push(FlattenError::Composition(
                            CompositionError::NotInstantiable {
                                class: name.clone(),
                                offenders,
                            },
                        ));
                    }
                }
                for lit in literals {
                    pending.push((name.clone(), def.kind, lit));
                }
                outcome.table.insert(name.clone(), def.kind, body);
            }
            None => failed.push(name.clone()),
        }
    }

    // Phase 2: verify each body literal against the complete table.
    for (owner, kind, body) in &pending {
        let ctx = TypingCtx {
            table: &outcome.table,
            owner,
            owner_kind: *kind,
            owner_body: body,
        };
        let checked = check_body(&ctx, prover);
        let record = outcome.records.get_mut(owner).expect("record exists");
        for (method, result) in checked {
            match result {
                Ok(outcome_m) => {
                    if let Some(vc) = outcome_m.vc {
                        outcome.vcs.push(vc);
                    }
                    record.methods.push((method, Ok(outcome_m.result)));
                }
                Err(e) => record.methods.push((method, Err(e))),
            }
        }
    }

    // Phase 3: specification-circularity detection on flattened class
    // bodies (interfaces are never instantiated, and their getter-style
    // self-describing contracts are the state-emulation idiom).
    for (name, kind, body) in outcome.table.entries.clone() {
        if kind == DefKind::Class && !body.is_interface {
            let graph = build_spec_graph(&body, &name);
            let cycles = detect_circularity(&graph);
            if !cycles.is_empty() {
                outcome
                    .records
                    .get_mut(&name)
                    .expect("record exists")
                    .cycles = cycles;
            }
        }
    }

    // Phase 4: optional re-verification of every flattened entry.
    if options.recheck_flattened {
        for (name, kind, body) in outcome.table.entries.clone() {
            let ctx = TypingCtx {
                table: &outcome.table,
                owner: &name,
                owner_kind: kind,
                owner_body: &body,
            };
            let checked = check_body(&ctx, prover);
            let record = outcome.records.get_mut(&name).expect("record exists");
            for (method, result) in checked {
                match result {
                    Ok(outcome_m) => record.recheck.push((method, Ok(outcome_m.result))),
                    Err(e) => record.recheck.push((method, Err(e))),
                }
            }
        }
    }

    outcome
}

struct Flattener<'a> {
    table: &'a FlattenedTable,
    prover: &'a Prover,
    errors: Vec<FlattenError>,
    /// Body literals encountered (after interface import), queued for
    /// verification.
    literals: Vec<Body>,
    prover_calls: u64,
}

impl<'a> Flattener<'a> {
    fn flatten_expr(&mut self, e: &TraitExpr, failed: &[String]) -> Option<Body> {
        match e {
            TraitExpr::Ref(name) => {
                if failed.iter().any(|f| f == name) {
                    self.errors
                        .push(FlattenError::SkippedDependency { name: name.clone() });
                    return None;
                }
                match self.table.lookup(name) {
                    Some((_, body)) => Some(body.clone()),
                    None => {
                        self.errors
                            .push(FlattenError::MissingRef { name: name.clone() });
                        None
                    }
                }
            }
            TraitExpr::Lit(body) => self.flatten_literal(body, failed),
            TraitExpr::Plus(a, b) => {
                let left = self.flatten_expr(a, failed);
                let right = self.flatten_expr(b, failed);
                let (left, right) = (left?, right?);
                let oracle = ImplicationOracle::new(self.prover, &[&left, &right]);
                let result = body_plus(&left, &right, &oracle);
                self.prover_calls += oracle.prover_calls();
                match result {
                    Ok(body) => Some(body),
                    Err(errors) => {
                        self.errors
                            .extend(errors.into_iter().map(FlattenError::Composition));
                        None
                    }
                }
            }
            TraitExpr::MakeAbstract(inner, m) => {
                let body = self.flatten_expr(inner, failed)?;
                match make_abstract(&body, m) {
                    Ok(body) => Some(body),
                    Err(e) => {
                        self.errors.push(FlattenError::Composition(e));
                        None
                    }
                }
            }
        }
    }

    /// A body literal implicitly imports the abstract headers (and
    /// contracts) of every method its interfaces declare; locally declared
    /// methods must respect the interface contracts.
    fn flatten_literal(&mut self, body: &Body, failed: &[String]) -> Option<Body> {
        let mut interface_bodies: Vec<&Body> = Vec::new();
        let mut ok = true;
        for iface in &body.interfaces {
            if failed.iter().any(|f| f == iface) {
                self.errors
                    .push(FlattenError::SkippedDependency { name: iface.clone() });
                ok = false;
                continue;
            }
            match self.table.lookup(iface) {
                Some((_, b)) => interface_bodies.push(b),
                None => {
                    self.errors
                        .push(FlattenError::UnknownInterface { name: iface.clone() });
                    ok = false;
                }
            }
        }
        if !ok {
            return None;
        }

        let mut oracle_bodies: Vec<&Body> = vec![body];
        oracle_bodies.extend(interface_bodies.iter().copied());
        let oracle = ImplicationOracle::new(self.prover, &oracle_bodies);

        let mut result = body.clone();
        let mut errors = Vec::new();

        // Import interface methods not locally declared, folding headers
        // that several interfaces declare.
        let mut import_names: Vec<&str> = Vec::new();
        for ib in &interface_bodies {
            for m in ib.method_names() {
                if body.method(m).is_none() && !import_names.contains(&m) {
                    import_names.push(m);
                }
            }
        }
        for m in import_names {
            let headers = all_meth(m, &interface_bodies);
            let mut folded: Option<Method> = None;
            for header in headers {
                let incoming = Method {
                    header,
                    body: None,
                };
                folded = Some(match folded {
                    None => incoming,
                    Some(prev) => match method_plus(&prev, &incoming, &oracle) {
                        Ok(m) => m,
                        Err(e) => {
                            errors.push(e);
                            prev
                        }
                    },
                });
            }
            if let Some(m) = folded {
                result.methods.push(m);
            }
        }

        // Locally declared methods must respect every interface contract
        // for the same name.
        for m in &body.methods {
            for ib in &interface_bodies {
                if let Some(declared) = ib.method(&m.header.name) {
                    if !m.header.same_signature(&declared.header) {
                        errors.push(CompositionError::SignatureMismatch {
                            method: m.header.name.clone(),
                        });
                        continue;
                    }
                    let required = compose_align(&declared.header, &m.header);
                    if let Err(e) =
                        liskov_respects(&oracle, &m.header.name, &required, &m.header.spec)
                    {
                        errors.push(e);
                    }
                }
            }
        }

        self.prover_calls += oracle.prover_calls();
        if errors.is_empty() {
            self.literals.push(result.clone());
            Some(result)
        } else {
            self.errors
                .extend(errors.into_iter().map(FlattenError::Composition));
            None
        }
    }
}

/// Aligns an interface header's spec to the implementing header's
/// parameter names.
fn compose_align(
    declared: &crate::syntax::MethodHeader,
    implementing: &crate::syntax::MethodHeader,
) -> crate::logic::Spec {
    use crate::logic::{subst_of, substitute, Term};
    let mapping = subst_of(
        declared
            .params
            .iter()
            .zip(implementing.params.iter())
            .filter(|((_, a), (_, b))| a != b)
            .map(|((_, a), (_, b))| (a.clone(), Term::var(b.clone()))),
    );
    crate::logic::Spec {
        pre: substitute(&declared.spec.pre, &mapping),
        post: substitute(&declared.spec.post, &mapping),
    }
}

fn liskov_respects(
    oracle: &ImplicationOracle<'_>,
    method: &str,
    required: &crate::logic::Spec,
    implementing: &crate::logic::Spec,
) -> Result<(), CompositionError> {
    if !oracle.implication_holds(&required.pre, &implementing.pre) {
        return Err(CompositionError::IncompatibleSpecs {
            method: method.to_string(),
            direction: "interface precondition does not imply the implementation's".into(),
        });
    }
    if !oracle.implication_holds(&implementing.post, &required.post) {
        return Err(CompositionError::IncompatibleSpecs {
            method: method.to_string(),
            direction: "implementation postcondition does not imply the interface's".into(),
        });
    }
    Ok(())
}

struct Schedule {
    order: Vec<String>,
    /// Definitions stuck on a dependency cycle.
    cyclic: Vec<String>,
}

/// Kahn's algorithm over references plus literal interface names,
/// preserving program order among ready definitions.
fn topo_order(program: &Program) -> Schedule {
    let names: Vec<&str> = program.definitions.iter().map(|d| d.name.as_str()).collect();
    let index = |n: &str| names.iter().position(|x| *x == n);

    let n = names.len();
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, d) in program.definitions.iter().enumerate() {
        let mut wanted: Vec<&str> = d.expr.refs();
        wanted.extend(d.expr.literal_interfaces());
        for w in wanted {
            if let Some(j) = index(w) {
                if j != i && !deps[i].contains(&j) {
                    deps[i].push(j);
                }
            }
        }
        // Self-dependency is a direct cycle.
        if d.expr.refs().contains(&d.name.as_str())
            || d.expr.literal_interfaces().contains(&d.name.as_str())
        {
            deps[i].push(i);
        }
    }

    let mut done = vec![false; n];
    let mut order = Vec::new();
    loop {
        let mut progressed = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            if deps[i].iter().all(|&j| j != i && done[j]) {
                done[i] = true;
                order.push(names[i].to_string());
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let cyclic: Vec<String> = (0..n)
        .filter(|&i| !done[i])
        .map(|i| {
            order.push(names[i].to_string());
            names[i].to_string()
        })
        .collect();
    Schedule { order, cyclic }
}
