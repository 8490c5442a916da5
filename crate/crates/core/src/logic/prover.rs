//! The built-in implication checker and the pluggable backend surface.
//!
//! The built-in backend decides a quantifier-free fragment: congruence
//! closure over uninterpreted application terms combined with linear integer
//! arithmetic over `+`, `-`, integer constants and comparisons. Disequalities
//! and disjunctive hypotheses are handled by bounded case splitting.
//! Quantified hypotheses are used by sort-respecting instantiation at goal
//! skolems and goal subterms; a quantified goal that cannot be discharged
//! that way escalates to `Unknown`, as do multiplications by non-constants.
//!
//! `Valid` is only returned on a sound derivation; `Invalid` is only
//! returned together with an explicit countermodel that has been checked by
//! evaluation.

use super::cc::Congruence;
use super::lia::{feasibility, Feasibility, Lin};
use super::subst::{substitute, Substitution};
use super::term::{ArithOp, Binder, CmpOp, Formula, Term};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

/// Outcome of an implication check.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum VerificationResult {
    Valid,
    Invalid(Option<String>),
    Unknown(String),
}

impl VerificationResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, VerificationResult::Valid)
    }
}

/// Which reasoning engine discharges obligations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Builtin,
    Smtlib,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("smtlib backend unavailable: {0}")]
    BackendUnavailable(String),
}

/// Extra sort information handed to the SMT-LIB emitter; the builtin
/// backend works without it.
#[derive(Debug, Clone, Default)]
pub struct SortHints {
    /// Variable name to class name.
    pub vars: BTreeMap<String, String>,
    /// (receiver class, method) to (argument classes, return class).
    pub methods: BTreeMap<(String, String), (Vec<String>, String)>,
}

/// A verification backend handle. Counts every implication query so tests
/// can assert call budgets.
pub struct Prover {
    pub choice: BackendChoice,
    /// External solver executable for the smtlib backend.
    pub solver: Option<PathBuf>,
    /// Extra raw SMT-LIB assertions (user-supplied axioms).
    pub axioms: Vec<String>,
    calls: AtomicU64,
}

impl Prover {
    pub fn builtin() -> Prover {
        Prover {
            choice: BackendChoice::Builtin,
            solver: None,
            axioms: Vec::new(),
            calls: AtomicU64::new(0),
        }
    }

    pub fn smtlib(solver: Option<PathBuf>) -> Prover {
        Prover {
            choice: BackendChoice::Smtlib,
            solver,
            axioms: Vec::new(),
            calls: AtomicU64::new(0),
        }
    }

    /// Number of implication queries issued so far.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Does `hypotheses |= goal` hold?
    pub fn implies(
        &self,
        hypotheses: &[Formula],
        goal: &Formula,
    ) -> Result<VerificationResult, BackendError> {
        self.implies_with_hints(hypotheses, goal, None)
    }

    pub fn implies_with_hints(
        &self,
        hypotheses: &[Formula],
        goal: &Formula,
        hints: Option<&SortHints>,
    ) -> Result<VerificationResult, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.choice {
            BackendChoice::Builtin => Ok(builtin_implies(hypotheses, goal)),
            BackendChoice::Smtlib => self.smtlib_implies(hypotheses, goal, hints),
        }
    }

    fn smtlib_implies(
        &self,
        hypotheses: &[Formula],
        goal: &Formula,
        hints: Option<&SortHints>,
    ) -> Result<VerificationResult, BackendError> {
        let default_hints = SortHints::default();
        let hints = hints.unwrap_or(&default_hints);
        let script = super::smtlib::emit_smtlib(hypotheses, goal, hints, &self.axioms);
        let solver = match &self.solver {
            Some(s) => s.clone(),
            None => return Ok(VerificationResult::Unknown("no solver configured".into())),
        };
        let dir = tempfile::tempdir()
            .map_err(|e| BackendError::BackendUnavailable(format!("tempdir: {e}")))?;
        let path = dir.path().join("obligation.smt2");
        std::fs::write(&path, &script)
            .map_err(|e| BackendError::BackendUnavailable(format!("write: {e}")))?;
        let out = std::process::Command::new(&solver)
            .arg(&path)
            .output()
            .map_err(|e| {
                BackendError::BackendUnavailable(format!("{}: {e}", solver.display()))
            })?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        for line in stdout.lines() {
            match line.trim() {
                "unsat" => return Ok(VerificationResult::Valid),
                "sat" => return Ok(VerificationResult::Invalid(None)),
                "unknown" => {
                    return Ok(VerificationResult::Unknown("solver returned unknown".into()))
                }
                _ => continue,
            }
        }
        Ok(VerificationResult::Unknown(format!(
            "unrecognized solver output: {}",
            stdout.trim()
        )))
    }
}

/// Decides `hypotheses |= goal` with the built-in engine.
pub fn builtin_implies(hypotheses: &[Formula], goal: &Formula) -> VerificationResult {
    let mut ctx = Ctx::default();
    for h in hypotheses {
        ctx.ingest(h.clone());
    }
    let quantified =
        ctx.has_quant || has_quantifier(goal) || hypotheses.iter().any(has_quantifier);
    let nonlinear = ctx.has_nonlinear || formula_nonlinear(goal);

    if prove(&mut ctx, goal, 0) {
        return VerificationResult::Valid;
    }
    if quantified {
        return VerificationResult::Unknown("quantified formula outside builtin fragment".into());
    }
    if nonlinear {
        return VerificationResult::Unknown(
            "multiplication by non-constant outside builtin fragment".into(),
        );
    }
    match find_countermodel(hypotheses, goal) {
        Some(model) => VerificationResult::Invalid(Some(model)),
        None => VerificationResult::Unknown("no proof and no small countermodel found".into()),
    }
}

fn has_quantifier(f: &Formula) -> bool {
    match f {
        Formula::Forall(..) | Formula::Exists(..) => true,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            has_quantifier(a) || has_quantifier(b)
        }
        Formula::Not(a) => has_quantifier(a),
        _ => false,
    }
}

fn term_nonlinear(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Int(_) => false,
        Term::App { recv, args, .. } => {
            term_nonlinear(recv) || args.iter().any(term_nonlinear)
        }
        Term::Arith(op, a, b) => {
            if *op == ArithOp::Mul && const_value(a).is_none() && const_value(b).is_none() {
                return true;
            }
            term_nonlinear(a) || term_nonlinear(b)
        }
    }
}

fn formula_nonlinear(f: &Formula) -> bool {
    let mut found = false;
    f.visit_terms(&mut |t| found |= term_nonlinear(t));
    found
}

fn const_value(t: &Term) -> Option<i64> {
    match t {
        Term::Int(n) => Some(*n),
        Term::Arith(op, a, b) => {
            let (a, b) = (const_value(a)?, const_value(b)?);
            Some(match op {
                ArithOp::Add => a.checked_add(b)?,
                ArithOp::Sub => a.checked_sub(b)?,
                ArithOp::Mul => a.checked_mul(b)?,
            })
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Proof search context

#[derive(Debug, Clone)]
struct ImplHyp {
    ante: Formula,
    conseq: Formula,
    fired: bool,
    split: bool,
}

#[derive(Debug, Clone, Default)]
struct Ctx {
    /// Atomic facts: Cmp, Atom, Not(Atom), HasType.
    atoms: Vec<Formula>,
    /// Implication hypotheses awaiting a proved antecedent.
    impls: Vec<ImplHyp>,
    /// Disjunctive hypotheses; split during entailment.
    ors: Vec<(Formula, Formula, bool)>,
    /// Universally quantified hypotheses.
    foralls: Vec<(Binder, Formula)>,
    /// (forall index, instantiation term) pairs already used.
    instantiated: BTreeSet<(usize, Term)>,
    /// Disequalities already split on.
    split_done: BTreeSet<Formula>,
    /// Known sorts of variables (from HasType atoms and skolems).
    sorts: BTreeMap<String, String>,
    /// Candidate instantiation terms with their sorts.
    candidates: Vec<(Term, String)>,
    skolems: u64,
    has_quant: bool,
    has_nonlinear: bool,
    absurd: bool,
}

impl Ctx {
    fn ingest(&mut self, f: Formula) {
        match f {
            Formula::True => {}
            Formula::False => self.absurd = true,
            Formula::And(a, b) => {
                self.ingest(*a);
                self.ingest(*b);
            }
            Formula::Implies(a, b) => self.impls.push(ImplHyp {
                ante: *a,
                conseq: *b,
                fired: false,
                split: false,
            }),
            Formula::Or(a, b) => self.ors.push((*a, *b, false)),
            Formula::Forall(binder, body) => {
                self.has_quant = true;
                self.foralls.push((binder, *body));
            }
            Formula::Exists(binder, body) => {
                // Skolemize: a fresh constant of the binder's sort.
                self.has_quant = true;
                let name = self.fresh_skolem(&binder.class);
                let inst = substitute(
                    &body,
                    &Substitution::from([(binder.var.clone(), Term::var(name))]),
                );
                self.ingest(inst);
            }
            Formula::Not(inner) => match *inner {
                Formula::True => self.absurd = true,
                Formula::False => {}
                Formula::Cmp(op, a, b) => self.ingest(Formula::Cmp(op.negate(), a, b)),
                Formula::Atom(_) => self.add_atom(Formula::Not(inner)),
                Formula::And(a, b) => self.ingest(Formula::Or(
                    Box::new(Formula::not(*a)),
                    Box::new(Formula::not(*b)),
                )),
                Formula::Or(a, b) => {
                    self.ingest(Formula::not(*a));
                    self.ingest(Formula::not(*b));
                }
                Formula::Implies(a, b) => {
                    self.ingest(*a);
                    self.ingest(Formula::not(*b));
                }
                Formula::Not(inner2) => self.ingest(*inner2),
                Formula::Forall(binder, body) => {
                    self.ingest(Formula::Exists(binder, Box::new(Formula::not(*body))))
                }
                Formula::Exists(binder, body) => {
                    self.ingest(Formula::Forall(binder, Box::new(Formula::not(*body))))
                }
                Formula::HasType(..) => { /* no refutational meaning; drop */ }
            },
            Formula::HasType(ref t, ref class) => {
                if let Term::Var(v) = t {
                    self.sorts.insert(v.clone(), class.clone());
                }
                self.add_atom(f);
            }
            Formula::Cmp(..) | Formula::Atom(..) => self.add_atom(f),
        }
    }

    fn add_atom(&mut self, f: Formula) {
        self.has_nonlinear |= formula_nonlinear(&f);
        if !self.atoms.contains(&f) {
            self.atoms.push(f);
        }
    }

    fn fresh_skolem(&mut self, class: &str) -> String {
        let name = format!("$sk{}", self.skolems);
        self.skolems += 1;
        self.sorts.insert(name.clone(), class.to_string());
        self.candidates.push((Term::var(name.clone()), class.to_string()));
        name
    }

    fn add_candidate(&mut self, t: Term, class: String) {
        if !self.candidates.iter().any(|(c, _)| *c == t) {
            self.candidates.push((t, class));
        }
    }
}

const MAX_DEPTH: usize = 24;
const MAX_SPLITS: usize = 12;
const MAX_SAT_ROUNDS: usize = 10;

fn prove(ctx: &mut Ctx, goal: &Formula, depth: usize) -> bool {
    if depth > MAX_DEPTH {
        return false;
    }
    match goal {
        Formula::True => true,
        Formula::False => {
            saturate(ctx);
            entail_with_splits(ctx, &Formula::False, 0)
        }
        Formula::And(a, b) => prove(ctx, a, depth + 1) && prove(ctx, b, depth + 1),
        Formula::Implies(a, b) => {
            let mut inner = ctx.clone();
            inner.ingest((**a).clone());
            prove(&mut inner, b, depth + 1)
        }
        Formula::Forall(binder, body) => {
            let mut inner = ctx.clone();
            let name = inner.fresh_skolem(&binder.class);
            let skolemized = substitute(
                body,
                &Substitution::from([(binder.var.clone(), Term::var(name))]),
            );
            prove(&mut inner, &skolemized, depth + 1)
        }
        Formula::Exists(binder, body) => {
            let candidates: Vec<Term> = ctx
                .candidates
                .iter()
                .filter(|(_, c)| *c == binder.class)
                .map(|(t, _)| t.clone())
                .take(16)
                .collect();
            for cand in candidates {
                let inst = substitute(
                    body,
                    &Substitution::from([(binder.var.clone(), cand)]),
                );
                if prove(&mut ctx.clone(), &inst, depth + 1) {
                    return true;
                }
            }
            false
        }
        Formula::Or(a, b) => {
            prove(&mut ctx.clone(), a, depth + 1) || prove(&mut ctx.clone(), b, depth + 1)
        }
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Cmp(op, a, b) => {
                prove(ctx, &Formula::Cmp(op.negate(), a.clone(), b.clone()), depth + 1)
            }
            Formula::Atom(_) => {
                register_goal_candidates(ctx, goal);
                saturate(ctx);
                entail_with_splits(ctx, goal, 0)
            }
            Formula::True => prove(ctx, &Formula::False, depth + 1),
            Formula::False => true,
            Formula::Not(g) => prove(ctx, g, depth + 1),
            Formula::And(a, b) => prove(
                ctx,
                &Formula::Or(
                    Box::new(Formula::not((**a).clone())),
                    Box::new(Formula::not((**b).clone())),
                ),
                depth + 1,
            ),
            Formula::Or(a, b) => prove(
                ctx,
                &Formula::and(Formula::not((**a).clone()), Formula::not((**b).clone())),
                depth + 1,
            ),
            Formula::Implies(a, b) => prove(
                ctx,
                &Formula::and((**a).clone(), Formula::not((**b).clone())),
                depth + 1,
            ),
            Formula::Forall(binder, body) => prove(
                ctx,
                &Formula::Exists(binder.clone(), Box::new(Formula::not((**body).clone()))),
                depth + 1,
            ),
            Formula::Exists(binder, body) => prove(
                ctx,
                &Formula::Forall(binder.clone(), Box::new(Formula::not((**body).clone()))),
                depth + 1,
            ),
            Formula::HasType(..) => false,
        },
        Formula::HasType(t, class) => {
            if let Term::Var(v) = t {
                if ctx.sorts.get(v) == Some(class) {
                    return true;
                }
            }
            ctx.atoms.contains(goal) || {
                saturate(ctx);
                ctx.atoms.contains(goal) || entail_with_splits(ctx, &Formula::False, 0)
            }
        }
        Formula::Cmp(..) | Formula::Atom(..) => {
            register_goal_candidates(ctx, goal);
            saturate(ctx);
            entail_with_splits(ctx, goal, 0)
        }
    }
}

/// Terms occurring in the goal become quantifier-instantiation candidates
/// when their sort is known.
fn register_goal_candidates(ctx: &mut Ctx, goal: &Formula) {
    let mut terms = Vec::new();
    goal.visit_terms(&mut |t| terms.push(t.clone()));
    for t in terms {
        collect_sorted_subterms(ctx, &t);
    }
}

fn collect_sorted_subterms(ctx: &mut Ctx, t: &Term) {
    match t {
        Term::Var(v) => {
            if let Some(class) = ctx.sorts.get(v).cloned() {
                ctx.add_candidate(t.clone(), class);
            }
        }
        Term::Int(_) => ctx.add_candidate(t.clone(), crate::syntax::NUM.to_string()),
        Term::App { recv, args, .. } => {
            collect_sorted_subterms(ctx, recv);
            for a in args {
                collect_sorted_subterms(ctx, a);
            }
        }
        Term::Arith(_, a, b) => {
            collect_sorted_subterms(ctx, a);
            collect_sorted_subterms(ctx, b);
        }
    }
}

/// Fires implication hypotheses whose antecedents are derivable and
/// instantiates quantified hypotheses at known candidates.
fn saturate(ctx: &mut Ctx) {
    for _ in 0..MAX_SAT_ROUNDS {
        let mut changed = false;

        for i in 0..ctx.impls.len() {
            if ctx.impls[i].2 {
                continue;
            }
            let ante = ctx.impls[i].0.clone();
            if antecedent_holds(ctx, &ante) {
                ctx.impls[i].2 = true;
                let conseq = ctx.impls[i].1.clone();
                ctx.ingest(conseq);
                changed = true;
            }
        }

        for i in 0..ctx.foralls.len() {
            let (binder, body) = ctx.foralls[i].clone();
            let candidates: Vec<Term> = ctx
                .candidates
                .iter()
                .filter(|(_, c)| *c == binder.class)
                .map(|(t, _)| t.clone())
                .take(24)
                .collect();
            for cand in candidates {
                if ctx.instantiated.contains(&(i, cand.clone())) {
                    continue;
                }
                ctx.instantiated.insert((i, cand.clone()));
                let inst = substitute(
                    &body,
                    &Substitution::from([(binder.var.clone(), cand)]),
                );
                ctx.ingest(inst);
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }
}

/// Conservative antecedent check: conjunctions of atoms only, decided
/// against the current atom set without case splits.
fn antecedent_holds(ctx: &Ctx, ante: &Formula) -> bool {
    match ante {
        Formula::True => true,
        Formula::And(a, b) => antecedent_holds(ctx, a) && antecedent_holds(ctx, b),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Cmp(op, a, b) => {
                antecedent_holds(ctx, &Formula::Cmp(op.negate(), a.clone(), b.clone()))
            }
            Formula::Atom(_) => {
                let theory = Theory::build(&ctx.atoms, Some(ante));
                theory.refuted() || theory.entails(ante)
            }
            _ => false,
        },
        Formula::Cmp(..) | Formula::Atom(..) => {
            let theory = Theory::build(&ctx.atoms, Some(ante));
            theory.refuted() || theory.entails(ante)
        }
        Formula::HasType(t, class) => match t {
            Term::Var(v) => ctx.sorts.get(v) == Some(class) || ctx.atoms.contains(ante),
            _ => ctx.atoms.contains(ante),
        },
        _ => false,
    }
}

/// Entailment of an atomic goal under bounded case splitting on
/// disequalities and disjunctive hypotheses.
fn entail_with_splits(ctx: &mut Ctx, goal: &Formula, splits: usize) -> bool {
    let theory = Theory::build(&ctx.atoms, Some(goal));
    if theory.refuted() {
        return true;
    }
    if *goal != Formula::False && theory.entails(goal) {
        return true;
    }
    if splits >= MAX_SPLITS {
        return false;
    }

    // Split a pending disjunction first, then a fresh disequality.
    let or_idx = ctx.ors.iter().position(|(_, _, used)| !used);
    if let Some(i) = or_idx {
        ctx.ors[i].2 = true;
        let (a, b) = (ctx.ors[i].0.clone(), ctx.ors[i].1.clone());
        for branch in [a, b] {
            let mut sub = ctx.clone();
            sub.ingest(branch);
            saturate(&mut sub);
            if !entail_with_splits(&mut sub, goal, splits + 1) {
                return false;
            }
        }
        return true;
    }

    let ne = ctx.atoms.iter().find_map(|f| match f {
        Formula::Cmp(CmpOp::Ne, a, b) if !ctx.split_done.contains(f) => {
            Some((f.clone(), a.clone(), b.clone()))
        }
        _ => None,
    });
    if let Some((marker, a, b)) = ne {
        ctx.split_done.insert(marker);
        for branch in [
            Formula::Cmp(CmpOp::Lt, a.clone(), b.clone()),
            Formula::Cmp(CmpOp::Gt, a, b),
        ] {
            let mut sub = ctx.clone();
            sub.ingest(branch);
            saturate(&mut sub);
            if !entail_with_splits(&mut sub, goal, splits + 1) {
                return false;
            }
        }
        return true;
    }

    false
}

// ---------------------------------------------------------------------------
// Theory layer: congruence closure + linear integer arithmetic

struct Theory {
    cc: Congruence,
    /// Linear constraints (each `>= 0`) over congruence-class unknowns.
    cons: Vec<Lin>,
    /// Asserted disequalities as class pairs.
    diseqs: Vec<(usize, usize)>,
    refuted: bool,
}

impl Theory {
    fn build(atoms: &[Formula], goal: Option<&Formula>) -> Theory {
        let mut cc = Congruence::new();
        // Pass 0: intern every term (including the goal's) so class ids are
        // stable before constraints are extracted.
        for f in atoms.iter().chain(goal) {
            f.visit_terms(&mut |t| {
                cc.intern(t);
            });
        }
        // Pass 1: union equalities and boolean atoms.
        for f in atoms {
            match f {
                Formula::Cmp(CmpOp::Eq, a, b) => {
                    let (ia, ib) = (cc.intern(a), cc.intern(b));
                    cc.union(ia, ib);
                }
                Formula::Atom(t) => {
                    let it = cc.intern(t);
                    let tt = cc.true_node();
                    cc.union(it, tt);
                }
                Formula::Not(inner) => {
                    if let Formula::Atom(t) = inner.as_ref() {
                        let it = cc.intern(t);
                        let ff = cc.false_node();
                        cc.union(it, ff);
                    }
                }
                _ => {}
            }
        }

        let mut theory = Theory {
            cc,
            cons: Vec::new(),
            diseqs: Vec::new(),
            refuted: false,
        };

        for f in atoms {
            match f {
                Formula::Cmp(op, a, b) => match op {
                    CmpOp::Eq => {
                        let d = theory.lin_diff(a, b);
                        theory.cons.push(d.clone());
                        theory.cons.push(d.scale(-1));
                    }
                    CmpOp::Ne => {
                        let (ca, cb) = (theory.cc.class_of(a), theory.cc.class_of(b));
                        theory.diseqs.push((ca, cb));
                    }
                    // a >= b  ->  a - b >= 0 ; strict ops tighten by one.
                    CmpOp::Ge => {
                        let d = theory.lin_diff(a, b);
                        theory.cons.push(d);
                    }
                    CmpOp::Gt => {
                        let d = theory.lin_diff(a, b).sub(&Lin::constant(1));
                        theory.cons.push(d);
                    }
                    CmpOp::Le => {
                        let d = theory.lin_diff(b, a);
                        theory.cons.push(d);
                    }
                    CmpOp::Lt => {
                        let d = theory.lin_diff(b, a).sub(&Lin::constant(1));
                        theory.cons.push(d);
                    }
                },
                _ => {}
            }
        }
        theory.bind_literal_classes();
        theory
    }

    /// Classes containing an integer literal are pinned to its value.
    fn bind_literal_classes(&mut self) {
        let mut classes: BTreeSet<usize> = BTreeSet::new();
        for c in &self.cons {
            classes.extend(c.coeffs.keys().copied());
        }
        for class in classes {
            if let Some(n) = self.cc.int_value_of_class(class) {
                let d = Lin::var(class).sub(&Lin::constant(n as i128));
                self.cons.push(d.clone());
                self.cons.push(d.scale(-1));
            }
        }
    }

    fn lin_of(&mut self, t: &Term) -> Lin {
        if let Some(n) = const_value(t) {
            return Lin::constant(n as i128);
        }
        match t {
            Term::Arith(ArithOp::Add, a, b) => {
                let la = self.lin_of(a);
                la.add(&self.lin_of(b))
            }
            Term::Arith(ArithOp::Sub, a, b) => {
                let la = self.lin_of(a);
                la.sub(&self.lin_of(b))
            }
            Term::Arith(ArithOp::Mul, a, b) => {
                if let Some(ca) = const_value(a) {
                    self.lin_of(b).scale(ca as i128)
                } else if let Some(cb) = const_value(b) {
                    self.lin_of(a).scale(cb as i128)
                } else {
                    // Non-constant multiplication: treat the whole product
                    // as an opaque unknown.
                    Lin::var(self.cc.class_of(t))
                }
            }
            _ => Lin::var(self.cc.class_of(t)),
        }
    }

    fn lin_diff(&mut self, a: &Term, b: &Term) -> Lin {
        let la = self.lin_of(a);
        la.sub(&self.lin_of(b))
    }

    fn refuted(&self) -> bool {
        if self.refuted || self.cc.contradictory() {
            return true;
        }
        if self.diseqs.iter().any(|(a, b)| a == b) {
            return true;
        }
        feasibility(&self.cons) == Feasibility::Infeasible
    }

    fn entails(&self, goal: &Formula) -> bool {
        let mut cc = self.cc.clone();
        match goal {
            Formula::Cmp(CmpOp::Eq, a, b) => {
                if cc.terms_equal(a, b) {
                    return true;
                }
                self.lia_entails_zero(a, b)
            }
            Formula::Cmp(CmpOp::Ne, a, b) => {
                let (ca, cb) = (cc.class_of(a), cc.class_of(b));
                if self
                    .diseqs
                    .iter()
                    .any(|(x, y)| (*x == ca && *y == cb) || (*x == cb && *y == ca))
                {
                    return true;
                }
                // a != b holds when assuming a = b is infeasible.
                let mut probe = self.clone_for_probe();
                let d = probe.lin_diff(a, b);
                probe.cons.push(d.clone());
                probe.cons.push(d.scale(-1));
                probe.bind_literal_classes();
                feasibility(&probe.cons) == Feasibility::Infeasible
            }
            Formula::Cmp(op, a, b) => {
                let mut probe = self.clone_for_probe();
                // Entailed iff the negation is infeasible.
                let neg = match op {
                    CmpOp::Ge => probe.lin_diff(b, a).sub(&Lin::constant(1)),
                    CmpOp::Gt => probe.lin_diff(b, a),
                    CmpOp::Le => probe.lin_diff(a, b).sub(&Lin::constant(1)),
                    CmpOp::Lt => probe.lin_diff(a, b),
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                };
                probe.cons.push(neg);
                probe.bind_literal_classes();
                feasibility(&probe.cons) == Feasibility::Infeasible
            }
            Formula::Atom(t) => {
                let c = cc.class_of(t);
                let tt = cc.true_node();
                cc.find(c) == cc.find(tt)
            }
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(t) => {
                    let c = cc.class_of(t);
                    let ff = cc.false_node();
                    cc.find(c) == cc.find(ff)
                }
                _ => false,
            },
            Formula::HasType(..) => false,
            Formula::True => true,
            Formula::False => self.refuted(),
            _ => false,
        }
    }

    fn lia_entails_zero(&self, a: &Term, b: &Term) -> bool {
        // a = b entailed iff both (a-b >= 1) and (b-a >= 1) are infeasible.
        for flip in [false, true] {
            let mut probe = self.clone_for_probe();
            let d = if flip {
                probe.lin_diff(b, a)
            } else {
                probe.lin_diff(a, b)
            };
            probe.cons.push(d.sub(&Lin::constant(1)));
            probe.bind_literal_classes();
            if feasibility(&probe.cons) != Feasibility::Infeasible {
                return false;
            }
        }
        true
    }

    fn clone_for_probe(&self) -> Theory {
        Theory {
            cc: self.cc.clone(),
            cons: self.cons.clone(),
            diseqs: self.diseqs.clone(),
            refuted: self.refuted,
        }
    }
}

// ---------------------------------------------------------------------------
// Countermodel search (quantifier-free only)

/// Searches small integer/boolean assignments falsifying
/// `hypotheses |= goal`. Any returned model has been checked by evaluation,
/// including functional consistency of application terms.
pub fn find_countermodel(hypotheses: &[Formula], goal: &Formula) -> Option<String> {
    let mut formulas: Vec<&Formula> = hypotheses.iter().collect();
    formulas.push(goal);

    // Collect unknowns: every distinct Var/App subterm.
    let mut units: Vec<Term> = Vec::new();
    let mut bool_units: BTreeSet<Term> = BTreeSet::new();
    let mut constants: BTreeSet<i64> = BTreeSet::new();
    for f in &formulas {
        collect_units(f, &mut units, &mut bool_units, &mut constants);
    }
    units.sort();
    units.dedup();
    let (bools, ints): (Vec<Term>, Vec<Term>) = units
        .into_iter()
        .partition(|t| bool_units.contains(t));

    if ints.len() > 5 || bools.len() > 4 {
        return None;
    }

    let mut domains: Vec<Vec<i64>> = vec![
        (-1..=1).collect(),
        (-3..=3).collect(),
        (-8..=8).collect(),
    ];
    // Always include nearby values of problem constants.
    let extra: Vec<i64> = constants
        .iter()
        .flat_map(|c| [c - 1, *c, c + 1])
        .collect();
    for d in &mut domains {
        for e in &extra {
            if !d.contains(e) {
                d.push(*e);
            }
        }
        d.sort_unstable();
        d.dedup();
    }

    for domain in domains {
        let total: u128 = (domain.len() as u128)
            .checked_pow(ints.len() as u32)?
            .checked_mul(2u128.checked_pow(bools.len() as u32)?)?;
        if total > 400_000 {
            continue;
        }
        let mut assignment: BTreeMap<Term, ModelValue> = BTreeMap::new();
        if let Some(desc) = search(
            &ints,
            &bools,
            &domain,
            &mut assignment,
            hypotheses,
            goal,
        ) {
            return Some(desc);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelValue {
    Int(i64),
    Bool(bool),
}

fn collect_units(
    f: &Formula,
    units: &mut Vec<Term>,
    bool_units: &mut BTreeSet<Term>,
    constants: &mut BTreeSet<i64>,
) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Cmp(_, a, b) => {
            collect_term_units(a, units, constants);
            collect_term_units(b, units, constants);
        }
        Formula::Atom(t) => {
            collect_term_units(t, units, constants);
            bool_units.insert(t.clone());
        }
        Formula::HasType(t, _) => collect_term_units(t, units, constants),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_units(a, units, bool_units, constants);
            collect_units(b, units, bool_units, constants);
        }
        Formula::Not(a) => collect_units(a, units, bool_units, constants),
        Formula::Forall(..) | Formula::Exists(..) => {}
    }
}

fn collect_term_units(t: &Term, units: &mut Vec<Term>, constants: &mut BTreeSet<i64>) {
    match t {
        Term::Var(_) => units.push(t.clone()),
        Term::Int(n) => {
            constants.insert(*n);
        }
        Term::App { recv, args, .. } => {
            units.push(t.clone());
            collect_term_units(recv, units, constants);
            for a in args {
                collect_term_units(a, units, constants);
            }
        }
        Term::Arith(_, a, b) => {
            collect_term_units(a, units, constants);
            collect_term_units(b, units, constants);
        }
    }
}

fn search(
    ints: &[Term],
    bools: &[Term],
    domain: &[i64],
    assignment: &mut BTreeMap<Term, ModelValue>,
    hypotheses: &[Formula],
    goal: &Formula,
) -> Option<String> {
    if assignment.len() < ints.len() {
        let t = ints[assignment.len()].clone();
        for v in domain {
            assignment.insert(t.clone(), ModelValue::Int(*v));
            if let Some(m) = search(ints, bools, domain, assignment, hypotheses, goal) {
                return Some(m);
            }
        }
        assignment.remove(&t);
        return None;
    }
    let bool_idx = assignment.len() - ints.len();
    if bool_idx < bools.len() {
        let t = &bools[bool_idx];
        for v in [false, true] {
            assignment.insert(t.clone(), ModelValue::Bool(v));
            if let Some(m) = search(ints, bools, domain, assignment, hypotheses, goal) {
                return Some(m);
            }
        }
        assignment.remove(t);
        return None;
    }

    // Functional consistency: equal evaluated children force equal values.
    let apps: Vec<&Term> = assignment
        .keys()
        .filter(|t| matches!(t, Term::App { .. }))
        .collect();
    for (i, a) in apps.iter().enumerate() {
        for b in apps.iter().skip(i + 1) {
            if let (
                Term::App {
                    recv: r1,
                    method: m1,
                    args: a1,
                },
                Term::App {
                    recv: r2,
                    method: m2,
                    args: a2,
                },
            ) = (a, b)
            {
                if m1 == m2 && a1.len() == a2.len() {
                    let children_equal = eval_term(r1, assignment) == eval_term(r2, assignment)
                        && a1
                            .iter()
                            .zip(a2.iter())
                            .all(|(x, y)| eval_term(x, assignment) == eval_term(y, assignment));
                    if children_equal && assignment.get(*a) != assignment.get(*b) {
                        return None;
                    }
                }
            }
        }
    }

    let all_hyps = hypotheses
        .iter()
        .all(|h| eval_formula(h, assignment) == Some(true));
    if all_hyps && eval_formula(goal, assignment) == Some(false) {
        let desc = assignment
            .iter()
            .map(|(t, v)| match v {
                ModelValue::Int(n) => format!("{t} = {n}"),
                ModelValue::Bool(b) => format!("{t} = {b}"),
            })
            .collect::<Vec<_>>()
            .join(", ");
        return Some(desc);
    }
    None
}

fn eval_term(t: &Term, assignment: &BTreeMap<Term, ModelValue>) -> Option<i64> {
    match t {
        Term::Int(n) => Some(*n),
        Term::Var(_) | Term::App { .. } => match assignment.get(t)? {
            ModelValue::Int(n) => Some(*n),
            ModelValue::Bool(b) => Some(*b as i64),
        },
        Term::Arith(op, a, b) => {
            let (a, b) = (eval_term(a, assignment)?, eval_term(b, assignment)?);
            Some(match op {
                ArithOp::Add => a.wrapping_add(b),
                ArithOp::Sub => a.wrapping_sub(b),
                ArithOp::Mul => a.wrapping_mul(b),
            })
        }
    }
}

fn eval_formula(f: &Formula, assignment: &BTreeMap<Term, ModelValue>) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Cmp(op, a, b) => {
            Some(op.eval(eval_term(a, assignment)?, eval_term(b, assignment)?))
        }
        Formula::Atom(t) => match assignment.get(t)? {
            ModelValue::Bool(b) => Some(*b),
            ModelValue::Int(n) => Some(*n != 0),
        },
        Formula::And(a, b) => Some(eval_formula(a, assignment)? && eval_formula(b, assignment)?),
        Formula::Or(a, b) => Some(eval_formula(a, assignment)? || eval_formula(b, assignment)?),
        Formula::Implies(a, b) => {
            Some(!eval_formula(a, assignment)? || eval_formula(b, assignment)?)
        }
        Formula::Not(a) => Some(!eval_formula(a, assignment)?),
        // Sorts are static facts, true in every model we build.
        Formula::HasType(..) => Some(true),
        Formula::Forall(..) | Formula::Exists(..) => None,
    }
}
