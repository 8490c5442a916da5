//! The combined typing-and-verification judgment.
//!
//! Typing an expression produces its class together with accumulated
//! *knowledge* (facts the verifier may assume) and an *obligation* (what
//! must be proven). Checking a concrete method builds one verification
//! condition and issues exactly one prover call; abstract methods are
//! always correct.

use crate::flatten::FlattenedTable;
use crate::logic::{
    subst_of, substitute, Formula, Prover, SortHints, Term, VerificationResult,
};
use crate::syntax::{Body, DefKind, Expr, Method, MethodHeader, BOOL, NUM};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeError {
    UnknownVariable { name: String },
    UnknownClass { name: String },
    UnknownMethod { class: String, method: String },
    ArityMismatch { class: String, method: String, expected: usize, got: usize },
    ArgumentType { method: String, expected: String, got: String },
    ReturnType { method: String, declared: String, computed: String },
    NewOnInterface { class: String },
    NotInstantiable { class: String, offenders: Vec<String> },
    BranchTypeMismatch { then_class: String, else_class: String },
    GuardError { message: String },
}

impl std::fmt::Display for TypeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TypeError::UnknownVariable { name } => write!(f, "unknown variable `{name}`"),
            TypeError::UnknownClass { name } => write!(f, "unknown class `{name}`"),
            TypeError::UnknownMethod { class, method } => {
                write!(f, "no method `{method}` on `{class}`")
            }
            TypeError::ArityMismatch { class, method, expected, got } => write!(
                f,
                "`{class}.{method}` expects {expected} argument(s), got {got}"
            ),
            TypeError::ArgumentType { method, expected, got } => {
                write!(f, "argument of `{method}`: `{got}` is not a `{expected}`")
            }
            TypeError::ReturnType { method, declared, computed } => write!(
                f,
                "body of `{method}` has type `{computed}`, declared `{declared}`"
            ),
            TypeError::NewOnInterface { class } => {
                write!(f, "cannot instantiate interface `{class}`")
            }
            TypeError::NotInstantiable { class, offenders } => write!(
                f,
                "class `{class}` is not instantiable; non-getter abstract methods: {}",
                offenders.join(", ")
            ),
            TypeError::BranchTypeMismatch { then_class, else_class } => write!(
                f,
                "conditional branches have unrelated types `{then_class}` and `{else_class}`"
            ),
            TypeError::GuardError { message } => write!(f, "invalid guard: {message}"),
        }
    }
}

/// The typing context `Γ`: an ordered map from variables to classes, with
/// `this` first for method bodies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeEnv {
    bindings: Vec<(String, String)>,
}

impl TypeEnv {
    pub fn for_method(owner: &str, header: &MethodHeader) -> TypeEnv {
        let mut bindings = vec![("this".to_string(), owner.to_string())];
        for (class, var) in &header.params {
            bindings.push((var.clone(), class.clone()));
        }
        TypeEnv { bindings }
    }

    /// An empty environment for typing the top-level expression.
    pub fn closed() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn lookup(&self, var: &str) -> Option<&str> {
        self.bindings
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, c)| c.as_str())
    }

    pub fn bindings(&self) -> &[(String, String)] {
        &self.bindings
    }
}

/// Result of typing an expression: class, knowledge, obligation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedResult {
    pub class: String,
    pub knowledge: Formula,
    pub obligation: Formula,
}

/// Issues `_f0, _f1, ...`; reset at the start of every method check so
/// obligations are deterministic. User identifiers cannot start with an
/// underscore, so collisions are impossible.
#[derive(Debug, Default)]
pub struct FreshVars {
    counter: u64,
}

impl FreshVars {
    pub fn next_name(&mut self) -> String {
        let name = format!("_f{}", self.counter);
        self.counter += 1;
        name
    }
}

/// Resolution context: the structural flattened table plus, during
/// per-definition checking, the current body for calls on `this`.
pub struct TypingCtx<'a> {
    pub table: &'a FlattenedTable,
    pub owner: &'a str,
    pub owner_kind: DefKind,
    pub owner_body: &'a Body,
}

impl<'a> TypingCtx<'a> {
    pub fn body_of(&self, class: &str) -> Option<(&DefKind, &Body)> {
        if class == self.owner {
            // Calls on `this` resolve against the current body, which
            // already includes headers imported from its interfaces.
            return Some((&self.owner_kind, self.owner_body));
        }
        self.table.lookup(class)
    }

    /// Resolution for `new`: instantiability is a property of the whole
    /// class, so the flattened table takes precedence.
    fn body_for_new(&self, class: &str) -> Option<(&DefKind, &Body)> {
        self.table.lookup(class).or_else(|| {
            if class == self.owner {
                Some((&self.owner_kind, self.owner_body))
            } else {
                None
            }
        })
    }

    fn header_of(&self, class: &str, method: &str) -> Result<&MethodHeader, TypeError> {
        let (_, body) = self.body_of(class).ok_or_else(|| {
            if class == NUM || class == BOOL {
                TypeError::UnknownMethod {
                    class: class.to_string(),
                    method: method.to_string(),
                }
            } else {
                TypeError::UnknownClass {
                    name: class.to_string(),
                }
            }
        })?;
        body.method(method)
            .map(|m| &m.header)
            .ok_or_else(|| TypeError::UnknownMethod {
                class: class.to_string(),
                method: method.to_string(),
            })
    }
}

/// Reflexive-transitive closure of the `implements` lists.
pub fn instanceof(ctx: &TypingCtx<'_>, sub: &str, sup: &str) -> bool {
    if sub == sup {
        return true;
    }
    let mut seen = BTreeSet::new();
    let mut queue = vec![sub.to_string()];
    while let Some(c) = queue.pop() {
        if !seen.insert(c.clone()) {
            continue;
        }
        if let Some((_, body)) = ctx.body_of(&c) {
            for i in &body.interfaces {
                if i == sup {
                    return true;
                }
                queue.push(i.clone());
            }
        }
    }
    false
}

/// Types an expression, accumulating knowledge and obligation.
pub fn type_expr(
    ctx: &TypingCtx<'_>,
    env: &TypeEnv,
    fresh: &mut FreshVars,
    e: &Expr,
) -> Result<TypedResult, TypeError> {
    match e {
        Expr::Var(x) => {
            let class = env
                .lookup(x)
                .ok_or_else(|| TypeError::UnknownVariable { name: x.clone() })?
                .to_string();
            let knowledge = Formula::and(
                Formula::HasType(Term::result(), class.clone()),
                Formula::eq(Term::result(), Term::var(x.clone())),
            );
            Ok(TypedResult {
                class,
                knowledge,
                obligation: Formula::True,
            })
        }
        Expr::Int(n) => {
            let knowledge = Formula::and(
                Formula::HasType(Term::result(), NUM.to_string()),
                Formula::eq(Term::result(), Term::Int(*n)),
            );
            Ok(TypedResult {
                class: NUM.to_string(),
                knowledge,
                obligation: Formula::True,
            })
        }
        Expr::Call { recv, method, args } => {
            let recv_typed = type_expr(ctx, env, fresh, recv)?;
            let header = ctx.header_of(&recv_typed.class, method)?.clone();
            if header.params.len() != args.len() {
                return Err(TypeError::ArityMismatch {
                    class: recv_typed.class,
                    method: method.clone(),
                    expected: header.params.len(),
                    got: args.len(),
                });
            }
            let mut arg_typed = Vec::with_capacity(args.len());
            for (arg, (declared, _)) in args.iter().zip(header.params.iter()) {
                let t = type_expr(ctx, env, fresh, arg)?;
                if !instanceof(ctx, &t.class, declared) {
                    return Err(TypeError::ArgumentType {
                        method: method.clone(),
                        expected: declared.clone(),
                        got: t.class,
                    });
                }
                arg_typed.push(t);
            }

            // Fresh names for the receiver's and arguments' results.
            let recv_name = fresh.next_name();
            let arg_names: Vec<String> = arg_typed.iter().map(|_| fresh.next_name()).collect();

            let mut renaming = subst_of([("this", Term::var(recv_name.clone()))]);
            for ((_, param), name) in header.params.iter().zip(arg_names.iter()) {
                renaming.insert(param.clone(), Term::var(name.clone()));
            }
            let pre = substitute(&header.spec.pre, &renaming);
            let post = substitute(&header.spec.post, &renaming);

            let mut knowledge = vec![Formula::HasType(Term::result(), header.return_type.clone())];
            knowledge.push(rename_result(&recv_typed.knowledge, &recv_name));
            for (t, name) in arg_typed.iter().zip(arg_names.iter()) {
                knowledge.push(rename_result(&t.knowledge, name));
            }
            knowledge.push(Formula::implies(pre.clone(), post));

            let mut obligation = vec![recv_typed.obligation];
            obligation.extend(arg_typed.into_iter().map(|t| t.obligation));
            obligation.push(pre);

            Ok(TypedResult {
                class: header.return_type,
                knowledge: Formula::conj(knowledge),
                obligation: Formula::conj_simplified(obligation),
            })
        }
        Expr::New { class, args } => {
            let (kind, body) = ctx
                .body_for_new(class)
                .ok_or_else(|| TypeError::UnknownClass { name: class.clone() })?;
            if body.is_interface || *kind != DefKind::Class {
                return Err(TypeError::NewOnInterface { class: class.clone() });
            }
            let offenders: Vec<String> = body
                .abstract_methods()
                .filter(|m| !m.header.params.is_empty())
                .map(|m| m.header.name.clone())
                .collect();
            if !offenders.is_empty() {
                return Err(TypeError::NotInstantiable {
                    class: class.clone(),
                    offenders,
                });
            }
            let getters: Vec<MethodHeader> =
                body.getters().map(|m| m.header.clone()).collect();
            if getters.len() != args.len() {
                return Err(TypeError::ArityMismatch {
                    class: class.clone(),
                    method: "new".to_string(),
                    expected: getters.len(),
                    got: args.len(),
                });
            }

            let mut arg_typed = Vec::with_capacity(args.len());
            for (arg, getter) in args.iter().zip(getters.iter()) {
                let t = type_expr(ctx, env, fresh, arg)?;
                if !instanceof(ctx, &t.class, &getter.return_type) {
                    return Err(TypeError::ArgumentType {
                        method: getter.name.clone(),
                        expected: getter.return_type.clone(),
                        got: t.class,
                    });
                }
                arg_typed.push(t);
            }
            let arg_names: Vec<String> = arg_typed.iter().map(|_| fresh.next_name()).collect();

            let mut knowledge = vec![Formula::HasType(Term::result(), class.clone())];
            let mut obligation: Vec<Formula> =
                arg_typed.iter().map(|t| t.obligation.clone()).collect();
            let this_to_result = subst_of([("this", Term::result())]);
            for ((t, name), getter) in arg_typed.iter().zip(arg_names.iter()).zip(getters.iter())
            {
                // S'_i = S_i[this := result]; knowledge links the getter to
                // the argument's value, guarded by the getter precondition.
                let pre = substitute(&getter.spec.pre, &this_to_result);
                let link = Formula::eq(
                    Term::app(Term::result(), getter.name.clone(), vec![]),
                    Term::var(name.clone()),
                );
                knowledge.push(Formula::and(
                    rename_result(&t.knowledge, name),
                    Formula::implies(pre.clone(), link),
                ));
                obligation.push(pre);
            }

            Ok(TypedResult {
                class: class.clone(),
                knowledge: Formula::conj(knowledge),
                obligation: Formula::conj_simplified(obligation),
            })
        }
        Expr::Ite {
            guard,
            then_branch,
            else_branch,
        } => {
            let g = guard
                .to_formula()
                .map_err(|message| TypeError::GuardError { message })?;
            let (guard_knowledge, guard_obligation) = type_guard_apps(ctx, env, &g)?;

            let then_typed = type_expr(ctx, env, fresh, then_branch)?;
            let else_typed = type_expr(ctx, env, fresh, else_branch)?;
            let class = if then_typed.class == else_typed.class {
                then_typed.class.clone()
            } else if instanceof(ctx, &then_typed.class, &else_typed.class) {
                else_typed.class.clone()
            } else if instanceof(ctx, &else_typed.class, &then_typed.class) {
                then_typed.class.clone()
            } else {
                return Err(TypeError::BranchTypeMismatch {
                    then_class: then_typed.class,
                    else_class: else_typed.class,
                });
            };
            let then_name = fresh.next_name();
            let else_name = fresh.next_name();

            let knowledge = Formula::conj(vec![
                Formula::HasType(Term::result(), class.clone()),
                guard_knowledge,
                rename_result(&then_typed.knowledge, &then_name),
                rename_result(&else_typed.knowledge, &else_name),
                Formula::implies(g.clone(), Formula::eq(Term::result(), Term::var(then_name))),
                Formula::implies(
                    Formula::not(g.clone()),
                    Formula::eq(Term::result(), Term::var(else_name)),
                ),
            ]);
            // Branch obligations hold only under their path condition.
            let obligation = Formula::conj_simplified(vec![
                guard_obligation,
                guarded(g.clone(), then_typed.obligation),
                guarded(Formula::not(g), else_typed.obligation),
            ]);
            Ok(TypedResult {
                class,
                knowledge,
                obligation,
            })
        }
    }
}

fn guarded(path: Formula, obligation: Formula) -> Formula {
    if obligation == Formula::True {
        Formula::True
    } else {
        Formula::implies(path, obligation)
    }
}

/// `P[result := x']`.
fn rename_result(f: &Formula, fresh_name: &str) -> Formula {
    substitute(f, &subst_of([("result", Term::var(fresh_name))]))
}

/// Knowledge and obligations contributed by method applications inside a
/// guard: each application assumes its contract at the applied terms and
/// requires its precondition.
fn type_guard_apps(
    ctx: &TypingCtx<'_>,
    env: &TypeEnv,
    g: &Formula,
) -> Result<(Formula, Formula), TypeError> {
    let mut knowledge = Vec::new();
    let mut obligation = Vec::new();
    let mut seen = BTreeSet::new();
    for app in g.app_subterms() {
        if !seen.insert(app.clone()) {
            continue;
        }
        let (recv, method, args) = match app {
            Term::App { recv, method, args } => (recv, method, args),
            _ => unreachable!(),
        };
        let recv_class = term_class(ctx, env, recv)?;
        let header = ctx.header_of(&recv_class, method)?.clone();
        if header.params.len() != args.len() {
            return Err(TypeError::ArityMismatch {
                class: recv_class,
                method: method.clone(),
                expected: header.params.len(),
                got: args.len(),
            });
        }
        for (arg, (declared, _)) in args.iter().zip(header.params.iter()) {
            let got = term_class(ctx, env, arg)?;
            if !instanceof(ctx, &got, declared) {
                return Err(TypeError::ArgumentType {
                    method: method.clone(),
                    expected: declared.clone(),
                    got,
                });
            }
        }
        let (pre, post) = instantiate_spec_at(&header, recv, args, app);
        knowledge.push(Formula::implies(pre.clone(), post));
        obligation.push(pre);
    }
    Ok((
        Formula::conj(knowledge),
        Formula::conj_simplified(obligation),
    ))
}

/// Instantiates a contract at concrete terms: `this := recv`,
/// parameters to argument terms, and `result` (in the post) to the
/// application term itself.
fn instantiate_spec_at(
    header: &MethodHeader,
    recv: &Term,
    args: &[Term],
    app: &Term,
) -> (Formula, Formula) {
    let mut mapping = subst_of([("this", recv.clone())]);
    for ((_, param), arg) in header.params.iter().zip(args.iter()) {
        mapping.insert(param.clone(), arg.clone());
    }
    let pre = substitute(&header.spec.pre, &mapping);
    let mut post_map = mapping;
    post_map.insert("result".to_string(), app.clone());
    let post = substitute(&header.spec.post, &post_map);
    (pre, post)
}

/// Static class of a spec/guard term.
pub fn term_class(
    ctx: &TypingCtx<'_>,
    env: &TypeEnv,
    t: &Term,
) -> Result<String, TypeError> {
    match t {
        Term::Var(v) => env
            .lookup(v)
            .map(|c| c.to_string())
            .ok_or_else(|| TypeError::UnknownVariable { name: v.clone() }),
        Term::Int(_) => Ok(NUM.to_string()),
        Term::Arith(_, a, b) => {
            for side in [a, b] {
                let c = term_class(ctx, env, side)?;
                if c != NUM {
                    return Err(TypeError::GuardError {
                        message: format!("arithmetic on non-{NUM} term `{side}`"),
                    });
                }
            }
            Ok(NUM.to_string())
        }
        Term::App { recv, method, .. } => {
            let recv_class = term_class(ctx, env, recv)?;
            Ok(ctx.header_of(&recv_class, method)?.return_type.clone())
        }
    }
}

// ---------------------------------------------------------------------------
// Verification conditions

/// The single verification condition of a concrete method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vc {
    pub owner: String,
    pub method: String,
    /// `Γ`: `this` plus parameters.
    pub gamma: Vec<(String, String)>,
    /// `Pre(S)` of the method under check.
    pub pre: Formula,
    /// Accumulated knowledge `P` from typing the body.
    pub knowledge: Formula,
    /// Contracts of same-body methods referenced by this method's spec.
    pub contracts: Vec<Formula>,
    /// Accumulated obligation `P'`.
    pub obligation: Formula,
    /// `Post(S)`.
    pub post: Formula,
}

impl Vc {
    /// Hypotheses handed to the verifier: `Γ` as type atoms, the method
    /// precondition, the knowledge, and referenced same-body contracts.
    pub fn hypotheses(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = self
            .gamma
            .iter()
            .map(|(v, c)| Formula::HasType(Term::var(v.clone()), c.clone()))
            .collect();
        if self.pre != Formula::True {
            out.push(self.pre.clone());
        }
        if self.knowledge != Formula::True {
            out.push(self.knowledge.clone());
        }
        out.extend(self.contracts.iter().cloned());
        out
    }

    /// Goal: obligation plus postcondition.
    pub fn goal(&self) -> Formula {
        Formula::conj_simplified(vec![self.obligation.clone(), self.post.clone()])
    }

    /// Stable text form for golden files.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "definition: {}", self.owner);
        let _ = writeln!(out, "method: {}", self.method);
        let gamma = self
            .gamma
            .iter()
            .map(|(v, c)| format!("{v}:{c}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "gamma: {gamma}");
        let _ = writeln!(out, "pre: {}", self.pre);
        let _ = writeln!(out, "knowledge:");
        for c in self.knowledge.conjuncts() {
            let _ = writeln!(out, "  {c}");
        }
        if !self.contracts.is_empty() {
            let _ = writeln!(out, "contracts:");
            for c in &self.contracts {
                let _ = writeln!(out, "  {c}");
            }
        }
        let _ = writeln!(out, "obligation: {}", self.obligation);
        let _ = writeln!(out, "post: {}", self.post);
        let _ = writeln!(out, "goal: {}", self.goal());
        out
    }

    /// Sort information for SMT-LIB emission, recovered from the type atoms
    /// and the resolution context.
    pub fn sort_hints(&self, ctx: &TypingCtx<'_>) -> SortHints {
        let mut hints = SortHints::default();
        for (v, c) in &self.gamma {
            hints.vars.insert(v.clone(), c.clone());
        }
        let mut formulas: Vec<Formula> = self.hypotheses();
        formulas.push(self.goal());
        for f in &formulas {
            for c in f.conjuncts() {
                if let Formula::HasType(Term::Var(v), class) = c {
                    hints.vars.entry(v.clone()).or_insert_with(|| class.clone());
                }
            }
            collect_hastype(f, &mut hints.vars);
        }
        // Resolve application signatures to a fixpoint as receiver classes
        // become known.
        for _ in 0..4 {
            let mut changed = false;
            for f in &formulas {
                for app in f.app_subterms() {
                    if let Term::App { recv, method, .. } = app {
                        if let Some(rc) = hint_term_class(&hints, recv) {
                            let key = (rc.clone(), method.clone());
                            if hints.methods.contains_key(&key) {
                                continue;
                            }
                            if let Some((_, body)) = ctx.body_of(&rc) {
                                if let Some(m) = body.method(method) {
                                    hints.methods.insert(
                                        key,
                                        (
                                            m.header.params.iter().map(|(c, _)| c.clone()).collect(),
                                            m.header.return_type.clone(),
                                        ),
                                    );
                                    changed = true;
                                }
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        hints
    }
}

fn collect_hastype(f: &Formula, vars: &mut BTreeMap<String, String>) {
    match f {
        Formula::HasType(Term::Var(v), class) => {
            vars.entry(v.clone()).or_insert_with(|| class.clone());
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_hastype(a, vars);
            collect_hastype(b, vars);
        }
        Formula::Not(a) => collect_hastype(a, vars),
        _ => {}
    }
}

fn hint_term_class(hints: &SortHints, t: &Term) -> Option<String> {
    match t {
        Term::Var(v) => hints.vars.get(v).cloned(),
        Term::Int(_) | Term::Arith(..) => Some(NUM.to_string()),
        Term::App { recv, method, .. } => {
            let rc = hint_term_class(hints, recv)?;
            hints.methods.get(&(rc, method.clone())).map(|(_, r)| r.clone())
        }
    }
}

/// Contracts of same-body methods whose application terms (on `this`)
/// occur in the given formulas, saturated transitively. This realizes the
/// verifier's access to the declaration table.
pub fn same_body_contracts(body: &Body, roots: &[&Formula]) -> Vec<Formula> {
    saturate_contracts(
        &|name, arity| {
            body.method(name)
                .filter(|m| m.header.params.len() == arity)
                .map(|m| vec![m.header.clone()])
                .unwrap_or_default()
        },
        roots,
    )
}

/// Generic contract saturation over a header lookup: every `this.m(..)`
/// application occurring in the roots (or in an already-instantiated
/// contract) pulls in each matching header's contract, instantiated at the
/// application's terms. Bounded so self-referential contracts terminate.
pub fn saturate_contracts(
    lookup: &dyn Fn(&str, usize) -> Vec<MethodHeader>,
    roots: &[&Formula],
) -> Vec<Formula> {
    let mut out = Vec::new();
    let mut visited: BTreeSet<Term> = BTreeSet::new();
    let mut frontier: Vec<Formula> = roots.iter().map(|f| (*f).clone()).collect();
    for _ in 0..4 {
        let mut next = Vec::new();
        for f in &frontier {
            for app in f.app_subterms() {
                let (recv, method, args) = match app {
                    Term::App { recv, method, args } => (recv, method, args),
                    _ => continue,
                };
                if !matches!(recv.as_ref(), Term::Var(v) if v == "this") {
                    continue;
                }
                if !visited.insert(app.clone()) {
                    continue;
                }
                for header in lookup(method, args.len()) {
                    let (pre, post) = instantiate_spec_at(&header, recv, args, app);
                    let contract = Formula::implies(pre, post);
                    next.push(contract.clone());
                    out.push(contract);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

/// Outcome of checking one method.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub result: VerificationResult,
    pub vc: Option<Vc>,
}

/// Checks one method: abstract methods are correct by rule; a concrete
/// method is typed and verified with a single prover call.
pub fn check_method(
    ctx: &TypingCtx<'_>,
    method: &Method,
    prover: &Prover,
) -> Result<MethodOutcome, TypeError> {
    let body_expr = match &method.body {
        None => {
            return Ok(MethodOutcome {
                result: VerificationResult::Valid,
                vc: None,
            })
        }
        Some(e) => e,
    };
    let env = TypeEnv::for_method(ctx.owner, &method.header);
    let mut fresh = FreshVars::default();
    let typed = type_expr(ctx, &env, &mut fresh, body_expr)?;
    if !instanceof(ctx, &typed.class, &method.header.return_type) {
        return Err(TypeError::ReturnType {
            method: method.header.name.clone(),
            declared: method.header.return_type.clone(),
            computed: typed.class,
        });
    }
    let spec = &method.header.spec;
    let contracts = same_body_contracts(ctx.owner_body, &[&spec.pre, &spec.post]);
    let vc = Vc {
        owner: ctx.owner.to_string(),
        method: method.header.name.clone(),
        gamma: env.bindings().to_vec(),
        pre: spec.pre.clone(),
        knowledge: typed.knowledge,
        contracts,
        obligation: typed.obligation,
        post: spec.post.clone(),
    };
    let result = prover
        .implies_with_hints(&vc.hypotheses(), &vc.goal(), Some(&vc.sort_hints(ctx)))
        .unwrap_or_else(|e| VerificationResult::Unknown(e.to_string()));
    Ok(MethodOutcome {
        result,
        vc: Some(vc),
    })
}

/// Checks every method of a body, in declaration order.
pub fn check_body(
    ctx: &TypingCtx<'_>,
    prover: &Prover,
) -> Vec<(String, Result<MethodOutcome, TypeError>)> {
    ctx.owner_body
        .methods
        .iter()
        .map(|m| (m.header.name.clone(), check_method(ctx, m, prover)))
        .collect()
}

/// Types and verifies the top-level expression (no `this`, no parameters).
pub fn check_main(
    table: &FlattenedTable,
    main: &Expr,
    prover: &Prover,
) -> Result<(TypedResult, VerificationResult), TypeError> {
    let empty = Body::default();
    let ctx = TypingCtx {
        table,
        owner: "",
        owner_kind: DefKind::Trait,
        owner_body: &empty,
    };
    let env = TypeEnv::closed();
    let mut fresh = FreshVars::default();
    let typed = type_expr(&ctx, &env, &mut fresh, main)?;
    let result = prover
        .implies(&[typed.knowledge.clone()], &typed.obligation)
        .unwrap_or_else(|e| VerificationResult::Unknown(e.to_string()));
    Ok((typed, result))
}
