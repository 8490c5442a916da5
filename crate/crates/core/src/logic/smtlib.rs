//! SMT-LIB 2 emission for verification obligations, plus a small
//! well-formedness lint used by the test suite.
//!
//! Class names become uninterpreted sorts (`Num` maps to `Int`, `Bool` to
//! `Bool`); each application symbol becomes an uninterpreted function keyed
//! by receiver sort and method name. Hypotheses are asserted, the negated
//! goal is asserted, and the script ends with a single `(check-sat)`, so
//! `unsat` means the obligation is valid.

use super::prover::SortHints;
use super::term::{ArithOp, CmpOp, Formula, Term};
use crate::syntax::{BOOL, NUM};
use std::collections::{BTreeMap, BTreeSet};

struct Emitter<'a> {
    hints: &'a SortHints,
    /// Bound-variable sorts, innermost last.
    binders: Vec<(String, String)>,
    sorts: BTreeSet<String>,
    consts: BTreeMap<String, String>,
    /// fun name -> (arg sorts, ret sort)
    funs: BTreeMap<String, (Vec<String>, String)>,
}

impl<'a> Emitter<'a> {
    fn smt_sort(&mut self, class: &str) -> String {
        match class {
            NUM => "Int".to_string(),
            BOOL => "Bool".to_string(),
            other => {
                let name = sanitize(other);
                self.sorts.insert(name.clone());
                name
            }
        }
    }

    fn var_sort(&self, name: &str) -> Option<String> {
        for (v, s) in self.binders.iter().rev() {
            if v == name {
                return Some(s.clone());
            }
        }
        self.hints.vars.get(name).cloned()
    }

    /// Class name of a term, best effort; `None` falls back to `Num`.
    fn term_class(&self, t: &Term) -> Option<String> {
        match t {
            Term::Var(v) => self.var_sort(v),
            Term::Int(_) => Some(NUM.to_string()),
            Term::Arith(..) => Some(NUM.to_string()),
            Term::App { recv, method, .. } => {
                let rc = self.term_class(recv)?;
                self.hints
                    .methods
                    .get(&(rc, method.clone()))
                    .map(|(_, ret)| ret.clone())
            }
        }
    }

    /// Emits a term, registering declarations as a side effect.
    /// `as_bool` requests a Bool-sorted reading for bare applications.
    fn term(&mut self, t: &Term, as_bool: bool) -> String {
        match t {
            Term::Var(v) => {
                if self.binders.iter().rev().any(|(b, _)| b == v) {
                    return sanitize(v);
                }
                let class = self
                    .var_sort(v)
                    .unwrap_or_else(|| if as_bool { BOOL.into() } else { NUM.into() });
                let sort = self.smt_sort(&class);
                self.consts.insert(sanitize(v), sort);
                sanitize(v)
            }
            Term::Int(n) => {
                if *n < 0 {
                    format!("(- {})", -n)
                } else {
                    n.to_string()
                }
            }
            Term::Arith(op, a, b) => {
                let (a, b) = (self.term(a, false), self.term(b, false));
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                };
                format!("({sym} {a} {b})")
            }
            Term::App { recv, method, args } => {
                let recv_class = self.term_class(recv).unwrap_or_else(|| NUM.to_string());
                let (arg_classes, ret_class) = match self
                    .hints
                    .methods
                    .get(&(recv_class.clone(), method.clone()))
                {
                    Some((args, ret)) => (args.clone(), ret.clone()),
                    None => (
                        args.iter()
                            .map(|a| self.term_class(a).unwrap_or_else(|| NUM.to_string()))
                            .collect(),
                        if as_bool { BOOL.to_string() } else { NUM.to_string() },
                    ),
                };
                let fun = format!("{}_{}", sanitize(&recv_class), sanitize(method));
                let recv_sort = self.smt_sort(&recv_class);
                let mut sig = vec![recv_sort];
                for c in &arg_classes {
                    sig.push(self.smt_sort(c));
                }
                let ret_sort = self.smt_sort(&ret_class);
                self.funs.insert(fun.clone(), (sig, ret_sort));
                let mut parts = vec![fun, self.term(recv, false)];
                for a in args {
                    parts.push(self.term(a, false));
                }
                format!("({})", parts.join(" "))
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> String {
        match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Cmp(op, a, b) => {
                let bool_eq = matches!(op, CmpOp::Eq | CmpOp::Ne)
                    && (self.term_class(a).as_deref() == Some(BOOL)
                        || self.term_class(b).as_deref() == Some(BOOL));
                let (sa, sb) = (self.term(a, bool_eq), self.term(b, bool_eq));
                match op {
                    CmpOp::Eq => format!("(= {sa} {sb})"),
                    CmpOp::Ne => format!("(not (= {sa} {sb}))"),
                    CmpOp::Lt => format!("(< {sa} {sb})"),
                    CmpOp::Le => format!("(<= {sa} {sb})"),
                    CmpOp::Gt => format!("(> {sa} {sb})"),
                    CmpOp::Ge => format!("(>= {sa} {sb})"),
                }
            }
            Formula::Atom(t) => self.term(t, true),
            Formula::And(a, b) => format!("(and {} {})", self.formula(a), self.formula(b)),
            Formula::Or(a, b) => format!("(or {} {})", self.formula(a), self.formula(b)),
            Formula::Implies(a, b) => format!("(=> {} {})", self.formula(a), self.formula(b)),
            Formula::Not(a) => format!("(not {})", self.formula(a)),
            Formula::Forall(binder, body) => {
                let sort = self.smt_sort(&binder.class);
                self.binders.push((binder.var.clone(), binder.class.clone()));
                let body = self.formula(body);
                self.binders.pop();
                format!("(forall (({} {sort})) {body})", sanitize(&binder.var))
            }
            Formula::Exists(binder, body) => {
                let sort = self.smt_sort(&binder.class);
                self.binders.push((binder.var.clone(), binder.class.clone()));
                let body = self.formula(body);
                self.binders.pop();
                format!("(exists (({} {sort})) {body})", sanitize(&binder.var))
            }
            // Type atoms are discharged by sort declarations.
            Formula::HasType(t, _) => {
                self.term(t, false);
                "true".into()
            }
        }
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Renders an obligation `hypotheses |= goal` as an SMT-LIB 2 script whose
/// `unsat` answer certifies validity. `axioms` are raw assertion lines
/// appended after the declarations.
pub fn emit_smtlib(
    hypotheses: &[Formula],
    goal: &Formula,
    hints: &SortHints,
    axioms: &[String],
) -> String {
    let mut em = Emitter {
        hints,
        binders: Vec::new(),
        sorts: BTreeSet::new(),
        consts: BTreeMap::new(),
        funs: BTreeMap::new(),
    };
    let hyp_lines: Vec<String> = hypotheses.iter().map(|h| em.formula(h)).collect();
    let goal_line = em.formula(goal);

    let mut out = String::new();
    out.push_str("(set-logic ALL)\n");
    for s in &em.sorts {
        out.push_str(&format!("(declare-sort {s} 0)\n"));
    }
    for (name, sort) in &em.consts {
        out.push_str(&format!("(declare-const {name} {sort})\n"));
    }
    for (name, (sig, ret)) in &em.funs {
        out.push_str(&format!("(declare-fun {name} ({}) {ret})\n", sig.join(" ")));
    }
    for ax in axioms {
        let line = ax.trim();
        if !line.is_empty() && !line.starts_with(';') {
            out.push_str(line);
            out.push('\n');
        }
    }
    for h in &hyp_lines {
        out.push_str(&format!("(assert {h})\n"));
    }
    out.push_str(&format!("(assert (not {goal_line}))\n"));
    out.push_str("(check-sat)\n");
    out
}

/// Structural well-formedness check for emitted scripts: balanced
/// s-expressions, exactly one `check-sat`, and every symbol declared (or a
/// known builtin) before use.
pub fn lint_smtlib(script: &str) -> Result<(), String> {
    const BUILTINS: &[&str] = &[
        "and", "or", "not", "=>", "=", "<", "<=", ">", ">=", "+", "-", "*", "distinct", "true",
        "false", "Int", "Bool", "ite", "let", "forall", "exists",
    ];

    let tokens = tokenize(script)?;
    let exprs = parse_sexprs(&tokens)?;

    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut check_sats = 0;
    for e in &exprs {
        match e {
            Sexpr::List(items) => {
                let head = match items.first() {
                    Some(Sexpr::Atom(a)) => a.as_str(),
                    _ => return Err("expression does not start with a symbol".into()),
                };
                match head {
                    "set-logic" | "set-option" | "set-info" => {}
                    "check-sat" => check_sats += 1,
                    "declare-sort" => {
                        if let Some(Sexpr::Atom(name)) = items.get(1) {
                            declared.insert(name.clone());
                        }
                    }
                    "declare-const" => {
                        if let Some(Sexpr::Atom(name)) = items.get(1) {
                            declared.insert(name.clone());
                        }
                        check_symbols(items.get(2), &declared, BUILTINS)?;
                    }
                    "declare-fun" | "define-fun" => {
                        if let Some(Sexpr::Atom(name)) = items.get(1) {
                            declared.insert(name.clone());
                        }
                        for item in items.iter().skip(2) {
                            check_symbols(Some(item), &declared, BUILTINS)?;
                        }
                    }
                    "assert" => {
                        let mut bound = Vec::new();
                        check_term(items.get(1), &declared, BUILTINS, &mut bound)?;
                    }
                    other => return Err(format!("unexpected command {other}")),
                }
            }
            Sexpr::Atom(a) => return Err(format!("stray atom at top level: {a}")),
        }
    }
    if check_sats != 1 {
        return Err(format!("expected exactly one check-sat, found {check_sats}"));
    }
    Ok(())
}

#[derive(Debug)]
enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

fn tokenize(s: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_sexprs(tokens: &[String]) -> Result<Vec<Sexpr>, String> {
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        let (e, next) = parse_one(tokens, pos)?;
        out.push(e);
        pos = next;
    }
    Ok(out)
}

fn parse_one(tokens: &[String], pos: usize) -> Result<(Sexpr, usize), String> {
    match tokens.get(pos).map(|s| s.as_str()) {
        None => Err("unexpected end of input".into()),
        Some("(") => {
            let mut items = Vec::new();
            let mut p = pos + 1;
            loop {
                match tokens.get(p).map(|s| s.as_str()) {
                    None => return Err("unbalanced parenthesis".into()),
                    Some(")") => return Ok((Sexpr::List(items), p + 1)),
                    _ => {
                        let (e, next) = parse_one(tokens, p)?;
                        items.push(e);
                        p = next;
                    }
                }
            }
        }
        Some(")") => Err("unbalanced closing parenthesis".into()),
        Some(atom) => Ok((Sexpr::Atom(atom.to_string()), pos + 1)),
    }
}

fn check_symbols(
    e: Option<&Sexpr>,
    declared: &BTreeSet<String>,
    builtins: &[&str],
) -> Result<(), String> {
    let mut bound = Vec::new();
    check_term(e, declared, builtins, &mut bound)
}

fn check_term(
    e: Option<&Sexpr>,
    declared: &BTreeSet<String>,
    builtins: &[&str],
    bound: &mut Vec<String>,
) -> Result<(), String> {
    match e {
        None => Err("missing expression".into()),
        Some(Sexpr::Atom(a)) => {
            if a.parse::<i64>().is_ok()
                || builtins.contains(&a.as_str())
                || declared.contains(a)
                || bound.contains(a)
            {
                Ok(())
            } else {
                Err(format!("symbol used before declaration: {a}"))
            }
        }
        Some(Sexpr::List(items)) => {
            let head = items.first();
            if let Some(Sexpr::Atom(h)) = head {
                if h == "forall" || h == "exists" {
                    // ((v sort) ...) binder list
                    let added = match items.get(1) {
                        Some(Sexpr::List(binders)) => {
                            let mut names = Vec::new();
                            for b in binders {
                                if let Sexpr::List(pair) = b {
                                    if let Some(Sexpr::Atom(v)) = pair.first() {
                                        names.push(v.clone());
                                    }
                                    if let Some(sort) = pair.get(1) {
                                        check_term(Some(sort), declared, builtins, bound)?;
                                    }
                                }
                            }
                            names
                        }
                        _ => return Err("malformed binder list".into()),
                    };
                    bound.extend(added.iter().cloned());
                    check_term(items.get(2), declared, builtins, bound)?;
                    for _ in added {
                        bound.pop();
                    }
                    return Ok(());
                }
            }
            for item in items {
                check_term(Some(item), declared, builtins, bound)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Term;

    #[test]
    fn trivial_goal_emits_well_formed_script() {
        let hints = SortHints::default();
        let script = emit_smtlib(&[], &Formula::True, &hints, &[]);
        lint_smtlib(&script).unwrap();
        assert_eq!(script.matches("(check-sat)").count(), 1);
    }

    #[test]
    fn element_obligation_declares_sort_and_fun() {
        // hypotheses: list = _f0, (true ==> result = _f0.element())
        // goal: result = list.element()
        let mut hints = SortHints::default();
        hints.vars.insert("list".into(), "List".into());
        hints.vars.insert("_f0".into(), "List".into());
        hints.vars.insert("result".into(), NUM.into());
        hints
            .methods
            .insert(("List".into(), "element".into()), (vec![], NUM.into()));
        let h1 = Formula::eq(Term::var("list"), Term::var("_f0"));
        let h2 = Formula::implies(
            Formula::True,
            Formula::eq(Term::result(), Term::app(Term::var("_f0"), "element", vec![])),
        );
        let goal = Formula::eq(Term::result(), Term::app(Term::var("list"), "element", vec![]));
        let script = emit_smtlib(&[h1, h2], &goal, &hints, &[]);
        lint_smtlib(&script).unwrap();
        assert!(script.contains("(declare-sort List 0)"));
        assert!(script.contains("(declare-fun List_element (List) Int)"));
        assert!(script.contains("(assert (not (= result (List_element list))))"));
    }
}
