//! Terms and formulas of the specification logic: first-order logic with
//! equality, linear integer arithmetic, and uninterpreted method-application
//! terms.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Arithmetic operators usable inside spec terms and guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

/// Comparison relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// Evaluates the relation on concrete integers.
    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Logical terms. `Var` covers the distinguished `this` and `result`
/// variables; `App` is an uninterpreted method-application term such as
/// `list.element()`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Int(i64),
    App {
        recv: Box<Term>,
        method: String,
        args: Vec<Term>,
    },
    Arith(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn this() -> Term {
        Term::var("this")
    }

    pub fn result() -> Term {
        Term::var("result")
    }

    pub fn app(recv: Term, method: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App {
            recv: Box::new(recv),
            method: method.into(),
            args,
        }
    }

    /// Free variables, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.iter().any(|x| x == v) {
                    out.push(v.clone());
                }
            }
            Term::Int(_) => {}
            Term::App { recv, args, .. } => {
                recv.collect_vars(out);
                for a in args {
                    a.collect_vars(out);
                }
            }
            Term::Arith(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// All application subterms, innermost first, left to right.
    pub fn app_subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_apps(&mut out);
        out
    }

    fn collect_apps<'a>(&'a self, out: &mut Vec<&'a Term>) {
        match self {
            Term::Var(_) | Term::Int(_) => {}
            Term::App { recv, args, .. } => {
                recv.collect_apps(out);
                for a in args {
                    a.collect_apps(out);
                }
                out.push(self);
            }
            Term::Arith(_, a, b) => {
                a.collect_apps(out);
                b.collect_apps(out);
            }
        }
    }
}

/// Formulas of the specification logic.
///
/// `Atom` is a boolean-valued method application used as a proposition
/// (e.g. `list.contains(result)`); `HasType` is the `term : C` atom used by
/// the typing judgment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, Term, Term),
    Atom(Term),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Forall(Binder, Box<Formula>),
    Exists(Binder, Box<Formula>),
    HasType(Term, String),
}

/// A quantifier binder: variable name and its class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Binder {
    pub var: String,
    pub class: String,
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    /// Conjunction of a sequence, with `true` as the empty product.
    pub fn conj(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = fs.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Conjunction that drops `true` units, keeping obligations readable.
    pub fn conj_simplified(fs: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::conj(fs.into_iter().filter(|f| *f != Formula::True))
    }

    /// Flattens nested conjunctions into a list, dropping `true`.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_conjuncts(&mut out);
        out
    }

    fn collect_conjuncts<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            Formula::True => {}
            Formula::And(a, b) => {
                a.collect_conjuncts(out);
                b.collect_conjuncts(out);
            }
            other => out.push(other),
        }
    }

    /// Free variables, in first-occurrence order, respecting binders.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            for v in t.free_vars() {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            Formula::Atom(t) | Formula::HasType(t, _) => term(t, bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::Forall(binder, body) | Formula::Exists(binder, body) => {
                bound.push(binder.var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// All method-application subterms anywhere in the formula (including
    /// under binders), innermost first.
    pub fn app_subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.visit_terms(&mut |t| out.extend(t.app_subterms()));
        out
    }

    /// Visits every top-level term position.
    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                f(a);
                f(b);
            }
            Formula::Atom(t) | Formula::HasType(t, _) => f(t),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
            Formula::Not(a) => a.visit_terms(f),
            Formula::Forall(_, body) | Formula::Exists(_, body) => body.visit_terms(f),
        }
    }

    /// Set of variable names appearing anywhere (free or bound); used when
    /// inventing non-capturing names.
    pub fn all_var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            out.extend(t.free_vars());
        });
        fn binders(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Forall(b, body) | Formula::Exists(b, body) => {
                    out.insert(b.var.clone());
                    binders(body, out);
                }
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    binders(a, out);
                    binders(b, out);
                }
                Formula::Not(a) => binders(a, out),
                _ => {}
            }
        }
        binders(self, &mut out);
        out
    }
}

/// A method contract: precondition and postcondition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spec {
    pub pre: Formula,
    pub post: Formula,
}

impl Spec {
    pub fn trivial() -> Spec {
        Spec {
            pre: Formula::True,
            post: Formula::True,
        }
    }
}

impl Default for Spec {
    fn default() -> Self {
        Spec::trivial()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(n) => write!(f, "{n}"),
            Term::App { recv, method, args } => {
                match recv.as_ref() {
                    Term::Arith(..) => write!(f, "({recv})")?,
                    _ => write!(f, "{recv}")?,
                }
                write!(f, ".{method}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Term::Arith(op, a, b) => {
                let paren = |t: &Term, f: &mut fmt::Formatter<'_>| match t {
                    Term::Arith(..) => write!(f, "({t})"),
                    _ => write!(f, "{t}"),
                };
                paren(a, f)?;
                write!(f, " {} ", op.symbol())?;
                paren(b, f)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Atom(t) => write!(f, "{t}"),
            Formula::And(a, b) => {
                paren_if_looser(a, 3, f)?;
                write!(f, " & ")?;
                paren_if_looser(b, 3, f)
            }
            Formula::Or(a, b) => {
                paren_if_looser(a, 2, f)?;
                write!(f, " | ")?;
                paren_if_looser(b, 2, f)
            }
            Formula::Implies(a, b) => {
                paren_if_looser(a, 2, f)?;
                write!(f, " ==> ")?;
                // Right-associative: an implication on the right needs no parens.
                match b.as_ref() {
                    Formula::Implies(..) => write!(f, "{b}"),
                    _ => paren_if_looser(b, 2, f),
                }
            }
            Formula::Not(a) => {
                write!(f, "!")?;
                paren_if_looser(a, 4, f)
            }
            Formula::Forall(b, body) => write!(f, "(forall {} {}: {})", b.class, b.var, body),
            Formula::Exists(b, body) => write!(f, "(exists {} {}: {})", b.class, b.var, body),
            Formula::HasType(t, c) => write!(f, "{t} : {c}"),
        }
    }
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Not(..) => 4,
        _ => 5,
    }
}

fn paren_if_looser(inner: &Formula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(inner) < min {
        write!(f, "({inner})")
    } else {
        write!(f, "{inner}")
    }
}
