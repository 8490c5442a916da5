//! Abstract syntax for tcbc programs.
//!
//! A program is an ordered list of trait/class definitions followed by an
//! optional `main` expression. Definitions bind names to trait expressions,
//! which reduce to method bodies under flattening.

use crate::logic::{Formula, Spec};
use serde::{Deserialize, Serialize};

/// Built-in integer class name.
pub const NUM: &str = "Num";
/// Built-in boolean class name, usable only in guard positions and specs.
pub const BOOL: &str = "Bool";

/// A whole source file: definitions plus an optional `main` expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub definitions: Vec<Definition>,
    pub main: Option<Expr>,
}

impl Program {
    /// Looks up a definition by name (first match wins; duplicates are a
    /// well-formedness error, not a construction error).
    pub fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }
}

/// Whether a definition was introduced with `trait` or `class`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefKind {
    Trait,
    Class,
}

impl DefKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DefKind::Trait => "trait",
            DefKind::Class => "class",
        }
    }
}

/// A named definition `trait t = E` or `class C = E`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub name: String,
    pub kind: DefKind,
    pub expr: TraitExpr,
}

/// The trait-expression algebra: body literals, references to other
/// definitions, symmetric-sum composition, and method abstraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraitExpr {
    Lit(Body),
    Ref(String),
    Plus(Box<TraitExpr>, Box<TraitExpr>),
    MakeAbstract(Box<TraitExpr>, String),
}

impl TraitExpr {
    /// Names of all definitions referenced via `Ref` nodes.
    pub fn refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            TraitExpr::Lit(_) => {}
            TraitExpr::Ref(name) => out.push(name),
            TraitExpr::Plus(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            TraitExpr::MakeAbstract(inner, _) => inner.collect_refs(out),
        }
    }

    /// Interface names mentioned by body literals anywhere in this expression.
    pub fn literal_interfaces(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_interfaces(&mut out);
        out
    }

    fn collect_interfaces<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            TraitExpr::Lit(body) => out.extend(body.interfaces.iter().map(|s| s.as_str())),
            TraitExpr::Ref(_) => {}
            TraitExpr::Plus(a, b) => {
                a.collect_interfaces(out);
                b.collect_interfaces(out);
            }
            TraitExpr::MakeAbstract(inner, _) => inner.collect_interfaces(out),
        }
    }
}

/// A body literal: interface flag, implemented interfaces, and methods.
///
/// Methods are kept as a sequence so the parser can represent duplicate
/// names; well-formedness rejects them, after which the sequence behaves as
/// an ordered map.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Body {
    pub is_interface: bool,
    pub interfaces: Vec<String>,
    pub methods: Vec<Method>,
}

impl Body {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.header.name == name)
    }

    pub fn method_names(&self) -> impl Iterator<Item = &str> {
        self.methods.iter().map(|m| m.header.name.as_str())
    }

    /// Abstract methods in declaration order.
    pub fn abstract_methods(&self) -> impl Iterator<Item = &Method> {
        self.methods.iter().filter(|m| m.body.is_none())
    }

    /// Abstract no-argument methods (getters) in declaration order.
    pub fn getters(&self) -> impl Iterator<Item = &Method> {
        self.abstract_methods().filter(|m| m.header.params.is_empty())
    }
}

/// A method: contracted header plus an optional body expression.
/// A missing body means the method is abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub header: MethodHeader,
    pub body: Option<Expr>,
}

impl Method {
    pub fn is_abstract(&self) -> bool {
        self.body.is_none()
    }
}

/// Header: contract, return type, name, and typed parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodHeader {
    pub spec: Spec,
    pub return_type: String,
    pub name: String,
    /// `(class name, parameter name)` pairs in declaration order.
    pub params: Vec<(String, String)>,
}

impl MethodHeader {
    /// True when return type, arity, and parameter types match positionally.
    /// Parameter names are irrelevant for signature compatibility.
    pub fn same_signature(&self, other: &MethodHeader) -> bool {
        self.return_type == other.return_type
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(other.params.iter())
                .all(|((c1, _), (c2, _))| c1 == c2)
    }
}

/// Method-body expressions.
///
/// `Ite` is the desugared form of the `if/elseif/else` surface syntax; its
/// guard is a quantifier-free formula over expression-valued terms rather
/// than a first-class boolean expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Var(String),
    Int(i64),
    Call {
        recv: Box<Expr>,
        method: String,
        args: Vec<Expr>,
    },
    New {
        class: String,
        args: Vec<Expr>,
    },
    Ite {
        guard: Guard,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
}

impl Expr {
    pub fn this() -> Expr {
        Expr::Var("this".to_string())
    }

    /// A value is an integer literal or a `new` whose arguments are values.
    pub fn is_value(&self) -> bool {
        match self {
            Expr::Int(_) => true,
            Expr::New { args, .. } => args.iter().all(Expr::is_value),
            _ => false,
        }
    }
}

/// Quantifier-free guard formulas for `Ite`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guard {
    True,
    False,
    Cmp(crate::logic::CmpOp, GuardTerm, GuardTerm),
    /// A bare boolean-valued method application used as a proposition.
    Atom(GuardTerm),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

/// Terms inside guards: embedded expressions optionally combined with
/// arithmetic (arithmetic exists only in specs and guards, not expressions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuardTerm {
    Expr(Box<Expr>),
    Int(i64),
    Arith(crate::logic::ArithOp, Box<GuardTerm>, Box<GuardTerm>),
}

impl GuardTerm {
    pub fn expr(e: Expr) -> GuardTerm {
        GuardTerm::Expr(Box::new(e))
    }
}

impl Guard {
    /// Converts a spec formula into a guard. Fails on quantifiers and
    /// type atoms, which have no runtime meaning.
    pub fn from_formula(f: &Formula) -> Result<Guard, String> {
        use crate::logic::Term;
        fn term(t: &Term) -> Result<GuardTerm, String> {
            Ok(match t {
                Term::Var(v) => GuardTerm::expr(Expr::Var(v.clone())),
                Term::Int(n) => GuardTerm::Int(*n),
                Term::App { recv, method, args } => {
                    let recv = match term(recv)? {
                        GuardTerm::Expr(e) => *e,
                        GuardTerm::Int(n) => Expr::Int(n),
                        GuardTerm::Arith(..) => {
                            return Err("arithmetic cannot be a call receiver".into())
                        }
                    };
                    let args = args
                        .iter()
                        .map(|a| {
                            Ok(match term(a)? {
                                GuardTerm::Expr(e) => *e,
                                GuardTerm::Int(n) => Expr::Int(n),
                                GuardTerm::Arith(..) => {
                                    return Err(
                                        "arithmetic arguments are not allowed in guards".into()
                                    )
                                }
                            })
                        })
                        .collect::<Result<Vec<_>, String>>()?;
                    GuardTerm::expr(Expr::Call {
                        recv: Box::new(recv),
                        method: method.clone(),
                        args,
                    })
                }
                Term::Arith(op, a, b) => {
                    GuardTerm::Arith(*op, Box::new(term(a)?), Box::new(term(b)?))
                }
            })
        }
        Ok(match f {
            Formula::True => Guard::True,
            Formula::False => Guard::False,
            Formula::Cmp(op, a, b) => Guard::Cmp(*op, term(a)?, term(b)?),
            Formula::Atom(t) => Guard::Atom(term(t)?),
            Formula::And(a, b) => Guard::And(
                Box::new(Guard::from_formula(a)?),
                Box::new(Guard::from_formula(b)?),
            ),
            Formula::Or(a, b) => Guard::Or(
                Box::new(Guard::from_formula(a)?),
                Box::new(Guard::from_formula(b)?),
            ),
            Formula::Not(a) => Guard::Not(Box::new(Guard::from_formula(a)?)),
            Formula::Implies(..) => return Err("implication is not allowed in a guard".into()),
            Formula::Forall(..) | Formula::Exists(..) => {
                return Err("quantifiers are not allowed in a guard".into())
            }
            Formula::HasType(..) => return Err("type atoms are not allowed in a guard".into()),
        })
    }

    /// Converts a guard back into a spec formula. Fails if any embedded
    /// expression is not a variable/application/literal tree (i.e. contains
    /// `new` or a nested conditional, which term syntax cannot express).
    pub fn to_formula(&self) -> Result<Formula, String> {
        use crate::logic::Term;
        fn gterm(t: &GuardTerm) -> Result<Term, String> {
            Ok(match t {
                GuardTerm::Int(n) => Term::Int(*n),
                GuardTerm::Arith(op, a, b) => {
                    Term::Arith(*op, Box::new(gterm(a)?), Box::new(gterm(b)?))
                }
                GuardTerm::Expr(e) => expr_term(e)?,
            })
        }
        fn expr_term(e: &Expr) -> Result<Term, String> {
            Ok(match e {
                Expr::Var(v) => Term::Var(v.clone()),
                Expr::Int(n) => Term::Int(*n),
                Expr::Call { recv, method, args } => Term::App {
                    recv: Box::new(expr_term(recv)?),
                    method: method.clone(),
                    args: args.iter().map(expr_term).collect::<Result<_, _>>()?,
                },
                Expr::New { .. } => return Err("object creation in a guard".into()),
                Expr::Ite { .. } => return Err("conditional in a guard term".into()),
            })
        }
        Ok(match self {
            Guard::True => Formula::True,
            Guard::False => Formula::False,
            Guard::Cmp(op, a, b) => Formula::Cmp(*op, gterm(a)?, gterm(b)?),
            Guard::Atom(t) => Formula::Atom(gterm(t)?),
            Guard::And(a, b) => Formula::And(Box::new(a.to_formula()?), Box::new(b.to_formula()?)),
            Guard::Or(a, b) => Formula::Or(Box::new(a.to_formula()?), Box::new(b.to_formula()?)),
            Guard::Not(a) => Formula::Not(Box::new(a.to_formula()?)),
        })
    }
}
