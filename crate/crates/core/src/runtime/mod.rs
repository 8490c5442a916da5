//! Small-step interpreter: contextual reduction with call-by-value,
//! left-to-right evaluation; method calls reduce by substitution and the
//! i-th abstract method of a class reads the i-th constructor argument.

use crate::flatten::FlattenedTable;
use crate::syntax::{Expr, Guard, GuardTerm};
use crate::logic::ArithOp;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A runtime value: an integer or a fully evaluated object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Obj { class: String, args: Vec<Value> },
}

impl Value {
    pub fn from_expr(e: &Expr) -> Option<Value> {
        match e {
            Expr::Int(n) => Some(Value::Int(*n)),
            Expr::New { class, args } => Some(Value::Obj {
                class: class.clone(),
                args: args.iter().map(Value::from_expr).collect::<Option<_>>()?,
            }),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Int(n) => Expr::Int(*n),
            Value::Obj { class, args } => Expr::New {
                class: class.clone(),
                args: args.iter().map(Value::to_expr).collect(),
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Obj { class, args } => {
                write!(f, "new {class}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Why reduction cannot proceed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stuck {
    pub reason: String,
    /// Rendering of the residual expression.
    pub residual: String,
}

impl fmt::Display for Stuck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stuck: {} at `{}`", self.reason, self.residual)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalOutcome {
    Done(Value),
    Stuck(Stuck),
    OutOfFuel(u64),
}

fn stuck(reason: impl Into<String>, residual: &Expr) -> Stuck {
    Stuck {
        reason: reason.into(),
        residual: crate::syntax::expr_to_string(residual),
    }
}

/// Performs exactly one reduction step at the unique redex chosen by the
/// evaluation-context grammar (receiver before arguments, arguments left to
/// right, guard terms before branch selection).
pub fn step(table: &FlattenedTable, e: &Expr) -> Result<Expr, Stuck> {
    match e {
        Expr::Var(v) => Err(stuck(format!("free variable `{v}`"), e)),
        Expr::Int(_) => Err(stuck("already a value", e)),
        Expr::New { class, args } => {
            for (i, a) in args.iter().enumerate() {
                if !a.is_value() {
                    let mut args = args.clone();
                    args[i] = step(table, a)?;
                    return Ok(Expr::New {
                        class: class.clone(),
                        args,
                    });
                }
            }
            Err(stuck("already a value", e))
        }
        Expr::Call { recv, method, args } => {
            if !recv.is_value() {
                return Ok(Expr::Call {
                    recv: Box::new(step(table, recv)?),
                    method: method.clone(),
                    args: args.clone(),
                });
            }
            for (i, a) in args.iter().enumerate() {
                if !a.is_value() {
                    let mut args = args.clone();
                    args[i] = step(table, a)?;
                    return Ok(Expr::Call {
                        recv: recv.clone(),
                        method: method.clone(),
                        args,
                    });
                }
            }
            apply_call(table, e, recv, method, args)
        }
        Expr::Ite {
            guard,
            then_branch,
            else_branch,
        } => {
            if let Some(guard) = step_guard(table, guard)? {
                return Ok(Expr::Ite {
                    guard,
                    then_branch: then_branch.clone(),
                    else_branch: else_branch.clone(),
                });
            }
            match eval_guard(guard) {
                Ok(true) => Ok((**then_branch).clone()),
                Ok(false) => Ok((**else_branch).clone()),
                Err(reason) => Err(stuck(reason, e)),
            }
        }
    }
}

fn apply_call(
    table: &FlattenedTable,
    whole: &Expr,
    recv: &Expr,
    method: &str,
    args: &[Expr],
) -> Result<Expr, Stuck> {
    let (class, ctor_args) = match recv {
        Expr::New { class, args } => (class, args),
        Expr::Int(_) => {
            return Err(stuck(
                format!("no method `{method}` on an integer"),
                whole,
            ))
        }
        _ => unreachable!("receiver is a value"),
    };
    let (_, body) = match table.lookup(class) {
        Some(found) => found,
        None => return Err(stuck(format!("unknown class `{class}`"), whole)),
    };
    let m = match body.method(method) {
        Some(m) => m,
        None => {
            return Err(stuck(
                format!("method `{method}` not found in `{class}`"),
                whole,
            ))
        }
    };
    match &m.body {
        Some(method_body) => {
            if m.header.params.len() != args.len() {
                return Err(stuck(
                    format!(
                        "arity mismatch calling `{method}`: expected {}, got {}",
                        m.header.params.len(),
                        args.len()
                    ),
                    whole,
                ));
            }
            let mut mapping: BTreeMap<String, Expr> = BTreeMap::new();
            mapping.insert("this".to_string(), recv.clone());
            for ((_, param), arg) in m.header.params.iter().zip(args.iter()) {
                mapping.insert(param.clone(), arg.clone());
            }
            Ok(subst_expr(method_body, &mapping))
        }
        None => {
            if !args.is_empty() {
                return Err(stuck(
                    format!("call to abstract method `{method}` with arguments"),
                    whole,
                ));
            }
            // The i-th abstract method returns the i-th constructor argument.
            let index = body
                .abstract_methods()
                .position(|am| am.header.name == method)
                .expect("method is abstract");
            match ctor_args.get(index) {
                Some(v) => Ok(v.clone()),
                None => Err(stuck(
                    format!("getter `{method}` index {index} out of range"),
                    whole,
                )),
            }
        }
    }
}

/// Reduces the leftmost non-value term inside a guard, if any.
fn step_guard(table: &FlattenedTable, g: &Guard) -> Result<Option<Guard>, Stuck> {
    Ok(match g {
        Guard::True | Guard::False => None,
        Guard::Cmp(op, a, b) => match step_guard_term(table, a)? {
            Some(a) => Some(Guard::Cmp(*op, a, b.clone())),
            None => step_guard_term(table, b)?.map(|b| Guard::Cmp(*op, a.clone(), b)),
        },
        Guard::Atom(t) => step_guard_term(table, t)?.map(Guard::Atom),
        Guard::And(a, b) => match step_guard(table, a)? {
            Some(a) => Some(Guard::And(Box::new(a), b.clone())),
            None => step_guard(table, b)?.map(|b| Guard::And(a.clone(), Box::new(b))),
        },
        Guard::Or(a, b) => match step_guard(table, a)? {
            Some(a) => Some(Guard::Or(Box::new(a), b.clone())),
            None => step_guard(table, b)?.map(|b| Guard::Or(a.clone(), Box::new(b))),
        },
        Guard::Not(a) => step_guard(table, a)?.map(|a| Guard::Not(Box::new(a))),
    })
}

fn step_guard_term(table: &FlattenedTable, t: &GuardTerm) -> Result<Option<GuardTerm>, Stuck> {
    Ok(match t {
        GuardTerm::Int(_) => None,
        GuardTerm::Expr(e) => {
            if e.is_value() {
                None
            } else {
                Some(GuardTerm::expr(step(table, e)?))
            }
        }
        GuardTerm::Arith(op, a, b) => match step_guard_term(table, a)? {
            Some(a) => Some(GuardTerm::Arith(*op, Box::new(a), b.clone())),
            None => step_guard_term(table, b)?
                .map(|b| GuardTerm::Arith(*op, a.clone(), Box::new(b))),
        },
    })
}

/// Evaluates a guard whose terms are all values.
fn eval_guard(g: &Guard) -> Result<bool, String> {
    match g {
        Guard::True => Ok(true),
        Guard::False => Ok(false),
        Guard::Cmp(op, a, b) => {
            use crate::logic::CmpOp;
            let (va, vb) = (eval_guard_value(a)?, eval_guard_value(b)?);
            match (va, vb) {
                (Value::Int(x), Value::Int(y)) => Ok(op.eval(x, y)),
                (x, y) => match op {
                    CmpOp::Eq => Ok(x == y),
                    CmpOp::Ne => Ok(x != y),
                    _ => Err("ordered comparison of objects".to_string()),
                },
            }
        }
        Guard::Atom(_) => Err("boolean method application has no runtime value".to_string()),
        Guard::And(a, b) => Ok(eval_guard(a)? && eval_guard(b)?),
        Guard::Or(a, b) => Ok(eval_guard(a)? || eval_guard(b)?),
        Guard::Not(a) => Ok(!eval_guard(a)?),
    }
}

fn eval_guard_value(t: &GuardTerm) -> Result<Value, String> {
    match t {
        GuardTerm::Int(n) => Ok(Value::Int(*n)),
        GuardTerm::Expr(e) => {
            Value::from_expr(e).ok_or_else(|| "guard term is not a value".to_string())
        }
        GuardTerm::Arith(op, a, b) => {
            let (a, b) = (eval_guard_value(a)?, eval_guard_value(b)?);
            match (a, b) {
                (Value::Int(x), Value::Int(y)) => Ok(Value::Int(match op {
                    ArithOp::Add => x.wrapping_add(y),
                    ArithOp::Sub => x.wrapping_sub(y),
                    ArithOp::Mul => x.wrapping_mul(y),
                })),
                _ => Err("arithmetic on objects".to_string()),
            }
        }
    }
}

/// Capture-free substitution of expressions for variables (expressions
/// have no binders; guard terms carry substituted expressions directly).
pub fn subst_expr(e: &Expr, mapping: &BTreeMap<String, Expr>) -> Expr {
    match e {
        Expr::Var(v) => mapping.get(v).cloned().unwrap_or_else(|| e.clone()),
        Expr::Int(_) => e.clone(),
        Expr::Call { recv, method, args } => Expr::Call {
            recv: Box::new(subst_expr(recv, mapping)),
            method: method.clone(),
            args: args.iter().map(|a| subst_expr(a, mapping)).collect(),
        },
        Expr::New { class, args } => Expr::New {
            class: class.clone(),
            args: args.iter().map(|a| subst_expr(a, mapping)).collect(),
        },
        Expr::Ite {
            guard,
            then_branch,
            else_branch,
        } => Expr::Ite {
            guard: subst_guard(guard, mapping),
            then_branch: Box::new(subst_expr(then_branch, mapping)),
            else_branch: Box::new(subst_expr(else_branch, mapping)),
        },
    }
}

fn subst_guard(g: &Guard, mapping: &BTreeMap<String, Expr>) -> Guard {
    match g {
        Guard::True => Guard::True,
        Guard::False => Guard::False,
        Guard::Cmp(op, a, b) => Guard::Cmp(
            *op,
            subst_guard_term(a, mapping),
            subst_guard_term(b, mapping),
        ),
        Guard::Atom(t) => Guard::Atom(subst_guard_term(t, mapping)),
        Guard::And(a, b) => Guard::And(
            Box::new(subst_guard(a, mapping)),
            Box::new(subst_guard(b, mapping)),
        ),
        Guard::Or(a, b) => Guard::Or(
            Box::new(subst_guard(a, mapping)),
            Box::new(subst_guard(b, mapping)),
        ),
        Guard::Not(a) => Guard::Not(Box::new(subst_guard(a, mapping))),
    }
}

fn subst_guard_term(t: &GuardTerm, mapping: &BTreeMap<String, Expr>) -> GuardTerm {
    match t {
        GuardTerm::Int(_) => t.clone(),
        GuardTerm::Expr(e) => GuardTerm::expr(subst_expr(e, mapping)),
        GuardTerm::Arith(op, a, b) => GuardTerm::Arith(
            *op,
            Box::new(subst_guard_term(a, mapping)),
            Box::new(subst_guard_term(b, mapping)),
        ),
    }
}

/// Iterates `step` up to `fuel` times.
pub fn eval(table: &FlattenedTable, e: &Expr, fuel: u64) -> EvalOutcome {
    eval_inner(table, e, fuel, false)
}

/// Like `eval`, but asserts at every step that the evaluation-context
/// grammar admits exactly one decomposition (determinism witness).
pub fn eval_checked(table: &FlattenedTable, e: &Expr, fuel: u64) -> EvalOutcome {
    eval_inner(table, e, fuel, true)
}

fn eval_inner(table: &FlattenedTable, e: &Expr, fuel: u64, check: bool) -> EvalOutcome {
    let mut current = e.clone();
    for taken in 0..=fuel {
        if let Some(v) = Value::from_expr(&current) {
            return EvalOutcome::Done(v);
        }
        if taken == fuel {
            return EvalOutcome::OutOfFuel(fuel);
        }
        if check {
            let count = decomposition_count(&current);
            assert_eq!(
                count, 1,
                "evaluation context must be unique, found {count} for `{}`",
                crate::syntax::expr_to_string(&current)
            );
        }
        match step(table, &current) {
            Ok(next) => current = next,
            Err(s) => return EvalOutcome::Stuck(s),
        }
    }
    EvalOutcome::OutOfFuel(fuel)
}

/// Counts the decompositions `E_v[r]` the context grammar admits: contexts
/// descend into the receiver, then into the first non-value argument (all
/// earlier ones being values), and a head redex counts once.
pub fn decomposition_count(e: &Expr) -> usize {
    if e.is_value() {
        return 0;
    }
    match e {
        Expr::Var(_) => 1, // head position (stuck, but unique)
        Expr::Int(_) | Expr::New { .. } if e.is_value() => 0,
        Expr::Int(_) => 0,
        Expr::New { args, .. } => first_nonvalue_count(args),
        Expr::Call { recv, args, .. } => {
            if !recv.is_value() {
                decomposition_count(recv)
            } else if args.iter().any(|a| !a.is_value()) {
                first_nonvalue_count(args)
            } else {
                1 // head redex: mcall or getter
            }
        }
        Expr::Ite { guard, .. } => {
            let positions = guard_nonvalue_positions(guard);
            if positions == 0 {
                1 // head redex: branch selection
            } else {
                positions
            }
        }
    }
}

fn first_nonvalue_count(args: &[Expr]) -> usize {
    for a in args {
        if !a.is_value() {
            return decomposition_count(a);
        }
    }
    0
}

fn guard_nonvalue_positions(g: &Guard) -> usize {
    // The context grammar admits exactly the leftmost non-value term.
    fn term_pos(t: &GuardTerm) -> usize {
        match t {
            GuardTerm::Int(_) => 0,
            GuardTerm::Expr(e) => {
                if e.is_value() {
                    0
                } else {
                    decomposition_count(e)
                }
            }
            GuardTerm::Arith(_, a, b) => {
                let left = term_pos(a);
                if left > 0 {
                    left
                } else {
                    term_pos(b)
                }
            }
        }
    }
    match g {
        Guard::True | Guard::False => 0,
        Guard::Cmp(_, a, b) => {
            let left = term_pos(a);
            if left > 0 {
                left
            } else {
                term_pos(b)
            }
        }
        Guard::Atom(t) => term_pos(t),
        Guard::And(a, b) | Guard::Or(a, b) => {
            let left = guard_nonvalue_positions(a);
            if left > 0 {
                left
            } else {
                guard_nonvalue_positions(b)
            }
        }
        Guard::Not(a) => guard_nonvalue_positions(a),
    }
}
