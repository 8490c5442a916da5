//! Capture-avoiding substitution and alpha-equivalence on formulas.

use super::term::{Binder, Formula, Term};
use std::collections::BTreeMap;

/// A simultaneous mapping from variable names to replacement terms.
pub type Substitution = BTreeMap<String, Term>;

/// Builds a substitution from pairs.
pub fn subst_of(pairs: impl IntoIterator<Item = (impl Into<String>, Term)>) -> Substitution {
    pairs.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

pub fn substitute_term(t: &Term, map: &Substitution) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Int(_) => t.clone(),
        Term::App { recv, method, args } => Term::App {
            recv: Box::new(substitute_term(recv, map)),
            method: method.clone(),
            args: args.iter().map(|a| substitute_term(a, map)).collect(),
        },
        Term::Arith(op, a, b) => Term::Arith(
            *op,
            Box::new(substitute_term(a, map)),
            Box::new(substitute_term(b, map)),
        ),
    }
}

/// Capture-avoiding simultaneous substitution. Bound variables shadow the
/// mapping; when a replacement term would be captured by a binder, the
/// binder is renamed first.
pub fn substitute(f: &Formula, map: &Substitution) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(op, a, b) => {
            Formula::Cmp(*op, substitute_term(a, map), substitute_term(b, map))
        }
        Formula::Atom(t) => Formula::Atom(substitute_term(t, map)),
        Formula::HasType(t, c) => Formula::HasType(substitute_term(t, map), c.clone()),
        Formula::And(a, b) => Formula::and(substitute(a, map), substitute(b, map)),
        Formula::Or(a, b) => Formula::Or(
            Box::new(substitute(a, map)),
            Box::new(substitute(b, map)),
        ),
        Formula::Implies(a, b) => Formula::implies(substitute(a, map), substitute(b, map)),
        Formula::Not(a) => Formula::not(substitute(a, map)),
        Formula::Forall(binder, body) => {
            let (binder, body) = substitute_under_binder(binder, body, map);
            Formula::Forall(binder, Box::new(body))
        }
        Formula::Exists(binder, body) => {
            let (binder, body) = substitute_under_binder(binder, body, map);
            Formula::Exists(binder, Box::new(body))
        }
    }
}

fn substitute_under_binder(
    binder: &Binder,
    body: &Formula,
    map: &Substitution,
) -> (Binder, Formula) {
    // The binder shadows any mapping of its own name.
    let mut inner: Substitution = map
        .iter()
        .filter(|(k, _)| **k != binder.var)
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    // Only mappings whose source actually occurs free in the body matter.
    let body_free = body.free_vars();
    inner.retain(|k, _| body_free.contains(k));
    if inner.is_empty() {
        return (binder.clone(), body.clone());
    }

    let would_capture = inner
        .values()
        .any(|t| t.free_vars().iter().any(|v| *v == binder.var));
    if !would_capture {
        return (binder.clone(), substitute(body, &inner));
    }

    // Rename the binder to a fresh name not used anywhere relevant.
    let mut taken = body.all_var_names();
    for t in inner.values() {
        taken.extend(t.free_vars());
    }
    let fresh = fresh_name(&binder.var, |n| !taken.contains(n));
    let renamed_body = substitute(
        body,
        &subst_of([(binder.var.clone(), Term::var(fresh.clone()))]),
    );
    let binder = Binder {
        var: fresh,
        class: binder.class.clone(),
    };
    (binder.clone(), substitute(&renamed_body, &inner))
}

fn fresh_name(base: &str, mut ok: impl FnMut(&str) -> bool) -> String {
    let mut i = 0u64;
    loop {
        let candidate = format!("{base}{i}");
        if ok(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// True iff the two formulas are equal up to renaming of bound variables.
pub fn alpha_equal(f: &Formula, g: &Formula) -> bool {
    alpha_eq(f, g, &mut Vec::new())
}

fn alpha_eq(f: &Formula, g: &Formula, stack: &mut Vec<(String, String)>) -> bool {
    match (f, g) {
        (Formula::True, Formula::True) | (Formula::False, Formula::False) => true,
        (Formula::Cmp(o1, a1, b1), Formula::Cmp(o2, a2, b2)) => {
            o1 == o2 && alpha_eq_term(a1, a2, stack) && alpha_eq_term(b1, b2, stack)
        }
        (Formula::Atom(a), Formula::Atom(b)) => alpha_eq_term(a, b, stack),
        (Formula::HasType(a, c1), Formula::HasType(b, c2)) => {
            c1 == c2 && alpha_eq_term(a, b, stack)
        }
        (Formula::And(a1, b1), Formula::And(a2, b2))
        | (Formula::Or(a1, b1), Formula::Or(a2, b2))
        | (Formula::Implies(a1, b1), Formula::Implies(a2, b2)) => {
            alpha_eq(a1, a2, stack) && alpha_eq(b1, b2, stack)
        }
        (Formula::Not(a), Formula::Not(b)) => alpha_eq(a, b, stack),
        (Formula::Forall(b1, f1), Formula::Forall(b2, f2))
        | (Formula::Exists(b1, f1), Formula::Exists(b2, f2)) => {
            if b1.class != b2.class {
                return false;
            }
            stack.push((b1.var.clone(), b2.var.clone()));
            let r = alpha_eq(f1, f2, stack);
            stack.pop();
            r
        }
        _ => false,
    }
}

fn alpha_eq_term(a: &Term, b: &Term, stack: &[(String, String)]) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            // The innermost binder pair wins on both sides.
            for (l, r) in stack.iter().rev() {
                let lm = l == x;
                let rm = r == y;
                if lm || rm {
                    return lm && rm;
                }
            }
            x == y
        }
        (Term::Int(x), Term::Int(y)) => x == y,
        (
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
        ) => {
            m1 == m2
                && a1.len() == a2.len()
                && alpha_eq_term(r1, r2, stack)
                && a1
                    .iter()
                    .zip(a2.iter())
                    .all(|(x, y)| alpha_eq_term(x, y, stack))
        }
        (Term::Arith(o1, x1, y1), Term::Arith(o2, x2, y2)) => {
            o1 == o2 && alpha_eq_term(x1, x2, stack) && alpha_eq_term(y1, y2, stack)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::CmpOp;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn empty_mapping_is_identity() {
        let f = Formula::eq(Term::result(), Term::app(v("list"), "element", vec![]));
        assert_eq!(substitute(&f, &Substitution::new()), f);
    }

    #[test]
    fn renames_inside_applications() {
        // result == list.element() under {list -> _f0}
        let f = Formula::eq(Term::result(), Term::app(v("list"), "element", vec![]));
        let out = substitute(&f, &subst_of([("list", v("_f0"))]));
        assert_eq!(
            out,
            Formula::eq(Term::result(), Term::app(v("_f0"), "element", vec![]))
        );
    }

    #[test]
    fn bound_variables_shadow() {
        // forall Num n: n > x  under {n -> y} is unchanged
        let f = Formula::Forall(
            Binder {
                var: "n".into(),
                class: "Num".into(),
            },
            Box::new(Formula::Cmp(CmpOp::Gt, v("n"), v("x"))),
        );
        assert_eq!(substitute(&f, &subst_of([("n", v("y"))])), f);
    }

    #[test]
    fn capture_is_avoided_by_renaming() {
        // forall Num n: n > x  under {x -> n}: the binder must be renamed.
        let f = Formula::Forall(
            Binder {
                var: "n".into(),
                class: "Num".into(),
            },
            Box::new(Formula::Cmp(CmpOp::Gt, v("n"), v("x"))),
        );
        let out = substitute(&f, &subst_of([("x", v("n"))]));
        match &out {
            Formula::Forall(b, body) => {
                assert_ne!(b.var, "n");
                assert_eq!(
                    **body,
                    Formula::Cmp(CmpOp::Gt, v(&b.var), v("n")),
                    "the substituted n must remain free"
                );
            }
            other => panic!("expected forall, got {other:?}"),
        }
        // And the result is alpha-distinct from naive capture.
        let captured = Formula::Forall(
            Binder {
                var: "n".into(),
                class: "Num".into(),
            },
            Box::new(Formula::Cmp(CmpOp::Gt, v("n"), v("n"))),
        );
        assert!(!alpha_equal(&out, &captured));
    }

    #[test]
    fn alpha_equality_of_renamed_binders() {
        let f = Formula::Forall(
            Binder {
                var: "n".into(),
                class: "Num".into(),
            },
            Box::new(Formula::Cmp(CmpOp::Ge, v("n"), Term::Int(0))),
        );
        let g = Formula::Forall(
            Binder {
                var: "k".into(),
                class: "Num".into(),
            },
            Box::new(Formula::Cmp(CmpOp::Ge, v("k"), Term::Int(0))),
        );
        assert!(alpha_equal(&f, &g));
        let h = Formula::Cmp(CmpOp::Gt, v("x"), Term::Int(0));
        let i = Formula::Cmp(CmpOp::Ge, v("x"), Term::Int(0));
        assert!(!alpha_equal(&h, &i));
    }
}
