//! Greedy shrinking of failing programs to a local minimum: no single
//! definition, method, or expression-node removal keeps the predicate
//! failing.

use crate::syntax::{Expr, Program, TraitExpr};

/// Shrinks `program` while `failing` stays true. Errors if the predicate
/// does not fail on the input.
pub fn shrink(
    program: &Program,
    failing: &dyn Fn(&Program) -> bool,
) -> Result<Program, String> {
    if !failing(program) {
        return Err("shrink precondition violated: predicate does not fail on input".into());
    }
    let mut current = program.clone();
    loop {
        let mut progressed = false;
        for candidate in candidates(&current) {
            if failing(&candidate) {
                current = candidate;
                progressed = true;
                break;
            }
        }
        if !progressed {
            return Ok(current);
        }
    }
}

/// Single-removal reductions, smallest-impact last so whole-definition
/// removals are tried first.
fn candidates(p: &Program) -> Vec<Program> {
    let mut out = Vec::new();

    if p.main.is_some() {
        let mut q = p.clone();
        q.main = None;
        out.push(q);
    }

    for i in 0..p.definitions.len() {
        let mut q = p.clone();
        q.definitions.remove(i);
        out.push(q);
    }

    for (i, d) in p.definitions.iter().enumerate() {
        for reduced in trait_expr_reductions(&d.expr) {
            let mut q = p.clone();
            q.definitions[i].expr = reduced;
            out.push(q);
        }
    }

    out
}

fn trait_expr_reductions(e: &TraitExpr) -> Vec<TraitExpr> {
    let mut out = Vec::new();
    match e {
        TraitExpr::Lit(body) => {
            for i in 0..body.methods.len() {
                let mut b = body.clone();
                b.methods.remove(i);
                out.push(TraitExpr::Lit(b));
            }
            for i in 0..body.interfaces.len() {
                let mut b = body.clone();
                b.interfaces.remove(i);
                out.push(TraitExpr::Lit(b));
            }
            for (i, m) in body.methods.iter().enumerate() {
                if let Some(expr) = &m.body {
                    for reduced in expr_reductions(expr) {
                        let mut b = body.clone();
                        b.methods[i].body = Some(reduced);
                        out.push(TraitExpr::Lit(b));
                    }
                }
            }
        }
        TraitExpr::Ref(_) => {}
        TraitExpr::Plus(a, b) => {
            // Replace the sum by either operand, or shrink inside one.
            out.push((**a).clone());
            out.push((**b).clone());
            for r in trait_expr_reductions(a) {
                out.push(TraitExpr::Plus(Box::new(r), b.clone()));
            }
            for r in trait_expr_reductions(b) {
                out.push(TraitExpr::Plus(a.clone(), Box::new(r)));
            }
        }
        TraitExpr::MakeAbstract(inner, m) => {
            out.push((**inner).clone());
            for r in trait_expr_reductions(inner) {
                out.push(TraitExpr::MakeAbstract(Box::new(r), m.clone()));
            }
        }
    }
    out
}

/// All one-node reductions of an expression: a node is replaced by one of
/// its children (or a literal zero for leaves of calls).
fn expr_reductions(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    match e {
        Expr::Var(_) | Expr::Int(_) => {}
        Expr::Call { recv, args, method } => {
            out.push((**recv).clone());
            out.extend(args.iter().cloned());
            for r in expr_reductions(recv) {
                out.push(Expr::Call {
                    recv: Box::new(r),
                    method: method.clone(),
                    args: args.clone(),
                });
            }
            for (i, a) in args.iter().enumerate() {
                for r in expr_reductions(a) {
                    let mut args = args.clone();
                    args[i] = r;
                    out.push(Expr::Call {
                        recv: recv.clone(),
                        method: method.clone(),
                        args,
                    });
                }
            }
        }
        Expr::New { class, args } => {
            out.extend(args.iter().cloned());
            for (i, a) in args.iter().enumerate() {
                for r in expr_reductions(a) {
                    let mut args = args.clone();
                    args[i] = r;
                    out.push(Expr::New {
                        class: class.clone(),
                        args,
                    });
                }
            }
        }
        Expr::Ite {
            guard,
            then_branch,
            else_branch,
        } => {
            out.push((**then_branch).clone());
            out.push((**else_branch).clone());
            for r in expr_reductions(then_branch) {
                out.push(Expr::Ite {
                    guard: guard.clone(),
                    then_branch: Box::new(r),
                    else_branch: else_branch.clone(),
                });
            }
            for r in expr_reductions(else_branch) {
                out.push(Expr::Ite {
                    guard: guard.clone(),
                    then_branch: then_branch.clone(),
                    else_branch: Box::new(r),
                });
            }
        }
    }
    out
}
