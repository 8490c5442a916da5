//! Deterministic pretty-printer. Output re-parses to a structurally equal
//! program.

use super::ast::*;
use crate::logic::Formula;
use std::fmt::Write;

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for (i, d) in p.definitions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_definition(&mut out, d);
    }
    if let Some(main) = &p.main {
        if !p.definitions.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "main = {};", expr_to_string(main));
    }
    out
}

fn write_definition(out: &mut String, d: &Definition) {
    let _ = write!(out, "{} {} = ", d.kind.keyword(), d.name);
    write_trait_expr(out, &d.expr, 0);
    out.push('\n');
}

fn write_trait_expr(out: &mut String, e: &TraitExpr, indent: usize) {
    match e {
        TraitExpr::Lit(body) => write_body(out, body, indent),
        TraitExpr::Ref(name) => out.push_str(name),
        TraitExpr::Plus(a, b) => {
            write_trait_expr(out, a, indent);
            out.push_str(" + ");
            write_trait_expr(out, b, indent);
        }
        TraitExpr::MakeAbstract(inner, m) => {
            let needs_paren = matches!(inner.as_ref(), TraitExpr::Plus(..));
            if needs_paren {
                out.push('(');
            }
            write_trait_expr(out, inner, indent);
            if needs_paren {
                out.push(')');
            }
            let _ = write!(out, "[makeAbstract {m}]");
        }
    }
}

fn write_body(out: &mut String, body: &Body, indent: usize) {
    let pad = "  ".repeat(indent + 1);
    out.push('{');
    out.push('\n');
    if body.is_interface {
        let _ = writeln!(out, "{pad}interface");
    }
    if !body.interfaces.is_empty() {
        let _ = writeln!(out, "{pad}implements {}", body.interfaces.join(", "));
    }
    for (i, m) in body.methods.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_method(out, m, &pad);
    }
    let _ = write!(out, "{}}}", "  ".repeat(indent));
}

fn write_method(out: &mut String, m: &Method, pad: &str) {
    let spec = &m.header.spec;
    if spec.pre != Formula::True {
        let _ = writeln!(out, "{pad}@Pre: {}", spec.pre);
    }
    if spec.post != Formula::True {
        let _ = writeln!(out, "{pad}@Post: {}", spec.post);
    }
    let params = m
        .header
        .params
        .iter()
        .map(|(c, x)| format!("{c} {x}"))
        .collect::<Vec<_>>()
        .join(", ");
    match &m.body {
        None => {
            let _ = writeln!(
                out,
                "{pad}abstract {} {}({});",
                m.header.return_type, m.header.name, params
            );
        }
        Some(body) => {
            let _ = writeln!(
                out,
                "{pad}{} {}({}) = {};",
                m.header.return_type,
                m.header.name,
                params,
                expr_to_string(body)
            );
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    match e {
        Expr::Var(v) => v.clone(),
        Expr::Int(n) => n.to_string(),
        Expr::Call { recv, method, args } => {
            let args = args.iter().map(expr_to_string).collect::<Vec<_>>().join(", ");
            format!("{}.{method}({args})", expr_to_string(recv))
        }
        Expr::New { class, args } => {
            let args = args.iter().map(expr_to_string).collect::<Vec<_>>().join(", ");
            format!("new {class}({args})")
        }
        Expr::Ite {
            guard,
            then_branch,
            else_branch,
        } => {
            let mut out = format!(
                "if ({}) {{ {} }}",
                guard_to_string(guard),
                expr_to_string(then_branch)
            );
            // Nested conditionals in the else slot print as elseif chains.
            let mut cursor = else_branch.as_ref();
            loop {
                match cursor {
                    Expr::Ite {
                        guard,
                        then_branch,
                        else_branch,
                    } => {
                        out.push_str(&format!(
                            " elseif ({}) {{ {} }}",
                            guard_to_string(guard),
                            expr_to_string(then_branch)
                        ));
                        cursor = else_branch.as_ref();
                    }
                    other => {
                        out.push_str(&format!(" else {{ {} }}", expr_to_string(other)));
                        break;
                    }
                }
            }
            out
        }
    }
}

pub fn guard_to_string(g: &Guard) -> String {
    match g {
        Guard::True => "true".into(),
        Guard::False => "false".into(),
        Guard::Cmp(op, a, b) => {
            format!("{} {} {}", guard_term_to_string(a), op.symbol(), guard_term_to_string(b))
        }
        Guard::Atom(t) => guard_term_to_string(t),
        Guard::And(a, b) => format!(
            "{} & {}",
            guard_paren(a, 3),
            guard_paren(b, 3)
        ),
        Guard::Or(a, b) => format!("{} | {}", guard_paren(a, 2), guard_paren(b, 2)),
        Guard::Not(a) => format!("!{}", guard_paren(a, 4)),
    }
}

fn guard_precedence(g: &Guard) -> u8 {
    match g {
        Guard::Or(..) => 2,
        Guard::And(..) => 3,
        Guard::Not(..) => 4,
        _ => 5,
    }
}

fn guard_paren(g: &Guard, min: u8) -> String {
    if guard_precedence(g) < min {
        format!("({})", guard_to_string(g))
    } else {
        guard_to_string(g)
    }
}

fn guard_term_to_string(t: &GuardTerm) -> String {
    match t {
        GuardTerm::Expr(e) => expr_to_string(e),
        GuardTerm::Int(n) => n.to_string(),
        GuardTerm::Arith(op, a, b) => {
            let wrap = |t: &GuardTerm| match t {
                GuardTerm::Arith(..) => format!("({})", guard_term_to_string(t)),
                _ => guard_term_to_string(t),
            };
            format!("{} {} {}", wrap(a), op.symbol(), wrap(b))
        }
    }
}
