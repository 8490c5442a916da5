//! Surface syntax: AST, parser, pretty-printer, and well-formedness.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod wf;

pub use ast::{
    Body, DefKind, Definition, Expr, Guard, GuardTerm, Method, MethodHeader, Program, TraitExpr,
    BOOL, NUM,
};
pub use lexer::ParseError;
pub use parser::{parse_expr, parse_formula, parse_program};
pub use pretty::{expr_to_string, guard_to_string, pretty_print};
pub use wf::{check_well_formed, WellFormednessError};
