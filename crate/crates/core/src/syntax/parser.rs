//! Recursive-descent parser for `.tcbc` programs.
//!
//! The grammar is whitespace-insensitive with `//` line comments. Every
//! input yields either a `Program` or a `ParseError`; nesting depth is
//! bounded so arbitrary bytes cannot overflow the stack.

use super::ast::*;
use super::lexer::{lex, ParseError, Spanned, Tok};
use crate::logic::{ArithOp, Binder, CmpOp, Formula, Spec, Term};

const MAX_DEPTH: usize = 256;

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let prog = p.program()?;
    Ok(prog)
}

/// Parses a single spec formula (used by tests and tooling).
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let f = p.formula()?;
    p.expect(Tok::Eof)?;
    Ok(f)
}

/// Parses a single expression (used by `run -e`).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            message: format!("{}, found {}", message.into(), self.peek()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}"), &[&tok.to_string()]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error(format!("expected {what}"), &["identifier"])),
        }
    }

    fn with_depth<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T, ParseError>,
    ) -> Result<T, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let (line, col) = self.here();
            self.depth -= 1;
            return Err(ParseError {
                line,
                col,
                message: "nesting too deep".into(),
                expected: vec![],
            });
        }
        let r = f(self);
        self.depth -= 1;
        r
    }

    // -- program structure --------------------------------------------------

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut definitions = Vec::new();
        let mut main = None;
        loop {
            match self.peek().clone() {
                Tok::Trait => {
                    self.bump();
                    definitions.push(self.definition(DefKind::Trait)?);
                }
                Tok::Class => {
                    self.bump();
                    definitions.push(self.definition(DefKind::Class)?);
                }
                Tok::Ident(name) if name == "main" => {
                    self.bump();
                    self.expect(Tok::Assign)?;
                    let e = self.expr()?;
                    self.expect(Tok::Semi)?;
                    main = Some(e);
                    self.expect(Tok::Eof)?;
                    break;
                }
                Tok::Eof => break,
                _ => {
                    return Err(self.error(
                        "expected a definition or `main`",
                        &["trait", "class", "main"],
                    ))
                }
            }
        }
        Ok(Program { definitions, main })
    }

    fn definition(&mut self, kind: DefKind) -> Result<Definition, ParseError> {
        let name = self.ident("definition name")?;
        self.expect(Tok::Assign)?;
        let expr = self.trait_expr()?;
        // Optional terminator after a definition.
        self.eat(&Tok::Semi);
        Ok(Definition { name, kind, expr })
    }

    fn trait_expr(&mut self) -> Result<TraitExpr, ParseError> {
        self.with_depth(|p| {
            let mut left = p.trait_unary()?;
            while p.eat(&Tok::Plus) {
                let right = p.trait_unary()?;
                left = TraitExpr::Plus(Box::new(left), Box::new(right));
            }
            Ok(left)
        })
    }

    fn trait_unary(&mut self) -> Result<TraitExpr, ParseError> {
        let mut e = self.trait_atom()?;
        while self.eat(&Tok::LBracket) {
            self.expect(Tok::MakeAbstract)?;
            let m = self.ident("method name")?;
            self.expect(Tok::RBracket)?;
            e = TraitExpr::MakeAbstract(Box::new(e), m);
        }
        Ok(e)
    }

    fn trait_atom(&mut self) -> Result<TraitExpr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(TraitExpr::Ref(name))
            }
            Tok::LBrace => Ok(TraitExpr::Lit(self.body()?)),
            Tok::LParen => {
                self.bump();
                let e = self.trait_expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.error(
                "expected a trait expression",
                &["identifier", "{", "("],
            )),
        }
    }

    fn body(&mut self) -> Result<Body, ParseError> {
        self.expect(Tok::LBrace)?;
        let is_interface = self.eat(&Tok::Interface);
        let mut interfaces = Vec::new();
        if self.eat(&Tok::Implements) {
            interfaces.push(self.ident("interface name")?);
            while self.eat(&Tok::Comma) {
                interfaces.push(self.ident("interface name")?);
            }
        }
        let mut methods = Vec::new();
        while !self.eat(&Tok::RBrace) {
            methods.push(self.method()?);
        }
        Ok(Body {
            is_interface,
            interfaces,
            methods,
        })
    }

    fn method(&mut self) -> Result<Method, ParseError> {
        let mut pre = None;
        let mut post = None;
        loop {
            if self.eat(&Tok::AtPre) {
                self.expect(Tok::Colon)?;
                pre = Some(self.formula()?);
            } else if self.eat(&Tok::AtPost) {
                self.expect(Tok::Colon)?;
                post = Some(self.formula()?);
            } else {
                break;
            }
        }
        let is_abstract = self.eat(&Tok::Abstract);
        let return_type = self.ident("return type")?;
        let name = self.ident("method name")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                let class = self.ident("parameter type")?;
                let var = self.ident("parameter name")?;
                params.push((class, var));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = if is_abstract {
            None
        } else if self.eat(&Tok::Assign) {
            Some(self.expr()?)
        } else {
            None
        };
        if is_abstract && self.peek() == &Tok::Assign {
            return Err(self.error("abstract method cannot have a body", &[";"]));
        }
        self.expect(Tok::Semi)?;
        Ok(Method {
            header: MethodHeader {
                spec: Spec {
                    pre: pre.unwrap_or(Formula::True),
                    post: post.unwrap_or(Formula::True),
                },
                return_type,
                name,
                params,
            },
            body,
        })
    }

    // -- expressions ---------------------------------------------------------

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.with_depth(|p| {
            if p.peek() == &Tok::If {
                return p.if_expr();
            }
            p.postfix_expr()
        })
    }

    fn if_expr(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::If)?;
        self.expect(Tok::LParen)?;
        let guard_formula = self.formula()?;
        self.expect(Tok::RParen)?;
        let guard = Guard::from_formula(&guard_formula).map_err(|msg| {
            let (line, col) = self.here();
            ParseError {
                line,
                col,
                message: msg,
                expected: vec![],
            }
        })?;
        self.expect(Tok::LBrace)?;
        let then_branch = self.expr()?;
        self.expect(Tok::RBrace)?;

        let else_branch = if self.peek() == &Tok::Elseif {
            // Desugar `elseif` to a nested conditional in the else slot.
            let saved = self.tokens[self.pos].clone();
            self.tokens[self.pos] = Spanned {
                tok: Tok::If,
                line: saved.line,
                col: saved.col,
            };
            self.if_expr()?
        } else {
            self.expect(Tok::Else)?;
            self.expect(Tok::LBrace)?;
            let e = self.expr()?;
            self.expect(Tok::RBrace)?;
            e
        };
        Ok(Expr::Ite {
            guard,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        })
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary_expr()?;
        while self.eat(&Tok::Dot) {
            let method = self.ident("method name")?;
            self.expect(Tok::LParen)?;
            let args = self.expr_args()?;
            e = Expr::Call {
                recv: Box::new(e),
                method,
                args,
            };
        }
        Ok(e)
    }

    fn expr_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::New => {
                self.bump();
                let class = self.ident("class name")?;
                self.expect(Tok::LParen)?;
                let args = self.expr_args()?;
                Ok(Expr::New { class, args })
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Expr::Int(-n))
                    }
                    _ => Err(self.error("expected integer literal after `-`", &["integer"])),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    // Receiverless call is sugar for a call on `this`.
                    self.bump();
                    let args = self.expr_args()?;
                    Ok(Expr::Call {
                        recv: Box::new(Expr::this()),
                        method: name,
                        args,
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.error(
                "expected an expression",
                &["identifier", "integer", "new", "(", "if"],
            )),
        }
    }

    // -- formulas -----------------------------------------------------------

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.with_depth(|p| {
            let left = p.formula_or()?;
            if p.eat(&Tok::Arrow) {
                let right = p.formula()?; // right-associative
                return Ok(Formula::implies(left, right));
            }
            Ok(left)
        })
    }

    fn formula_or(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.formula_and()?;
        while self.eat(&Tok::Pipe) {
            let right = self.formula_and()?;
            left = Formula::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn formula_and(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.formula_unary()?;
        while self.eat(&Tok::Amp) {
            let right = self.formula_unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn formula_unary(&mut self) -> Result<Formula, ParseError> {
        self.with_depth(Self::formula_unary_inner)
    }

    fn formula_unary_inner(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                let inner = self.formula_unary()?;
                Ok(Formula::not(inner))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Forall | Tok::Exists => {
                let is_forall = self.peek() == &Tok::Forall;
                self.bump();
                let class = self.ident("binder class")?;
                let var = self.ident("binder variable")?;
                self.expect(Tok::Colon)?;
                let body = self.formula()?;
                let binder = Binder { var, class };
                Ok(if is_forall {
                    Formula::Forall(binder, Box::new(body))
                } else {
                    Formula::Exists(binder, Box::new(body))
                })
            }
            Tok::LParen => {
                // Could be a parenthesized formula or a parenthesized term.
                let save = self.pos;
                self.bump();
                if let Ok(f) = self.formula() {
                    if self.peek() == &Tok::RParen {
                        // A comparison or arithmetic right after the closing
                        // paren means the parens delimited a term after all.
                        let after = self.peek2().clone();
                        let term_continues = matches!(
                            after,
                            Tok::Assign
                                | Tok::EqEq
                                | Tok::Ne
                                | Tok::Lt
                                | Tok::Le
                                | Tok::Gt
                                | Tok::Ge
                                | Tok::Plus
                                | Tok::Minus
                                | Tok::Star
                                | Tok::Colon
                                | Tok::Dot
                        );
                        if !term_continues {
                            self.bump();
                            return Ok(f);
                        }
                    }
                }
                self.pos = save;
                self.comparison()
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<Formula, ParseError> {
        let left = self.term()?;
        let op = match self.peek() {
            Tok::Assign | Tok::EqEq => Some(CmpOp::Eq),
            Tok::Ne => Some(CmpOp::Ne),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Le => Some(CmpOp::Le),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Ge => Some(CmpOp::Ge),
            Tok::Colon => {
                self.bump();
                let class = self.ident("class name")?;
                return Ok(Formula::HasType(left, class));
            }
            _ => None,
        };
        match op {
            Some(op) => {
                self.bump();
                let right = self.term()?;
                Ok(Formula::Cmp(op, left, right))
            }
            None => match left {
                Term::App { .. } => Ok(Formula::Atom(left)),
                _ => Err(self.error(
                    "expected a comparison operator after term",
                    &["==", "!=", "<", "<=", ">", ">=", ":"],
                )),
            },
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.with_depth(|p| {
            let mut left = p.term_mul()?;
            loop {
                if p.eat(&Tok::Plus) {
                    let right = p.term_mul()?;
                    left = Term::Arith(ArithOp::Add, Box::new(left), Box::new(right));
                } else if p.eat(&Tok::Minus) {
                    let right = p.term_mul()?;
                    left = Term::Arith(ArithOp::Sub, Box::new(left), Box::new(right));
                } else {
                    break;
                }
            }
            Ok(left)
        })
    }

    fn term_mul(&mut self) -> Result<Term, ParseError> {
        let mut left = self.term_postfix()?;
        while self.eat(&Tok::Star) {
            let right = self.term_postfix()?;
            left = Term::Arith(ArithOp::Mul, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term_postfix(&mut self) -> Result<Term, ParseError> {
        let mut t = self.term_primary()?;
        while self.eat(&Tok::Dot) {
            let method = self.ident("method name")?;
            self.expect(Tok::LParen)?;
            let args = self.term_args()?;
            t = Term::App {
                recv: Box::new(t),
                method,
                args,
            };
        }
        Ok(t)
    }

    fn term_args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                args.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn term_primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            Tok::Minus => {
                self.bump();
                let inner = self.term_primary()?;
                Ok(match inner {
                    Term::Int(n) => Term::Int(-n),
                    other => Term::Arith(ArithOp::Sub, Box::new(Term::Int(0)), Box::new(other)),
                })
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    // Receiverless application is sugar for `this.m(..)`.
                    self.bump();
                    let args = self.term_args()?;
                    Ok(Term::App {
                        recv: Box::new(Term::this()),
                        method: name,
                        args,
                    })
                } else {
                    Ok(Term::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.error(
                "expected a term",
                &["identifier", "integer", "("],
            )),
        }
    }
}

