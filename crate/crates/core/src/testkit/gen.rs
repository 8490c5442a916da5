//! Deterministic generator of well-formed, built-in-verifiable programs.
//!
//! Generation is by construction rather than generate-and-filter: method
//! postconditions are derived from the knowledge the generated body
//! actually produces, and composed contracts are built Definition-4
//! compatible, so every generated program flattens and verifies unless a
//! mutation deliberately breaks it.

use crate::logic::{CmpOp, Formula, Spec, Term};
use crate::syntax::{Body, DefKind, Definition, Expr, Method, MethodHeader, Program, NUM};
use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

/// Bounds and switches for program generation. Generation is a pure
/// function of this configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_defs: usize,
    pub max_methods_per_body: usize,
    pub max_params: usize,
    pub max_expr_depth: usize,
    /// Probability that an extra abstract/concrete composition pair (plus
    /// its composing class) is generated.
    pub composition_probability: f64,
    /// Restrict specs to conjunctions of equalities/order atoms over
    /// parameters, `result`, and getter terms (the decidable fragment).
    pub qf_conjunctions_only: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_defs: 6,
            max_methods_per_body: 3,
            max_params: 2,
            max_expr_depth: 3,
            composition_probability: 0.7,
            qf_conjunctions_only: true,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> GenConfig {
        GenConfig {
            seed,
            ..GenConfig::default()
        }
    }
}

fn rng_for(cfg: &GenConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

/// A generated leaf body together with a postcondition it provably
/// satisfies under the built-in backend.
struct PlannedMethod {
    body: Expr,
    post: Formula,
    pre: Formula,
}

struct Gen {
    rng: ChaCha8Rng,
    defs: Vec<Definition>,
    /// Names of generated instantiable data classes with their getter count.
    data_classes: Vec<(String, usize)>,
}

impl Gen {
    fn fresh_name(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.defs.len())
    }

    /// A leaf body over the given parameters, with a derived contract.
    fn plan_leaf(&mut self, params: &[(String, String)]) -> PlannedMethod {
        let num_params: Vec<&str> = params
            .iter()
            .filter(|(c, _)| c == NUM)
            .map(|(_, x)| x.as_str())
            .collect();
        let choice = self.rng.gen_range(0..if num_params.is_empty() { 2 } else { 4 });
        match choice {
            // Integer literal: post pins or bounds the result.
            0 | 1 => {
                let n = self.rng.gen_range(-4..=4);
                let post = match self.rng.gen_range(0..3) {
                    0 => Formula::eq(Term::result(), Term::Int(n)),
                    1 => Formula::Cmp(CmpOp::Ge, Term::result(), Term::Int(n)),
                    _ => Formula::and(
                        Formula::Cmp(CmpOp::Ge, Term::result(), Term::Int(n)),
                        Formula::Cmp(CmpOp::Le, Term::result(), Term::Int(n)),
                    ),
                };
                PlannedMethod {
                    body: Expr::Int(n),
                    post,
                    pre: Formula::True,
                }
            }
            // Parameter passthrough: result == x, optionally under a
            // precondition that also bounds the result.
            2 => {
                let x = num_params[self.rng.gen_range(0..num_params.len())];
                let mut post = Formula::eq(Term::result(), Term::var(x));
                let mut pre = Formula::True;
                if self.rng.gen_bool(0.4) {
                    let c = self.rng.gen_range(-2..=2);
                    pre = Formula::Cmp(CmpOp::Gt, Term::var(x), Term::Int(c));
                    post = Formula::and(post, Formula::Cmp(CmpOp::Gt, Term::result(), Term::Int(c)));
                }
                PlannedMethod {
                    body: Expr::Var(x.to_string()),
                    post,
                    pre,
                }
            }
            // Construct a data object and describe one getter.
            _ => {
                if let Some((class, getters)) = self.pick_data_class() {
                    let args: Vec<Expr> = (0..getters)
                        .map(|_| {
                            if !num_params.is_empty() && self.rng.gen_bool(0.5) {
                                Expr::Var(
                                    num_params[self.rng.gen_range(0..num_params.len())]
                                        .to_string(),
                                )
                            } else {
                                Expr::Int(self.rng.gen_range(-4..=4))
                            }
                        })
                        .collect();
                    let idx = self.rng.gen_range(0..getters);
                    let described = match &args[idx] {
                        Expr::Var(x) => Term::var(x.clone()),
                        Expr::Int(n) => Term::Int(*n),
                        _ => unreachable!(),
                    };
                    let post = Formula::eq(
                        Term::app(Term::result(), format!("g{idx}"), vec![]),
                        described,
                    );
                    return PlannedMethod {
                        body: Expr::New {
                            class,
                            args,
                        },
                        post,
                        pre: Formula::True,
                    };
                }
                let n = self.rng.gen_range(-4..=4);
                PlannedMethod {
                    body: Expr::Int(n),
                    post: Formula::eq(Term::result(), Term::Int(n)),
                    pre: Formula::True,
                }
            }
        }
    }

    fn pick_data_class(&mut self) -> Option<(String, usize)> {
        if self.data_classes.is_empty() {
            return None;
        }
        let i = self.rng.gen_range(0..self.data_classes.len());
        Some(self.data_classes[i].clone())
    }

    fn gen_params(&mut self, max_params: usize) -> Vec<(String, String)> {
        let n = self.rng.gen_range(0..=max_params);
        (0..n).map(|i| (NUM.to_string(), format!("x{i}"))).collect()
    }

    fn return_type_of(&self, body: &Expr) -> String {
        match body {
            Expr::New { class, .. } => class.clone(),
            _ => NUM.to_string(),
        }
    }
}

/// Generates a well-formed program whose concrete methods all verify under
/// the built-in backend.
pub fn gen_program(cfg: &GenConfig) -> Program {
    let mut g = Gen {
        rng: rng_for(cfg),
        defs: Vec::new(),
        data_classes: Vec::new(),
    };

    // A few instantiable data classes: getters only, trivial contracts.
    let data_count = 1 + (cfg.max_defs / 4).min(2);
    for _ in 0..data_count {
        let name = g.fresh_name("D");
        let getters = g.rng.gen_range(1..=3usize);
        let methods = (0..getters)
            .map(|i| Method {
                header: MethodHeader {
                    spec: Spec::trivial(),
                    return_type: NUM.to_string(),
                    name: format!("g{i}"),
                    params: vec![],
                },
                body: None,
            })
            .collect();
        g.data_classes.push((name.clone(), getters));
        g.defs.push(Definition {
            name,
            kind: DefKind::Class,
            expr: crate::syntax::TraitExpr::Lit(Body {
                is_interface: false,
                interfaces: vec![],
                methods,
            }),
        });
    }

    // Unit traits with derived contracts.
    let unit_count = 1 + cfg.max_defs / 3;
    for _ in 0..unit_count {
        let name = g.fresh_name("T");
        let count = g.rng.gen_range(1..=cfg.max_methods_per_body);
        let mut methods = Vec::new();
        for k in 0..count {
            let params = g.gen_params(cfg.max_params);
            let planned = g.plan_leaf(&params);
            methods.push(Method {
                header: MethodHeader {
                    spec: Spec {
                        pre: planned.pre,
                        post: planned.post,
                    },
                    return_type: g.return_type_of(&planned.body),
                    name: format!("m{k}"),
                    params,
                },
                body: Some(planned.body),
            });
        }
        g.defs.push(Definition {
            name,
            kind: DefKind::Trait,
            expr: crate::syntax::TraitExpr::Lit(Body {
                is_interface: false,
                interfaces: vec![],
                methods,
            }),
        });
    }

    // Composition pairs: an abstract requirement plus a concrete provider
    // with a Definition-4 compatible (equal or refining) contract, composed
    // into a class.
    while g.defs.len() + 3 <= cfg.max_defs + data_count + unit_count
        && g.rng.gen_bool(cfg.composition_probability)
    {
        let params = g.gen_params(cfg.max_params);
        let planned = g.plan_leaf(&params);
        let return_type = g.return_type_of(&planned.body);
        let method_name = "m0".to_string();

        // The abstract side may strengthen the pre and weaken the post.
        let identical = g.rng.gen_bool(0.6);
        let abstract_spec = if identical {
            Spec {
                pre: planned.pre.clone(),
                post: planned.post.clone(),
            }
        } else {
            let stronger_pre = if planned.pre == Formula::True && !params.is_empty() {
                Formula::Cmp(
                    CmpOp::Ge,
                    Term::var(params[0].1.clone()),
                    Term::Int(g.rng.gen_range(-2..=0)),
                )
            } else {
                planned.pre.clone()
            };
            // Drop the second conjunct of a conjunction, if any.
            let weaker_post = match &planned.post {
                Formula::And(a, _) => (**a).clone(),
                other => other.clone(),
            };
            Spec {
                pre: stronger_pre,
                post: weaker_post,
            }
        };

        let abs_name = g.fresh_name("A");
        g.defs.push(Definition {
            name: abs_name.clone(),
            kind: DefKind::Trait,
            expr: crate::syntax::TraitExpr::Lit(Body {
                is_interface: false,
                interfaces: vec![],
                methods: vec![Method {
                    header: MethodHeader {
                        spec: abstract_spec,
                        return_type: return_type.clone(),
                        name: method_name.clone(),
                        params: params.clone(),
                    },
                    body: None,
                }],
            }),
        });
        let conc_name = g.fresh_name("P");
        g.defs.push(Definition {
            name: conc_name.clone(),
            kind: DefKind::Trait,
            expr: crate::syntax::TraitExpr::Lit(Body {
                is_interface: false,
                interfaces: vec![],
                methods: vec![Method {
                    header: MethodHeader {
                        spec: Spec {
                            pre: planned.pre,
                            post: planned.post,
                        },
                        return_type,
                        name: method_name,
                        params,
                    },
                    body: Some(planned.body),
                }],
            }),
        });
        let class_name = g.fresh_name("C");
        let (left, right) = if g.rng.gen_bool(0.5) {
            (abs_name, conc_name)
        } else {
            (conc_name, abs_name)
        };
        g.defs.push(Definition {
            name: class_name,
            kind: DefKind::Class,
            expr: crate::syntax::TraitExpr::Plus(
                Box::new(crate::syntax::TraitExpr::Ref(left)),
                Box::new(crate::syntax::TraitExpr::Ref(right)),
            ),
        });
    }

    Program {
        definitions: g.defs,
        main: None,
    }
}

/// Generates a refinement chain: a fully abstract `t0`, delegating
/// refinement traits `t1..tn`, and the class composing them. Every link
/// shares the leaf-derived contract, so each composition discharges by
/// alpha equality and each stage verifies.
pub fn gen_refinement_chain(cfg: &GenConfig) -> Program {
    let mut rng = rng_for(cfg);
    let steps = rng.gen_range(1..=3usize);
    let params: Vec<(String, String)> = (0..rng.gen_range(0..=cfg.max_params.max(1)))
        .map(|i| (NUM.to_string(), format!("x{i}")))
        .collect();

    // Leaf first: the contract everything in the chain shares.
    let (leaf_body, post) = if params.is_empty() || rng.gen_bool(0.5) {
        let n = rng.gen_range(-4..=4);
        (Expr::Int(n), Formula::eq(Term::result(), Term::Int(n)))
    } else {
        let x = params[rng.gen_range(0..params.len())].1.clone();
        (
            Expr::Var(x.clone()),
            Formula::eq(Term::result(), Term::var(x)),
        )
    };
    let spec = Spec {
        pre: Formula::True,
        post,
    };

    let header = |name: &str| MethodHeader {
        spec: spec.clone(),
        return_type: NUM.to_string(),
        name: name.to_string(),
        params: params.clone(),
    };

    let mut defs = Vec::new();
    defs.push(Definition {
        name: "R0".into(),
        kind: DefKind::Trait,
        expr: crate::syntax::TraitExpr::Lit(Body {
            is_interface: false,
            interfaces: vec![],
            methods: vec![Method {
                header: header("m"),
                body: None,
            }],
        }),
    });

    // Each step implements the previously opened hole by delegating to a
    // newly opened one; the final step supplies the leaf.
    for step in 1..=steps {
        let implemented = if step == 1 {
            "m".to_string()
        } else {
            format!("h{}", step - 1)
        };
        let mut methods = Vec::new();
        if step == steps {
            methods.push(Method {
                header: header(&implemented),
                body: Some(leaf_body.clone()),
            });
        } else {
            let opened = format!("h{step}");
            let call_args: Vec<Expr> =
                params.iter().map(|(_, x)| Expr::Var(x.clone())).collect();
            methods.push(Method {
                header: header(&implemented),
                body: Some(Expr::Call {
                    recv: Box::new(Expr::this()),
                    method: opened.clone(),
                    args: call_args,
                }),
            });
            methods.push(Method {
                header: header(&opened),
                body: None,
            });
        }
        defs.push(Definition {
            name: format!("R{step}"),
            kind: DefKind::Trait,
            expr: crate::syntax::TraitExpr::Lit(Body {
                is_interface: false,
                interfaces: vec![],
                methods,
            }),
        });
    }

    let mut expr = crate::syntax::TraitExpr::Ref("R0".into());
    for step in 1..=steps {
        expr = crate::syntax::TraitExpr::Plus(
            Box::new(expr),
            Box::new(crate::syntax::TraitExpr::Ref(format!("R{step}"))),
        );
    }
    defs.push(Definition {
        name: "Chain".into(),
        kind: DefKind::Class,
        expr,
    });

    Program {
        definitions: defs,
        main: None,
    }
}

/// Weakens the postcondition of `definition.method` to `true` in place;
/// used to build deliberately failing refinement steps.
pub fn weaken_post(program: &mut Program, definition: &str, method: &str) -> bool {
    for d in &mut program.definitions {
        if d.name != definition {
            continue;
        }
        if let crate::syntax::TraitExpr::Lit(body) = &mut d.expr {
            for m in &mut body.methods {
                if m.header.name == method {
                    m.header.spec.post = Formula::True;
                    return true;
                }
            }
        }
    }
    false
}

/// A generated instantiable class with `n` getters plus the values to
/// construct it with; used by the getter round-trip property.
pub fn getter_case(seed: u64) -> (Program, String, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let getters = rng.gen_range(1..=5usize);
    let values: Vec<i64> = (0..getters).map(|_| rng.gen_range(-100..=100)).collect();
    let methods = (0..getters)
        .map(|i| Method {
            header: MethodHeader {
                spec: Spec::trivial(),
                return_type: NUM.to_string(),
                name: format!("g{i}"),
                params: vec![],
            },
            body: None,
        })
        .collect();
    let program = Program {
        definitions: vec![Definition {
            name: "V".into(),
            kind: DefKind::Class,
            expr: crate::syntax::TraitExpr::Lit(Body {
                is_interface: false,
                interfaces: vec![],
                methods,
            }),
        }],
        main: None,
    };
    (program, "V".into(), values)
}
