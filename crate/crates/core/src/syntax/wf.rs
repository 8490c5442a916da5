//! Well-formedness checks on parsed programs: name uniqueness, acyclic
//! trait references, and parameter hygiene.

use super::ast::{Program, TraitExpr};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WellFormednessError {
    DuplicateDefinition {
        name: String,
    },
    /// A reference cycle among definitions, e.g. `trait A = A`.
    CircularTraitDefinition {
        cycle: Vec<String>,
    },
    DuplicateInterface {
        definition: String,
        interface: String,
    },
    DuplicateMethod {
        definition: String,
        method: String,
    },
    DuplicateParameter {
        definition: String,
        method: String,
        param: String,
    },
    ParameterNamedThis {
        definition: String,
        method: String,
    },
    DanglingRef {
        definition: String,
        target: String,
    },
}

impl fmt::Display for WellFormednessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WellFormednessError::DuplicateDefinition { name } => {
                write!(f, "duplicate definition name `{name}`")
            }
            WellFormednessError::CircularTraitDefinition { cycle } => {
                write!(f, "circular trait definition: {}", cycle.join(" -> "))
            }
            WellFormednessError::DuplicateInterface {
                definition,
                interface,
            } => write!(
                f,
                "duplicate interface `{interface}` in definition `{definition}`"
            ),
            WellFormednessError::DuplicateMethod { definition, method } => {
                write!(f, "duplicate method `{method}` in definition `{definition}`")
            }
            WellFormednessError::DuplicateParameter {
                definition,
                method,
                param,
            } => write!(
                f,
                "duplicate parameter `{param}` in `{definition}.{method}`"
            ),
            WellFormednessError::ParameterNamedThis { definition, method } => {
                write!(f, "parameter named `this` in `{definition}.{method}`")
            }
            WellFormednessError::DanglingRef { definition, target } => {
                write!(
                    f,
                    "definition `{definition}` references unknown name `{target}`"
                )
            }
        }
    }
}

/// Checks all well-formedness conditions, reporting every violation.
/// The error set is independent of definition order.
pub fn check_well_formed(p: &Program) -> Vec<WellFormednessError> {
    let mut errors = Vec::new();

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for d in &p.definitions {
        if !seen.insert(&d.name) {
            errors.push(WellFormednessError::DuplicateDefinition {
                name: d.name.clone(),
            });
        }
    }

    let names: BTreeSet<&str> = p.definitions.iter().map(|d| d.name.as_str()).collect();

    for d in &p.definitions {
        for target in d.expr.refs() {
            if !names.contains(target) {
                errors.push(WellFormednessError::DanglingRef {
                    definition: d.name.clone(),
                    target: target.to_string(),
                });
            }
        }
        check_bodies(&d.name, &d.expr, &mut errors);
    }

    errors.extend(reference_cycles(p));
    errors
}

fn check_bodies(definition: &str, e: &TraitExpr, errors: &mut Vec<WellFormednessError>) {
    match e {
        TraitExpr::Lit(body) => {
            let mut ifaces: BTreeSet<&str> = BTreeSet::new();
            for i in &body.interfaces {
                if !ifaces.insert(i) {
                    errors.push(WellFormednessError::DuplicateInterface {
                        definition: definition.to_string(),
                        interface: i.clone(),
                    });
                }
            }
            let mut methods: BTreeSet<&str> = BTreeSet::new();
            for m in &body.methods {
                if !methods.insert(&m.header.name) {
                    errors.push(WellFormednessError::DuplicateMethod {
                        definition: definition.to_string(),
                        method: m.header.name.clone(),
                    });
                }
                let mut params: BTreeSet<&str> = BTreeSet::new();
                for (_, x) in &m.header.params {
                    if x == "this" {
                        errors.push(WellFormednessError::ParameterNamedThis {
                            definition: definition.to_string(),
                            method: m.header.name.clone(),
                        });
                    } else if !params.insert(x) {
                        errors.push(WellFormednessError::DuplicateParameter {
                            definition: definition.to_string(),
                            method: m.header.name.clone(),
                            param: x.clone(),
                        });
                    }
                }
            }
        }
        TraitExpr::Ref(_) => {}
        TraitExpr::Plus(a, b) => {
            check_bodies(definition, a, errors);
            check_bodies(definition, b, errors);
        }
        TraitExpr::MakeAbstract(inner, _) => check_bodies(definition, inner, errors),
    }
}

/// Elementary cycles in the definition-reference graph, each reported once,
/// rotated to start at the lexicographically smallest name.
fn reference_cycles(p: &Program) -> Vec<WellFormednessError> {
    let mut order: Vec<&str> = p.definitions.iter().map(|d| d.name.as_str()).collect();
    order.sort_unstable();
    order.dedup();
    let idx_of = |name: &str| order.binary_search(&name).ok();

    let n = order.len();
    let mut adj = vec![BTreeSet::new(); n];
    for d in &p.definitions {
        if let Some(from) = idx_of(&d.name) {
            for target in d.expr.refs() {
                if let Some(to) = idx_of(target) {
                    adj[from].insert(to);
                }
            }
        }
    }
    let adj: Vec<Vec<usize>> = adj.into_iter().map(|s| s.into_iter().collect()).collect();

    let mut cycles = Vec::new();
    for start in 0..n {
        let mut stack = vec![start];
        let mut on_stack = vec![false; n];
        on_stack[start] = true;
        cycle_dfs(start, start, &adj, &mut stack, &mut on_stack, &mut cycles);
    }
    cycles.sort();
    cycles
        .into_iter()
        .map(|c| WellFormednessError::CircularTraitDefinition {
            cycle: c.into_iter().map(|i| order[i].to_string()).collect(),
        })
        .collect()
}

fn cycle_dfs(
    start: usize,
    current: usize,
    adj: &[Vec<usize>],
    stack: &mut Vec<usize>,
    on_stack: &mut Vec<bool>,
    cycles: &mut Vec<Vec<usize>>,
) {
    for &next in &adj[current] {
        if next < start {
            continue;
        }
        if next == start {
            cycles.push(stack.clone());
        } else if !on_stack[next] {
            stack.push(next);
            on_stack[next] = true;
            cycle_dfs(start, next, adj, stack, on_stack, cycles);
            stack.pop();
            on_stack[next] = false;
        }
    }
}
