//! Specification call graph and circularity detection.
//!
//! A node is a method of a flattened body; an edge `m -> n` exists whenever
//! `n`'s application term (on `this`) occurs in `m`'s pre- or postcondition
//! and `n` is a method of the same body. Cycles in this graph make contract
//! reasoning ill-founded, so they are reported as errors by default.

use super::term::Term;
use crate::syntax::Body;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A `(definition, method)` node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpecNode {
    pub definition: String,
    pub method: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecGraph {
    pub nodes: Vec<SpecNode>,
    /// Edges as (from index, to index) pairs into `nodes`.
    pub edges: Vec<(usize, usize)>,
}

impl SpecGraph {
    pub fn edge_names(&self) -> Vec<(&str, &str)> {
        self.edges
            .iter()
            .map(|(a, b)| (self.nodes[*a].method.as_str(), self.nodes[*b].method.as_str()))
            .collect()
    }

    /// Renders the graph in DOT syntax, deterministically.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph specs {\n");
        for n in &self.nodes {
            out.push_str(&format!("  \"{}.{}\";\n", n.definition, n.method));
        }
        for (a, b) in &self.edges {
            let (na, nb) = (&self.nodes[*a], &self.nodes[*b]);
            out.push_str(&format!(
                "  \"{}.{}\" -> \"{}.{}\";\n",
                na.definition, na.method, nb.definition, nb.method
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the spec graph of a flattened body.
pub fn build_spec_graph(body: &Body, owner: &str) -> SpecGraph {
    let names: Vec<&str> = body.method_names().collect();
    let nodes: Vec<SpecNode> = names
        .iter()
        .map(|m| SpecNode {
            definition: owner.to_string(),
            method: m.to_string(),
        })
        .collect();

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, method) in body.methods.iter().enumerate() {
        let spec = &method.header.spec;
        for formula in [&spec.pre, &spec.post] {
            for app in formula.app_subterms() {
                if let Term::App { recv, method: callee, .. } = app {
                    if matches!(recv.as_ref(), Term::Var(v) if v == "this") {
                        if let Some(j) = names.iter().position(|n| *n == callee.as_str()) {
                            edges.insert((i, j));
                        }
                    }
                }
            }
        }
    }

    SpecGraph {
        nodes,
        edges: edges.into_iter().collect(),
    }
}

/// Reports every elementary cycle exactly once, rotated so the smallest
/// node index comes first. Returns an empty list iff the graph is acyclic.
pub fn detect_circularity(g: &SpecGraph) -> Vec<Vec<SpecNode>> {
    let n = g.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for (a, b) in &g.edges {
        adj[*a].push(*b);
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }

    let mut cycles: Vec<Vec<usize>> = Vec::new();
    // Johnson-style restriction: from each start node, only visit nodes with
    // an index >= start, so each elementary cycle is found exactly once
    // (rooted at its minimum node).
    for start in 0..n {
        let mut stack = vec![start];
        let mut on_stack = vec![false; n];
        on_stack[start] = true;
        dfs_cycles(start, start, &adj, &mut stack, &mut on_stack, &mut cycles);
    }

    cycles.sort();
    cycles
        .into_iter()
        .map(|c| c.into_iter().map(|i| g.nodes[i].clone()).collect())
        .collect()
}

fn dfs_cycles(
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
            dfs_cycles(start, next, adj, stack, on_stack, cycles);
            stack.pop();
            on_stack[next] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SpecGraph {
        SpecGraph {
            nodes: (0..n)
                .map(|i| SpecNode {
                    definition: "T".into(),
                    method: format!("m{i}"),
                })
                .collect(),
            edges: edges.to_vec(),
        }
    }

    #[test]
    fn empty_graph_has_no_cycles() {
        assert!(detect_circularity(&graph(0, &[])).is_empty());
        assert!(detect_circularity(&graph(3, &[(0, 1), (1, 2)])).is_empty());
    }

    #[test]
    fn self_edge_is_a_cycle() {
        let cycles = detect_circularity(&graph(1, &[(0, 0)]));
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 1);
    }

    #[test]
    fn two_cycle_reported_once() {
        let cycles = detect_circularity(&graph(2, &[(0, 1), (1, 0)]));
        assert_eq!(cycles.len(), 1);
        let names: Vec<&str> = cycles[0].iter().map(|n| n.method.as_str()).collect();
        assert_eq!(names, vec!["m0", "m1"]);
    }

    #[test]
    fn distinct_elementary_cycles() {
        // 0->1->0 and 0->2->0 are distinct cycles.
        let cycles = detect_circularity(&graph(3, &[(0, 1), (1, 0), (0, 2), (2, 0)]));
        assert_eq!(cycles.len(), 2);
    }
}
