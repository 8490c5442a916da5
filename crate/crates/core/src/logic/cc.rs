//! Congruence closure over uninterpreted terms.
//!
//! Terms are interned into a union-find; asserted equalities are unioned and
//! congruence (equal children imply equal applications) is propagated to a
//! fixpoint. Boolean-valued atoms are handled by unioning the atom's term
//! with distinguished `true`/`false` nodes.

use super::term::{ArithOp, Term};
use std::collections::BTreeMap;

/// Internal node payload used for congruence matching.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Leaf(Term),
    App { method: String, children: Vec<usize> },
    Arith { op: ArithOp, children: Vec<usize> },
}

#[derive(Debug, Default, Clone)]
pub struct Congruence {
    nodes: Vec<Node>,
    index: BTreeMap<Node, usize>,
    parent: Vec<usize>,
    /// Ids of non-leaf nodes, rescanned after each union.
    composite: Vec<usize>,
    /// Set when `true` and `false` (or two distinct integer literals)
    /// collapse into one class.
    contradictory: bool,
}

impl Congruence {
    pub fn new() -> Self {
        Self::default()
    }

    /// The distinguished node for asserted boolean atoms.
    pub fn true_node(&mut self) -> usize {
        self.intern(&Term::var("$true"))
    }

    pub fn false_node(&mut self) -> usize {
        self.intern(&Term::var("$false"))
    }

    pub fn contradictory(&self) -> bool {
        self.contradictory
    }

    fn add_node(&mut self, node: Node) -> usize {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.parent.push(id);
        if matches!(node, Node::App { .. } | Node::Arith { .. }) {
            self.composite.push(id);
        }
        self.index.insert(node, id);
        id
    }

    /// Interns a term and all of its subterms, returning its node id.
    pub fn intern(&mut self, t: &Term) -> usize {
        match t {
            Term::Var(_) | Term::Int(_) => self.add_node(Node::Leaf(t.clone())),
            Term::App { recv, method, args } => {
                let mut children = vec![self.intern(recv)];
                for a in args {
                    children.push(self.intern(a));
                }
                self.add_node(Node::App {
                    method: method.clone(),
                    children,
                })
            }
            Term::Arith(op, a, b) => {
                let children = vec![self.intern(a), self.intern(b)];
                self.add_node(Node::Arith { op: *op, children })
            }
        }
    }

    pub fn find(&self, mut a: usize) -> usize {
        while self.parent[a] != a {
            a = self.parent[a];
        }
        a
    }

    /// Unions two classes and propagates congruence to a fixpoint.
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        // Keep the smaller id as representative for determinism.
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
        self.check_leaf_clash(keep);
        self.propagate();
    }

    /// Distinct integer literals (or the boolean constants) in one class.
    fn check_leaf_clash(&mut self, class: usize) {
        let mut int_val: Option<i64> = None;
        let mut saw_true = false;
        let mut saw_false = false;
        for id in 0..self.nodes.len() {
            if self.find(id) != class {
                continue;
            }
            match &self.nodes[id] {
                Node::Leaf(Term::Int(n)) => {
                    if let Some(prev) = int_val {
                        if prev != *n {
                            self.contradictory = true;
                        }
                    }
                    int_val = Some(*n);
                }
                Node::Leaf(Term::Var(v)) if v == "$true" => saw_true = true,
                Node::Leaf(Term::Var(v)) if v == "$false" => saw_false = true,
                _ => {}
            }
        }
        if saw_true && saw_false {
            self.contradictory = true;
        }
    }

    fn propagate(&mut self) {
        loop {
            let mut merged = false;
            // Group composite nodes by canonical signature.
            let mut sig: BTreeMap<(String, Vec<usize>), usize> = BTreeMap::new();
            for &id in &self.composite.clone() {
                let key = match &self.nodes[id] {
                    Node::App { method, children } => (
                        format!("app:{method}"),
                        children.iter().map(|&c| self.find(c)).collect(),
                    ),
                    Node::Arith { op, children } => (
                        format!("arith:{}", op.symbol()),
                        children.iter().map(|&c| self.find(c)).collect(),
                    ),
                    Node::Leaf(_) => continue,
                };
                match sig.get(&key) {
                    Some(&other) if self.find(other) != self.find(id) => {
                        let (ra, rb) = (self.find(other), self.find(id));
                        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
                        self.parent[drop] = keep;
                        self.check_leaf_clash(keep);
                        merged = true;
                    }
                    Some(_) => {}
                    None => {
                        sig.insert(key, id);
                    }
                }
            }
            if !merged {
                break;
            }
        }
    }

    /// Whether two (already internable) terms are provably equal.
    pub fn terms_equal(&mut self, a: &Term, b: &Term) -> bool {
        let ia = self.intern(a);
        let ib = self.intern(b);
        // A freshly interned composite may be congruent to an existing one.
        self.propagate();
        self.find(ia) == self.find(ib)
    }

    /// Canonical representative id for a term's class.
    pub fn class_of(&mut self, t: &Term) -> usize {
        let id = self.intern(t);
        self.propagate();
        self.find(id)
    }

    /// The concrete integer value of a class, if any literal is in it.
    pub fn int_value_of_class(&self, class: usize) -> Option<i64> {
        for id in 0..self.nodes.len() {
            if self.find(id) == class {
                if let Node::Leaf(Term::Int(n)) = &self.nodes[id] {
                    return Some(*n);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn congruence_propagates_through_applications() {
        // list = _f0  entails  list.element() = _f0.element()
        let mut cc = Congruence::new();
        let a = cc.intern(&v("list"));
        let b = cc.intern(&v("_f0"));
        cc.union(a, b);
        assert!(cc.terms_equal(
            &Term::app(v("list"), "element", vec![]),
            &Term::app(v("_f0"), "element", vec![]),
        ));
    }

    #[test]
    fn transitivity_and_literals() {
        let mut cc = Congruence::new();
        let x = cc.intern(&v("x"));
        let y = cc.intern(&v("y"));
        let five = cc.intern(&Term::Int(5));
        cc.union(x, y);
        cc.union(y, five);
        assert!(cc.terms_equal(&v("x"), &Term::Int(5)));
        let six = cc.intern(&Term::Int(6));
        cc.union(x, six);
        assert!(cc.contradictory());
    }
}
