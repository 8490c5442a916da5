//! Linear integer arithmetic over congruence-class unknowns.
//!
//! Constraints are normalized to `sum(coeff * var) + k >= 0` with integer
//! tightening applied to strict comparisons at construction time. Entailment
//! is decided by refutation with Fourier-Motzkin elimination (exact over the
//! rationals, hence a sound refutation over the integers) plus gcd
//! tightening of derived constraints, which recovers integer reasoning for
//! the unit-coefficient constraints this fragment produces.

use std::collections::BTreeMap;

/// `sum(coeffs[v] * v) + k >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lin {
    pub coeffs: BTreeMap<usize, i128>,
    pub k: i128,
}

impl Lin {
    pub fn constant(k: i128) -> Lin {
        Lin {
            coeffs: BTreeMap::new(),
            k,
        }
    }

    pub fn var(v: usize) -> Lin {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, 1);
        Lin { coeffs, k: 0 }
    }

    pub fn add(mut self, other: &Lin) -> Lin {
        for (v, c) in &other.coeffs {
            *self.coeffs.entry(*v).or_insert(0) += c;
        }
        self.k += other.k;
        self.normalize();
        self
    }

    pub fn scale(mut self, s: i128) -> Lin {
        for c in self.coeffs.values_mut() {
            *c *= s;
        }
        self.k *= s;
        self.normalize();
        self
    }

    pub fn sub(self, other: &Lin) -> Lin {
        self.add(&other.clone().scale(-1))
    }

    fn normalize(&mut self) {
        self.coeffs.retain(|_, c| *c != 0);
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Divides through by the gcd of the variable coefficients, flooring the
    /// constant. Sound over the integers for a `>= 0` constraint.
    fn gcd_tighten(mut self) -> Lin {
        let g = self
            .coeffs
            .values()
            .fold(0i128, |acc, c| gcd(acc, c.abs()));
        if g > 1 {
            for c in self.coeffs.values_mut() {
                *c /= g;
            }
            self.k = self.k.div_euclid(g);
        }
        self
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Upper bound on derived constraints before giving up (returning "maybe
/// feasible", which callers must treat as failure to prove).
const MAX_CONSTRAINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Infeasible,
    /// Either feasible or beyond the solver's budget.
    MaybeFeasible,
}

/// Checks satisfiability of a conjunction of `>= 0` constraints.
///
/// `Infeasible` is a proof of unsatisfiability (over the rationals, hence
/// over the integers). `MaybeFeasible` carries no guarantee.
pub fn feasibility(constraints: &[Lin]) -> Feasibility {
    let mut current: Vec<Lin> = constraints.iter().map(|c| c.clone().gcd_tighten()).collect();
    loop {
        // Constant constraints decide themselves.
        for c in &current {
            if c.is_constant() && c.k < 0 {
                return Feasibility::Infeasible;
            }
        }
        current.retain(|c| !c.is_constant());
        if current.is_empty() {
            return Feasibility::MaybeFeasible;
        }

        // Pick the variable with the fewest pairings to limit growth.
        let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for c in &current {
            for (v, coeff) in &c.coeffs {
                let e = counts.entry(*v).or_insert((0, 0));
                if *coeff > 0 {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let var = counts
            .iter()
            .min_by_key(|(v, (lo, hi))| (lo * hi, **v))
            .map(|(v, _)| *v)
            .expect("non-constant constraint has a variable");

        let (lowers, uppers, rest): (Vec<Lin>, Vec<Lin>, Vec<Lin>) = {
            let mut lowers = Vec::new();
            let mut uppers = Vec::new();
            let mut rest = Vec::new();
            for c in current {
                match c.coeffs.get(&var).copied().unwrap_or(0) {
                    x if x > 0 => lowers.push(c),
                    x if x < 0 => uppers.push(c),
                    _ => rest.push(c),
                }
            }
            (lowers, uppers, rest)
        };

        let mut next = rest;
        for lo in &lowers {
            for up in &uppers {
                let a = lo.coeffs[&var];
                let b = -up.coeffs[&var];
                // a, b > 0: combine b*lo + a*up, eliminating `var`.
                let combined = lo.clone().scale(b).add(&up.clone().scale(a)).gcd_tighten();
                next.push(combined);
                if next.len() > MAX_CONSTRAINTS {
                    return Feasibility::MaybeFeasible;
                }
            }
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(v: usize, k: i128) -> Lin {
        // v <= k  ->  -v + k >= 0
        Lin::constant(k).sub(&Lin::var(v))
    }

    fn ge(v: usize, k: i128) -> Lin {
        Lin::var(v).sub(&Lin::constant(k))
    }

    #[test]
    fn contradictory_bounds_detected() {
        assert_eq!(
            feasibility(&[ge(0, 2), le(0, 1)]),
            Feasibility::Infeasible
        );
        assert_eq!(
            feasibility(&[ge(0, 1), le(0, 1)]),
            Feasibility::MaybeFeasible
        );
    }

    #[test]
    fn chained_differences() {
        // x >= y + 1, y >= z + 1, z >= x is infeasible.
        let x = Lin::var(0);
        let y = Lin::var(1);
        let z = Lin::var(2);
        let c1 = x.clone().sub(&y).sub(&Lin::constant(1));
        let c2 = y.clone().sub(&z).sub(&Lin::constant(1));
        let c3 = z.sub(&x);
        assert_eq!(feasibility(&[c1, c2, c3]), Feasibility::Infeasible);
    }

    #[test]
    fn gcd_tightening_catches_parity_gaps() {
        // 2x >= 1 and 2x <= 1 has a rational solution but no integer one.
        let two_x = Lin::var(0).scale(2);
        let c1 = two_x.clone().sub(&Lin::constant(1));
        let c2 = Lin::constant(1).sub(&two_x);
        assert_eq!(feasibility(&[c1, c2]), Feasibility::Infeasible);
    }
}
