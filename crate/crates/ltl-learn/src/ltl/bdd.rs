//! Reduced ordered BDDs over the leaf-valuation bits, used for exact
//! truth-equivalence of formulas when the valuation space is too large to
//! enumerate. Variables are the `n_ap * t_max` leaf bits ordered
//! time-major.

use std::collections::HashMap;

use super::Formula;

const FALSE: u32 = 0;
const TRUE: u32 = 1;

/// Hash-consed BDD arena tied to a fixed `(n_ap, t_max)` valuation space.
/// Formula signatures are node ids: two formulas are truth-equivalent on
/// every valuation iff their signatures in the same arena coincide.
pub struct SemanticArena {
    n_ap: usize,
    t_max: usize,
    /// (var, lo, hi); entries 0 and 1 are the terminals.
    nodes: Vec<(u32, u32, u32)>,
    dedup: HashMap<(u32, u32, u32), u32>,
    and_memo: HashMap<(u32, u32), u32>,
    or_memo: HashMap<(u32, u32), u32>,
    not_memo: HashMap<u32, u32>,
}

impl SemanticArena {
    pub fn new(n_ap: usize, t_max: usize) -> Self {
        SemanticArena {
            n_ap,
            t_max,
            nodes: vec![(u32::MAX, 0, 0), (u32::MAX, 1, 1)],
            dedup: HashMap::new(),
            and_memo: HashMap::new(),
            or_memo: HashMap::new(),
            not_memo: HashMap::new(),
        }
    }

    fn var_of(&self, ap: usize, t: usize) -> u32 {
        ((t - 1) * self.n_ap + (ap - 1)) as u32
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        if let Some(&id) = self.dedup.get(&(var, lo, hi)) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push((var, lo, hi));
        self.dedup.insert((var, lo, hi), id);
        id
    }

    fn leaf(&mut self, ap: usize, t: usize) -> u32 {
        let v = self.var_of(ap, t);
        self.mk(v, FALSE, TRUE)
    }

    fn var_rank(&self, id: u32) -> u32 {
        if id <= 1 {
            u32::MAX
        } else {
            self.nodes[id as usize].0
        }
    }

    fn and(&mut self, a: u32, b: u32) -> u32 {
        if a == FALSE || b == FALSE {
            return FALSE;
        }
        if a == TRUE {
            return b;
        }
        if b == TRUE || a == b {
            return a;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&r) = self.and_memo.get(&key) {
            return r;
        }
        let (va, vb) = (self.var_rank(a), self.var_rank(b));
        let v = va.min(vb);
        let (a_lo, a_hi) = if va == v {
            let n = self.nodes[a as usize];
            (n.1, n.2)
        } else {
            (a, a)
        };
        let (b_lo, b_hi) = if vb == v {
            let n = self.nodes[b as usize];
            (n.1, n.2)
        } else {
            (b, b)
        };
        let lo = self.and(a_lo, b_lo);
        let hi = self.and(a_hi, b_hi);
        let r = self.mk(v, lo, hi);
        self.and_memo.insert(key, r);
        r
    }

    fn or(&mut self, a: u32, b: u32) -> u32 {
        if a == TRUE || b == TRUE {
            return TRUE;
        }
        if a == FALSE {
            return b;
        }
        if b == FALSE || a == b {
            return a;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&r) = self.or_memo.get(&key) {
            return r;
        }
        let (va, vb) = (self.var_rank(a), self.var_rank(b));
        let v = va.min(vb);
        let (a_lo, a_hi) = if va == v {
            let n = self.nodes[a as usize];
            (n.1, n.2)
        } else {
            (a, a)
        };
        let (b_lo, b_hi) = if vb == v {
            let n = self.nodes[b as usize];
            (n.1, n.2)
        } else {
            (b, b)
        };
        let lo = self.or(a_lo, b_lo);
        let hi = self.or(a_hi, b_hi);
        let r = self.mk(v, lo, hi);
        self.or_memo.insert(key, r);
        r
    }

    fn not(&mut self, a: u32) -> u32 {
        match a {
            FALSE => TRUE,
            TRUE => FALSE,
            _ => {
                if let Some(&r) = self.not_memo.get(&a) {
                    return r;
                }
                let (v, lo, hi) = self.nodes[a as usize];
                let nlo = self.not(lo);
                let nhi = self.not(hi);
                let r = self.mk(v, nlo, nhi);
                self.not_memo.insert(a, r);
                r
            }
        }
    }

    /// BDD of `(trace, t) |= f`, mirroring the recursive semantics.
    fn build(&mut self, f: &Formula, t: usize) -> u32 {
        let t_max = self.t_max;
        match f {
            Formula::Ap(i) => self.leaf(*i, t),
            Formula::NotAp(i) => {
                let l = self.leaf(*i, t);
                self.not(l)
            }
            Formula::And(a, b) => {
                let x = self.build(a, t);
                let y = self.build(b, t);
                self.and(x, y)
            }
            Formula::Or(a, b) => {
                let x = self.build(a, t);
                let y = self.build(b, t);
                self.or(x, y)
            }
            Formula::Always { lo, hi, child } => {
                if t + lo > t_max {
                    return FALSE;
                }
                let mut acc = TRUE;
                for tt in (t + lo)..=(t + hi).min(t_max) {
                    let c = self.build(child, tt);
                    acc = self.and(acc, c);
                }
                acc
            }
            Formula::Eventually { lo, hi, child } => {
                if t + lo > t_max {
                    return FALSE;
                }
                let mut acc = FALSE;
                for tt in (t + lo)..=(t + hi).min(t_max) {
                    let c = self.build(child, tt);
                    acc = self.or(acc, c);
                }
                acc
            }
            Formula::Until { lo, hi, lhs, rhs } => {
                if t + lo > t_max {
                    return FALSE;
                }
                let mut acc = FALSE;
                for tt in (t + lo)..=(t + hi).min(t_max) {
                    let mut case = self.build(rhs, tt);
                    for tc in t..tt {
                        let g = self.build(lhs, tc);
                        case = self.and(case, g);
                    }
                    acc = self.or(acc, case);
                }
                acc
            }
            Formula::Seq(a, b) => {
                let mut acc = FALSE;
                for tt in t..=t_max {
                    let mut case = self.build(a, tt);
                    for tc in t..tt {
                        let g = self.build(b, tc);
                        let ng = self.not(g);
                        case = self.and(case, ng);
                    }
                    acc = self.or(acc, case);
                }
                acc
            }
            Formula::Avoid(a) => {
                let mut acc = TRUE;
                for tt in t..=t_max {
                    let c = self.build(a, tt);
                    let nc = self.not(c);
                    acc = self.and(acc, nc);
                }
                acc
            }
            Formula::After(a, b) => {
                let mut acc = TRUE;
                for tt in t..=t_max {
                    let trigger = self.build(b, tt);
                    let ntrigger = self.not(trigger);
                    let mut tail = TRUE;
                    for tc in tt..=t_max {
                        let c = self.build(a, tc);
                        tail = self.and(tail, c);
                    }
                    let clause = self.or(ntrigger, tail);
                    acc = self.and(acc, clause);
                }
                acc
            }
        }
    }

    /// Canonical id of the formula's truth function at `t = 1`.
    pub fn signature(&mut self, f: &Formula) -> u32 {
        self.build(f, 1)
    }

    /// Signature of the truth function at an arbitrary start time.
    pub fn signature_at(&mut self, f: &Formula, t: usize) -> u32 {
        assert!(t >= 1 && t <= self.t_max);
        self.build(f, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{evaluate, LeafValuation};

    #[test]
    fn signature_matches_enumeration() {
        let t_max = 3;
        let n_ap = 2;
        let f = Formula::and(
            Formula::eventually(0, 2, Formula::ap(1)),
            Formula::avoid(Formula::ap(2)),
        );
        let g = Formula::and(
            Formula::avoid(Formula::ap(2)),
            Formula::eventually(0, 2, Formula::ap(1)),
        );
        let h = Formula::eventually(0, 2, Formula::ap(1));
        let mut arena = SemanticArena::new(n_ap, t_max);
        assert_eq!(arena.signature(&f), arena.signature(&g));
        assert_ne!(arena.signature(&f), arena.signature(&h));

        // Cross-check the f signature class against brute-force evaluation.
        let mut arena2 = SemanticArena::new(n_ap, t_max);
        let sig_f = arena2.signature(&f);
        let sig_g = arena2.signature(&g);
        let same = (0..(1u64 << (n_ap * t_max))).all(|k| {
            let v = LeafValuation::from_index(n_ap, t_max, k);
            evaluate(&f, &v, 1).unwrap() == evaluate(&g, &v, 1).unwrap()
        });
        assert_eq!(same, sig_f == sig_g);
    }
}
