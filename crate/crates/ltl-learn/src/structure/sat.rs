//! Boolean satisfaction machinery shared by every encoding.
//!
//! Operator semantics are written once against [`BoolAlg`] and instantiated
//! two ways: [`ModelAlg`] emits mixed-integer rows into a [`Model`] (used by
//! the fixed-formula encodings and the DAG satisfaction matrices), and
//! [`BitAlg`] computes truth values over packs of valuations at once (used
//! by tests and the semantics-equivalence audits). Full-window temporal
//! operators use suffix recursions, so row counts stay linear in the trace
//! length; explicitly windowed operators fall back to window expansions.

use crate::ltl::{Formula, OpKind};
use crate::milp::{Bin, LinExpr, Model};

/// A boolean algebra over some value type; `tru`/`fal` are constants and
/// the connectives must be exact (both implication directions).
pub trait BoolAlg {
    type V: Copy;
    fn tru(&self) -> Self::V;
    fn fal(&self) -> Self::V;
    fn not(&mut self, a: Self::V) -> Self::V;
    fn and2(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn or2(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn and_many(&mut self, xs: &[Self::V]) -> Self::V {
        let mut acc = self.tru();
        for &x in xs {
            acc = self.and2(acc, x);
        }
        acc
    }
    fn or_many(&mut self, xs: &[Self::V]) -> Self::V {
        let mut acc = self.fal();
        for &x in xs {
            acc = self.or2(acc, x);
        }
        acc
    }
}

/// Truth row of a subformula: one value per start time `1..=T`.
pub type RowOf<A> = Vec<<A as BoolAlg>::V>;

/// Row of `op` applied over full windows `[0, T-1]`, via suffix
/// recursions: the value at `t` quantifies over `[t, T]`.
pub fn op_row_full<A: BoolAlg>(
    alg: &mut A,
    op: OpKind,
    left: &[A::V],
    right: Option<&[A::V]>,
) -> Vec<A::V> {
    let t_max = left.len();
    let mut out = vec![alg.fal(); t_max];
    match op {
        OpKind::And | OpKind::Or => {
            let right = right.expect("binary operator needs a right child");
            for t in 0..t_max {
                out[t] = match op {
                    OpKind::And => alg.and2(left[t], right[t]),
                    _ => alg.or2(left[t], right[t]),
                };
            }
        }
        OpKind::Always => {
            out[t_max - 1] = left[t_max - 1];
            for t in (0..t_max - 1).rev() {
                out[t] = alg.and2(left[t], out[t + 1]);
            }
        }
        OpKind::Eventually => {
            out[t_max - 1] = left[t_max - 1];
            for t in (0..t_max - 1).rev() {
                out[t] = alg.or2(left[t], out[t + 1]);
            }
        }
        OpKind::Until => {
            // left U right: out_t = right_t or (left_t and out_{t+1}).
            let right = right.expect("until needs a right child");
            out[t_max - 1] = right[t_max - 1];
            for t in (0..t_max - 1).rev() {
                let cont = alg.and2(left[t], out[t + 1]);
                out[t] = alg.or2(right[t], cont);
            }
        }
        OpKind::Seq => {
            // seq(a, b) = (not b) U a.
            let b = right.expect("seq needs a right child");
            out[t_max - 1] = left[t_max - 1];
            for t in (0..t_max - 1).rev() {
                let nb = alg.not(b[t]);
                let cont = alg.and2(nb, out[t + 1]);
                out[t] = alg.or2(left[t], cont);
            }
        }
        OpKind::Avoid => {
            let last = alg.not(left[t_max - 1]);
            out[t_max - 1] = last;
            for t in (0..t_max - 1).rev() {
                let n = alg.not(left[t]);
                out[t] = alg.and2(n, out[t + 1]);
            }
        }
        OpKind::After => {
            // after(a, b) = G(b -> G a): with g = suffix-always of a and
            // h_t = not b_t or g_t, out = suffix-always of h.
            let b = right.expect("after needs a right child");
            let mut g = vec![alg.fal(); t_max];
            g[t_max - 1] = left[t_max - 1];
            for t in (0..t_max - 1).rev() {
                g[t] = alg.and2(left[t], g[t + 1]);
            }
            let mut h = vec![alg.fal(); t_max];
            for t in 0..t_max {
                let nb = alg.not(b[t]);
                h[t] = alg.or2(nb, g[t]);
            }
            out[t_max - 1] = h[t_max - 1];
            for t in (0..t_max - 1).rev() {
                out[t] = alg.and2(h[t], out[t + 1]);
            }
        }
    }
    out
}

/// Value of an explicitly windowed operator at a single start time
/// (1-based). Empty windows (start past the trace end) are false.
pub fn op_at_windowed<A: BoolAlg>(
    alg: &mut A,
    op: OpKind,
    lo: usize,
    hi: usize,
    t: usize,
    left: &[A::V],
    right: Option<&[A::V]>,
) -> A::V {
    let t_max = left.len();
    if t + lo > t_max {
        return alg.fal();
    }
    let w_lo = t + lo;
    let w_hi = (t + hi).min(t_max);
    match op {
        OpKind::Always => {
            let xs: Vec<A::V> = (w_lo..=w_hi).map(|tt| left[tt - 1]).collect();
            alg.and_many(&xs)
        }
        OpKind::Eventually => {
            let xs: Vec<A::V> = (w_lo..=w_hi).map(|tt| left[tt - 1]).collect();
            alg.or_many(&xs)
        }
        OpKind::Until => {
            let right = right.expect("until needs a right child");
            let mut cases = vec![];
            for tt in w_lo..=w_hi {
                let mut parts = vec![right[tt - 1]];
                for tc in t..tt {
                    parts.push(left[tc - 1]);
                }
                cases.push(alg.and_many(&parts));
            }
            alg.or_many(&cases)
        }
        _ => panic!("operator {op:?} carries no explicit window"),
    }
}

/// Truth rows of an arbitrary fixed formula over given leaf rows, one row
/// per distinct subformula, memoized on subformula identity.
pub fn formula_rows<A: BoolAlg>(
    alg: &mut A,
    f: &Formula,
    leaves: &[Vec<A::V>],
) -> Vec<A::V> {
    let mut memo: std::collections::HashMap<Formula, Vec<A::V>> = std::collections::HashMap::new();
    formula_rows_memo(alg, f, leaves, &mut memo)
}

fn formula_rows_memo<A: BoolAlg>(
    alg: &mut A,
    f: &Formula,
    leaves: &[Vec<A::V>],
    memo: &mut std::collections::HashMap<Formula, Vec<A::V>>,
) -> Vec<A::V> {
    if let Some(r) = memo.get(f) {
        return r.clone();
    }
    let t_max = leaves.first().map_or(0, |r| r.len());
    let full = |lo: usize, hi: usize| lo == 0 && hi + 1 >= t_max;
    let row = match f {
        Formula::Ap(i) => leaves[*i - 1].clone(),
        Formula::NotAp(i) => {
            let base = leaves[*i - 1].clone();
            base.into_iter().map(|v| alg.not(v)).collect()
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let l = formula_rows_memo(alg, a, leaves, memo);
            let r = formula_rows_memo(alg, b, leaves, memo);
            op_row_full(alg, f.op_kind().unwrap(), &l, Some(&r))
        }
        Formula::Seq(a, b) | Formula::After(a, b) => {
            let l = formula_rows_memo(alg, a, leaves, memo);
            let r = formula_rows_memo(alg, b, leaves, memo);
            op_row_full(alg, f.op_kind().unwrap(), &l, Some(&r))
        }
        Formula::Avoid(a) => {
            let l = formula_rows_memo(alg, a, leaves, memo);
            op_row_full(alg, OpKind::Avoid, &l, None)
        }
        Formula::Always { lo, hi, child } | Formula::Eventually { lo, hi, child } => {
            let l = formula_rows_memo(alg, child, leaves, memo);
            if full(*lo, *hi) {
                op_row_full(alg, f.op_kind().unwrap(), &l, None)
            } else {
                (1..=t_max)
                    .map(|t| op_at_windowed(alg, f.op_kind().unwrap(), *lo, *hi, t, &l, None))
                    .collect()
            }
        }
        Formula::Until { lo, hi, lhs, rhs } => {
            let l = formula_rows_memo(alg, lhs, leaves, memo);
            let r = formula_rows_memo(alg, rhs, leaves, memo);
            if full(*lo, *hi) {
                op_row_full(alg, OpKind::Until, &l, Some(&r))
            } else {
                (1..=t_max)
                    .map(|t| op_at_windowed(alg, OpKind::Until, *lo, *hi, t, &l, Some(&r)))
                    .collect()
            }
        }
    };
    memo.insert(f.clone(), row.clone());
    row
}

// ----- instantiation over bit-packed valuations ---------------------------

/// Boolean algebra over `W`-word bit packs; bit `k` of a value is the truth
/// under valuation `k` of the pack.
pub struct BitAlg {
    pub words: usize,
    pub last_mask: u64,
}

impl BitAlg {
    /// A pack covering `count` simultaneous valuations.
    pub fn for_count(count: usize) -> Self {
        let words = count.div_ceil(64).max(1);
        let rem = count % 64;
        BitAlg {
            words,
            last_mask: if rem == 0 { u64::MAX } else { (1u64 << rem) - 1 },
        }
    }
}

#[derive(Clone, Copy)]
pub struct BitVal(pub [u64; 8]);

impl BoolAlg for BitAlg {
    type V = BitVal;
    fn tru(&self) -> BitVal {
        let mut v = [0u64; 8];
        for w in 0..self.words {
            v[w] = if w + 1 == self.words { self.last_mask } else { u64::MAX };
        }
        BitVal(v)
    }
    fn fal(&self) -> BitVal {
        BitVal([0u64; 8])
    }
    fn not(&mut self, a: BitVal) -> BitVal {
        let t = self.tru();
        let mut v = [0u64; 8];
        for w in 0..self.words {
            v[w] = !a.0[w] & t.0[w];
        }
        BitVal(v)
    }
    fn and2(&mut self, a: BitVal, b: BitVal) -> BitVal {
        let mut v = [0u64; 8];
        for w in 0..self.words {
            v[w] = a.0[w] & b.0[w];
        }
        BitVal(v)
    }
    fn or2(&mut self, a: BitVal, b: BitVal) -> BitVal {
        let mut v = [0u64; 8];
        for w in 0..self.words {
            v[w] = a.0[w] | b.0[w];
        }
        BitVal(v)
    }
}

/// Root truth values of `f` at `t = 1` for every valuation index
/// `0..count` (bit `k` of the result words), with leaf bit layout matching
/// [`crate::ltl::LeafValuation::from_index`].
pub fn root_bits_exhaustive(f: &Formula, n_ap: usize, t_max: usize, count: usize) -> Vec<u64> {
    assert!(count <= 512, "bit packs cover at most 512 valuations");
    let mut alg = BitAlg::for_count(count);
    // Leaf rows: bit k of leaves[i][t] is valuation k's value of AP i+1 at
    // time t+1. from_index assigns bit (i * t_max + t) of k.
    let leaves: Vec<Vec<BitVal>> = (0..n_ap)
        .map(|i| {
            (0..t_max)
                .map(|t| {
                    let bit = i * t_max + t;
                    let mut v = [0u64; 8];
                    for (w, slot) in v.iter_mut().enumerate().take(alg.words) {
                        let mut word = 0u64;
                        for b in 0..64 {
                            let k = w * 64 + b;
                            if k < count && (k >> bit) & 1 == 1 {
                                word |= 1 << b;
                            }
                        }
                        *slot = word;
                    }
                    BitVal(v)
                })
                .collect()
        })
        .collect();
    let rows = formula_rows(&mut alg, f, &leaves);
    rows[0].0[..alg.words].to_vec()
}

// ----- instantiation as mixed-integer rows ---------------------------------

/// Boolean algebra that emits exact gate rows into a model. Operands may be
/// any [`Bin`]; fresh outputs are binary variables. All rows use unit
/// coefficients, so no big-M constant is involved.
pub struct ModelAlg<'a> {
    pub model: &'a mut Model,
    pub prefix: String,
    counter: usize,
}

impl<'a> ModelAlg<'a> {
    pub fn new(model: &'a mut Model, prefix: impl Into<String>) -> Self {
        ModelAlg {
            model,
            prefix: prefix.into(),
            counter: 0,
        }
    }

    fn fresh(&mut self) -> Bin {
        self.counter += 1;
        Bin::Pos(self.model.binary(format!("{}_g{}", self.prefix, self.counter)))
    }
}

impl BoolAlg for ModelAlg<'_> {
    type V = Bin;
    fn tru(&self) -> Bin {
        Bin::Const(true)
    }
    fn fal(&self) -> Bin {
        Bin::Const(false)
    }
    fn not(&mut self, a: Bin) -> Bin {
        a.not()
    }
    fn and2(&mut self, a: Bin, b: Bin) -> Bin {
        match (a.as_const(), b.as_const()) {
            (Some(false), _) | (_, Some(false)) => Bin::Const(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ => {
                let out = self.fresh();
                self.model.force_and2(out, a, b);
                out
            }
        }
    }
    fn or2(&mut self, a: Bin, b: Bin) -> Bin {
        match (a.as_const(), b.as_const()) {
            (Some(true), _) | (_, Some(true)) => Bin::Const(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ => {
                let out = self.fresh();
                self.model.force_or2(out, a, b);
                out
            }
        }
    }
    fn and_many(&mut self, xs: &[Bin]) -> Bin {
        let live: Vec<Bin> = xs.iter().copied().filter(|x| x.as_const() != Some(true)).collect();
        if live.iter().any(|x| x.as_const() == Some(false)) {
            return Bin::Const(false);
        }
        match live.len() {
            0 => Bin::Const(true),
            1 => live[0],
            _ => {
                let out = self.fresh();
                self.model.force_and(out, &live);
                out
            }
        }
    }
    fn or_many(&mut self, xs: &[Bin]) -> Bin {
        let live: Vec<Bin> = xs.iter().copied().filter(|x| x.as_const() != Some(false)).collect();
        if live.iter().any(|x| x.as_const() == Some(true)) {
            return Bin::Const(true);
        }
        match live.len() {
            0 => Bin::Const(false),
            1 => live[0],
            _ => {
                let out = self.fresh();
                self.model.force_or(out, &live);
                out
            }
        }
    }
}

/// Encode a fixed formula's truth over leaf rows `z[ap][t]` and return the
/// root value at `t = 1`.
pub fn encode_formula_root(
    model: &mut Model,
    prefix: impl Into<String>,
    f: &Formula,
    z: &[Vec<Bin>],
) -> Bin {
    let mut alg = ModelAlg::new(model, prefix);
    let rows = formula_rows(&mut alg, f, z);
    rows[0]
}

/// One `LinExpr` per leaf of `row`, for linking rows to other constraints.
pub fn row_exprs(row: &[Bin]) -> Vec<LinExpr> {
    row.iter().map(|b| b.expr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::ltl::{enumerate_full_window, evaluate, Formula, LeafValuation, OpKind};
    use crate::milp::SolveStatus;

    /// Plain boolean algebra for spot checks.
    struct PlainAlg;
    impl BoolAlg for PlainAlg {
        type V = bool;
        fn tru(&self) -> bool {
            true
        }
        fn fal(&self) -> bool {
            false
        }
        fn not(&mut self, a: bool) -> bool {
            !a
        }
        fn and2(&mut self, a: bool, b: bool) -> bool {
            a && b
        }
        fn or2(&mut self, a: bool, b: bool) -> bool {
            a || b
        }
    }

    fn leaves_from_valuation(v: &LeafValuation) -> Vec<Vec<bool>> {
        (1..=v.n_ap())
            .map(|i| (1..=v.t_max()).map(|t| v.get(i, t)).collect())
            .collect()
    }

    #[test]
    fn plain_rows_match_evaluator_exhaustively() {
        // Suffix recursions and window expansions against the recursive
        // semantics, all formulas of DAG size <= 3 over 2 APs, T <= 3.
        for t_max in 1..=3usize {
            let formulas = enumerate_full_window(&OpKind::ALL, 2, t_max, 3, true);
            for f in &formulas {
                for k in 0..(1u64 << (2 * t_max)) {
                    let v = LeafValuation::from_index(2, t_max, k);
                    let leaves = leaves_from_valuation(&v);
                    let mut alg = PlainAlg;
                    let rows = formula_rows(&mut alg, f, &leaves);
                    for t in 1..=t_max {
                        assert_eq!(
                            rows[t - 1],
                            evaluate(f, &v, t).unwrap(),
                            "{f} at t={t}, valuation {k:b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bit_kernel_matches_evaluator() {
        let t_max = 3;
        let count = 1usize << (2 * t_max);
        let f = Formula::and(
            Formula::seq(Formula::ap(1), Formula::ap(2)),
            Formula::eventually(0, t_max - 1, Formula::ap(2)),
        );
        let words = root_bits_exhaustive(&f, 2, t_max, count);
        for k in 0..count {
            let v = LeafValuation::from_index(2, t_max, k as u64);
            let expect = evaluate(&f, &v, 1).unwrap();
            let got = (words[k / 64] >> (k % 64)) & 1 == 1;
            assert_eq!(got, expect, "valuation {k:b}");
        }
    }

    #[test]
    fn windowed_ops_clip() {
        let mut alg = PlainAlg;
        // T = 3, child true only at t = 3.
        let child = vec![false, false, true];
        // G[1,5] at t=1 quantifies over [2,3]: false (t=2 is false).
        assert!(!op_at_windowed(&mut alg, OpKind::Always, 1, 5, 1, &child, None));
        // F[2,9] at t=1 quantifies over [3,3]: true.
        assert!(op_at_windowed(&mut alg, OpKind::Eventually, 2, 9, 1, &child, None));
        // F[2,9] at t=2 starts at 4 > T: empty, false.
        assert!(!op_at_windowed(&mut alg, OpKind::Eventually, 2, 9, 2, &child, None));
    }

    #[test]
    fn milp_rows_agree_with_evaluator_when_solved() {
        // Sampled formulas, solved through the backend with free S rows:
        // the encoding must pin the root to the evaluator's verdict and be
        // infeasible with the root forced wrong.
        let cfg = Config::default();
        let t_max = 3;
        let formulas = enumerate_full_window(&OpKind::ALL, 2, t_max, 3, true);
        for (fi, f) in formulas.iter().enumerate().step_by(29) {
            for k in [0u64, 5, 21, 42, 63] {
                let v = LeafValuation::from_index(2, t_max, k & ((1 << (2 * t_max)) - 1));
                let expect = evaluate(f, &v, 1).unwrap();
                for force_wrong in [false, true] {
                    let mut model = crate::milp::Model::new(format!("sat_{fi}_{k}"));
                    // Leaves as pinned binaries so the gate rows are real
                    // constraints rather than folded constants.
                    let z: Vec<Vec<Bin>> = (1..=2)
                        .map(|i| {
                            (1..=t_max)
                                .map(|t| {
                                    let b = Bin::Pos(model.binary(format!("z{i}_{t}")));
                                    model.fix_bin(b, v.get(i, t));
                                    b
                                })
                                .collect()
                        })
                        .collect();
                    let root = encode_formula_root(&mut model, "f", f, &z);
                    model.fix_bin(root, expect ^ force_wrong);
                    let sol = model.feasibility(&cfg).unwrap();
                    if force_wrong {
                        assert_eq!(
                            sol.status,
                            SolveStatus::Infeasible,
                            "{f} should not admit root {}",
                            !expect
                        );
                    } else {
                        assert_eq!(sol.status, SolveStatus::Optimal, "{f} root {expect}");
                    }
                }
            }
        }
    }
}
