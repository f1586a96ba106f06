//! Bounded-LTL formulas over finite traces: AST, text syntax, recursive
//! semantics, and derived-operator expansion.
//!
//! Formulas are in positive normal form — negation exists only as the
//! `NotAp` leaf. Temporal operators carry integer interval bounds and are
//! evaluated on traces of length `T` with 1-indexed time; windows clip at
//! `T` and an operator whose window start falls past the end of the trace
//! is false. The sequence, avoid and after operators are derived forms
//! whose expansion into the core grammar is [`expand_derived`].
//!
//! Everything here is immutable and pure; this module is the independent
//! oracle that every boolean encoding elsewhere in the crate is tested
//! against.

mod bdd;
mod parse;

pub use bdd::SemanticArena;
pub use parse::{parse, ParseError};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

/// Operator kinds of the grammar (leaves excluded).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum OpKind {
    And,
    Or,
    Always,
    Until,
    Eventually,
    Seq,
    Avoid,
    After,
}

impl OpKind {
    pub fn arity(self) -> usize {
        match self {
            OpKind::And | OpKind::Or | OpKind::Until | OpKind::Seq | OpKind::After => 2,
            OpKind::Always | OpKind::Eventually | OpKind::Avoid => 1,
        }
    }

    pub const ALL: [OpKind; 8] = [
        OpKind::And,
        OpKind::Or,
        OpKind::Always,
        OpKind::Until,
        OpKind::Eventually,
        OpKind::Seq,
        OpKind::Avoid,
        OpKind::After,
    ];
}

/// A bounded-LTL formula in positive normal form. AP indices are 1-based.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Formula {
    Ap(usize),
    NotAp(usize),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Always {
        lo: usize,
        hi: usize,
        child: Box<Formula>,
    },
    Until {
        lo: usize,
        hi: usize,
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Eventually {
        lo: usize,
        hi: usize,
        child: Box<Formula>,
    },
    /// `Seq(a, b)`: `b` cannot occur until `a` has occurred first,
    /// `not b U[0,T-1] a`.
    Seq(Box<Formula>, Box<Formula>),
    /// `Avoid(a)`: `a` never holds, `G[0,T-1] not a`.
    Avoid(Box<Formula>),
    /// `After(a, b)`: `a` holds from the first time `b` holds,
    /// `G[0,T-1] (b -> G[0,T-1] a)`.
    After(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn ap(i: usize) -> Formula {
        assert!(i >= 1, "AP indices are 1-based");
        Formula::Ap(i)
    }

    pub fn not_ap(i: usize) -> Formula {
        assert!(i >= 1, "AP indices are 1-based");
        Formula::NotAp(i)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn always(lo: usize, hi: usize, child: Formula) -> Formula {
        assert!(lo <= hi, "interval bounds must satisfy lo <= hi");
        Formula::Always {
            lo,
            hi,
            child: Box::new(child),
        }
    }

    pub fn until(lo: usize, hi: usize, lhs: Formula, rhs: Formula) -> Formula {
        assert!(lo <= hi, "interval bounds must satisfy lo <= hi");
        Formula::Until {
            lo,
            hi,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn eventually(lo: usize, hi: usize, child: Formula) -> Formula {
        assert!(lo <= hi, "interval bounds must satisfy lo <= hi");
        Formula::Eventually {
            lo,
            hi,
            child: Box::new(child),
        }
    }

    pub fn seq(a: Formula, b: Formula) -> Formula {
        Formula::Seq(Box::new(a), Box::new(b))
    }

    pub fn avoid(a: Formula) -> Formula {
        Formula::Avoid(Box::new(a))
    }

    pub fn after(a: Formula, b: Formula) -> Formula {
        Formula::After(Box::new(a), Box::new(b))
    }

    /// Conjunction of one or more formulas, left-folded.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        let first = it.next().expect("conj needs at least one formula");
        it.fold(first, Formula::and)
    }

    pub fn op_kind(&self) -> Option<OpKind> {
        match self {
            Formula::Ap(_) | Formula::NotAp(_) => None,
            Formula::And(..) => Some(OpKind::And),
            Formula::Or(..) => Some(OpKind::Or),
            Formula::Always { .. } => Some(OpKind::Always),
            Formula::Until { .. } => Some(OpKind::Until),
            Formula::Eventually { .. } => Some(OpKind::Eventually),
            Formula::Seq(..) => Some(OpKind::Seq),
            Formula::Avoid(_) => Some(OpKind::Avoid),
            Formula::After(..) => Some(OpKind::After),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Ap(_) | Formula::NotAp(_) => vec![],
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Seq(a, b)
            | Formula::After(a, b) => vec![a, b],
            Formula::Until { lhs, rhs, .. } => vec![lhs, rhs],
            Formula::Always { child, .. }
            | Formula::Eventually { child, .. }
            | Formula::Avoid(child) => vec![child],
        }
    }

    /// Largest AP index mentioned (0 for none, which cannot happen for
    /// well-formed formulas).
    pub fn max_ap(&self) -> usize {
        match self {
            Formula::Ap(i) | Formula::NotAp(i) => *i,
            _ => self.children().iter().map(|c| c.max_ap()).max().unwrap_or(0),
        }
    }

    /// Number of distinct subformulas; the size of the parse DAG with
    /// identical subtrees merged.
    pub fn dag_size(&self) -> usize {
        fn walk<'a>(f: &'a Formula, seen: &mut HashSet<&'a Formula>) {
            if seen.insert(f) {
                for c in f.children() {
                    walk(c, seen);
                }
            }
        }
        let mut seen = HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// True when the formula contains no negation, explicit or derived;
    /// such formulas are monotone in their leaves.
    pub fn is_positive(&self) -> bool {
        match self {
            Formula::NotAp(_) => false,
            Formula::Seq(..) | Formula::Avoid(_) | Formula::After(..) => false,
            _ => self.children().iter().all(|c| c.is_positive()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Ap(i) => write!(f, "p{i}"),
            Formula::NotAp(i) => write!(f, "NOT(p{i})"),
            Formula::And(a, b) => write!(f, "AND({a}, {b})"),
            Formula::Or(a, b) => write!(f, "OR({a}, {b})"),
            Formula::Always { lo, hi, child } => write!(f, "G[{lo},{hi}]({child})"),
            Formula::Until { lo, hi, lhs, rhs } => write!(f, "U[{lo},{hi}]({lhs}, {rhs})"),
            Formula::Eventually { lo, hi, child } => write!(f, "F[{lo},{hi}]({child})"),
            Formula::Seq(a, b) => write!(f, "SEQ({a}, {b})"),
            Formula::Avoid(a) => write!(f, "AVOID({a})"),
            Formula::After(a, b) => write!(f, "AFTER({a}, {b})"),
        }
    }
}

/// Boolean AP truth values on a trace: rows are APs `1..=n_ap`, columns
/// are times `1..=t_max`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LeafValuation {
    n_ap: usize,
    t_max: usize,
    vals: Vec<bool>,
}

impl LeafValuation {
    pub fn new(n_ap: usize, t_max: usize) -> Self {
        assert!(t_max >= 1);
        LeafValuation {
            n_ap,
            t_max,
            vals: vec![false; n_ap * t_max],
        }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let n_ap = rows.len();
        let t_max = rows.first().map_or(0, |r| r.len());
        assert!(t_max >= 1, "valuation needs at least one time step");
        assert!(
            rows.iter().all(|r| r.len() == t_max),
            "all AP rows must have equal length"
        );
        let mut v = LeafValuation::new(n_ap, t_max);
        for (i, row) in rows.iter().enumerate() {
            for (t, &b) in row.iter().enumerate() {
                v.vals[i * t_max + t] = b;
            }
        }
        v
    }

    pub fn n_ap(&self) -> usize {
        self.n_ap
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// Truth of AP `i` (1-based) at time `t` (1-based).
    pub fn get(&self, i: usize, t: usize) -> bool {
        assert!(i >= 1 && i <= self.n_ap && t >= 1 && t <= self.t_max);
        self.vals[(i - 1) * self.t_max + (t - 1)]
    }

    pub fn set(&mut self, i: usize, t: usize, b: bool) {
        assert!(i >= 1 && i <= self.n_ap && t >= 1 && t <= self.t_max);
        self.vals[(i - 1) * self.t_max + (t - 1)] = b;
    }

    /// Decode index `k` of the `2^(n_ap * t_max)` valuation space.
    pub fn from_index(n_ap: usize, t_max: usize, k: u64) -> Self {
        let mut v = LeafValuation::new(n_ap, t_max);
        for b in 0..(n_ap * t_max) {
            v.vals[b] = (k >> b) & 1 == 1;
        }
        v
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("time index {t} out of range 1..={t_max}")]
    TimeOutOfRange { t: usize, t_max: usize },
    #[error("formula mentions p{ap} but the valuation has only {n_ap} APs")]
    ApOutOfRange { ap: usize, n_ap: usize },
}

/// Truth of `(trace, t) |= f` under the bounded semantics. Windows are
/// `[t+lo, min(t+hi, T)]` and require `t+lo <= T`; the until witness
/// clause quantifies from `t` itself.
pub fn evaluate(f: &Formula, v: &LeafValuation, t: usize) -> Result<bool, EvalError> {
    if t < 1 || t > v.t_max() {
        return Err(EvalError::TimeOutOfRange {
            t,
            t_max: v.t_max(),
        });
    }
    eval_at(f, v, t)
}

fn eval_at(f: &Formula, v: &LeafValuation, t: usize) -> Result<bool, EvalError> {
    let t_max = v.t_max();
    let window = |lo: usize, hi: usize| -> Option<std::ops::RangeInclusive<usize>> {
        if t + lo > t_max {
            None
        } else {
            Some((t + lo)..=(t + hi).min(t_max))
        }
    };
    Ok(match f {
        Formula::Ap(i) => {
            if *i > v.n_ap() {
                return Err(EvalError::ApOutOfRange {
                    ap: *i,
                    n_ap: v.n_ap(),
                });
            }
            v.get(*i, t)
        }
        Formula::NotAp(i) => {
            if *i > v.n_ap() {
                return Err(EvalError::ApOutOfRange {
                    ap: *i,
                    n_ap: v.n_ap(),
                });
            }
            !v.get(*i, t)
        }
        Formula::And(a, b) => eval_at(a, v, t)? && eval_at(b, v, t)?,
        Formula::Or(a, b) => eval_at(a, v, t)? || eval_at(b, v, t)?,
        Formula::Always { lo, hi, child } => match window(*lo, *hi) {
            None => false,
            Some(w) => {
                let mut all = true;
                for tt in w {
                    all &= eval_at(child, v, tt)?;
                }
                all
            }
        },
        Formula::Eventually { lo, hi, child } => match window(*lo, *hi) {
            None => false,
            Some(w) => {
                let mut any = false;
                for tt in w {
                    any |= eval_at(child, v, tt)?;
                }
                any
            }
        },
        Formula::Until { lo, hi, lhs, rhs } => match window(*lo, *hi) {
            None => false,
            Some(w) => {
                let mut sat = false;
                'witness: for tt in w {
                    if eval_at(rhs, v, tt)? {
                        for tc in t..tt {
                            if !eval_at(lhs, v, tc)? {
                                continue 'witness;
                            }
                        }
                        sat = true;
                        break;
                    }
                }
                sat
            }
        },
        // Derived operators evaluated by their definitions with the full
        // window [0, T-1]; the inner negations act on computed truth.
        Formula::Seq(a, b) => {
            let mut sat = false;
            'w: for tt in t..=t_max {
                if eval_at(a, v, tt)? {
                    for tc in t..tt {
                        if eval_at(b, v, tc)? {
                            continue 'w;
                        }
                    }
                    sat = true;
                    break;
                }
            }
            sat
        }
        Formula::Avoid(a) => {
            let mut none = true;
            for tt in t..=t_max {
                none &= !eval_at(a, v, tt)?;
            }
            none
        }
        Formula::After(a, b) => {
            let mut ok = true;
            for tt in t..=t_max {
                if eval_at(b, v, tt)? {
                    for tc in tt..=t_max {
                        ok &= eval_at(a, v, tc)?;
                    }
                }
            }
            ok
        }
    })
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("cannot negate a temporal subformula into positive normal form: {0}")]
    NotNegatable(String),
}

/// Negate a boolean combination of leaves, staying in positive normal form.
fn negate_pnf(f: &Formula) -> Result<Formula, ExpandError> {
    match f {
        Formula::Ap(i) => Ok(Formula::NotAp(*i)),
        Formula::NotAp(i) => Ok(Formula::Ap(*i)),
        Formula::And(a, b) => Ok(Formula::or(negate_pnf(a)?, negate_pnf(b)?)),
        Formula::Or(a, b) => Ok(Formula::and(negate_pnf(a)?, negate_pnf(b)?)),
        other => Err(ExpandError::NotNegatable(other.to_string())),
    }
}

/// Rewrite a formula into the core grammar (leaves, and, or, always,
/// until). Derived operators expand with the full window `[0, t_max-1]`;
/// eventually becomes a top-guarded until with top synthesized as
/// `p1 or not p1`.
pub fn expand_derived(f: &Formula, t_max: usize) -> Result<Formula, ExpandError> {
    assert!(t_max >= 1);
    let full = t_max - 1;
    Ok(match f {
        Formula::Ap(_) | Formula::NotAp(_) => f.clone(),
        Formula::And(a, b) => Formula::and(expand_derived(a, t_max)?, expand_derived(b, t_max)?),
        Formula::Or(a, b) => Formula::or(expand_derived(a, t_max)?, expand_derived(b, t_max)?),
        Formula::Always { lo, hi, child } => {
            Formula::always(*lo, *hi, expand_derived(child, t_max)?)
        }
        Formula::Until { lo, hi, lhs, rhs } => Formula::until(
            *lo,
            *hi,
            expand_derived(lhs, t_max)?,
            expand_derived(rhs, t_max)?,
        ),
        Formula::Eventually { lo, hi, child } => {
            let top = Formula::or(Formula::ap(1), Formula::not_ap(1));
            Formula::until(*lo, *hi, top, expand_derived(child, t_max)?)
        }
        Formula::Seq(a, b) => {
            let guard = negate_pnf(&expand_derived(b, t_max)?)?;
            Formula::until(0, full, guard, expand_derived(a, t_max)?)
        }
        Formula::Avoid(a) => Formula::always(0, full, negate_pnf(&expand_derived(a, t_max)?)?),
        Formula::After(a, b) => {
            let antecedent = negate_pnf(&expand_derived(b, t_max)?)?;
            let tail = Formula::always(0, full, expand_derived(a, t_max)?);
            Formula::always(0, full, Formula::or(antecedent, tail))
        }
    })
}

/// Exact truth-equivalence of two formulas over all leaf valuations with
/// `n_ap` APs and duration `t_max`, via reduced ordered BDDs.
pub fn equivalent(a: &Formula, b: &Formula, n_ap: usize, t_max: usize) -> bool {
    let mut arena = SemanticArena::new(n_ap, t_max);
    arena.signature(a) == arena.signature(b)
}

/// Enumerate all distinct formulas of DAG size at most `max_size` over APs
/// `1..=n_ap`, the given operators, and full windows `[0, t_max-1]` on
/// temporal operators. `with_negated_leaves` adds the `NotAp` leaves.
///
/// DAG size counts distinct subformulas, so the enumeration is stratified
/// by exact size. A binary composite of size `n` either combines operands
/// with mostly-disjoint subformula sets (both from small strata) or reuses
/// a subformula of its larger operand; the second case is walked directly
/// over closures, which keeps the pair loops over small strata only.
pub fn enumerate_full_window(
    ops: &[OpKind],
    n_ap: usize,
    t_max: usize,
    max_size: usize,
    with_negated_leaves: bool,
) -> Vec<Formula> {
    let full = t_max - 1;

    struct Arena {
        nodes: Vec<Formula>,
        ids: std::collections::HashMap<Formula, u32>,
        /// Sorted ids of the subformula closure, self included.
        closure: Vec<Vec<u32>>,
    }
    impl Arena {
        fn intern(&mut self, f: Formula, kids: &[u32]) -> (u32, bool) {
            if let Some(&id) = self.ids.get(&f) {
                return (id, false);
            }
            let id = self.nodes.len() as u32;
            let mut cl: Vec<u32> = vec![id];
            for &k in kids {
                cl = merge_sorted(&cl, &self.closure[k as usize]);
            }
            self.nodes.push(f.clone());
            self.ids.insert(f, id);
            self.closure.push(cl);
            (id, true)
        }
        fn size(&self, id: u32) -> usize {
            self.closure[id as usize].len()
        }
        fn formula(&self, id: u32) -> Formula {
            self.nodes[id as usize].clone()
        }
    }
    fn merge_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }
    fn union_len(a: &[u32], b: &[u32]) -> usize {
        let (mut i, mut j, mut common) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                    common += 1;
                }
            }
        }
        a.len() + b.len() - common
    }

    let mut arena = Arena {
        nodes: vec![],
        ids: std::collections::HashMap::new(),
        closure: vec![],
    };
    let mut strata: Vec<Vec<u32>> = vec![vec![]; max_size + 1];
    for i in 1..=n_ap {
        let (id, _) = arena.intern(Formula::ap(i), &[]);
        strata[1].push(id);
        if with_negated_leaves {
            let (id, _) = arena.intern(Formula::not_ap(i), &[]);
            strata[1].push(id);
        }
    }

    let make_unary = |op: OpKind, c: Formula| match op {
        OpKind::Always => Formula::always(0, full, c),
        OpKind::Eventually => Formula::eventually(0, full, c),
        OpKind::Avoid => Formula::avoid(c),
        _ => unreachable!(),
    };
    let make_binary = |op: OpKind, a: Formula, b: Formula| match op {
        OpKind::And => Formula::and(a, b),
        OpKind::Or => Formula::or(a, b),
        OpKind::Until => Formula::until(0, full, a, b),
        OpKind::Seq => Formula::seq(a, b),
        OpKind::After => Formula::after(a, b),
        _ => unreachable!(),
    };

    for n in 2..=max_size {
        let mut fresh: Vec<u32> = vec![];
        for &op in ops {
            if op.arity() == 1 {
                // A unary node adds exactly one subformula to its child.
                for idx in 0..strata[n - 1].len() {
                    let c = strata[n - 1][idx];
                    let f = make_unary(op, arena.formula(c));
                    let (id, new) = arena.intern(f, &[c]);
                    if new {
                        fresh.push(id);
                    }
                }
            } else {
                // One operand contains the other: walk closures of the
                // size-(n-1) stratum.
                for idx in 0..strata[n - 1].len() {
                    let a = strata[n - 1][idx];
                    let sub = arena.closure[a as usize].clone();
                    for &b in &sub {
                        for (l, r) in [(a, b), (b, a)] {
                            let f = make_binary(op, arena.formula(l), arena.formula(r));
                            let (id, new) = arena.intern(f, &[l, r]);
                            if new && arena.size(id) == n {
                                fresh.push(id);
                            }
                        }
                    }
                }
                // Partially overlapping operands: both strictly smaller
                // than n-1, so the pair loops stay over small strata.
                for sa in 1..n.saturating_sub(1) {
                    for sb in 1..n.saturating_sub(1) {
                        if sa + sb < n - 1 {
                            continue;
                        }
                        let left = strata[sa].clone();
                        let right = strata[sb].clone();
                        for &a in &left {
                            for &b in &right {
                                if union_len(
                                    &arena.closure[a as usize],
                                    &arena.closure[b as usize],
                                ) != n - 1
                                {
                                    continue;
                                }
                                let f =
                                    make_binary(op, arena.formula(a), arena.formula(b));
                                let (id, new) = arena.intern(f, &[a, b]);
                                if new {
                                    fresh.push(id);
                                }
                            }
                        }
                    }
                }
            }
        }
        strata[n] = fresh;
    }

    let mut out: Vec<Formula> = strata
        .into_iter()
        .flatten()
        .map(|id| arena.nodes[id as usize].clone())
        .collect();
    out.sort_by_key(|f| (f.dag_size(), f.to_string()));
    out
}
