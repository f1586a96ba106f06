//! DAG decision variables, well-formedness rows, and the decode/encode
//! bijection between assignments and formulas.
//!
//! Node 0 is the root; children carry strictly higher indices than their
//! parents, which breaks cycles by construction and fixes the root. With
//! canonical rows enabled, leaf-labeled nodes form a suffix, no leaf label
//! repeats (identical subtrees are merged), and commutative operators
//! order their children — none of which excludes any formula at its
//! minimal DAG size.

use serde::{Deserialize, Serialize};

use super::StructureError;
use crate::ltl::{Formula, OpKind};
use crate::milp::{Bin, LinExpr, Model};

/// A grammar element: a positive or negated AP leaf, or an operator.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Label {
    Leaf(usize),
    NegLeaf(usize),
    Op(OpKind),
}

impl Label {
    pub fn arity(self) -> usize {
        match self {
            Label::Leaf(_) | Label::NegLeaf(_) => 0,
            Label::Op(op) => op.arity(),
        }
    }

    /// Heuristic logical-strength weight used by the ordered falsification
    /// variants; conjunction-like labels weigh more than disjunction-like
    /// ones.
    pub fn default_weight(self) -> f64 {
        match self {
            Label::Op(OpKind::And) => 2.0,
            Label::Op(OpKind::Or) => -2.0,
            Label::Op(OpKind::Always) => 1.0,
            Label::Op(OpKind::Eventually) => -1.0,
            _ => 0.0,
        }
    }
}

/// Label table of the structure search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grammar {
    pub labels: Vec<Label>,
    pub n_ap: usize,
}

impl Grammar {
    /// The core grammar plus every derived operator and negated leaves.
    pub fn default_for(n_ap: usize) -> Self {
        Self::with_ops(n_ap, &OpKind::ALL, true)
    }

    pub fn with_ops(n_ap: usize, ops: &[OpKind], negated_leaves: bool) -> Self {
        let mut labels = vec![];
        for i in 1..=n_ap {
            labels.push(Label::Leaf(i));
        }
        if negated_leaves {
            for i in 1..=n_ap {
                labels.push(Label::NegLeaf(i));
            }
        }
        labels.extend(ops.iter().map(|&o| Label::Op(o)));
        Grammar { labels, n_ap }
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

/// DAG decision variables: labeling and child pointers.
pub struct DagVars {
    pub n: usize,
    /// `x[node][label]`.
    pub x: Vec<Vec<Bin>>,
    /// `l[u][w] = 1` iff `w` is the left child of `u`; entries at `w <= u`
    /// are constant false.
    pub l: Vec<Vec<Bin>>,
    pub r: Vec<Vec<Bin>>,
}

/// Concrete DAG pattern (for decoding, blocking and reports).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DagAssignment {
    pub n: usize,
    pub x: Vec<Vec<bool>>,
    pub l: Vec<Vec<bool>>,
    pub r: Vec<Vec<bool>>,
}

/// Emit well-formedness rows and return the variables. With `canonical`
/// set, adds the leaf-suffix, leaf-dedup and commutative-ordering rows.
pub fn topology_constraints(
    model: &mut Model,
    grammar: &Grammar,
    n: usize,
    canonical: bool,
) -> DagVars {
    assert!(n >= 1);
    let n_lab = grammar.n_labels();
    let x: Vec<Vec<Bin>> = (0..n)
        .map(|u| {
            (0..n_lab)
                .map(|v| {
                    // The last node can never have children, so operator
                    // labels are structurally impossible there; same for
                    // binary labels on the second-to-last node when the
                    // only candidate child is the last one... (binary needs
                    // two pointers but they may share the child, so only
                    // the last node is restricted).
                    if u + 1 >= n && grammar.labels[v].arity() > 0 {
                        Bin::Const(false)
                    } else {
                        Bin::Pos(model.binary(format!("dag_x{u}_{v}")))
                    }
                })
                .collect()
        })
        .collect();
    let mk_ptr = |model: &mut Model, name: &str| -> Vec<Vec<Bin>> {
        (0..n)
            .map(|u| {
                (0..n)
                    .map(|w| {
                        if w > u {
                            Bin::Pos(model.binary(format!("dag_{name}{u}_{w}")))
                        } else {
                            Bin::Const(false)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let l = mk_ptr(model, "l");
    let r = mk_ptr(model, "r");

    for u in 0..n {
        // Exactly one label.
        let sum = LinExpr::sum(x[u].iter().map(|b| b.expr()));
        model.add_eq(sum, LinExpr::constant(1.0));

        // Pointer counts match the label arity.
        let l_sum = LinExpr::sum(l[u].iter().map(|b| b.expr()));
        let r_sum = LinExpr::sum(r[u].iter().map(|b| b.expr()));
        let unary_or_binary = LinExpr::sum(
            x[u].iter()
                .zip(&grammar.labels)
                .filter(|(_, lab)| lab.arity() >= 1)
                .map(|(b, _)| b.expr()),
        );
        let binary = LinExpr::sum(
            x[u].iter()
                .zip(&grammar.labels)
                .filter(|(_, lab)| lab.arity() == 2)
                .map(|(b, _)| b.expr()),
        );
        model.add_eq(l_sum, unary_or_binary);
        model.add_eq(r_sum, binary);
    }

    // Every non-root node is somebody's child.
    for w in 1..n {
        let parents = LinExpr::sum(
            (0..w).flat_map(|u| [l[u][w].expr(), r[u][w].expr()]),
        );
        model.add_ge(parents, LinExpr::constant(1.0));
    }

    if canonical {
        // Leafness is monotone along the node order.
        let leafness = |u: usize| -> LinExpr {
            LinExpr::sum(
                x[u].iter()
                    .zip(&grammar.labels)
                    .filter(|(_, lab)| lab.arity() == 0)
                    .map(|(b, _)| b.expr()),
            )
        };
        for u in 0..n - 1 {
            model.add_le(leafness(u), leafness(u + 1));
        }
        // Merged identical subtrees: no leaf label twice.
        for (v, lab) in grammar.labels.iter().enumerate() {
            if lab.arity() == 0 {
                let total = LinExpr::sum((0..n).map(|u| x[u][v].expr()));
                model.add_le(total, LinExpr::constant(1.0));
            }
        }
        // Commutative operators take their children in index order
        // (strictly, so `op(a, a)` is never represented; it always merges
        // to `a` at a smaller size).
        let comm = |u: usize| -> LinExpr {
            LinExpr::sum(
                x[u].iter()
                    .zip(&grammar.labels)
                    .filter(|(_, lab)| {
                        matches!(lab, Label::Op(OpKind::And) | Label::Op(OpKind::Or))
                    })
                    .map(|(b, _)| b.expr()),
            )
        };
        for u in 0..n {
            if u + 1 >= n {
                continue;
            }
            let cu = comm(u);
            for wl in u + 1..n {
                for wr in u + 1..=wl {
                    // Forbid left-index >= right-index for commutative u.
                    let lhs = l[u][wl].expr() + r[u][wr].expr() + cu.clone();
                    model.add_le(lhs, LinExpr::constant(2.0));
                }
            }
        }
    }

    DagVars { n, x, l, r }
}

/// Node-weight expression `sum_u sum_v weight(v) X_{u,v}`.
pub fn weight_expr(grammar: &Grammar, dag: &DagVars, weights: Option<&[f64]>) -> LinExpr {
    let mut e = LinExpr::default();
    for row in &dag.x {
        for (v, b) in row.iter().enumerate() {
            let w = weights
                .map(|ws| ws[v])
                .unwrap_or_else(|| grammar.labels[v].default_weight());
            if w != 0.0 {
                e.add_expr(&b.expr(), w);
            }
        }
    }
    e
}

/// Range of achievable node-weight sums for `n` nodes.
pub fn weight_range(grammar: &Grammar, n: usize, weights: Option<&[f64]>) -> (f64, f64) {
    let ws: Vec<f64> = (0..grammar.n_labels())
        .map(|v| {
            weights
                .map(|x| x[v])
                .unwrap_or_else(|| grammar.labels[v].default_weight())
        })
        .collect();
    let lo = ws.iter().cloned().fold(f64::INFINITY, f64::min) * n as f64;
    let hi = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * n as f64;
    (lo.min(0.0), hi.max(0.0))
}

/// A no-good cut excluding one concrete assignment.
pub fn block_assignment(model: &mut Model, dag: &DagVars, pattern: &DagAssignment) {
    let mut flip = LinExpr::default();
    let mut add = |b: Bin, taken: bool| {
        if b.as_const().is_some() {
            return;
        }
        if taken {
            flip.add_expr(&b.not().expr(), 1.0);
        } else {
            flip.add_expr(&b.expr(), 1.0);
        }
    };
    for u in 0..dag.n {
        for v in 0..dag.x[u].len() {
            add(dag.x[u][v], pattern.x[u][v]);
        }
        for w in 0..dag.n {
            add(dag.l[u][w], pattern.l[u][w]);
            add(dag.r[u][w], pattern.r[u][w]);
        }
    }
    model.add_ge(flip, LinExpr::constant(1.0));
}

/// Read an assignment out of a solution.
pub fn read_assignment(
    sol: &crate::milp::Solution,
    dag: &DagVars,
) -> DagAssignment {
    DagAssignment {
        n: dag.n,
        x: dag
            .x
            .iter()
            .map(|row| row.iter().map(|&b| sol.bin_value(b)).collect())
            .collect(),
        l: dag
            .l
            .iter()
            .map(|row| row.iter().map(|&b| sol.bin_value(b)).collect())
            .collect(),
        r: dag
            .r
            .iter()
            .map(|row| row.iter().map(|&b| sol.bin_value(b)).collect())
            .collect(),
    }
}

/// Decode an assignment into the formula it denotes; temporal operators
/// take the full window `[0, t_max - 1]`.
pub fn decode_dag(
    grammar: &Grammar,
    asg: &DagAssignment,
    t_max: usize,
) -> Result<Formula, StructureError> {
    fn node_formula(
        grammar: &Grammar,
        asg: &DagAssignment,
        u: usize,
        t_max: usize,
        memo: &mut Vec<Option<Formula>>,
    ) -> Result<Formula, StructureError> {
        if let Some(f) = &memo[u] {
            return Ok(f.clone());
        }
        let v = asg.x[u]
            .iter()
            .position(|&b| b)
            .ok_or_else(|| StructureError::BadDag(format!("node {u} has no label")))?;
        if asg.x[u].iter().filter(|&&b| b).count() != 1 {
            return Err(StructureError::BadDag(format!("node {u} has several labels")));
        }
        let label = grammar.labels[v];
        let left = asg.l[u].iter().position(|&b| b);
        let right = asg.r[u].iter().position(|&b| b);
        let full = t_max - 1;
        let f = match label {
            Label::Leaf(i) => Formula::ap(i),
            Label::NegLeaf(i) => Formula::not_ap(i),
            Label::Op(op) => {
                let lw = left.ok_or_else(|| {
                    StructureError::BadDag(format!("operator node {u} lacks a left child"))
                })?;
                let lf = node_formula(grammar, asg, lw, t_max, memo)?;
                match op.arity() {
                    1 => match op {
                        OpKind::Always => Formula::always(0, full, lf),
                        OpKind::Eventually => Formula::eventually(0, full, lf),
                        OpKind::Avoid => Formula::avoid(lf),
                        _ => unreachable!(),
                    },
                    _ => {
                        let rw = right.ok_or_else(|| {
                            StructureError::BadDag(format!(
                                "binary node {u} lacks a right child"
                            ))
                        })?;
                        let rf = node_formula(grammar, asg, rw, t_max, memo)?;
                        match op {
                            OpKind::And => Formula::and(lf, rf),
                            OpKind::Or => Formula::or(lf, rf),
                            OpKind::Until => Formula::until(0, full, lf, rf),
                            OpKind::Seq => Formula::seq(lf, rf),
                            OpKind::After => Formula::after(lf, rf),
                            _ => unreachable!(),
                        }
                    }
                }
            }
        };
        memo[u] = Some(f.clone());
        Ok(f)
    }
    let mut memo = vec![None; asg.n];
    node_formula(grammar, asg, 0, t_max, &mut memo)
}

/// Encode a formula as a canonical assignment (merged subtrees, parents
/// before children). Temporal operators must carry full windows.
pub fn encode_dag(
    grammar: &Grammar,
    f: &Formula,
    t_max: usize,
) -> Result<DagAssignment, StructureError> {
    // Distinct subformulas ordered by descending height puts children
    // after parents.
    fn height(f: &Formula) -> usize {
        1 + f.children().iter().map(|c| height(c)).max().unwrap_or(0)
    }
    fn collect<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        if !out.iter().any(|g| *g == f) {
            out.push(f);
            for c in f.children() {
                collect(c, out);
            }
        }
    }
    let mut subs: Vec<&Formula> = vec![];
    collect(f, &mut subs);
    subs.sort_by_key(|g| std::cmp::Reverse(height(g)));
    let n = subs.len();
    let idx_of = |g: &Formula| subs.iter().position(|h| *h == g).unwrap();

    let full = t_max - 1;
    let mut x = vec![vec![false; grammar.n_labels()]; n];
    let mut l = vec![vec![false; n]; n];
    let mut r = vec![vec![false; n]; n];
    for (u, g) in subs.iter().enumerate() {
        let label = match g {
            Formula::Ap(i) => Label::Leaf(*i),
            Formula::NotAp(i) => Label::NegLeaf(*i),
            Formula::Always { lo, hi, .. } | Formula::Eventually { lo, hi, .. } => {
                if *lo != 0 || *hi != full {
                    return Err(StructureError::NotRepresentable(format!(
                        "operator window [{lo},{hi}] is not the full window [0,{full}]"
                    )));
                }
                Label::Op(g.op_kind().unwrap())
            }
            Formula::Until { lo, hi, .. } => {
                if *lo != 0 || *hi != full {
                    return Err(StructureError::NotRepresentable(format!(
                        "until window [{lo},{hi}] is not the full window [0,{full}]"
                    )));
                }
                Label::Op(OpKind::Until)
            }
            _ => Label::Op(g.op_kind().unwrap()),
        };
        let v = grammar.label_index(label).ok_or_else(|| {
            StructureError::NotRepresentable(format!("label {label:?} not in the grammar"))
        })?;
        x[u][v] = true;
        let kids = g.children();
        if let Some(first) = kids.first() {
            l[u][idx_of(first)] = true;
        }
        if let Some(second) = kids.get(1) {
            r[u][idx_of(second)] = true;
        }
    }
    Ok(DagAssignment { n, x, l, r })
}
