//! Search over formula structure: DAG decision variables, well-formedness,
//! satisfaction matrices, spec-optimality, and the joint
//! structure+parameter problem.

pub mod sat;

mod dag;
mod globopt;
mod specopt;

pub use dag::{
    decode_dag, encode_dag, topology_constraints, weight_expr, weight_range, DagAssignment,
    DagVars, Grammar, Label,
};
pub use globopt::{solve_globopt, GlobOptOptions, GlobOptResult, SpecOptConfig, WeightOrder};
pub use specopt::{encode_spec_opt_fixed, index_sets_for_demo, SpecOptMode};

use crate::milp::{Bin, Model};

#[derive(Debug, thiserror::Error)]
pub enum StructureError {
    #[error("solver: {0}")]
    Solve(#[from] crate::milp::SolveError),
    #[error("kkt: {0}")]
    Kkt(#[from] crate::kkt::KktError),
    #[error("malformed DAG assignment: {0}")]
    BadDag(String),
    #[error("formula not representable: {0}")]
    NotRepresentable(String),
}

/// Satisfaction matrix of one trajectory against the searched DAG, plus
/// the internals needed to build perturbed copies that share unchanged
/// columns.
pub struct DagSat {
    /// `s[node][t-1]`: truth of the subformula rooted at `node` at time t.
    pub s: Vec<Vec<Bin>>,
    /// Selected left/right child rows, `[node][t-1]` (continuous 0/1).
    pub cl: Vec<Vec<Bin>>,
    pub cr: Vec<Vec<Bin>>,
}

/// Encode one satisfaction matrix for leaf rows `z[ap][t-1]`.
pub fn encode_dag_satisfaction(
    model: &mut Model,
    grammar: &Grammar,
    dag: &DagVars,
    z: &[Vec<Bin>],
    prefix: &str,
) -> DagSat {
    encode_dag_satisfaction_masked(model, grammar, dag, z, prefix, None, 0)
}

/// Like [`encode_dag_satisfaction`] but sharing every column strictly
/// after `changed_upto` (1-based time) with `base`. Used by the
/// spec-optimality encoding: a leaf flip at time `t*` can only change
/// subformula truth at starting times `<= t*`, because every operator in
/// the grammar looks forward.
pub fn encode_dag_satisfaction_masked(
    model: &mut Model,
    grammar: &Grammar,
    dag: &DagVars,
    z: &[Vec<Bin>],
    prefix: &str,
    base: Option<&DagSat>,
    changed_upto: usize,
) -> DagSat {
    let n = dag.n;
    let t_max = z.first().map_or(0, |r| r.len());
    let fresh_cols = match base {
        Some(_) => changed_upto.min(t_max),
        None => t_max,
    };

    // Truth rows per node.
    let mut s: Vec<Vec<Bin>> = Vec::with_capacity(n);
    for u in 0..n {
        let row: Vec<Bin> = (0..t_max)
            .map(|t| {
                if t < fresh_cols || base.is_none() {
                    Bin::Pos(model.binary(format!("{prefix}_s{u}_{}", t + 1)))
                } else {
                    base.unwrap().s[u][t]
                }
            })
            .collect();
        s.push(row);
    }

    // Selected-child rows; continuous in [0,1], pinned to the chosen
    // child's S row by unit big-M links.
    let mut cl: Vec<Vec<Bin>> = Vec::with_capacity(n);
    let mut cr: Vec<Vec<Bin>> = Vec::with_capacity(n);
    for u in 0..n {
        let mut cl_row = vec![];
        let mut cr_row = vec![];
        for t in 0..t_max {
            if t >= fresh_cols && base.is_some() {
                cl_row.push(base.unwrap().cl[u][t]);
                cr_row.push(base.unwrap().cr[u][t]);
                continue;
            }
            let has_children = u + 1 < n;
            if !has_children {
                cl_row.push(Bin::Const(false));
                cr_row.push(Bin::Const(false));
                continue;
            }
            let vl = model.cont(format!("{prefix}_cl{u}_{}", t + 1), 0.0, 1.0);
            let vr = model.cont(format!("{prefix}_cr{u}_{}", t + 1), 0.0, 1.0);
            for w in u + 1..n {
                let link = |model: &mut Model, sel: Bin, v: crate::milp::Var| {
                    // |v - S_w,t| <= 1 - sel
                    let diff = crate::milp::LinExpr::from(v) - s[w][t].expr();
                    model.implies_le(sel, diff.clone(), crate::milp::LinExpr::constant(0.0), 1.0);
                    model.implies_ge(sel, diff, crate::milp::LinExpr::constant(0.0), 1.0);
                };
                link(model, dag.l[u][w], vl);
                link(model, dag.r[u][w], vr);
            }
            cl_row.push(Bin::Pos(vl));
            cr_row.push(Bin::Pos(vr));
        }
        cl.push(cl_row);
        cr.push(cr_row);
    }

    // Candidate truth rows per (node, label), linked to S when the label
    // is selected.
    for u in 0..n {
        for (li, label) in grammar.labels.iter().enumerate() {
            let sel = dag.x[u][li];
            if sel.as_const() == Some(false) {
                continue;
            }
            let phi: Vec<Bin> = match label {
                Label::Leaf(i) => z[*i - 1].clone(),
                Label::NegLeaf(i) => z[*i - 1].iter().map(|b| b.not()).collect(),
                Label::Op(op) => {
                    if u + 1 >= n {
                        // No children available; the label is excluded by
                        // the topology rows, so no candidate row needed.
                        continue;
                    }
                    let mut alg = sat::ModelAlg::new(model, format!("{prefix}_phi{u}_{li}"));
                    let right = if op.arity() == 2 { Some(&cr[u][..]) } else { None };
                    sat::op_row_full(&mut alg, *op, &cl[u], right)
                }
            };
            // Columns shared with the base matrix are already linked there.
            for t in 0..fresh_cols {
                // |S - phi| <= 1 - X  (unit big-M: both sides are 0/1).
                let diff = s[u][t].expr() - phi[t].expr();
                model.implies_le(sel, diff.clone(), crate::milp::LinExpr::constant(0.0), 1.0);
                model.implies_ge(sel, diff, crate::milp::LinExpr::constant(0.0), 1.0);
            }
        }
    }

    DagSat { s, cl, cr }
}

#[cfg(test)]
mod tests;
