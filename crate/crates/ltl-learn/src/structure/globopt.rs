//! The joint structure+parameter problem: find a DAG, AP parameters and
//! optionally cost weights making every demonstration feasible and
//! KKT-stationary, every counterexample unsatisfying, and (optionally)
//! every demonstration spec-optimal.

use log::debug;

use crate::config::Config;
use crate::kkt::{self, KktMode, ThetaC, ThetaP};
use crate::ltl::Formula;
use crate::milp::{Bin, LinExpr, SolveStatus};
use crate::problem::{Demonstration, Problem, Trajectory};

use super::dag::{
    block_assignment, decode_dag, read_assignment, topology_constraints, weight_expr,
    DagAssignment, Grammar,
};
use super::specopt::{encode_spec_opt_set, index_sets_for_demo, SpecOptMode};
use super::{encode_dag_satisfaction, StructureError};

/// Spec-optimality options for the joint search.
#[derive(Clone, Copy, Debug)]
pub struct SpecOptConfig {
    pub mu: usize,
    /// Enforce on the first `k` demonstrations only (`usize::MAX` = all);
    /// any subset is a sound weakening and spreads solver effort.
    pub demos: usize,
    /// Keep only indices near an admissible boundary when nominals or
    /// per-demonstration parameters identify one.
    pub salient: bool,
}

impl Default for SpecOptConfig {
    fn default() -> Self {
        SpecOptConfig {
            mu: 1,
            demos: usize::MAX,
            salient: true,
        }
    }
}

/// Return-order preference implemented as a node-weight threshold sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightOrder {
    /// No ordering: plain feasibility.
    None,
    /// Strongest first: descending thresholds on the node-weight sum.
    Strongest,
    /// Weakest first: ascending thresholds.
    Weakest,
}

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct GlobOptOptions {
    pub grammar: Grammar,
    pub spec_opt: Option<SpecOptConfig>,
    pub learn_cost: bool,
    /// Structures to exclude.
    pub blocked: Vec<DagAssignment>,
    /// Node-weight window `(lo, hi)` on the weight sum, from the sweep.
    pub weight_window: Option<(f64, f64)>,
    /// Canonical symmetry-breaking rows.
    pub canonical: bool,
    /// Rejected cost-weight vectors to stay `eps_av`-far from.
    pub cost_avoid: Vec<Vec<f64>>,
    /// Tie-break unknown cost weights upward (pins the scale of the
    /// recovered weights to the top of their cone).
    pub maximize_cost_weights: bool,
}

impl GlobOptOptions {
    pub fn new(grammar: Grammar) -> Self {
        GlobOptOptions {
            grammar,
            spec_opt: None,
            learn_cost: false,
            blocked: vec![],
            weight_window: None,
            canonical: true,
            cost_avoid: vec![],
            maximize_cost_weights: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlobOptResult {
    pub status: SolveStatus,
    pub formula: Option<Formula>,
    pub dag: Option<DagAssignment>,
    pub theta_p: Option<Vec<Vec<f64>>>,
    pub theta_c: Option<Vec<f64>>,
    /// Membership matrices of the demonstrations at the solution.
    pub z: Vec<Vec<Vec<bool>>>,
}

impl GlobOptResult {
    fn empty(status: SolveStatus) -> Self {
        GlobOptResult {
            status,
            formula: None,
            dag: None,
            theta_p: None,
            theta_c: None,
            z: vec![],
        }
    }
}

/// Solve the joint problem at a fixed DAG size. Counterexamples carry the
/// index of the demonstration whose environment they were generated in.
pub fn solve_globopt(
    problem: &Problem,
    demos: &[Demonstration],
    counterexamples: &[(usize, Trajectory)],
    n_dag: usize,
    opts: &GlobOptOptions,
    cfg: &Config,
) -> Result<GlobOptResult, StructureError> {
    let mut asm = kkt::assemble(
        problem,
        demos,
        cfg,
        KktMode::Exact,
        opts.learn_cost,
        &format!("globopt_n{n_dag}"),
    )?;
    let t_report = demos
        .iter()
        .map(|d| d.trajectory.duration())
        .max()
        .unwrap_or(2);

    let dag = topology_constraints(&mut asm.model, &opts.grammar, n_dag, opts.canonical);

    // Demonstrations satisfy the encoded formula.
    let mut demo_sats = vec![];
    for block in &asm.blocks {
        let sat = encode_dag_satisfaction(
            &mut asm.model,
            &opts.grammar,
            &dag,
            &block.z,
            &format!("dem{}", block.demo_idx),
        );
        asm.model.fix_bin(sat.s[0][0], true);
        demo_sats.push(sat);
    }

    // Counterexamples do not.
    for (k, (demo_idx, traj)) in counterexamples.iter().enumerate() {
        let mut z_rows = vec![];
        for (ai, ap) in problem.aps.iter().enumerate() {
            let theta_exprs = asm.theta.exprs(*demo_idx, ai);
            let mut row = vec![];
            for t in 1..=traj.duration() {
                let kappa = ap.eta.apply(traj.state(t));
                let g: Vec<LinExpr> = ap
                    .rows
                    .iter()
                    .map(|r| {
                        let (a, b) = r.affine_in_theta(&kappa);
                        let mut e = LinExpr::constant(b);
                        for (coef, te) in a.iter().zip(&theta_exprs) {
                            e.add_expr(te, *coef);
                        }
                        e.normalized()
                    })
                    .collect();
                let (zb, _) = kkt::make_indicator(
                    &mut asm.model,
                    cfg,
                    &format!("cex{k}_a{}_t{t}", ap.index),
                    &g,
                );
                row.push(zb);
            }
            z_rows.push(row);
        }
        let sat = encode_dag_satisfaction(
            &mut asm.model,
            &opts.grammar,
            &dag,
            &z_rows,
            &format!("cex{k}"),
        );
        asm.model.fix_bin(sat.s[0][0], false);
    }

    // Spec-optimality.
    if let Some(so) = opts.spec_opt {
        for (j, (demo, block)) in demos.iter().zip(&asm.blocks).enumerate() {
            if j >= so.demos {
                break;
            }
            let sets = index_sets_for_demo(problem, demo, so.mu, so.salient, cfg);
            debug!("demo {j}: {} spec-optimality index sets", sets.len());
            for (k, iota) in sets.iter().enumerate() {
                encode_spec_opt_set(
                    &mut asm.model,
                    cfg,
                    block,
                    iota,
                    &SpecOptMode::Dag {
                        grammar: &opts.grammar,
                        dag: &dag,
                        base: &demo_sats[j],
                    },
                    &format!("d{j}_i{k}"),
                );
            }
        }
    }

    // Structure blocking and weight windows.
    for pattern in &opts.blocked {
        if pattern.n == n_dag {
            block_assignment(&mut asm.model, &dag, pattern);
        }
    }
    if let Some((lo, hi)) = opts.weight_window {
        let w = weight_expr(&opts.grammar, &dag, None);
        asm.model.add_range(w, lo, hi);
    }

    // Rejected cost weights.
    if !opts.cost_avoid.is_empty() {
        let vars = match &asm.theta_c {
            ThetaC::Vars { vars, .. } => vars.clone(),
            ThetaC::Known(_) => {
                return Err(StructureError::Kkt(crate::kkt::KktError::Unsupported(
                    "cost avoidance needs unknown cost weights".into(),
                )))
            }
        };
        for (k, avoid) in opts.cost_avoid.iter().enumerate() {
            let mut any = LinExpr::default();
            for (i, &v) in vars.iter().enumerate() {
                let above = Bin::Pos(asm.model.binary(format!("av{k}_{i}_hi")));
                let below = Bin::Pos(asm.model.binary(format!("av{k}_{i}_lo")));
                asm.model.implies_ge(
                    above,
                    LinExpr::from(v),
                    LinExpr::constant(avoid[i] + cfg.eps_av),
                    cfg.m,
                );
                asm.model.implies_le(
                    below,
                    LinExpr::from(v),
                    LinExpr::constant(avoid[i] - cfg.eps_av),
                    cfg.m,
                );
                any.add_expr(&above.expr(), 1.0);
                any.add_expr(&below.expr(), 1.0);
            }
            asm.model.add_ge(any, LinExpr::constant(1.0));
        }
    }

    // Objective.
    if opts.maximize_cost_weights {
        if let ThetaC::Vars { vars, .. } = &asm.theta_c {
            let obj = LinExpr::sum(vars.iter().map(|&v| LinExpr::from(v)));
            asm.model.maximize(obj);
        } else {
            asm.model.minimize(LinExpr::default());
        }
    } else {
        asm.model.minimize(LinExpr::default());
    }

    debug!(
        "globopt n={n_dag}: {} vars ({} binary), {} rows",
        asm.model.num_vars(),
        asm.model.num_binaries(),
        asm.model.num_rows()
    );
    let sol = asm.model.solve(cfg)?;
    match sol.status {
        SolveStatus::Infeasible => Ok(GlobOptResult::empty(SolveStatus::Infeasible)),
        SolveStatus::TimeLimit if !sol.has_values() => {
            Ok(GlobOptResult::empty(SolveStatus::TimeLimit))
        }
        _ => {
            let asg = read_assignment(&sol, &dag);
            let formula = decode_dag(&opts.grammar, &asg, t_report)?;
            let theta_p = match &asm.theta {
                ThetaP::Shared(vars) => Some(
                    vars.iter()
                        .map(|coords| coords.iter().map(|&v| sol.value(v)).collect())
                        .collect(),
                ),
                ThetaP::PerDemo(_) => None,
            };
            let theta_c = match &asm.theta_c {
                ThetaC::Vars { vars, .. } => {
                    Some(vars.iter().map(|&v| sol.value(v)).collect())
                }
                ThetaC::Known(_) => None,
            };
            let z = asm
                .blocks
                .iter()
                .map(|b| {
                    b.z.iter()
                        .map(|row| row.iter().map(|&bin| sol.bin_value(bin)).collect())
                        .collect()
                })
                .collect();
            Ok(GlobOptResult {
                status: sol.status,
                formula: Some(formula),
                dag: Some(asg),
                theta_p,
                theta_c,
                z,
            })
        }
    }
}
