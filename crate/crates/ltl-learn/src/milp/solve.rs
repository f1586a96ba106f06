//! Solve dispatch: LP/MILP and continuous QP go straight to HiGHS; convex
//! quadratic objectives over binaries run an outer-approximation loop
//! (epigraph cuts in a MILP master, QP subproblems with integers fixed).

use std::ops::Bound;

use highs::{HessianFormat, HighsModelStatus, RowProblem, Sense as HSense};
use log::{debug, warn};

use super::{LinExpr, Model, Sense, Solution, SolveStatus, Var, VarKind};
use crate::config::Config;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("solver backend failure: {0}")]
    Backend(String),
    #[error("model is unbounded")]
    Unbounded,
    #[error("bad model: {0}")]
    BadModel(String),
}

pub(super) fn solve(model: &Model, cfg: &Config) -> Result<Solution, SolveError> {
    if let Some(reason) = &model.build_infeasible {
        debug!("model {} infeasible at build: {}", model.name, reason);
        return Ok(Solution::infeasible());
    }
    if model.vars.is_empty() {
        return Ok(Solution {
            status: SolveStatus::Optimal,
            values: vec![],
            objective: model.obj.constant,
            bound: model.obj.constant,
            max_violation: 0.0,
        });
    }
    if model.quad.is_empty() {
        return run_highs(model, cfg, true);
    }
    if model.sense == Sense::Maximize {
        return Err(SolveError::BadModel(
            "quadratic objectives are only supported when minimizing".into(),
        ));
    }
    if model.num_binaries() == 0 {
        return run_highs(model, cfg, true);
    }
    solve_outer_approximation(model, cfg)
}

/// Hessian of `sum(w_k * e_k^2)` in square format, one sparse column per
/// variable, representing `0.5 x'Qx` with `Q = 2 sum(w a a')`.
fn hessian_columns(model: &Model) -> Vec<Vec<(usize, f64)>> {
    let n = model.vars.len();
    let mut entries: std::collections::HashMap<(usize, usize), f64> =
        std::collections::HashMap::new();
    for (w, e) in &model.quad {
        for &(vi, ci) in &e.terms {
            for &(vj, cj) in &e.terms {
                *entries.entry((vi.0 as usize, vj.0 as usize)).or_insert(0.0) +=
                    2.0 * w * ci * cj;
            }
        }
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![vec![]; n];
    for ((i, j), v) in entries {
        cols[j].push((i, v));
    }
    for col in &mut cols {
        col.sort_by_key(|&(i, _)| i);
    }
    cols
}

/// Linear part of the expanded quadratic: `sum(2 w b_k a_k)`.
fn quad_linear_part(model: &Model) -> (LinExpr, f64) {
    let mut lin = LinExpr::default();
    let mut constant = 0.0;
    for (w, e) in &model.quad {
        constant += w * e.constant * e.constant;
        for &(v, c) in &e.terms {
            lin.add_term(v, 2.0 * w * e.constant * c);
        }
    }
    (lin.normalized(), constant)
}

fn run_highs(model: &Model, cfg: &Config, with_integrality: bool) -> Result<Solution, SolveError> {
    let mut pb = RowProblem::default();

    // Column costs: linear objective plus the linear expansion of the
    // squared terms (their pure-quadratic part goes into the Hessian).
    let (quad_lin, _quad_const) = if model.quad.is_empty() {
        (LinExpr::default(), 0.0)
    } else {
        quad_linear_part(model)
    };
    let mut costs = vec![0.0f64; model.vars.len()];
    for &(v, c) in &model.obj.terms {
        costs[v.0 as usize] += c;
    }
    for &(v, c) in &quad_lin.terms {
        costs[v.0 as usize] += c;
    }

    let mut cols = Vec::with_capacity(model.vars.len());
    for (i, info) in model.vars.iter().enumerate() {
        let bounds = (Bound::Included(info.lb), Bound::Included(info.ub));
        let col = if with_integrality && info.kind == VarKind::Binary {
            pb.add_integer_column(costs[i], bounds)
        } else {
            pb.add_column(costs[i], bounds)
        };
        cols.push(col);
    }
    for row in &model.rows {
        let lo = if row.lb.is_finite() {
            Bound::Included(row.lb)
        } else {
            Bound::Unbounded
        };
        let hi = if row.ub.is_finite() {
            Bound::Included(row.ub)
        } else {
            Bound::Unbounded
        };
        let factors: Vec<_> = row
            .terms
            .iter()
            .map(|&(v, c)| (cols[v.0 as usize], c))
            .collect();
        pb.add_row((lo, hi), factors);
    }

    let sense = match model.sense {
        Sense::Minimize => HSense::Minimise,
        Sense::Maximize => HSense::Maximise,
    };
    let mut hm = pb.optimise(sense);
    if !model.quad.is_empty() {
        hm.pass_hessian(HessianFormat::Square, hessian_columns(model));
    }
    hm.make_quiet();
    hm.set_option("threads", cfg.solver_threads as i32);
    hm.set_option("random_seed", cfg.seed);
    hm.set_option("mip_rel_gap", cfg.mip_rel_gap);
    hm.set_option("mip_abs_gap", cfg.mip_abs_gap);
    hm.set_option("mip_feasibility_tolerance", 1e-7);
    if let Some(tl) = cfg.time_limit {
        hm.set_option("time_limit", tl);
    }

    let solved = hm
        .try_solve()
        .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
    let status = solved.status();
    let has_primal = solved.primal_solution_status() == highs::HighsSolutionStatus::Feasible;

    let mip_bound = solved
        .double_info_value(c"mip_dual_bound")
        .ok()
        .filter(|b| b.is_finite());

    let finish = |st: SolveStatus, values: Vec<f64>| -> Solution {
        let objective = if values.is_empty() {
            f64::NAN
        } else {
            model.objective_at(&values)
        };
        let bound = match (st, mip_bound) {
            (SolveStatus::Optimal, _) => objective,
            (_, Some(b)) => b,
            _ => f64::NAN,
        };
        let max_violation = if values.is_empty() {
            0.0
        } else {
            model.max_violation(&values)
        };
        if max_violation > cfg.audit_tol {
            warn!(
                "model {}: solution violates stored rows by {max_violation:.3e}",
                model.name
            );
        }
        Solution {
            status: st,
            values,
            objective,
            bound,
            max_violation,
        }
    };

    match status {
        HighsModelStatus::Optimal => {
            let values = solved.get_solution().columns().to_vec();
            Ok(finish(SolveStatus::Optimal, values))
        }
        HighsModelStatus::Infeasible => Ok(Solution::infeasible()),
        HighsModelStatus::ReachedTimeLimit | HighsModelStatus::ReachedIterationLimit => {
            let values = if has_primal {
                solved.get_solution().columns().to_vec()
            } else {
                vec![]
            };
            Ok(finish(SolveStatus::TimeLimit, values))
        }
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            Err(SolveError::Unbounded)
        }
        other => Err(SolveError::Backend(format!(
            "unexpected solver status {other:?}"
        ))),
    }
}

/// Outer approximation for convex MIQP: alternate a MILP master carrying
/// epigraph cuts of the quadratic with QP subproblems at fixed binaries.
/// Finite convergence follows from convexity and the finite binary set.
fn solve_outer_approximation(model: &Model, cfg: &Config) -> Result<Solution, SolveError> {
    let q_ub: f64 = model
        .quad
        .iter()
        .map(|(w, e)| {
            let b = model.abs_bound(e);
            w * b * b
        })
        .sum();

    let mut master = model.clone();
    master.quad.clear();
    let t = master.cont("oa_epi", 0.0, q_ub.max(1.0));
    let mut master_obj = model.obj.clone();
    master_obj.add_term(t, 1.0);
    master.minimize(master_obj);

    let add_cut = |master: &mut Model, point: &[f64]| {
        // t >= q(x0) + grad_q(x0) . (x - x0)
        let mut rhs = LinExpr::default();
        for (w, e) in &model.quad {
            let v = e.eval(point);
            rhs.constant += w * v * v;
            for &(var, c) in &e.terms {
                let g = 2.0 * w * v * c;
                rhs.add_term(var, g);
                rhs.constant -= g * point[var.0 as usize];
            }
        }
        master.add_ge(LinExpr::from(t), rhs);
    };

    // Seed cut at the box midpoint.
    let mid: Vec<f64> = model
        .vars
        .iter()
        .map(|v| 0.5 * (v.lb + v.ub))
        .chain(std::iter::once(0.0))
        .collect();
    add_cut(&mut master, &mid);

    let binaries: Vec<Var> = (0..model.vars.len() as u32)
        .map(Var)
        .filter(|v| model.vars[v.0 as usize].kind == VarKind::Binary)
        .collect();

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    for iter in 0..cfg.oa_max_iter {
        let msol = run_highs(&master, cfg, true)?;
        match msol.status {
            SolveStatus::Infeasible => {
                // Cuts are valid for the epigraph, so the master relaxes
                // the original problem: infeasibility transfers.
                return Ok(Solution::infeasible());
            }
            SolveStatus::TimeLimit => {
                return Ok(match incumbent {
                    Some((values, ub)) => Solution {
                        status: SolveStatus::TimeLimit,
                        max_violation: model.max_violation(&values),
                        values,
                        objective: ub,
                        bound: f64::NAN,
                    },
                    None => Solution {
                        status: SolveStatus::TimeLimit,
                        values: vec![],
                        objective: f64::NAN,
                        bound: f64::NAN,
                        max_violation: 0.0,
                    },
                });
            }
            _ => {}
        }
        let lb = msol.objective; // master optimum bounds the MIQP from below
        if let Some((ref values, ub)) = incumbent {
            if ub - lb <= cfg.oa_abs_tol.max(cfg.oa_rel_tol * ub.abs()) {
                let values = values.clone();
                return Ok(Solution {
                    status: SolveStatus::Optimal,
                    max_violation: model.max_violation(&values),
                    values,
                    objective: ub,
                    bound: lb,
                });
            }
        }

        // QP subproblem at the master's binary assignment.
        let mut sub = model.clone();
        for &b in &binaries {
            let v = msol.value(b).round();
            sub.vars[b.0 as usize].kind = VarKind::Continuous;
            sub.vars[b.0 as usize].lb = v;
            sub.vars[b.0 as usize].ub = v;
        }
        let qsol = run_highs(&sub, cfg, false)?;
        let point = if qsol.has_values() {
            qsol.values.clone()
        } else {
            // Numerically degenerate subproblem; fall back to the master
            // point, which satisfies the same linear rows.
            msol.values[..model.vars.len()].to_vec()
        };
        let ub_cand = model.objective_at(&point);
        if incumbent.as_ref().map_or(true, |&(_, ub)| ub_cand < ub) {
            incumbent = Some((point.clone(), ub_cand));
        }
        add_cut(&mut master, &point);
        add_cut(&mut master, &msol.values[..model.vars.len()].to_vec());
        debug!(
            "oa iter {iter}: lb={lb:.9} ub={:.9}",
            incumbent.as_ref().map(|&(_, u)| u).unwrap_or(f64::NAN)
        );
    }
    warn!("outer approximation hit its iteration cap on {}", model.name);
    Ok(match incumbent {
        Some((values, ub)) => Solution {
            status: SolveStatus::Feasible,
            max_violation: model.max_violation(&values),
            values,
            objective: ub,
            bound: f64::NAN,
        },
        None => Solution {
            status: SolveStatus::TimeLimit,
            values: vec![],
            objective: f64::NAN,
            bound: f64::NAN,
            max_violation: 0.0,
        },
    })
}
