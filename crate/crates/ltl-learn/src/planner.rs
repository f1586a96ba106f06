//! Forward problem: globally optimal trajectories under a concrete
//! formula, for kinematic/piecewise-affine systems. Doubles as the
//! demonstration generator and as the global-optimality oracle in tests
//! and in the falsification loop's counterexample search.

use log::debug;
use rand::Rng;

use crate::config::Config;
use crate::ltl::{self, Formula, LeafValuation};
use crate::milp::{Bin, LinExpr, Model, SolveStatus};
use crate::problem::{CostFamily, CostFunction, Demonstration, Problem, Trajectory};
use crate::structure::sat::encode_formula_root;

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("solver: {0}")]
    Solve(#[from] crate::milp::SolveError),
    #[error("planning needs linear known constraints and affine AP rows: {0}")]
    NotLinear(String),
    #[error("specification infeasible; no demonstration exists")]
    InfeasibleSpec,
    #[error("planner hit a limit without an optimality proof")]
    NoProof,
    #[error("planned trajectory failed re-verification: {0}")]
    Verification(String),
    #[error("could not generate a feasible noisy demonstration in {0} attempts")]
    NoisyRetriesExhausted(usize),
    #[error("{0}")]
    Problem(#[from] crate::problem::ProblemError),
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub cost: f64,
    /// Membership values chosen by the solver, boundary contacts resolved
    /// to whichever side the plan needed.
    pub valuation: LeafValuation,
}

/// Outcome of a planning call; both variants carry solver proofs.
#[derive(Clone, Debug)]
pub enum PlanOutcome {
    Optimal(PlanResult),
    Infeasible,
}

/// Solve the forward problem to global optimality.
#[allow(clippy::too_many_arguments)]
pub fn plan(
    problem: &Problem,
    formula: &Formula,
    theta_p: &[Vec<f64>],
    cost: &CostFunction,
    t_max: usize,
    start: &[f64],
    goal: Option<&[f64]>,
    cfg: &Config,
) -> Result<PlanOutcome, PlannerError> {
    assert!(t_max >= 2);
    let n = problem.state_dim;
    let mut model = Model::new("plan");

    let xs: Vec<Vec<crate::milp::Var>> = (1..=t_max)
        .map(|t| {
            (0..n)
                .map(|d| {
                    let (lo, hi) = problem.domain[d];
                    model.cont(format!("x{t}_{d}"), lo, hi)
                })
                .collect()
        })
        .collect();

    let known = problem.known_constraints(t_max, start, goal);
    for row in &known.equalities {
        let mut e = LinExpr::constant(-row.rhs);
        for &(t, d, c) in &row.terms {
            e.add_term(xs[t - 1][d], c);
        }
        model.add_eq(e, LinExpr::constant(0.0));
    }
    for ineq in &known.inequalities {
        match ineq {
            crate::problem::KnownIneq::Linear(row) => {
                let mut e = LinExpr::constant(-row.rhs);
                for &(t, d, c) in &row.terms {
                    e.add_term(xs[t - 1][d], c);
                }
                model.add_le(e, LinExpr::constant(0.0));
            }
            crate::problem::KnownIneq::SquaredStepBall { .. } => {
                return Err(PlannerError::NotLinear(
                    "2-norm step bounds are usable on the KKT side only".into(),
                ))
            }
        }
    }

    // Membership indicators for the APs the formula mentions.
    let used = collect_aps(formula);
    let mut z_rows: Vec<Vec<Bin>> = vec![vec![Bin::Const(false); t_max]; problem.aps.len()];
    for (ai, ap) in problem.aps.iter().enumerate() {
        if !used.contains(&ap.index) {
            continue;
        }
        let jac = ap.eta.jacobian(n);
        let mut row = vec![];
        for t in 1..=t_max {
            let mut g = Vec::with_capacity(ap.rows.len());
            for r in &ap.rows {
                let lin = r.as_kappa_affine().ok_or_else(|| {
                    PlannerError::NotLinear(format!("AP {} has a non-affine row", ap.index))
                })?;
                let mut e = LinExpr::constant(
                    lin.offset
                        + lin
                            .theta_coeffs
                            .iter()
                            .zip(&theta_p[ai])
                            .map(|(a, th)| a * th)
                            .sum::<f64>(),
                );
                for (kd, kc) in lin.kappa_coeffs.iter().enumerate() {
                    if *kc == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        let c = kc * jac[kd][d];
                        if c != 0.0 {
                            e.add_term(xs[t - 1][d], c);
                        }
                    }
                }
                g.push(e.normalized());
            }
            let z = Bin::Pos(model.binary(format!("z{}_{t}", ap.index)));
            let s: Vec<Bin> = (0..g.len())
                .map(|m| Bin::Pos(model.binary(format!("s{}_{t}_{m}", ap.index))))
                .collect();
            crate::kkt::encode_indicator(&mut model, cfg, &g, z, &s);
            row.push(z);
        }
        z_rows[ai] = row;
    }

    let root = encode_formula_root(&mut model, "plan_sat", formula, &z_rows);
    model.fix_bin(root, true);

    // Objective over increments.
    let mut linear_obj = LinExpr::default();
    for t in 1..t_max {
        for d in 0..n {
            let inc = LinExpr::from(xs[t][d]) - LinExpr::from(xs[t - 1][d]);
            let w = match cost.family {
                CostFamily::QuadraticIncrements => 1.0,
                _ => cost.weights[d],
            };
            match cost.family {
                CostFamily::WeightedL1Increments => {
                    let s = model.cont(format!("l1_{t}_{d}"), 0.0, 2.0 * problem.u_max[d]);
                    model.add_ge(LinExpr::from(s), inc.clone());
                    model.add_ge(LinExpr::from(s), inc * -1.0);
                    linear_obj.add_term(s, w);
                }
                _ => model.add_quadratic(w, inc),
            }
        }
    }
    model.minimize(linear_obj);

    let sol = model.solve(cfg)?;
    match sol.status {
        SolveStatus::Infeasible => Ok(PlanOutcome::Infeasible),
        SolveStatus::Optimal => {
            let states: Vec<Vec<f64>> = xs
                .iter()
                .map(|row| row.iter().map(|&v| sol.value(v)).collect())
                .collect();
            let trajectory = Trajectory::from_states(states);
            let plan_cost = cost.cost(&trajectory);

            // Re-verify through the recursive semantics.
            let mut rows = vec![vec![false; t_max]; problem.aps.len()];
            for (ai, ap) in problem.aps.iter().enumerate() {
                for t in 1..=t_max {
                    let kappa = ap.eta.apply(trajectory.state(t));
                    let (g, _) = ap.margin(&kappa, &theta_p[ai]);
                    let claim = if used.contains(&ap.index) {
                        sol.bin_value(z_rows[ai][t - 1])
                    } else {
                        g <= 0.0
                    };
                    if claim && g > 1e-5 {
                        return Err(PlannerError::Verification(format!(
                            "claimed inside AP {} at t={t} but G = {g:.3e}",
                            ap.index
                        )));
                    }
                    if !claim && g < -1e-5 {
                        return Err(PlannerError::Verification(format!(
                            "claimed outside AP {} at t={t} but G = {g:.3e}",
                            ap.index
                        )));
                    }
                    rows[ai][t - 1] = claim;
                }
            }
            let valuation = LeafValuation::from_rows(rows);
            if ltl::evaluate(formula, &valuation, 1) != Ok(true) {
                return Err(PlannerError::Verification(
                    "plan does not satisfy the formula under the recursive semantics".into(),
                ));
            }
            debug!("plan: cost {plan_cost:.6} over T={t_max}");
            Ok(PlanOutcome::Optimal(PlanResult {
                trajectory,
                cost: plan_cost,
                valuation,
            }))
        }
        _ => Err(PlannerError::NoProof),
    }
}

fn collect_aps(f: &Formula) -> std::collections::HashSet<usize> {
    fn walk(f: &Formula, set: &mut std::collections::HashSet<usize>) {
        match f {
            Formula::Ap(i) | Formula::NotAp(i) => {
                set.insert(*i);
            }
            _ => {
                for c in f.children() {
                    walk(c, set);
                }
            }
        }
    }
    let mut set = std::collections::HashSet::new();
    walk(f, &mut set);
    set
}

/// Plan and wrap as a demonstration, optionally perturbing interior states
/// with uniform noise (controls are re-derived, so dynamics stay exact).
/// The suboptimality bound is recomputed as `cost(noisy)/cost(optimal) - 1`
/// and the perturbed trace is re-verified before acceptance.
#[allow(clippy::too_many_arguments)]
pub fn generate_demo<R: Rng>(
    problem: &Problem,
    formula: &Formula,
    theta_p: &[Vec<f64>],
    cost: &CostFunction,
    t_max: usize,
    start: &[f64],
    goal: Option<&[f64]>,
    noise: f64,
    rng: &mut R,
    cfg: &Config,
) -> Result<Demonstration, PlannerError> {
    let base = match plan(problem, formula, theta_p, cost, t_max, start, goal, cfg)? {
        PlanOutcome::Optimal(r) => r,
        PlanOutcome::Infeasible => return Err(PlannerError::InfeasibleSpec),
    };
    let make = |traj: Trajectory, delta: f64| -> Demonstration {
        let mut d = Demonstration::new(traj, delta);
        d.goal = goal.map(|g| g.to_vec());
        d
    };
    if noise == 0.0 {
        let demo = make(base.trajectory.clone(), 0.0);
        problem.validate_demo(&demo)?;
        return Ok(demo);
    }
    const RETRIES: usize = 50;
    for _ in 0..RETRIES {
        let mut states = base.trajectory.states.clone();
        for state in states.iter_mut().take(t_max - 1).skip(1) {
            for (d, v) in state.iter_mut().enumerate() {
                let (lo, hi) = problem.domain[d];
                *v = (*v + rng.random_range(-noise..=noise)).clamp(lo, hi);
            }
        }
        let traj = Trajectory::from_states(states);
        let bounds_ok = traj
            .controls
            .iter()
            .all(|u| u.iter().zip(&problem.u_max).all(|(ud, um)| ud.abs() <= *um));
        if !bounds_ok {
            continue;
        }
        // Formula satisfaction on the perturbed trace; the closed-region
        // convention reads boundary contacts as inside.
        let rows: Vec<Vec<bool>> = problem
            .aps
            .iter()
            .enumerate()
            .map(|(ai, ap)| {
                (1..=t_max)
                    .map(|t| {
                        let kappa = ap.eta.apply(traj.state(t));
                        ap.margin(&kappa, &theta_p[ai]).0 <= 0.0
                    })
                    .collect()
            })
            .collect();
        let valuation = LeafValuation::from_rows(rows);
        if ltl::evaluate(formula, &valuation, 1) != Ok(true) {
            continue;
        }
        let delta = cost.cost(&traj) / base.cost.max(1e-12) - 1.0;
        let demo = make(traj, delta.max(0.0));
        if problem.validate_demo(&demo).is_ok() {
            return Ok(demo);
        }
    }
    Err(PlannerError::NoisyRetriesExhausted(RETRIES))
}
