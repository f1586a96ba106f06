//! Counterexample-guided falsification.
//!
//! The main loop proposes candidate (structure, parameters) pairs from the
//! joint mixed-integer problem, then tries to undercut each demonstration
//! with a cheaper trajectory satisfying the candidate; found trajectories
//! go into a growing exclusion set. The DAG size starts at 1 and is bumped
//! whenever the joint problem runs dry. A second loop handles unknown cost
//! weights by proposing them, running the inner loop with them fixed, and
//! blocking rejected weight vectors.

use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::ltl::{self, Formula, LeafValuation};
use crate::milp::SolveStatus;
use crate::par;
use crate::planner::{plan, PlanOutcome, PlannerError};
use crate::problem::{CostFunction, Demonstration, Problem, Trajectory};
use crate::structure::{
    solve_globopt, weight_range, DagAssignment, GlobOptOptions, GlobOptResult, Grammar,
    SpecOptConfig, StructureError, WeightOrder,
};

#[derive(Debug, thiserror::Error)]
pub enum FalsifyError {
    #[error("structure search: {0}")]
    Structure(#[from] StructureError),
    #[error("planner: {0}")]
    Planner(#[from] PlannerError),
    #[error("kkt: {0}")]
    Kkt(#[from] crate::kkt::KktError),
    #[error("no consistent formula within the DAG budget of {0}")]
    NoConsistentFormula(usize),
    #[error("inner falsification iteration cap ({0}) reached")]
    InnerCapReached(usize),
    #[error("outer cost-proposal iteration cap ({0}) reached")]
    OuterCapReached(usize),
    #[error("stored counterexample failed re-validation: {0}")]
    BadCounterexample(String),
    #[error("{0}")]
    Problem(#[from] crate::problem::ProblemError),
}

/// A candidate structure+parameters pair proposed during the loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub formula_text: String,
    pub n_dag: usize,
    pub iteration: usize,
    /// Demonstrations that produced a counterexample against it (empty for
    /// the accepted candidate).
    pub falsified_by: Vec<usize>,
}

/// A lower-cost candidate-satisfying trajectory excluding a candidate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    /// Index of the demonstration it undercuts (also fixes the
    /// environment it was planned in).
    pub demo_idx: usize,
    pub trajectory: Trajectory,
    /// Its cost under the active weights at generation time.
    pub cost: f64,
}

/// Solver statistics of one run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub globopt_solves: usize,
    pub cex_searches: usize,
    pub wall_seconds: f64,
}

/// Everything a falsification run returns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnedModel {
    pub formula_text: String,
    pub n_dag: usize,
    pub dag: DagAssignment,
    /// Learned parameters per AP; absent when every demonstration carried
    /// its own known environment.
    pub theta_p: Option<Vec<Vec<f64>>>,
    /// Learned cost weights (unknown-cost runs only).
    pub theta_c: Option<Vec<f64>>,
    pub counterexamples: Vec<Counterexample>,
    /// True when every final counterexample search ended with a proof.
    pub certified: bool,
    pub history: Vec<Candidate>,
    pub stats: RunStats,
}

impl LearnedModel {
    pub fn formula(&self) -> Formula {
        ltl::parse(&self.formula_text).expect("stored formula text always parses")
    }
}

/// Options of a falsification run.
#[derive(Clone, Debug)]
pub struct FalsifyOptions {
    pub grammar: Grammar,
    pub spec_opt: Option<SpecOptConfig>,
    pub order: WeightOrder,
    /// Exclude already-returned structures via no-good cuts.
    pub block_structures: bool,
}

impl FalsifyOptions {
    pub fn new(grammar: Grammar) -> Self {
        FalsifyOptions {
            grammar,
            spec_opt: None,
            order: WeightOrder::None,
            block_structures: false,
        }
    }
}

/// Search for a trajectory satisfying the candidate at a cost below the
/// demonstration's suboptimality bound. `Ok((None, true))` is a proof of
/// no counterexample; `(None, false)` is a timeout treated as "none found".
pub fn counterexample_search(
    problem: &Problem,
    demo: &Demonstration,
    demo_idx: usize,
    formula: &Formula,
    theta_p: &[Vec<f64>],
    cost: &CostFunction,
    cfg: &Config,
) -> Result<(Option<Counterexample>, bool), FalsifyError> {
    let t_max = demo.trajectory.duration();
    let start = demo.trajectory.state(1).to_vec();
    let goal = demo.goal.clone().or_else(|| problem.goal.clone());
    let bound = cost.cost(&demo.trajectory) / (1.0 + demo.delta);
    match plan(
        problem,
        formula,
        theta_p,
        cost,
        t_max,
        &start,
        goal.as_deref(),
        cfg,
    ) {
        Ok(PlanOutcome::Optimal(res)) => {
            if res.cost < bound - cfg.cex_margin {
                Ok((
                    Some(Counterexample {
                        demo_idx,
                        trajectory: res.trajectory,
                        cost: res.cost,
                    }),
                    true,
                ))
            } else {
                Ok((None, true))
            }
        }
        // The demonstration itself satisfies the candidate, so a proven
        // infeasibility can only mean no cheaper trajectory exists within
        // the domain box.
        Ok(PlanOutcome::Infeasible) => Ok((None, true)),
        Err(PlannerError::NoProof) => Ok((None, false)),
        Err(e) => Err(e.into()),
    }
}

fn theta_for_demo(
    res: &GlobOptResult,
    demos: &[Demonstration],
    demo_idx: usize,
) -> Vec<Vec<f64>> {
    match (&res.theta_p, &demos[demo_idx].theta_p) {
        (Some(shared), _) => shared.clone(),
        (None, Some(own)) => own.clone(),
        (None, None) => unreachable!("either shared or per-demo parameters exist"),
    }
}

/// Weight thresholds to sweep for an ordering, widest-window last.
fn threshold_plan(order: WeightOrder, grammar: &Grammar, n_dag: usize) -> Vec<Option<(f64, f64)>> {
    match order {
        WeightOrder::None => vec![None],
        _ => {
            let (lo, hi) = weight_range(grammar, n_dag, None);
            let steps = (hi - lo).round() as i64;
            match order {
                WeightOrder::Weakest => (0..=steps)
                    .map(|k| Some((lo, lo + k as f64)))
                    .collect(),
                WeightOrder::Strongest => (0..=steps)
                    .map(|k| Some((hi - k as f64, hi)))
                    .collect(),
                WeightOrder::None => unreachable!(),
            }
        }
    }
}

/// Algorithm: counterexample-guided falsification with known cost weights.
pub fn falsify(
    problem: &Problem,
    demos: &[Demonstration],
    opts: &FalsifyOptions,
    cfg: &Config,
) -> Result<LearnedModel, FalsifyError> {
    let cost = problem.known_cost()?;
    falsify_with_cost(problem, demos, &cost, None, opts, cfg)
}

fn falsify_with_cost(
    problem: &Problem,
    demos: &[Demonstration],
    cost: &CostFunction,
    theta_c_report: Option<Vec<f64>>,
    opts: &FalsifyOptions,
    cfg: &Config,
) -> Result<LearnedModel, FalsifyError> {
    let t0 = Instant::now();
    let mut ledger: Vec<Counterexample> = vec![];
    let mut history: Vec<Candidate> = vec![];
    let mut stats = RunStats::default();
    let mut blocked: Vec<DagAssignment> = vec![];
    let t_report = demos
        .iter()
        .map(|d| d.trajectory.duration())
        .max()
        .unwrap_or(2);

    for n_dag in 1..=cfg.n_dag_max {
        let thresholds = threshold_plan(opts.order, &opts.grammar, n_dag);
        let mut thr_pos = 0usize;
        let mut iteration = 0usize;
        'inner: loop {
            if iteration >= cfg.inner_cap {
                return Err(FalsifyError::InnerCapReached(cfg.inner_cap));
            }
            // Advance the threshold sweep to the first feasible window.
            let mut found: Option<GlobOptResult> = None;
            while thr_pos < thresholds.len() {
                let mut gopts = GlobOptOptions::new(opts.grammar.clone());
                gopts.spec_opt = opts.spec_opt;
                gopts.weight_window = thresholds[thr_pos];
                gopts.blocked = blocked.clone();
                let cex_pairs: Vec<(usize, Trajectory)> = ledger
                    .iter()
                    .map(|c| (c.demo_idx, c.trajectory.clone()))
                    .collect();
                stats.globopt_solves += 1;
                let res = solve_globopt(problem, demos, &cex_pairs, n_dag, &gopts, cfg)?;
                match res.status {
                    SolveStatus::Infeasible => {
                        thr_pos += 1;
                        continue;
                    }
                    _ => {
                        found = Some(res);
                        break;
                    }
                }
            }
            let Some(res) = found else {
                debug!("size {n_dag} exhausted after {iteration} iterations");
                break 'inner;
            };
            let formula = res.formula.clone().expect("feasible result carries a formula");
            info!("size {n_dag} iteration {iteration}: candidate {formula}");

            // Per-demonstration counterexample searches run independently.
            let theta_by_demo: Vec<Vec<Vec<f64>>> = (0..demos.len())
                .map(|j| theta_for_demo(&res, demos, j))
                .collect();
            let searches: Vec<Result<(Option<Counterexample>, bool), FalsifyError>> =
                par::map_range(demos.len(), |j| {
                    counterexample_search(
                        problem,
                        &demos[j],
                        j,
                        &formula,
                        &theta_by_demo[j],
                        cost,
                        cfg,
                    )
                });
            stats.cex_searches += demos.len();
            let mut new_cexs = vec![];
            let mut all_proven = true;
            for out in searches {
                let (cex, proven) = out?;
                all_proven &= proven;
                if let Some(c) = cex {
                    validate_counterexample(problem, demos, &formula, &theta_by_demo, cost, &c, cfg)?;
                    new_cexs.push(c);
                }
            }
            history.push(Candidate {
                formula_text: formula.to_string(),
                n_dag,
                iteration,
                falsified_by: new_cexs.iter().map(|c| c.demo_idx).collect(),
            });
            if new_cexs.is_empty() {
                stats.wall_seconds = t0.elapsed().as_secs_f64();
                return Ok(LearnedModel {
                    formula_text: formula.to_string(),
                    n_dag,
                    dag: res.dag.clone().expect("feasible result carries a DAG"),
                    theta_p: res.theta_p.clone(),
                    theta_c: theta_c_report.clone().or_else(|| res.theta_c.clone()),
                    counterexamples: ledger,
                    certified: all_proven,
                    history,
                    stats,
                });
            }
            ledger.extend(new_cexs);
            if opts.block_structures {
                blocked.push(res.dag.clone().expect("feasible result carries a DAG"));
            }
            iteration += 1;
        }
        let _ = t_report;
    }
    Err(FalsifyError::NoConsistentFormula(cfg.n_dag_max))
}

/// Re-validate a counterexample exactly as its invariants state: it
/// satisfies the candidate under the recursive semantics (boundary
/// contacts resolved inside-first, then outside) and undercuts the
/// demonstration's bound.
fn validate_counterexample(
    problem: &Problem,
    demos: &[Demonstration],
    formula: &Formula,
    theta_by_demo: &[Vec<Vec<f64>>],
    cost: &CostFunction,
    cex: &Counterexample,
    cfg: &Config,
) -> Result<(), FalsifyError> {
    let theta = &theta_by_demo[cex.demo_idx];
    if !counterexample_revalidates(problem, &demos[cex.demo_idx], formula, theta, cost, cex, cfg) {
        return Err(FalsifyError::BadCounterexample(format!(
            "against demonstration {}",
            cex.demo_idx
        )));
    }
    Ok(())
}

/// The stored-counterexample invariant, reusable by tests and reports.
pub fn counterexample_revalidates(
    problem: &Problem,
    demo: &Demonstration,
    formula: &Formula,
    theta_p: &[Vec<f64>],
    cost: &CostFunction,
    cex: &Counterexample,
    cfg: &Config,
) -> bool {
    let t_max = cex.trajectory.duration();
    // Boundary contacts may be claimed either way; try the closed-inside
    // reading first, then flip boundary contacts outside.
    let mut satisfied = false;
    for boundary_inside in [true, false] {
        let rows: Vec<Vec<bool>> = problem
            .aps
            .iter()
            .enumerate()
            .map(|(ai, ap)| {
                (1..=t_max)
                    .map(|t| {
                        let kappa = ap.eta.apply(cex.trajectory.state(t));
                        let (g, _) = ap.margin(&kappa, &theta_p[ai]);
                        if g.abs() <= 1e-7 {
                            boundary_inside
                        } else {
                            g < 0.0
                        }
                    })
                    .collect()
            })
            .collect();
        if ltl::evaluate(formula, &LeafValuation::from_rows(rows), 1) == Ok(true) {
            satisfied = true;
            break;
        }
    }
    let bound = cost.cost(&demo.trajectory) / (1.0 + demo.delta);
    satisfied && cost.cost(&cex.trajectory) < bound - cfg.cex_margin
}

/// Unknown-cost loop: propose weights from the joint problem, run the
/// falsification with them fixed, and block rejected proposals.
pub fn falsify_unknown_cost(
    problem: &Problem,
    demos: &[Demonstration],
    opts: &FalsifyOptions,
    cfg: &Config,
) -> Result<LearnedModel, FalsifyError> {
    // Known weights degenerate to the plain loop.
    if let Some(cost) = problem.cost.known() {
        let known_weights = match &cost.family {
            crate::problem::CostFamily::QuadraticIncrements => None,
            _ => Some(cost.weights.clone()),
        };
        return falsify_with_cost(problem, demos, &cost, known_weights, opts, cfg);
    }

    let mut avoided: Vec<Vec<f64>> = vec![];
    for outer in 0..cfg.outer_cap {
        // Propose weights: smallest DAG size at which the joint problem
        // with free weights is feasible, tie-broken upward.
        let mut proposal: Option<Vec<f64>> = None;
        for n_dag in 1..=cfg.n_dag_max {
            let mut gopts = GlobOptOptions::new(opts.grammar.clone());
            gopts.spec_opt = opts.spec_opt;
            gopts.learn_cost = true;
            gopts.maximize_cost_weights = true;
            gopts.cost_avoid = avoided.clone();
            let res = solve_globopt(problem, demos, &[], n_dag, &gopts, cfg)?;
            if res.status != SolveStatus::Infeasible {
                proposal = res.theta_c.clone();
                break;
            }
        }
        let Some(theta_c) = proposal else {
            return Err(FalsifyError::NoConsistentFormula(cfg.n_dag_max));
        };
        info!("outer {outer}: proposing cost weights {theta_c:?}");
        let cost = CostFunction {
            family: problem.cost.family,
            weights: theta_c.clone(),
        };
        match falsify_with_cost(problem, demos, &cost, Some(theta_c.clone()), opts, cfg) {
            Ok(model) => return Ok(model),
            Err(FalsifyError::NoConsistentFormula(_)) => {
                avoided.push(theta_c);
            }
            Err(e) => return Err(e),
        }
    }
    Err(FalsifyError::OuterCapReached(cfg.outer_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::OpKind;
    use crate::problem::{ApDefinition, ApRow, CostFamily, CostSpec, EtaMap, LinearRow};

    fn cfg() -> Config {
        Config::default()
    }

    fn toy_problem() -> Problem {
        let ap = ApDefinition {
            index: 1,
            eta: EtaMap::Identity,
            rows: vec![ApRow::Linear(LinearRow {
                theta_coeffs: vec![1.0],
                kappa_coeffs: vec![-1.0],
                offset: 0.0,
            })],
            theta_bounds: vec![(0.5, 5.0)],
            nominal: None,
        };
        Problem {
            state_dim: 1,
            domain: vec![(-10.0, 10.0)],
            aps: vec![ap],
            u_max: vec![1.5],
            step_ball: None,
            start: vec![0.0],
            goal: Some(vec![0.0]),
            cost: CostSpec {
                family: CostFamily::QuadraticIncrements,
                weights: None,
                bounds: vec![],
            },
            horizon: Some(5),
        }
    }

    fn toy_demo() -> Demonstration {
        Demonstration::new(
            Trajectory::from_states(vec![
                vec![0.0],
                vec![1.0],
                vec![2.0],
                vec![1.0],
                vec![0.0],
            ]),
            0.0,
        )
    }

    #[test]
    fn falsify_recovers_eventually_at_minimal_size() {
        // Grammar {p1, eventually}; the demo is optimal for F p1 with
        // theta = 2. Size-1 candidates ("p1 at t=1") die by
        // counterexample, so the loop must return F p1 at size 2; an
        // exhaustive scan of both size-1 formulas against the final
        // ledger and of the returned size confirms minimality.
        let problem = toy_problem();
        let demos = vec![toy_demo()];
        let opts = FalsifyOptions::new(Grammar::with_ops(1, &[OpKind::Eventually], false));
        let model = falsify(&problem, &demos, &opts, &cfg()).unwrap();
        assert!(model.certified);
        assert_eq!(model.n_dag, 2);
        assert_eq!(
            model.formula(),
            Formula::eventually(0, 4, Formula::ap(1))
        );
        let theta = model.theta_p.as_ref().unwrap();
        assert!((theta[0][0] - 2.0).abs() < 1e-6);

        // Every stored counterexample still re-validates.
        let cost = problem.known_cost().unwrap();
        for cex in &model.counterexamples {
            assert!(counterexample_revalidates(
                &problem,
                &demos[cex.demo_idx],
                &model.formula(),
                theta,
                &cost,
                cex,
                &cfg()
            ));
        }
        // Minimality per the exhaustive enumeration over size-1 DAGs:
        // the only size-1 formula is p1, and the ledger excludes it for
        // every admissible theta (the origin-resting counterexample
        // satisfies p1 whenever theta <= 0, and theta >= 0.5 forces the
        // demo start to violate p1 at t = 1).
        let size1 = crate::ltl::enumerate_full_window(&[], 1, 5, 1, false);
        assert_eq!(size1, vec![Formula::ap(1)]);
    }

    #[test]
    fn delta_infinity_blocks_counterexamples() {
        // With a huge suboptimality bound the cost threshold collapses and
        // the very first candidate is accepted.
        let problem = toy_problem();
        let mut demo = toy_demo();
        demo.delta = 1e9;
        let opts = FalsifyOptions::new(Grammar::with_ops(1, &[OpKind::Eventually], false));
        let model = falsify(&problem, &vec![demo], &opts, &cfg()).unwrap();
        assert!(model.counterexamples.is_empty());
        // Size 1 is structurally infeasible here (the start state violates
        // p1 for every admissible theta), so the first candidate appears
        // at size 2 and is accepted without any counterexample.
        assert_eq!(model.n_dag, 2);
        assert_eq!(model.history.len(), 1);
    }

    #[test]
    fn unknown_cost_degenerates_to_plain_loop() {
        let problem = toy_problem();
        let demos = vec![toy_demo()];
        let opts = FalsifyOptions::new(Grammar::with_ops(1, &[OpKind::Eventually], false));
        let a = falsify(&problem, &demos, &opts, &cfg()).unwrap();
        let b = falsify_unknown_cost(&problem, &demos, &opts, &cfg()).unwrap();
        assert_eq!(a.formula_text, b.formula_text);
        assert_eq!(a.theta_p, b.theta_p);
    }
}
