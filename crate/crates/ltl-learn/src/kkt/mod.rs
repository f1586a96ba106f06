//! KKT condition blocks and fixed-structure parameter learning.
//!
//! For each demonstration the encoding carries the boolean membership
//! matrix `Z`, per-row side selectors `s`, Lagrange multipliers for AP and
//! known constraints, the complementary-slackness coupling, and the
//! per-timestep stationarity rows in which AP multipliers enter with the
//! sign `2s - 1`. When AP parameters are numeric (known environments) the
//! indicator logic collapses: all non-boundary memberships are folded to
//! constants and only boundary contacts keep binaries.

use log::warn;

use crate::config::Config;
use crate::ltl::Formula;
use crate::milp::{Bin, LinExpr, Model, Solution, SolveError, SolveStatus, Var};
use crate::problem::{CostFamily, CostFunction, Demonstration, Problem};
use crate::structure::sat::encode_formula_root;

#[derive(Debug, thiserror::Error)]
pub enum KktError {
    #[error("solver: {0}")]
    Solve(#[from] SolveError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Problem(#[from] crate::problem::ProblemError),
}

/// AP parameters as expressions: shared decision variables when learning,
/// per-demonstration constants when each demonstration carries its own
/// environment.
#[derive(Clone, Debug)]
pub enum ThetaP {
    Shared(Vec<Vec<Var>>),
    PerDemo(Vec<Vec<Vec<f64>>>),
}

impl ThetaP {
    /// Expressions for AP `ap_idx` (0-based) in demonstration `demo_idx`.
    pub fn exprs(&self, demo_idx: usize, ap_idx: usize) -> Vec<LinExpr> {
        match self {
            ThetaP::Shared(vars) => vars[ap_idx].iter().map(|&v| LinExpr::from(v)).collect(),
            ThetaP::PerDemo(per) => per[demo_idx][ap_idx]
                .iter()
                .map(|&c| LinExpr::constant(c))
                .collect(),
        }
    }

    pub fn shared_vars(&self) -> Option<&Vec<Vec<Var>>> {
        match self {
            ThetaP::Shared(v) => Some(v),
            ThetaP::PerDemo(_) => None,
        }
    }

    /// Build: shared variables bounded by the parameter boxes (plus the
    /// hard nominal ball when a radius is declared), unless every
    /// demonstration fixes its own parameters.
    pub fn build(
        model: &mut Model,
        problem: &Problem,
        demos: &[Demonstration],
    ) -> Result<ThetaP, KktError> {
        let fixed = demos.iter().filter(|d| d.theta_p.is_some()).count();
        if fixed == demos.len() && !demos.is_empty() {
            return Ok(ThetaP::PerDemo(
                demos.iter().map(|d| d.theta_p.clone().unwrap()).collect(),
            ));
        }
        if fixed != 0 {
            return Err(KktError::Unsupported(
                "either all demonstrations carry theta_p or none".into(),
            ));
        }
        let mut vars = vec![];
        for ap in &problem.aps {
            let mut coords = vec![];
            for (j, &(lb, ub)) in ap.theta_bounds.iter().enumerate() {
                coords.push(model.cont(format!("thp_{}_{}", ap.index, j), lb, ub));
            }
            if let Some(nom) = &ap.nominal {
                if let Some(r) = nom.radius {
                    // sum_j |theta_j - nom_j| <= r
                    let mut total = LinExpr::default();
                    for (j, &v) in coords.iter().enumerate() {
                        let d = model.cont(format!("thpnom_{}_{}", ap.index, j), 0.0, r);
                        let diff = LinExpr::from(v) - LinExpr::constant(nom.theta[j]);
                        model.add_ge(LinExpr::from(d), diff.clone());
                        model.add_ge(LinExpr::from(d), diff * -1.0);
                        total.add_term(d, 1.0);
                    }
                    model.add_le(total, LinExpr::constant(r));
                }
            }
            vars.push(coords);
        }
        Ok(ThetaP::Shared(vars))
    }
}

/// Cost weights: known or as bounded decision variables.
#[derive(Clone, Debug)]
pub enum ThetaC {
    Known(CostFunction),
    Vars { family: CostFamily, vars: Vec<Var> },
}

impl ThetaC {
    pub fn build(
        model: &mut Model,
        problem: &Problem,
        learn_cost: bool,
    ) -> Result<ThetaC, KktError> {
        if !learn_cost {
            return Ok(ThetaC::Known(problem.known_cost()?));
        }
        let family = problem.cost.family;
        let n = family.n_weights(problem.state_dim);
        if n == 0 {
            return Ok(ThetaC::Known(CostFunction::quadratic()));
        }
        if problem.cost.bounds.len() != n {
            return Err(KktError::Unsupported(
                "cost weight bounds must be declared to learn the cost".into(),
            ));
        }
        let vars = problem
            .cost
            .bounds
            .iter()
            .enumerate()
            .map(|(j, &(lb, ub))| model.cont(format!("thc_{j}"), lb, ub))
            .collect();
        Ok(ThetaC::Vars { family, vars })
    }

    /// Cost gradient at `x_t` as expressions over the weight variables.
    pub fn grad_exprs(&self, traj: &crate::problem::Trajectory, t: usize) -> Vec<LinExpr> {
        match self {
            ThetaC::Known(c) => c
                .grad_state(traj, t)
                .into_iter()
                .map(LinExpr::constant)
                .collect(),
            ThetaC::Vars { family, vars } => {
                let probe = CostFunction {
                    family: *family,
                    weights: vec![f64::NAN; vars.len()],
                };
                let (constant, jac) = probe.grad_state_affine(traj, t);
                constant
                    .iter()
                    .zip(&jac)
                    .map(|(&c, row)| {
                        let mut e = LinExpr::constant(c);
                        for (j, &coef) in row.iter().enumerate() {
                            e.add_term(vars[j], coef);
                        }
                        e
                    })
                    .collect()
            }
        }
    }

    pub fn family(&self) -> CostFamily {
        match self {
            ThetaC::Known(c) => c.family,
            ThetaC::Vars { family, .. } => *family,
        }
    }
}

/// Exact or penalty treatment of stationarity and complementary slackness.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum KktMode {
    Exact,
    Suboptimal,
}

/// Per-demonstration encoded block.
#[derive(Clone, Debug)]
pub struct DemoBlock {
    pub demo_idx: usize,
    pub t_max: usize,
    /// `z[ap][t-1]`.
    pub z: Vec<Vec<Bin>>,
    /// `s[ap][t-1][row]`.
    pub s: Vec<Vec<Vec<Bin>>>,
    /// AP row values as expressions in theta, `g[ap][t-1][row]`.
    pub g: Vec<Vec<Vec<LinExpr>>>,
    /// Unsigned multiplier contribution of AP `i` at time `t` to the
    /// stationarity row of state coordinate `d` (for spec-optimality).
    pub ap_contrib: Vec<Vec<Vec<LinExpr>>>,
    /// Stationarity residual expressions per `(t-1, d)`.
    pub stationarity: Vec<Vec<LinExpr>>,
}

/// Eq.-style indicator rows tying `z` to the signs of the rows `g`:
/// `g_m <= M(1 - s_m)`, `sum(s) - N <= M z - M_eps`, `g_m >= -M s_m`,
/// `sum(s) - N >= -M(1 - z)`. At any feasible point `z = 1` iff all rows
/// are on their inside face, with boundary rows free either way.
pub fn encode_indicator(model: &mut Model, cfg: &Config, g: &[LinExpr], z: Bin, s: &[Bin]) {
    let m = cfg.m;
    let n = g.len() as f64;
    let mut s_sum = LinExpr::default();
    for (gm, &sm) in g.iter().zip(s) {
        model.add_le(gm.clone(), sm.not().expr() * m);
        model.add_ge(gm.clone(), sm.expr() * -m);
        s_sum.add_expr(&sm.expr(), 1.0);
    }
    model.add_le(
        s_sum.clone() - LinExpr::constant(n),
        z.expr() * m - LinExpr::constant(cfg.m_eps),
    );
    model.add_ge(
        s_sum - LinExpr::constant(n),
        z.not().expr() * -m,
    );
}

/// Create indicator binaries for one `(ap, t)` with constant folding: rows
/// with numerically decided sign fix `s`, and `z` follows when every row is
/// decided.
pub fn make_indicator(
    model: &mut Model,
    cfg: &Config,
    name: &str,
    g: &[LinExpr],
) -> (Bin, Vec<Bin>) {
    let s: Vec<Bin> = g
        .iter()
        .enumerate()
        .map(|(m_idx, gm)| {
            if gm.is_constant() && gm.constant.abs() > cfg.boundary_eps {
                Bin::Const(gm.constant < 0.0)
            } else {
                Bin::Pos(model.binary(format!("{name}_s{m_idx}")))
            }
        })
        .collect();
    let z = if let Some(all) = s
        .iter()
        .map(|b| b.as_const())
        .collect::<Option<Vec<bool>>>()
    {
        Bin::Const(all.iter().all(|&b| b))
    } else if s.iter().any(|b| b.as_const() == Some(false)) {
        Bin::Const(false)
    } else {
        Bin::Pos(model.binary(format!("{name}_z")))
    };
    encode_indicator(model, cfg, g, z, &s);
    (z, s)
}

/// Complementary slackness for one `(ap, t)` per the two-column selector:
/// `[lambda, -w] <= M Q`, `Q 1 <= 1`, with `w_m = g_m (2 s_m - 1)` built by
/// the signed-product linearization. Returns the signed `w` expressions.
pub fn encode_comp_slack(
    model: &mut Model,
    cfg: &Config,
    name: &str,
    lambdas: &[Var],
    g: &[LinExpr],
    s: &[Bin],
) -> Vec<LinExpr> {
    let mut ws = vec![];
    for (m_idx, (gm, &sm)) in g.iter().zip(s).enumerate() {
        let bound = model.abs_bound(gm).max(1e-9);
        let w = model.signed_expr(format!("{name}_w{m_idx}"), gm, sm, bound);
        let lam = lambdas[m_idx];
        if w.is_constant() {
            // Strictly slack signed row forces a zero multiplier; rows at
            // or violating the boundary leave it free (primal rows already
            // exclude genuine violations).
            if -w.constant > cfg.boundary_eps {
                model.add_eq(LinExpr::from(lam), LinExpr::constant(0.0));
            }
        } else {
            let q1 = model.binary(format!("{name}_q{m_idx}a"));
            let q2 = model.binary(format!("{name}_q{m_idx}b"));
            model.add_le(LinExpr::from(lam), LinExpr::term(q1, cfg.m));
            model.add_le(w.clone() * -1.0, LinExpr::term(q2, cfg.m));
            model.add_le(
                LinExpr::from(q1) + LinExpr::from(q2),
                LinExpr::constant(1.0),
            );
        }
        ws.push(w);
    }
    ws
}

/// Assemble the KKT block of one demonstration into `model`.
///
/// In `Exact` mode stationarity rows are hard equalities and complementary
/// slackness is enforced through the selector encoding. In `Suboptimal`
/// mode stationarity residuals are l1-penalized and complementarity is
/// charged `min(lambda_m, |signed g_m|)` per row; the returned expressions
/// are the penalty terms to minimize.
#[allow(clippy::too_many_arguments)]
pub fn encode_demo_kkt(
    model: &mut Model,
    cfg: &Config,
    problem: &Problem,
    demo: &Demonstration,
    demo_idx: usize,
    theta: &ThetaP,
    theta_c: &ThetaC,
    mode: KktMode,
) -> Result<(DemoBlock, Vec<LinExpr>), KktError> {
    let traj = &demo.trajectory;
    let t_max = traj.duration();
    let n = problem.state_dim;
    let mut penalties: Vec<LinExpr> = vec![];

    // Stationarity accumulators per (t, d).
    let mut stat: Vec<Vec<LinExpr>> = (1..=t_max)
        .map(|t| theta_c.grad_exprs(traj, t))
        .collect();

    // Known constraints: multipliers for active inequalities and all
    // equalities enter the accumulators directly (their values at the
    // demonstration are plain numbers).
    let start = traj.state(1).to_vec();
    let goal = demo.goal.clone().or_else(|| problem.goal.clone());
    let known = problem.known_constraints(t_max, &start, goal.as_deref());
    for (k, row) in known.inequalities.iter().enumerate() {
        let value = row.eval(traj);
        if value > crate::problem::FEASIBILITY_TOL {
            return Err(KktError::Unsupported(format!(
                "demonstration {demo_idx} violates known inequality {k}"
            )));
        }
        let active = value.abs() <= cfg.boundary_eps;
        let lam = match (mode, active) {
            (KktMode::Exact, false) => None, // complementary slackness pins it to zero
            _ => Some(model.cont(format!("d{demo_idx}_lamk{k}"), 0.0, cfg.m_lambda)),
        };
        if let Some(lam) = lam {
            if mode == KktMode::Suboptimal && !active {
                // min(lambda, |g|) complementarity charge.
                let pick = model.binary(format!("d{demo_idx}_lamk{k}_pick"));
                let c = model.cont(format!("d{demo_idx}_lamk{k}_comp"), 0.0, cfg.m_lambda);
                let gabs = value.abs();
                model.add_ge(
                    LinExpr::from(c),
                    LinExpr::from(lam) - LinExpr::term(pick, cfg.m),
                );
                model.add_ge(
                    LinExpr::from(c),
                    LinExpr::constant(gabs) - Bin::Pos(pick).not().expr() * cfg.m,
                );
                penalties.push(LinExpr::from(c));
            }
            for &(t, d, coef) in &row.grad(traj) {
                stat[t - 1][d].add_term(lam, coef);
            }
        }
    }
    for (k, row) in known.equalities.iter().enumerate() {
        let nu = model.cont(format!("d{demo_idx}_nu{k}"), -cfg.m_lambda, cfg.m_lambda);
        for &(t, d, coef) in &row.terms {
            stat[t - 1][d].add_term(nu, coef);
        }
    }

    // AP blocks.
    let mut z_all = vec![];
    let mut s_all = vec![];
    let mut g_all = vec![];
    let mut contrib_all = vec![];
    for (ai, ap) in problem.aps.iter().enumerate() {
        let theta_exprs = theta.exprs(demo_idx, ai);
        let jac = ap.eta.jacobian(n);
        let mut z_row = vec![];
        let mut s_row = vec![];
        let mut g_row = vec![];
        let mut contrib_row = vec![];
        for t in 1..=t_max {
            let kappa = ap.eta.apply(traj.state(t));
            // Row expressions g_m = a_m . theta + b_m(kappa).
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
            let name = format!("d{demo_idx}_a{}_t{t}", ap.index);
            let (mut z, s) = make_indicator(model, cfg, &name, &g);
            // Known labels pin Z rows.
            if let Some(labels) = &demo.labels {
                if let Some(want) = labels[ai][t - 1] {
                    match z.as_const() {
                        Some(have) if have != want => {
                            model.add_eq(LinExpr::constant(0.0), LinExpr::constant(1.0));
                        }
                        Some(_) => {}
                        None => {
                            model.fix_bin(z, want);
                            z = Bin::Const(want);
                        }
                    }
                }
            }

            // Multipliers and their stationarity contributions.
            let mut lambdas = vec![];
            for (m_idx, row) in ap.rows.iter().enumerate() {
                if !row.gradient_theta_free() {
                    return Err(KktError::Unsupported(format!(
                        "AP {} row {m_idx} has a theta-dependent gradient",
                        ap.index
                    )));
                }
                lambdas.push(model.cont(
                    format!("{name}_lam{m_idx}"),
                    0.0,
                    cfg.m_lambda,
                ));
            }
            match mode {
                KktMode::Exact => {
                    encode_comp_slack(model, cfg, &name, &lambdas, &g, &s);
                }
                KktMode::Suboptimal => {
                    for (m_idx, gm) in g.iter().enumerate() {
                        let bound = model.abs_bound(gm).max(1e-9);
                        let w = model.signed_expr(format!("{name}_sw{m_idx}"), gm, s[m_idx], bound);
                        // min(lambda, |w|): |w| = -w on the feasible side.
                        let pick = model.binary(format!("{name}_pick{m_idx}"));
                        let c = model.cont(format!("{name}_comp{m_idx}"), 0.0, cfg.m_lambda);
                        model.add_ge(
                            LinExpr::from(c),
                            LinExpr::from(lambdas[m_idx]) - LinExpr::term(pick, cfg.m),
                        );
                        model.add_ge(
                            LinExpr::from(c),
                            w * -1.0 - Bin::Pos(pick).not().expr() * cfg.m,
                        );
                        penalties.push(LinExpr::from(c));
                    }
                }
            }

            // Signed multiplier terms in stationarity; also record the
            // unsigned contribution rows for spec-optimality.
            let mut contrib = vec![LinExpr::default(); n];
            let theta_probe: Vec<f64> = ap.theta_bounds.iter().map(|b| 0.5 * (b.0 + b.1)).collect();
            for (m_idx, row) in ap.rows.iter().enumerate() {
                let grad_kappa = row.grad_kappa(&kappa, &theta_probe);
                // dg/dx_d = grad_kappa . J_eta[:, d]
                let mut dx = vec![0.0; n];
                for (kd, gk) in grad_kappa.iter().enumerate() {
                    for d in 0..n {
                        dx[d] += gk * jac[kd][d];
                    }
                }
                let w = model.signed_multiplier(
                    format!("{name}_wl{m_idx}"),
                    lambdas[m_idx],
                    s[m_idx],
                    cfg.m_lambda,
                );
                for d in 0..n {
                    if dx[d] != 0.0 {
                        stat[t - 1][d].add_expr(&w, dx[d]);
                        contrib[d].add_term(lambdas[m_idx], dx[d]);
                    }
                }
            }
            z_row.push(z);
            s_row.push(s);
            g_row.push(g);
            contrib_row.push(contrib);
        }
        z_all.push(z_row);
        s_all.push(s_row);
        g_all.push(g_row);
        contrib_all.push(contrib_row);
    }

    // Stationarity rows: exact equalities, or l1-penalized residuals.
    let stationarity_copy: Vec<Vec<LinExpr>> = stat.clone();
    let cost_fam = theta_c.family();
    for t in 1..=t_max {
        for d in 0..n {
            if cost_fam == CostFamily::WeightedL1Increments {
                let probe = CostFunction {
                    family: cost_fam,
                    weights: vec![1.0; n],
                };
                if probe.l1_nondifferentiable(traj, t, d) {
                    warn!(
                        "demo {demo_idx}: skipping stationarity row (t={t}, d={d}) at a zero increment"
                    );
                    continue;
                }
            }
            let expr = std::mem::take(&mut stat[t - 1][d]);
            match mode {
                KktMode::Exact => {
                    model.add_eq(expr, LinExpr::constant(0.0));
                }
                KktMode::Suboptimal => {
                    let p = model.cont(format!("d{demo_idx}_sp_{t}_{d}"), 0.0, cfg.m_lambda);
                    let q = model.cont(format!("d{demo_idx}_sn_{t}_{d}"), 0.0, cfg.m_lambda);
                    model.add_eq(expr, LinExpr::from(p) - LinExpr::from(q));
                    penalties.push(LinExpr::from(p) + LinExpr::from(q));
                }
            }
        }
    }

    // The "z" rows transposed to [ap][t] were accumulated above; rebuild
    // stationarity placeholder (taken) is fine since `stat` was consumed.
    Ok((
        DemoBlock {
            demo_idx,
            t_max,
            z: z_all,
            s: s_all,
            g: g_all,
            ap_contrib: contrib_all,
            stationarity: stationarity_copy,
        },
        penalties,
    ))
}

/// Leaf rows of a block in the shape the satisfaction encoders expect.
pub fn leaf_rows(block: &DemoBlock) -> Vec<Vec<Bin>> {
    block.z.clone()
}

/// Joint model pieces shared by the fixed-template, query and structure
/// search paths.
pub struct KktAssembly {
    pub model: Model,
    pub theta: ThetaP,
    pub theta_c: ThetaC,
    pub blocks: Vec<DemoBlock>,
    pub penalties: Vec<LinExpr>,
}

pub fn assemble(
    problem: &Problem,
    demos: &[Demonstration],
    cfg: &Config,
    mode: KktMode,
    learn_cost: bool,
    name: &str,
) -> Result<KktAssembly, KktError> {
    for d in demos {
        problem.validate_demo(d)?;
    }
    let mut model = Model::new(name);
    let theta = ThetaP::build(&mut model, problem, demos)?;
    let theta_c = ThetaC::build(&mut model, problem, learn_cost)?;
    let mut blocks = vec![];
    let mut penalties = vec![];
    for (j, demo) in demos.iter().enumerate() {
        let (block, pen) =
            encode_demo_kkt(&mut model, cfg, problem, demo, j, &theta, &theta_c, mode)?;
        blocks.push(block);
        penalties.extend(pen);
    }
    Ok(KktAssembly {
        model,
        theta,
        theta_c,
        blocks,
        penalties,
    })
}

/// Options for the fixed-structure solvers.
#[derive(Clone, Copy, Debug, Default)]
pub struct TemplateOptions {
    /// Minimize the l1 distance to the declared nominals.
    pub nominal_objective: bool,
}

/// Result of a fixed-structure solve.
#[derive(Clone, Debug)]
pub struct TemplateResult {
    pub status: SolveStatus,
    /// Learned parameters per AP (shared mode only).
    pub theta_p: Option<Vec<Vec<f64>>>,
    /// Learned cost weights when requested.
    pub theta_c: Option<Vec<f64>>,
    /// Boolean membership per demonstration, rounded from the solution.
    pub z: Vec<Vec<Vec<bool>>>,
    /// Total penalty (0 in exact mode).
    pub residual: f64,
}

fn extract_result(
    asm: &KktAssembly,
    sol: &Solution,
    residual: f64,
) -> TemplateResult {
    let theta_p = asm.theta.shared_vars().map(|vars| {
        vars.iter()
            .map(|coords| coords.iter().map(|&v| sol.value(v)).collect())
            .collect()
    });
    let theta_c = match &asm.theta_c {
        ThetaC::Vars { vars, .. } => Some(vars.iter().map(|&v| sol.value(v)).collect()),
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
    TemplateResult {
        status: sol.status,
        theta_p,
        theta_c,
        z,
        residual,
    }
}

/// Add the satisfaction requirement `demo |= formula` for every block.
pub fn require_formula(model: &mut Model, formula: &Formula, blocks: &[DemoBlock]) {
    for block in blocks {
        let root = encode_formula_root(
            model,
            format!("sat_d{}", block.demo_idx),
            formula,
            &block.z,
        );
        model.fix_bin(root, true);
    }
}

/// Find AP parameters making every demonstration KKT-consistent and
/// formula-satisfying, with the structure fixed.
pub fn solve_fixed_template(
    problem: &Problem,
    demos: &[Demonstration],
    formula: &Formula,
    opts: TemplateOptions,
    cfg: &Config,
) -> Result<TemplateResult, KktError> {
    let mut asm = assemble(problem, demos, cfg, KktMode::Exact, false, "fixed_template")?;
    require_formula(&mut asm.model, formula, &asm.blocks);
    set_template_objective(&mut asm, opts, problem);
    let sol = asm.model.solve(cfg)?;
    if sol.status == SolveStatus::Infeasible || !sol.has_values() {
        return Ok(TemplateResult {
            status: sol.status,
            theta_p: None,
            theta_c: None,
            z: vec![],
            residual: f64::NAN,
        });
    }
    Ok(extract_result(&asm, &sol, 0.0))
}

/// Relaxed variant minimizing stationarity and complementarity penalties.
pub fn solve_suboptimal(
    problem: &Problem,
    demos: &[Demonstration],
    formula: &Formula,
    opts: TemplateOptions,
    cfg: &Config,
) -> Result<TemplateResult, KktError> {
    let mut asm = assemble(
        problem,
        demos,
        cfg,
        KktMode::Suboptimal,
        false,
        "suboptimal_template",
    )?;
    require_formula(&mut asm.model, formula, &asm.blocks);
    let mut obj = LinExpr::sum(asm.penalties.iter().cloned());
    if opts.nominal_objective {
        if let Some(e) = nominal_distance_expr(&mut asm.model, problem, &asm.theta) {
            obj.add_expr(&e, 1.0);
        }
    }
    asm.model.minimize(obj);
    let sol = asm.model.solve(cfg)?;
    if sol.status == SolveStatus::Infeasible || !sol.has_values() {
        return Ok(TemplateResult {
            status: sol.status,
            theta_p: None,
            theta_c: None,
            z: vec![],
            residual: f64::NAN,
        });
    }
    let residual = asm
        .penalties
        .iter()
        .map(|p| sol.expr_value(p))
        .sum::<f64>();
    Ok(extract_result(&asm, &sol, residual))
}

/// `sum_i ||theta_i - theta_nom_i||_1` over APs that declare nominals, as
/// an expression over fresh slack variables; `None` without shared
/// parameters or without nominals.
fn nominal_distance_expr(
    model: &mut Model,
    problem: &Problem,
    theta: &ThetaP,
) -> Option<LinExpr> {
    let vars = theta.shared_vars()?.clone();
    let mut total = LinExpr::default();
    let mut any = false;
    for (ap, coords) in problem.aps.iter().zip(&vars) {
        if let Some(nom) = &ap.nominal {
            any = true;
            for (j, &v) in coords.iter().enumerate() {
                let (lb, ub) = model.var_bounds(v);
                let span = (ub - lb).abs().max(1.0);
                let d = model.cont(format!("nomdist_{}_{j}", ap.index), 0.0, span + nom.theta[j].abs());
                let diff = LinExpr::from(v) - LinExpr::constant(nom.theta[j]);
                model.add_ge(LinExpr::from(d), diff.clone());
                model.add_ge(LinExpr::from(d), diff * -1.0);
                total.add_term(d, 1.0);
            }
        }
    }
    any.then_some(total)
}

fn set_template_objective(asm: &mut KktAssembly, opts: TemplateOptions, problem: &Problem) {
    if opts.nominal_objective {
        if let Some(e) = nominal_distance_expr(&mut asm.model, problem, &asm.theta) {
            asm.model.minimize(e);
            return;
        }
    }
    asm.model.minimize(LinExpr::default());
}

/// Projection of the feasible parameter set onto one coordinate of one AP:
/// `(min, max)` of `theta[ap][coord]` subject to the fixed-template system.
pub fn theta_projection_interval(
    problem: &Problem,
    demos: &[Demonstration],
    formula: &Formula,
    ap_idx: usize,
    coord: usize,
    cfg: &Config,
) -> Result<Option<(f64, f64)>, KktError> {
    let mut asm = assemble(problem, demos, cfg, KktMode::Exact, false, "projection")?;
    require_formula(&mut asm.model, formula, &asm.blocks);
    let vars = asm
        .theta
        .shared_vars()
        .ok_or_else(|| KktError::Unsupported("projection needs shared parameters".into()))?;
    let v = vars[ap_idx][coord];
    let mut lo_model = asm.model.clone();
    lo_model.minimize(LinExpr::from(v));
    let lo = lo_model.solve(cfg)?;
    if lo.status == SolveStatus::Infeasible {
        return Ok(None);
    }
    let mut hi_model = asm.model.clone();
    hi_model.maximize(LinExpr::from(v));
    let hi = hi_model.solve(cfg)?;
    if lo.status != SolveStatus::Optimal || hi.status != SolveStatus::Optimal {
        return Err(KktError::Unsupported(
            "projection bounds were not proven optimal".into(),
        ));
    }
    Ok(Some((lo.objective, hi.objective)))
}

/// Plain-arithmetic recheck of the indicator logic: every non-boundary
/// `(ap, t)` must classify consistently with the returned parameters.
pub fn recheck_indicators(
    problem: &Problem,
    demos: &[Demonstration],
    theta_p: &[Vec<f64>],
    z: &[Vec<Vec<bool>>],
    cfg: &Config,
) -> bool {
    for (j, demo) in demos.iter().enumerate() {
        for (ai, ap) in problem.aps.iter().enumerate() {
            for t in 1..=demo.trajectory.duration() {
                let kappa = ap.eta.apply(demo.trajectory.state(t));
                let (g, _) = ap.margin(&kappa, &theta_p[ai]);
                let claimed = z[j][ai][t - 1];
                if g > cfg.boundary_eps && claimed {
                    return false;
                }
                if g < -cfg.boundary_eps && !claimed {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests;
