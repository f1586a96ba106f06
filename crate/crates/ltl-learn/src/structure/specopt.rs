//! Spec-optimality constraints: discrete local optimality of the
//! demonstrations under single- or multi-index membership flips.
//!
//! For every index set `iota` of `mu` (AP, time) pairs, at least one of
//! three cases must hold: the demonstration stays locally optimal with the
//! flipped constraints removed (their multiplier contributions vanish),
//! the formula is unsatisfied under the flipped memberships, or the
//! flipped memberships are geometrically unrealizable. Each case gets an
//! enforcement bit and at least one bit must be set; with `mu = 1` the
//! infeasibility case is dropped — a single unrealizable flip implies a
//! strictly-sided contact whose multipliers are already pinned to zero, so
//! the optimality case covers it.

use crate::config::Config;
use crate::kkt::DemoBlock;
use crate::ltl::Formula;
use crate::milp::{Bin, LinExpr, Model};
use crate::problem::{Demonstration, Problem};

use super::sat::encode_formula_root;
use super::{encode_dag_satisfaction_masked, DagSat, DagVars, Grammar};

/// How the perturbed-root value is obtained.
pub enum SpecOptMode<'a> {
    /// Against the searched DAG; needs the demo's satisfaction matrix to
    /// share unchanged columns with.
    Dag {
        grammar: &'a Grammar,
        dag: &'a DagVars,
        base: &'a DagSat,
    },
    /// Against a fixed formula.
    Fixed(&'a Formula),
}

/// All index sets of size `mu` over (AP, time) pairs of one demonstration,
/// with 0-based entries. With nominal parameters declared and `salient`
/// set, pairs provably far from every admissible boundary are dropped
/// (their constraints are self-satisfied through the optimality case).
pub fn index_sets_for_demo(
    problem: &Problem,
    demo: &Demonstration,
    mu: usize,
    salient: bool,
    cfg: &Config,
) -> Vec<Vec<(usize, usize)>> {
    let t_max = demo.trajectory.duration();
    let mut pairs: Vec<(usize, usize)> = vec![];
    for (ai, ap) in problem.aps.iter().enumerate() {
        // Environment parameters: per-demo values when present, else the
        // declared nominal for salience screening.
        let theta = demo
            .theta_p
            .as_ref()
            .map(|tp| tp[ai].clone())
            .or_else(|| ap.nominal.as_ref().map(|n| n.theta.clone()));
        for t in 1..=t_max {
            if salient {
                if let Some(th) = &theta {
                    let kappa = ap.eta.apply(demo.trajectory.state(t));
                    let (g, _) = ap.margin(&kappa, th);
                    if g.abs() > cfg.salient_eps {
                        continue;
                    }
                }
            }
            pairs.push((ai, t - 1));
        }
    }
    // All mu-subsets of the retained pairs.
    let mut sets = vec![];
    let mut pick = vec![0usize; mu];
    fn rec(
        pairs: &[(usize, usize)],
        mu: usize,
        start: usize,
        pick: &mut Vec<usize>,
        depth: usize,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if depth == mu {
            out.push(pick.iter().map(|&k| pairs[k]).collect());
            return;
        }
        for k in start..pairs.len() {
            pick[depth] = k;
            rec(pairs, mu, k + 1, pick, depth + 1, out);
        }
    }
    rec(&pairs, mu, 0, &mut pick, 0, &mut sets);
    sets
}

/// Emit the spec-optimality constraints of one index set for one
/// demonstration block. `iota` holds 0-based (AP, time) pairs.
pub fn encode_spec_opt_set(
    model: &mut Model,
    cfg: &Config,
    block: &DemoBlock,
    iota: &[(usize, usize)],
    mode: &SpecOptMode<'_>,
    tag: &str,
) {
    let mu = iota.len();
    // Flipped leaf rows.
    let mut z_hat: Vec<Vec<Bin>> = block.z.clone();
    let mut t_star = 0usize;
    for &(ai, ti) in iota {
        z_hat[ai][ti] = z_hat[ai][ti].not();
        t_star = t_star.max(ti + 1);
    }

    let perturbed_root = match mode {
        SpecOptMode::Dag { grammar, dag, base } => {
            let sat = encode_dag_satisfaction_masked(
                model,
                grammar,
                dag,
                &z_hat,
                &format!("so_{tag}"),
                Some(base),
                t_star,
            );
            sat.s[0][0]
        }
        SpecOptMode::Fixed(f) => encode_formula_root(model, format!("so_{tag}"), f, &z_hat),
    };

    // Enforcement bits.
    let sel_unsat = Bin::Pos(model.binary(format!("so_{tag}_unsat")));
    let sel_opt = Bin::Pos(model.binary(format!("so_{tag}_opt")));
    let mut cover = sel_unsat.expr() + sel_opt.expr();

    // Unsatisfied case: perturbed root forced to 0.
    model.implies_le(
        sel_unsat,
        perturbed_root.expr(),
        LinExpr::constant(0.0),
        1.0,
    );

    // Optimality case: the flipped contacts contribute nothing to
    // stationarity (infinity norm of the multiplier contribution is zero).
    for &(ai, ti) in iota {
        for contrib in &block.ap_contrib[ai][ti] {
            model.implies_le(sel_opt, contrib.clone(), LinExpr::constant(0.0), cfg.m);
            model.implies_ge(sel_opt, contrib.clone(), LinExpr::constant(0.0), cfg.m);
        }
    }

    // Infeasibility case (dropped for mu = 1): some flip is geometrically
    // unrealizable for every admissible parameter choice.
    if mu >= 2 {
        let sel_inf = Bin::Pos(model.binary(format!("so_{tag}_inf")));
        cover = cover + sel_inf.expr();
        let mut claims = LinExpr::default();
        for (m_idx, &(ai, ti)) in iota.iter().enumerate() {
            let claim = Bin::Pos(model.binary(format!("so_{tag}_c{m_idx}")));
            claims.add_expr(&claim.expr(), 1.0);
            let z_hat_m = z_hat[ai][ti];
            let g = &block.g[ai][ti];
            // Flip-to-inside unrealizable: some row is nonnegative.
            let mut picked = LinExpr::default();
            for (row_idx, gm) in g.iter().enumerate() {
                let e = Bin::Pos(model.binary(format!("so_{tag}_e{m_idx}_{row_idx}")));
                picked.add_expr(&e.expr(), 1.0);
                model.implies_ge(e, gm.clone(), LinExpr::constant(0.0), cfg.m);
            }
            // claim && z_hat = 1  =>  at least one row >= 0.
            model.add_ge(
                picked,
                z_hat_m.expr() + claim.expr() - LinExpr::constant(1.0),
            );
            // claim && z_hat = 0  =>  all rows <= 0.
            for gm in g {
                model.add_le(
                    gm.clone(),
                    (z_hat_m.expr() + claim.not().expr()) * cfg.m,
                );
            }
        }
        model.implies_ge(sel_inf, claims, LinExpr::constant(1.0), mu as f64);
    }

    model.add_ge(cover, LinExpr::constant(1.0));
}

/// Spec-optimality against a fixed formula (used when the structure is
/// known and in the distinguishability studies).
pub fn encode_spec_opt_fixed(
    model: &mut Model,
    cfg: &Config,
    problem: &Problem,
    demo: &Demonstration,
    block: &DemoBlock,
    formula: &Formula,
    mu: usize,
    salient: bool,
) {
    for (k, iota) in index_sets_for_demo(problem, demo, mu, salient, cfg)
        .iter()
        .enumerate()
    {
        encode_spec_opt_set(
            model,
            cfg,
            block,
            iota,
            &SpecOptMode::Fixed(formula),
            &format!("d{}_i{k}", block.demo_idx),
        );
    }
}
