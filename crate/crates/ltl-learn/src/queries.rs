//! Guaranteed-membership queries over the feasible parameter set and
//! grid-based region extraction.
//!
//! A constraint state is guaranteed inside an AP when forcing it outside
//! makes the fixed-structure system infeasible, and vice versa; solver
//! infeasibility proofs are the certificates. Volume extraction finds the
//! radius of the largest sup-norm box around a query point whose interior
//! carries the same guarantee.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::kkt::{self, KktMode};
use crate::ltl::Formula;
use crate::milp::{Bin, LinExpr, Model, SolveStatus};
use crate::par;
use crate::problem::{Demonstration, Problem};
use crate::structure::encode_spec_opt_fixed;

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("kkt: {0}")]
    Kkt(#[from] kkt::KktError),
    #[error("solver: {0}")]
    Solve(#[from] crate::milp::SolveError),
    #[error("the base system is already infeasible; inputs are inconsistent")]
    BaseInfeasible,
    #[error("queries need shared (learnable) AP parameters")]
    NoSharedParameters,
    #[error("queries need affine AP rows")]
    NonAffineRows,
}

/// Membership classification of one constraint state for one AP.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Verdict {
    GuaranteedIn,
    GuaranteedOut,
    Unknown,
}

/// Verdict plus the solver statuses of the two witnessing feasibility
/// probes (the "can be outside" and "can be inside" systems).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub verdict: Verdict,
    pub outside_probe: SolveStatus,
    pub inside_probe: SolveStatus,
}

/// Options shared by the query operations.
#[derive(Clone, Copy, Debug, Default)]
pub struct QueryOptions {
    /// Also impose spec-optimality with this `mu` on the feasible set.
    pub spec_opt_mu: Option<usize>,
    pub salient: bool,
}

/// The fixed-structure feasible system, reusable across many probes.
pub struct QueryBase {
    model: Model,
    theta: Vec<Vec<crate::milp::Var>>,
}

impl QueryBase {
    pub fn build(
        problem: &Problem,
        demos: &[Demonstration],
        formula: &Formula,
        opts: QueryOptions,
        cfg: &Config,
    ) -> Result<Self, QueryError> {
        let mut asm = kkt::assemble(problem, demos, cfg, KktMode::Exact, false, "query")?;
        kkt::require_formula(&mut asm.model, formula, &asm.blocks);
        if let Some(mu) = opts.spec_opt_mu {
            for (demo, block) in demos.iter().zip(&asm.blocks) {
                encode_spec_opt_fixed(
                    &mut asm.model,
                    cfg,
                    problem,
                    demo,
                    block,
                    formula,
                    mu,
                    opts.salient,
                );
            }
        }
        asm.model.minimize(LinExpr::default());
        let theta = asm
            .theta
            .shared_vars()
            .ok_or(QueryError::NoSharedParameters)?
            .clone();
        Ok(QueryBase {
            model: asm.model,
            theta,
        })
    }

    /// Row expressions of `g_i(kappa, theta)` with `kappa` numeric.
    fn rows_at(
        &self,
        problem: &Problem,
        ap_idx: usize,
        kappa: &[f64],
    ) -> Result<Vec<LinExpr>, QueryError> {
        let ap = &problem.aps[ap_idx];
        let mut out = vec![];
        for r in &ap.rows {
            let (a, b) = r.affine_in_theta(kappa);
            let mut e = LinExpr::constant(b);
            for (coef, &v) in a.iter().zip(&self.theta[ap_idx]) {
                e.add_term(v, *coef);
            }
            out.push(e.normalized());
        }
        Ok(out)
    }

    /// Feasibility of "the query point satisfies the AP" (`G <= 0`, all
    /// rows inside).
    fn can_be_inside(
        &self,
        problem: &Problem,
        ap_idx: usize,
        kappa: &[f64],
        cfg: &Config,
    ) -> Result<SolveStatus, QueryError> {
        let mut m = self.model.clone();
        for g in self.rows_at(problem, ap_idx, kappa)? {
            m.add_le(g, LinExpr::constant(0.0));
        }
        Ok(m.solve(cfg)?.status)
    }

    /// Feasibility of "the query point violates the AP" (`G >= 0`, some
    /// row nonnegative).
    fn can_be_outside(
        &self,
        problem: &Problem,
        ap_idx: usize,
        kappa: &[f64],
        cfg: &Config,
    ) -> Result<SolveStatus, QueryError> {
        let mut m = self.model.clone();
        let rows = self.rows_at(problem, ap_idx, kappa)?;
        let mut any = LinExpr::default();
        for (k, g) in rows.into_iter().enumerate() {
            let y = Bin::Pos(m.binary(format!("qy{k}")));
            m.implies_ge(y, g, LinExpr::constant(0.0), cfg.m);
            any.add_expr(&y.expr(), 1.0);
        }
        m.add_ge(any, LinExpr::constant(1.0));
        Ok(m.solve(cfg)?.status)
    }

    /// Membership query for `kappa` against AP `ap_idx` (0-based).
    pub fn query_point(
        &self,
        problem: &Problem,
        ap_idx: usize,
        kappa: &[f64],
        cfg: &Config,
    ) -> Result<MembershipVerdict, QueryError> {
        let outside = self.can_be_outside(problem, ap_idx, kappa, cfg)?;
        let inside = self.can_be_inside(problem, ap_idx, kappa, cfg)?;
        if outside == SolveStatus::Infeasible && inside == SolveStatus::Infeasible {
            // Both probes infeasible means the base itself is infeasible.
            return Err(QueryError::BaseInfeasible);
        }
        let verdict = if outside == SolveStatus::Infeasible {
            Verdict::GuaranteedIn
        } else if inside == SolveStatus::Infeasible {
            Verdict::GuaranteedOut
        } else {
            Verdict::Unknown
        };
        Ok(MembershipVerdict {
            verdict,
            outside_probe: outside,
            inside_probe: inside,
        })
    }

    /// Largest sup-norm radius around `kappa_query` guaranteed on `side`;
    /// 0 when the point itself carries no guarantee. Implemented as the
    /// minimum distance to a point that can violate the side.
    pub fn extract_volume(
        &self,
        problem: &Problem,
        ap_idx: usize,
        kappa_query: &[f64],
        side: Verdict,
        cfg: &Config,
    ) -> Result<f64, QueryError> {
        assert!(side != Verdict::Unknown, "extraction needs a side");
        let ap = &problem.aps[ap_idx];
        let kdim = kappa_query.len();
        // Conservative box for the near point from the state domain.
        let ranges = eta_range(problem, ap_idx);
        let radius_cap = ranges
            .iter()
            .zip(kappa_query)
            .map(|(&(lo, hi), &q)| (q - lo).abs().max((hi - q).abs()))
            .fold(0.0f64, f64::max);

        let mut m = self.model.clone();
        let near: Vec<crate::milp::Var> = (0..kdim)
            .map(|d| m.cont(format!("near{d}"), ranges[d].0, ranges[d].1))
            .collect();
        let eps = m.cont("eps", 0.0, radius_cap.max(1e-9));
        for d in 0..kdim {
            let diff = LinExpr::from(near[d]) - LinExpr::constant(kappa_query[d]);
            m.add_le(diff.clone(), LinExpr::from(eps));
            m.add_ge(diff, LinExpr::from(eps) * -1.0);
        }
        // Violation rows at the near point: g = a . theta + n . kappa + c
        // stays jointly affine because rows have fixed normals.
        let mut rows = vec![];
        for r in &ap.rows {
            let lin = r.as_kappa_affine().ok_or(QueryError::NonAffineRows)?;
            let mut e = LinExpr::constant(lin.offset);
            for (coef, &v) in lin.theta_coeffs.iter().zip(&self.theta[ap_idx]) {
                e.add_term(v, *coef);
            }
            for (d, &c) in lin.kappa_coeffs.iter().enumerate() {
                e.add_term(near[d], c);
            }
            rows.push(e.normalized());
        }
        match side {
            Verdict::GuaranteedIn => {
                // Near point strictly violates the region: some row > 0.
                let mut any = LinExpr::default();
                for (k, g) in rows.into_iter().enumerate() {
                    let y = Bin::Pos(m.binary(format!("vy{k}")));
                    m.implies_ge(y, g, LinExpr::constant(cfg.eps_strict), cfg.m);
                    any.add_expr(&y.expr(), 1.0);
                }
                m.add_ge(any, LinExpr::constant(1.0));
            }
            Verdict::GuaranteedOut => {
                // Near point inside the region: all rows <= 0.
                for g in rows {
                    m.add_le(g, LinExpr::constant(0.0));
                }
            }
            Verdict::Unknown => unreachable!(),
        }
        m.minimize(LinExpr::from(eps));
        let sol = m.solve(cfg)?;
        match sol.status {
            SolveStatus::Optimal => Ok(sol.objective.max(0.0)),
            // No admissible violation anywhere in the domain.
            SolveStatus::Infeasible => Ok(radius_cap),
            _ => Ok(0.0),
        }
    }
}

/// Interval hull of the constraint-state image of the domain box.
pub fn eta_range(problem: &Problem, ap_idx: usize) -> Vec<(f64, f64)> {
    let ap = &problem.aps[ap_idx];
    let jac_like: Vec<Vec<f64>> = ap.eta.jacobian(problem.state_dim);
    jac_like
        .iter()
        .map(|row| {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for (d, &c) in row.iter().enumerate() {
                let (dl, dh) = problem.domain[d];
                if c >= 0.0 {
                    lo += c * dl;
                    hi += c * dh;
                } else {
                    lo += c * dh;
                    hi += c * dl;
                }
            }
            (lo, hi)
        })
        .collect()
}

/// One cell of a rendered grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridCell {
    pub kappa: Vec<f64>,
    pub verdict: Verdict,
}

/// Grid classification of a 1D-3D constraint space region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionGrid {
    pub ap_index: usize,
    pub bounds: Vec<(f64, f64)>,
    pub step: f64,
    pub shape: Vec<usize>,
    pub cells: Vec<GridCell>,
}

impl RegionGrid {
    pub fn coverage(&self, side: Verdict) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().filter(|c| c.verdict == side).count() as f64 / self.cells.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kappa,verdict\n");
        for c in &self.cells {
            let coords = c
                .kappa
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!("{coords},{:?}\n", c.verdict));
        }
        out
    }
}

/// Classify every cell center of a grid over `bounds` with spacing `step`.
/// Cells run in row-major order over the per-axis indices.
pub fn render_regions(
    base: &QueryBase,
    problem: &Problem,
    ap_idx: usize,
    bounds: &[(f64, f64)],
    step: f64,
    cfg: &Config,
) -> Result<RegionGrid, QueryError> {
    assert!(
        (1..=3).contains(&bounds.len()),
        "grids cover 1 to 3 constraint dimensions"
    );
    let shape: Vec<usize> = bounds
        .iter()
        .map(|&(lo, hi)| ((hi - lo) / step).round() as usize + 1)
        .collect();
    let mut points = vec![];
    let total: usize = shape.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut kappa = vec![0.0; bounds.len()];
        for (d, &(lo, _)) in bounds.iter().enumerate().rev() {
            let k = rem % shape[d];
            rem /= shape[d];
            kappa[d] = lo + k as f64 * step;
        }
        points.push(kappa);
    }
    // Independent probes per cell, fanned out over the worker pool.
    let verdicts: Vec<Result<MembershipVerdict, QueryError>> =
        par::map_slice(&points, |kappa| base.query_point(problem, ap_idx, kappa, cfg));
    let mut cells = vec![];
    for (kappa, v) in points.into_iter().zip(verdicts) {
        cells.push(GridCell {
            kappa,
            verdict: v?.verdict,
        });
    }
    Ok(RegionGrid {
        ap_index: problem.aps[ap_idx].index,
        bounds: bounds.to_vec(),
        step,
        shape,
        cells,
    })
}
