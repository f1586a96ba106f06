//! Problem data: trajectories, AP region templates, known constraints,
//! cost families, and demonstrations.
//!
//! The working formulation is states-only: the default dynamics are the
//! kinematic integrator `x_{t+1} = x_t + u_t`, so controls are state
//! increments and the control bounds become linear rows over states. A
//! demonstration's controls are validated against its states at load and
//! then ignored. All types are immutable after load and safe to share.

mod json;

pub use json::{DemoFile, ProblemFile};

use serde::{Deserialize, Serialize};

/// Finite state/control trajectory. States are `x_1..x_T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Build from states under integrator dynamics (controls are the
    /// increments).
    pub fn from_states(states: Vec<Vec<f64>>) -> Self {
        assert!(states.len() >= 2, "trajectory duration must be at least 2");
        let controls = states
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect())
            .collect();
        Trajectory { states, controls }
    }

    pub fn duration(&self) -> usize {
        self.states.len()
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    /// State at 1-based time index.
    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t - 1]
    }

    pub fn check_shape(&self) -> Result<(), ProblemError> {
        if self.states.len() < 2 {
            return Err(ProblemError::BadTrajectory("duration must be >= 2".into()));
        }
        let n = self.state_dim();
        if self.states.iter().any(|s| s.len() != n) {
            return Err(ProblemError::BadTrajectory(
                "inconsistent state dimensions".into(),
            ));
        }
        if self.controls.len() != self.states.len() - 1 {
            return Err(ProblemError::BadTrajectory(
                "controls must have length T - 1".into(),
            ));
        }
        if self.controls.iter().any(|u| u.len() != n) {
            return Err(ProblemError::BadTrajectory(
                "inconsistent control dimensions".into(),
            ));
        }
        Ok(())
    }
}

/// Known constraint-state map from states to the space the AP lives in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EtaMap {
    /// `kappa = x`.
    Identity,
    /// `kappa = x[dims]`.
    Select(Vec<usize>),
    /// `kappa = M x` for a constant matrix (rows are kappa coordinates).
    Linear(Vec<Vec<f64>>),
}

impl EtaMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            EtaMap::Identity => x.to_vec(),
            EtaMap::Select(dims) => dims.iter().map(|&d| x[d]).collect(),
            EtaMap::Linear(m) => m
                .iter()
                .map(|row| row.iter().zip(x).map(|(c, v)| c * v).sum())
                .collect(),
        }
    }

    pub fn kappa_dim(&self, state_dim: usize) -> usize {
        match self {
            EtaMap::Identity => state_dim,
            EtaMap::Select(dims) => dims.len(),
            EtaMap::Linear(m) => m.len(),
        }
    }

    /// Jacobian rows (kappa coordinate) by columns (state coordinate).
    pub fn jacobian(&self, state_dim: usize) -> Vec<Vec<f64>> {
        match self {
            EtaMap::Identity => (0..state_dim)
                .map(|i| {
                    let mut r = vec![0.0; state_dim];
                    r[i] = 1.0;
                    r
                })
                .collect(),
            EtaMap::Select(dims) => dims
                .iter()
                .map(|&d| {
                    let mut r = vec![0.0; state_dim];
                    r[d] = 1.0;
                    r
                })
                .collect(),
            EtaMap::Linear(m) => m.clone(),
        }
    }
}

/// One inequality row of an AP: `g(kappa, theta) = a . theta + n . kappa + c`,
/// affine in `theta` for fixed `kappa` and with a `theta`-independent
/// constraint-state gradient. Nonlinear-in-kappa rows can be added through
/// [`RowEval`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub theta_coeffs: Vec<f64>,
    pub kappa_coeffs: Vec<f64>,
    pub offset: f64,
}

/// Evaluator interface for AP rows; `g(kappa, theta) =
/// theta_coeffs(kappa) . theta + constant(kappa)`.
pub trait RowEval: Send + Sync {
    fn theta_coeffs(&self, kappa: &[f64]) -> Vec<f64>;
    fn constant(&self, kappa: &[f64]) -> f64;
    fn grad_kappa(&self, kappa: &[f64], theta: &[f64]) -> Vec<f64>;
    /// The KKT encoding requires the kappa-gradient not to depend on theta.
    fn gradient_theta_free(&self) -> bool;
}

impl RowEval for LinearRow {
    fn theta_coeffs(&self, _kappa: &[f64]) -> Vec<f64> {
        self.theta_coeffs.clone()
    }
    fn constant(&self, kappa: &[f64]) -> f64 {
        self.offset
            + self
                .kappa_coeffs
                .iter()
                .zip(kappa)
                .map(|(c, k)| c * k)
                .sum::<f64>()
    }
    fn grad_kappa(&self, _kappa: &[f64], _theta: &[f64]) -> Vec<f64> {
        self.kappa_coeffs.clone()
    }
    fn gradient_theta_free(&self) -> bool {
        true
    }
}

/// An AP row: the built-in affine form or a user-supplied evaluator.
#[derive(Clone)]
pub enum ApRow {
    Linear(LinearRow),
    Custom(std::sync::Arc<dyn RowEval>),
}

impl std::fmt::Debug for ApRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ApRow::Linear(r) => write!(f, "Linear({r:?})"),
            ApRow::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ApRow {
    pub fn eval(&self, kappa: &[f64], theta: &[f64]) -> f64 {
        let (a, b) = self.affine_in_theta(kappa);
        a.iter().zip(theta).map(|(x, y)| x * y).sum::<f64>() + b
    }

    /// `(a, b)` with `g = a . theta + b` at this kappa.
    pub fn affine_in_theta(&self, kappa: &[f64]) -> (Vec<f64>, f64) {
        match self {
            ApRow::Linear(r) => (r.theta_coeffs.clone(), r.constant(kappa)),
            ApRow::Custom(r) => (r.theta_coeffs(kappa), r.constant(kappa)),
        }
    }

    pub fn grad_kappa(&self, kappa: &[f64], theta: &[f64]) -> Vec<f64> {
        match self {
            ApRow::Linear(r) => r.grad_kappa(kappa, theta),
            ApRow::Custom(r) => r.grad_kappa(kappa, theta),
        }
    }

    pub fn gradient_theta_free(&self) -> bool {
        match self {
            ApRow::Linear(_) => true,
            ApRow::Custom(r) => r.gradient_theta_free(),
        }
    }

    /// Affine-in-kappa view for planning; `None` for custom rows.
    pub fn as_kappa_affine(&self) -> Option<&LinearRow> {
        match self {
            ApRow::Linear(r) => Some(r),
            ApRow::Custom(_) => None,
        }
    }
}

/// Prior knowledge about an AP's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nominal {
    pub theta: Vec<f64>,
    /// Optional hard l1 radius around the nominal.
    pub radius: Option<f64>,
}

/// Parametric AP region `g_i(eta_i(x), theta_i) <= 0`.
#[derive(Clone, Debug)]
pub struct ApDefinition {
    /// 1-based AP index.
    pub index: usize,
    pub eta: EtaMap,
    pub rows: Vec<ApRow>,
    pub theta_bounds: Vec<(f64, f64)>,
    pub nominal: Option<Nominal>,
}

impl ApDefinition {
    /// Axis-aligned box `[I; -I] kappa <= theta` in `dim` dimensions; the
    /// parameter vector stacks upper bounds then negated lower bounds.
    pub fn axis_box(index: usize, eta: EtaMap, dim: usize, theta_bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(theta_bounds.len(), 2 * dim);
        let mut rows = Vec::with_capacity(2 * dim);
        for m in 0..2 * dim {
            let j = m % dim;
            let sign = if m < dim { 1.0 } else { -1.0 };
            let mut kappa_coeffs = vec![0.0; dim];
            kappa_coeffs[j] = sign;
            let mut theta_coeffs = vec![0.0; 2 * dim];
            theta_coeffs[m] = -1.0;
            rows.push(ApRow::Linear(LinearRow {
                theta_coeffs,
                kappa_coeffs,
                offset: 0.0,
            }));
        }
        ApDefinition {
            index,
            eta,
            rows,
            theta_bounds,
            nominal: None,
        }
    }

    /// Fixed-direction half-space bundle `n_m . kappa <= theta_m`.
    pub fn halfspaces(
        index: usize,
        eta: EtaMap,
        normals: Vec<Vec<f64>>,
        theta_bounds: Vec<(f64, f64)>,
    ) -> Self {
        assert_eq!(normals.len(), theta_bounds.len());
        let n_theta = normals.len();
        let rows = normals
            .into_iter()
            .enumerate()
            .map(|(m, n)| {
                let mut theta_coeffs = vec![0.0; n_theta];
                theta_coeffs[m] = -1.0;
                ApRow::Linear(LinearRow {
                    theta_coeffs,
                    kappa_coeffs: n,
                    offset: 0.0,
                })
            })
            .collect();
        ApDefinition {
            index,
            eta,
            rows,
            theta_bounds,
            nominal: None,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.theta_bounds.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// `(G, per-row values)` at a constraint state; `kappa` is in the AP
    /// region iff `G <= 0`.
    pub fn margin(&self, kappa: &[f64], theta: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(theta.len(), self.n_theta(), "theta dimension mismatch");
        let rows: Vec<f64> = self.rows.iter().map(|r| r.eval(kappa, theta)).collect();
        let g = rows.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (g, rows)
    }
}

/// Map a trajectory through an AP's constraint-state map.
pub fn constraint_states(traj: &Trajectory, ap: &ApDefinition) -> Vec<Vec<f64>> {
    traj.states.iter().map(|x| ap.eta.apply(x)).collect()
}

/// Sparse linear row over the flattened state trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearStateRow {
    /// `(t, dim, coeff)` with 1-based `t`.
    pub terms: Vec<(usize, usize, f64)>,
    pub rhs: f64,
}

impl LinearStateRow {
    pub fn eval(&self, traj: &Trajectory) -> f64 {
        self.terms
            .iter()
            .map(|&(t, d, c)| c * traj.state(t)[d])
            .sum::<f64>()
            - self.rhs
    }
}

/// A known (parameter-free) inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum KnownIneq {
    /// `terms . x - rhs <= 0`.
    Linear(LinearStateRow),
    /// `||x_{t+1} - x_t||^2 - radius^2 <= 0`; usable on the KKT side only
    /// (the demonstration is fixed there, so value and gradient are plain
    /// numbers).
    SquaredStepBall { t: usize, radius: f64 },
}

impl KnownIneq {
    pub fn eval(&self, traj: &Trajectory) -> f64 {
        match self {
            KnownIneq::Linear(r) => r.eval(traj),
            KnownIneq::SquaredStepBall { t, radius } => {
                let a = traj.state(*t);
                let b = traj.state(*t + 1);
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum();
                sq - radius * radius
            }
        }
    }

    /// Gradient with respect to each state coordinate, sparse by time.
    pub fn grad(&self, traj: &Trajectory) -> Vec<(usize, usize, f64)> {
        match self {
            KnownIneq::Linear(r) => r.terms.clone(),
            KnownIneq::SquaredStepBall { t, radius: _ } => {
                let a = traj.state(*t);
                let b = traj.state(*t + 1);
                let mut out = vec![];
                for d in 0..a.len() {
                    let diff = b[d] - a[d];
                    out.push((*t, d, -2.0 * diff));
                    out.push((*t + 1, d, 2.0 * diff));
                }
                out
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KnownIneq::Linear(_))
    }
}

/// A-priori known constraints: equalities (start, goal, any linear rows)
/// and inequalities (control bounds).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownConstraints {
    pub equalities: Vec<LinearStateRow>,
    pub inequalities: Vec<KnownIneq>,
}

/// Cost families; all are functions of state increments and affine in the
/// weight vector for a fixed trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostFamily {
    /// `sum_t ||x_{t+1} - x_t||^2`, no free parameters.
    QuadraticIncrements,
    /// `sum_t sum_d w_d (x_{t+1,d} - x_{t,d})^2`.
    WeightedQuadraticIncrements,
    /// `sum_t sum_d w_d |x_{t+1,d} - x_{t,d}|`.
    WeightedL1Increments,
}

impl CostFamily {
    pub fn n_weights(self, state_dim: usize) -> usize {
        match self {
            CostFamily::QuadraticIncrements => 0,
            _ => state_dim,
        }
    }

    pub fn is_quadratic(self) -> bool {
        !matches!(self, CostFamily::WeightedL1Increments)
    }
}

/// A concrete cost function: a family plus weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    pub family: CostFamily,
    /// Weight vector; empty for the unweighted family.
    pub weights: Vec<f64>,
}

impl CostFunction {
    pub fn quadratic() -> Self {
        CostFunction {
            family: CostFamily::QuadraticIncrements,
            weights: vec![],
        }
    }

    pub fn weighted_quadratic(weights: Vec<f64>) -> Self {
        CostFunction {
            family: CostFamily::WeightedQuadraticIncrements,
            weights,
        }
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Self {
        CostFunction {
            family: CostFamily::WeightedL1Increments,
            weights,
        }
    }

    fn weight(&self, d: usize) -> f64 {
        match self.family {
            CostFamily::QuadraticIncrements => 1.0,
            _ => self.weights[d],
        }
    }

    pub fn cost(&self, traj: &Trajectory) -> f64 {
        let n = traj.state_dim();
        let mut total = 0.0;
        for w in traj.states.windows(2) {
            for d in 0..n {
                let diff = w[1][d] - w[0][d];
                total += match self.family {
                    CostFamily::WeightedL1Increments => self.weight(d) * diff.abs(),
                    _ => self.weight(d) * diff * diff,
                };
            }
        }
        total
    }

    /// Gradient of the cost with respect to `x_t` (1-based), using the
    /// stored weights.
    pub fn grad_state(&self, traj: &Trajectory, t: usize) -> Vec<f64> {
        let (constant, jac) = self.grad_state_affine(traj, t);
        if self.family == CostFamily::QuadraticIncrements {
            constant
        } else {
            constant
                .iter()
                .enumerate()
                .map(|(d, c)| c + jac[d].iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        }
    }

    /// Gradient as an affine function of the weights:
    /// `grad_d = constant_d + jac_d . weights`.
    pub fn grad_state_affine(&self, traj: &Trajectory, t: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = traj.state_dim();
        let t_max = traj.duration();
        let n_w = self.family.n_weights(n);
        let mut constant = vec![0.0; n];
        let mut jac = vec![vec![0.0; n_w]; n];
        for d in 0..n {
            // Increment into t and out of t.
            let inc_prev = if t > 1 {
                traj.state(t)[d] - traj.state(t - 1)[d]
            } else {
                0.0
            };
            let inc_next = if t < t_max {
                traj.state(t + 1)[d] - traj.state(t)[d]
            } else {
                0.0
            };
            let g = match self.family {
                CostFamily::WeightedL1Increments => {
                    let mut s = 0.0;
                    if t > 1 {
                        s += sign(inc_prev);
                    }
                    if t < t_max {
                        s -= sign(inc_next);
                    }
                    s
                }
                _ => 2.0 * inc_prev - 2.0 * inc_next,
            };
            match self.family {
                CostFamily::QuadraticIncrements => constant[d] = g,
                _ => jac[d][d] = g,
            }
        }
        (constant, jac)
    }

    /// For the l1 family, the subgradient in dimension `d` at time `t` is
    /// undefined when an adjacent increment is exactly zero.
    pub fn l1_nondifferentiable(&self, traj: &Trajectory, t: usize, d: usize) -> bool {
        if self.family != CostFamily::WeightedL1Increments {
            return false;
        }
        let t_max = traj.duration();
        let z = |a: f64| a.abs() < 1e-12;
        (t > 1 && z(traj.state(t)[d] - traj.state(t - 1)[d]))
            || (t < t_max && z(traj.state(t + 1)[d] - traj.state(t)[d]))
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Cost family with its knowledge status: either fixed known weights or a
/// box of admissible weights to be learned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub family: CostFamily,
    /// Known weights; `None` means the weights are unknown.
    pub weights: Option<Vec<f64>>,
    /// Bounds on unknown weights (required when `weights` is `None`).
    #[serde(default)]
    pub bounds: Vec<(f64, f64)>,
}

impl CostSpec {
    pub fn known(&self) -> Option<CostFunction> {
        match self.family {
            CostFamily::QuadraticIncrements => Some(CostFunction::quadratic()),
            _ => self.weights.clone().map(|w| CostFunction {
                family: self.family,
                weights: w,
            }),
        }
    }
}

/// A demonstration: trajectory, suboptimality bound, optional fixed AP
/// labels and optional per-demonstration AP parameters (its environment).
#[derive(Clone, Debug)]
pub struct Demonstration {
    pub trajectory: Trajectory,
    pub delta: f64,
    /// `labels[i][t]` fixes `Z_{i+1, t+1}` when present.
    pub labels: Option<Vec<Vec<Option<bool>>>>,
    /// Known AP parameters for this demonstration's environment, indexed
    /// like `Problem::aps`.
    pub theta_p: Option<Vec<Vec<f64>>>,
    /// Start state override; defaults to the trajectory's first state.
    pub goal: Option<Vec<f64>>,
}

impl Demonstration {
    pub fn new(trajectory: Trajectory, delta: f64) -> Self {
        Demonstration {
            trajectory,
            delta,
            labels: None,
            theta_p: None,
            goal: None,
        }
    }
}

/// The forward problem's fixed data: dimensions, APs, known constraints,
/// cost specification and planning domain.
#[derive(Clone, Debug)]
pub struct Problem {
    pub state_dim: usize,
    /// Per-coordinate domain box; bounds planning variables and calibrates
    /// big-M constants.
    pub domain: Vec<(f64, f64)>,
    pub aps: Vec<ApDefinition>,
    /// Per-coordinate bound on |x_{t+1,d} - x_{t,d}|.
    pub u_max: Vec<f64>,
    /// Optional 2-norm step bound (KKT side only).
    pub step_ball: Option<f64>,
    pub start: Vec<f64>,
    pub goal: Option<Vec<f64>>,
    pub cost: CostSpec,
    pub horizon: Option<usize>,
}

pub const FEASIBILITY_TOL: f64 = 1e-6;

impl Problem {
    pub fn ap(&self, index: usize) -> &ApDefinition {
        self.aps
            .iter()
            .find(|a| a.index == index)
            .expect("AP index not declared")
    }

    pub fn n_aps(&self) -> usize {
        self.aps.len()
    }

    /// Known constraints instantiated for duration `t_max`, with the given
    /// start and optional goal.
    pub fn known_constraints(
        &self,
        t_max: usize,
        start: &[f64],
        goal: Option<&[f64]>,
    ) -> KnownConstraints {
        let n = self.state_dim;
        let mut eq = vec![];
        for d in 0..n {
            eq.push(LinearStateRow {
                terms: vec![(1, d, 1.0)],
                rhs: start[d],
            });
        }
        if let Some(g) = goal {
            for d in 0..n {
                eq.push(LinearStateRow {
                    terms: vec![(t_max, d, 1.0)],
                    rhs: g[d],
                });
            }
        }
        let mut ineq = vec![];
        match self.step_ball {
            Some(r) => {
                for t in 1..t_max {
                    ineq.push(KnownIneq::SquaredStepBall { t, radius: r });
                }
            }
            None => {
                for t in 1..t_max {
                    for d in 0..n {
                        for sign in [1.0, -1.0] {
                            ineq.push(KnownIneq::Linear(LinearStateRow {
                                terms: vec![(t + 1, d, sign), (t, d, -sign)],
                                rhs: self.u_max[d],
                            }));
                        }
                    }
                }
            }
        }
        KnownConstraints {
            equalities: eq,
            inequalities: ineq,
        }
    }

    /// Validate a demonstration against shapes, dynamics consistency and
    /// the known constraints; violators are rejected, not repaired.
    pub fn validate_demo(&self, demo: &Demonstration) -> Result<(), ProblemError> {
        let traj = &demo.trajectory;
        traj.check_shape()?;
        if traj.state_dim() != self.state_dim {
            return Err(ProblemError::BadTrajectory(format!(
                "state dimension {} does not match the problem's {}",
                traj.state_dim(),
                self.state_dim
            )));
        }
        if demo.delta < 0.0 {
            return Err(ProblemError::BadDemo(
                "suboptimality bound must be nonnegative".into(),
            ));
        }
        for (t, (w, u)) in traj.states.windows(2).zip(&traj.controls).enumerate() {
            for d in 0..self.state_dim {
                let err = (w[1][d] - w[0][d] - u[d]).abs();
                if err > FEASIBILITY_TOL {
                    return Err(ProblemError::BadDemo(format!(
                        "controls inconsistent with integrator dynamics at t={} (err {err:.2e})",
                        t + 1
                    )));
                }
            }
        }
        let start = traj.state(1).to_vec();
        let goal = demo.goal.clone().or_else(|| self.goal.clone());
        let known = self.known_constraints(traj.duration(), &start, goal.as_deref());
        for (k, row) in known.equalities.iter().enumerate() {
            let v = row.eval(traj).abs();
            if v > FEASIBILITY_TOL {
                return Err(ProblemError::BadDemo(format!(
                    "known equality {k} violated by {v:.2e}"
                )));
            }
        }
        for (k, row) in known.inequalities.iter().enumerate() {
            let v = row.eval(traj);
            if v > FEASIBILITY_TOL {
                return Err(ProblemError::BadDemo(format!(
                    "known inequality {k} violated by {v:.2e}"
                )));
            }
        }
        if let Some(tp) = &demo.theta_p {
            if tp.len() != self.aps.len() {
                return Err(ProblemError::BadDemo(
                    "per-demonstration theta_p must cover every AP".into(),
                ));
            }
            for (ap, th) in self.aps.iter().zip(tp) {
                if th.len() != ap.n_theta() {
                    return Err(ProblemError::BadDemo(format!(
                        "theta_p for AP {} has wrong dimension",
                        ap.index
                    )));
                }
            }
        }
        if let Some(labels) = &demo.labels {
            if labels.len() != self.aps.len()
                || labels.iter().any(|r| r.len() != traj.duration())
            {
                return Err(ProblemError::BadDemo(
                    "labels must be shaped N_AP x T".into(),
                ));
            }
        }
        Ok(())
    }

    /// The demonstrator's cost under the problem's spec, requiring known
    /// weights.
    pub fn known_cost(&self) -> Result<CostFunction, ProblemError> {
        self.cost
            .known()
            .ok_or_else(|| ProblemError::UnknownCost("cost weights are unknown".into()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("bad trajectory: {0}")]
    BadTrajectory(String),
    #[error("bad demonstration: {0}")]
    BadDemo(String),
    #[error("bad problem definition: {0}")]
    BadProblem(String),
    #[error("{0}")]
    UnknownCost(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[cfg(test)]
mod tests;
