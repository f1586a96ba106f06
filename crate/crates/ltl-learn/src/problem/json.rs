//! JSON schemas for problem and demonstration files.

use serde::{Deserialize, Serialize};

use super::{
    ApDefinition, CostSpec, Demonstration, EtaMap, Nominal, Problem, ProblemError, Trajectory,
};

/// On-disk AP declaration: a template plus bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApSpec {
    pub index: usize,
    #[serde(default = "default_eta")]
    pub eta: EtaMap,
    pub template: ApTemplate,
    pub theta_bounds: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal: Option<Nominal>,
}

fn default_eta() -> EtaMap {
    EtaMap::Identity
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ApTemplate {
    /// Axis box in the constraint space; `dim` kappa coordinates.
    Box { dim: usize },
    /// Fixed-normal half-space bundle.
    Halfspaces { normals: Vec<Vec<f64>> },
}

/// On-disk problem file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemFile {
    pub state_dim: usize,
    pub domain: Vec<(f64, f64)>,
    pub aps: Vec<ApSpec>,
    pub u_max: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ball: Option<f64>,
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<f64>>,
    pub cost: CostSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Problem, ProblemError> {
        if self.domain.len() != self.state_dim || self.u_max.len() != self.state_dim {
            return Err(ProblemError::BadProblem(
                "domain and u_max must match state_dim".into(),
            ));
        }
        if self.start.len() != self.state_dim {
            return Err(ProblemError::BadProblem("start must match state_dim".into()));
        }
        let mut aps = Vec::with_capacity(self.aps.len());
        for spec in self.aps {
            let ap = match spec.template {
                ApTemplate::Box { dim } => {
                    ApDefinition::axis_box(spec.index, spec.eta, dim, spec.theta_bounds)
                }
                ApTemplate::Halfspaces { normals } => ApDefinition::halfspaces(
                    spec.index,
                    spec.eta,
                    normals,
                    spec.theta_bounds,
                ),
            };
            let mut ap = ap;
            ap.nominal = spec.nominal;
            if let Some(nom) = &ap.nominal {
                if nom.theta.len() != ap.n_theta() {
                    return Err(ProblemError::BadProblem(format!(
                        "nominal for AP {} has wrong dimension",
                        ap.index
                    )));
                }
            }
            aps.push(ap);
        }
        aps.sort_by_key(|a| a.index);
        if aps.iter().enumerate().any(|(k, a)| a.index != k + 1) {
            return Err(ProblemError::BadProblem(
                "AP indices must be exactly 1..=N".into(),
            ));
        }
        Ok(Problem {
            state_dim: self.state_dim,
            domain: self.domain,
            aps,
            u_max: self.u_max,
            step_ball: self.step_ball,
            start: self.start,
            goal: self.goal,
            cost: self.cost,
            horizon: self.horizon,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Problem, ProblemError> {
        let text = std::fs::read_to_string(path)?;
        let file: ProblemFile = serde_json::from_str(&text)?;
        file.into_problem()
    }
}

/// On-disk demonstration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoFile {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<Option<bool>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<f64>>,
}

impl DemoFile {
    pub fn into_demo(self) -> Demonstration {
        Demonstration {
            trajectory: Trajectory {
                states: self.states,
                controls: self.controls,
            },
            delta: self.delta,
            labels: self.labels,
            theta_p: self.theta_p,
            goal: self.goal,
        }
    }

    pub fn from_demo(demo: &Demonstration) -> Self {
        DemoFile {
            states: demo.trajectory.states.clone(),
            controls: demo.trajectory.controls.clone(),
            delta: demo.delta,
            labels: demo.labels.clone(),
            theta_p: demo.theta_p.clone(),
            goal: demo.goal.clone(),
        }
    }

    /// Load and validate against a problem.
    pub fn load(path: &std::path::Path, problem: &Problem) -> Result<Demonstration, ProblemError> {
        let text = std::fs::read_to_string(path)?;
        let file: DemoFile = serde_json::from_str(&text)?;
        let demo = file.into_demo();
        problem.validate_demo(&demo)?;
        Ok(demo)
    }
}
