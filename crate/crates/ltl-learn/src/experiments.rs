//! Ready-made desk-scale experiment setups.
//!
//! Each builder returns a problem plus the ground truth needed to generate
//! demonstrations and judge recovery: true AP parameters, the true formula,
//! and suggested starts. They are used by the acceptance suite, the
//! benches, and as CLI-ready examples.

use crate::ltl::Formula;
use crate::problem::{
    ApDefinition, CostFamily, CostSpec, Demonstration, EtaMap, Problem, Trajectory,
};

/// Axis-box parameters from inclusive corner coordinates.
pub fn box_theta(lx: f64, ux: f64, ly: f64, uy: f64) -> Vec<f64> {
    vec![ux, uy, -lx, -ly]
}

fn box_ap(index: usize, bounds: Vec<(f64, f64)>) -> ApDefinition {
    ApDefinition::axis_box(index, EtaMap::Identity, 2, bounds)
}

/// The 1D pinned-parameter toy: demo `0,1,2,1,0` under quadratic cost with
/// the structure `F[0,4](x >= theta)`. The only KKT-consistent parameter
/// is `theta = 2`.
pub struct PinnedLine {
    pub problem: Problem,
    pub demo: Demonstration,
    pub formula: Formula,
}

pub fn pinned_line() -> PinnedLine {
    let ap = ApDefinition {
        index: 1,
        eta: EtaMap::Identity,
        rows: vec![crate::problem::ApRow::Linear(crate::problem::LinearRow {
            theta_coeffs: vec![1.0],
            kappa_coeffs: vec![-1.0],
            offset: 0.0,
        })],
        theta_bounds: vec![(0.0, 5.0)],
        nominal: None,
    };
    let problem = Problem {
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
    };
    let demo = Demonstration::new(
        Trajectory::from_states(vec![vec![0.0], vec![1.0], vec![2.0], vec![1.0], vec![0.0]]),
        0.0,
    );
    let formula = Formula::eventually(0, 4, Formula::ap(1));
    PinnedLine {
        problem,
        demo,
        formula,
    }
}

/// The planar single-region toy: a point robot deviates from the straight
/// start-goal line only to touch one box whose first face coordinate is
/// treated as known. Structure `F[0,8] p1`.
pub struct SingleRegion {
    pub problem: Problem,
    pub theta_true: Vec<Vec<f64>>,
    pub formula: Formula,
    pub t_max: usize,
}

pub fn single_region() -> SingleRegion {
    // The box [1, 3] x [-2, 2]; the demonstrator crosses from the left of
    // it to the far right, deviating upward to touch it.
    let mut ap = box_ap(1, vec![(3.0, 3.0), (-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0)]);
    ap.nominal = None;
    let problem = Problem {
        state_dim: 2,
        domain: vec![(-6.0, 8.0), (-6.0, 6.0)],
        aps: vec![ap],
        u_max: vec![2.0, 2.0],
        step_ball: None,
        start: vec![-4.0, 4.0],
        goal: Some(vec![6.0, 4.0]),
        cost: CostSpec {
            family: CostFamily::QuadraticIncrements,
            weights: None,
            bounds: vec![],
        },
        horizon: Some(9),
    };
    SingleRegion {
        problem,
        theta_true: vec![box_theta(1.0, 3.0, -2.0, 2.0)],
        formula: Formula::eventually(0, 8, Formula::ap(1)),
        t_max: 9,
    }
}

/// Two-region ordering world: visit the first region, then the second.
/// One start makes the ordered and unordered optima coincide; the other
/// makes the unordered tour strictly cheaper, which is what renders the
/// ordering learnable.
pub struct OrderingWorld {
    pub problem: Problem,
    pub theta_true: Vec<Vec<f64>>,
    pub formula: Formula,
    pub t_max: usize,
    /// Start whose optimal ordered and unordered tours coincide.
    pub start_aligned: Vec<f64>,
    /// Start whose unordered tour is strictly cheaper.
    pub start_reversed: Vec<f64>,
    pub goal: Vec<f64>,
}

pub fn ordering_world() -> OrderingWorld {
    let t_max = 5;
    let problem = Problem {
        state_dim: 2,
        domain: vec![(-2.0, 10.0), (-5.0, 5.0)],
        aps: vec![
            box_ap(1, vec![(-10.0, 10.0); 4]),
            box_ap(2, vec![(-10.0, 10.0); 4]),
        ],
        u_max: vec![4.0, 4.0],
        step_ball: None,
        start: vec![0.0, 0.0],
        goal: Some(vec![8.0, 0.0]),
        cost: CostSpec {
            family: CostFamily::QuadraticIncrements,
            weights: None,
            bounds: vec![],
        },
        horizon: Some(t_max),
    };
    let theta_true = vec![
        box_theta(2.0, 3.0, 2.0, 3.0),   // S1 up and to the left
        box_theta(5.0, 6.0, -2.0, -1.0), // S2 down and to the right
    ];
    let formula = Formula::and(
        Formula::until(0, t_max - 1, Formula::not_ap(2), Formula::ap(1)),
        Formula::eventually(0, t_max - 1, Formula::ap(2)),
    );
    OrderingWorld {
        problem,
        theta_true,
        formula,
        t_max,
        start_aligned: vec![0.0, 0.0],
        start_reversed: vec![7.0, -3.0],
        goal: vec![8.0, 0.0],
    }
}

/// Environment-transfer world: go to region 1, then region 2, then region
/// 3, always avoiding regions 4 and 5. Region parameters differ per
/// environment and are known to the learner; the formula is shared.
pub struct TransferWorld {
    pub problem: Problem,
    /// Per-environment AP parameters, `themes[env][ap]`.
    pub envs: Vec<Vec<Vec<f64>>>,
    pub formula: Formula,
    pub t_max: usize,
    pub starts: Vec<Vec<f64>>,
}

pub fn transfer_world() -> TransferWorld {
    let t_max = 9;
    let problem = Problem {
        state_dim: 2,
        domain: vec![(-1.0, 7.0), (-4.0, 5.0)],
        aps: (1..=5).map(|i| box_ap(i, vec![(-10.0, 10.0); 4])).collect(),
        u_max: vec![1.6, 1.6],
        step_ball: None,
        start: vec![0.0, 0.0],
        goal: None,
        cost: CostSpec {
            family: CostFamily::QuadraticIncrements,
            weights: None,
            bounds: vec![],
        },
        horizon: Some(t_max),
    };
    // Environment 1: the second region sits far above the line from the
    // first to the third, so honoring the ordering doubles back.
    let env1 = vec![
        box_theta(1.0, 1.6, 0.4, 1.0),   // p1 mug
        box_theta(2.4, 3.0, 2.2, 2.8),   // p2 coffee, well off the path
        box_theta(4.6, 5.2, 0.3, 0.9),   // p3 goal region
        box_theta(1.8, 2.4, -0.6, 0.35), // p4 obstacle pinching p1 -> p2
        box_theta(3.4, 4.0, 0.5, 1.4),   // p5 obstacle pinching p2 -> p3
    ];
    // Environment 2: regions alternate around the path so the ordered
    // tour is also the cheapest unordered one.
    let env2 = vec![
        box_theta(1.0, 1.6, 0.4, 1.0),
        box_theta(2.4, 3.0, -1.0, -0.4),
        box_theta(4.6, 5.2, 0.4, 1.0),
        box_theta(1.8, 2.4, -0.45, 0.5),
        box_theta(3.4, 4.0, -0.55, 0.42),
    ];
    let full = t_max - 1;
    let formula = Formula::conj([
        Formula::avoid(Formula::ap(4)),
        Formula::avoid(Formula::ap(5)),
        Formula::seq(Formula::ap(1), Formula::ap(2)),
        Formula::seq(Formula::ap(2), Formula::ap(3)),
        Formula::eventually(0, full, Formula::ap(3)),
    ]);
    TransferWorld {
        problem,
        envs: vec![env1, env2],
        formula,
        t_max,
        starts: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    }
}

/// Surveillance proxy: three regions of interest to visit in any order and
/// one grounded obstacle to avoid, under a weighted quadratic cost with
/// unknown weights.
pub struct SurveillanceWorld {
    pub problem: Problem,
    pub theta_true: Vec<Vec<f64>>,
    pub theta_c_true: Vec<f64>,
    pub formula: Formula,
    pub t_max: usize,
    pub starts: Vec<Vec<f64>>,
}

pub fn surveillance_world() -> SurveillanceWorld {
    let t_max = 8;
    let mut aps: Vec<ApDefinition> = (1..=3)
        .map(|i| box_ap(i, vec![(0.0, 8.0), (0.0, 6.0), (0.0, 0.0), (0.0, 0.0)]))
        .collect();
    // Wide parameter boxes for the visit regions.
    for ap in &mut aps {
        ap.theta_bounds = vec![(0.5, 8.0), (0.5, 6.0), (-8.0, 0.0), (-6.0, 0.5)];
    }
    // The obstacle is known not to hover: its lower y face is pinned to
    // the ground.
    let mut obstacle = box_ap(4, vec![(0.5, 8.0), (0.5, 6.0), (-8.0, 0.0), (0.0, 0.0)]);
    obstacle.theta_bounds = vec![(0.5, 8.0), (0.5, 6.0), (-8.0, 0.0), (0.0, 0.0)];
    aps.push(obstacle);
    let problem = Problem {
        state_dim: 2,
        domain: vec![(0.0, 8.0), (0.0, 6.0)],
        aps,
        u_max: vec![2.5, 2.5],
        step_ball: None,
        start: vec![0.0, 0.0],
        goal: None,
        cost: CostSpec {
            family: CostFamily::WeightedQuadraticIncrements,
            weights: None,
            bounds: vec![(0.1, 1.0), (0.1, 1.0)],
        },
        horizon: Some(t_max),
    };
    let theta_true = vec![
        box_theta(0.8, 1.6, 0.0, 1.0), // visit region on the ground, left
        box_theta(3.6, 4.4, 4.2, 5.0), // visit region above the obstacle
        box_theta(6.4, 7.2, 0.0, 1.0), // visit region on the ground, right
        box_theta(3.2, 4.8, 0.0, 3.2), // the grounded obstacle
    ];
    let full = t_max - 1;
    let formula = Formula::conj([
        Formula::eventually(0, full, Formula::ap(1)),
        Formula::eventually(0, full, Formula::ap(2)),
        Formula::eventually(0, full, Formula::ap(3)),
        Formula::avoid(Formula::ap(4)),
    ]);
    SurveillanceWorld {
        problem,
        theta_true,
        theta_c_true: vec![1.0, 0.4],
        formula,
        t_max,
        starts: vec![
            vec![0.0, 2.0],
            vec![8.0, 2.0],
            vec![0.5, 5.5],
            vec![7.5, 5.5],
        ],
    }
}
