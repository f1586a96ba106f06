use super::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn box_2d(index: usize) -> ApDefinition {
    ApDefinition::axis_box(index, EtaMap::Identity, 2, vec![(-5.0, 5.0); 4])
}

#[test]
fn constraint_states_identity_and_projection() {
    let traj = Trajectory::from_states(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    let ap = box_2d(1);
    let ks = constraint_states(&traj, &ap);
    assert_eq!(ks, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);

    let traj4 = Trajectory::from_states(vec![vec![1.0, 2.0, 9.0, 9.0], vec![0.0, 1.0, 8.0, 8.0]]);
    let planar = ApDefinition::axis_box(1, EtaMap::Select(vec![0, 1]), 2, vec![(-5.0, 5.0); 4]);
    let ks = constraint_states(&traj4, &planar);
    assert_eq!(ks.len(), traj4.duration());
    assert_eq!(ks[0], vec![1.0, 2.0]);
    assert_eq!(ks[1], vec![0.0, 1.0]);
}

#[test]
fn ap_margin_box() {
    // The box [I; -I] kappa <= [3, 2, -1, 2], i.e. x in [1, 3] x [-2, 2].
    let ap = box_2d(1);
    let theta = vec![3.0, 2.0, -1.0, 2.0];
    let (g, rows) = ap.margin(&[2.0, 0.0], &theta);
    assert_eq!(rows, vec![-1.0, -2.0, -1.0, -2.0]);
    assert_eq!(g, -1.0);

    // Strictly outside past the x1 upper face.
    let (g, _) = ap.margin(&[5.0, 0.0], &theta);
    assert_eq!(g, 2.0);
    // Outside below the x1 lower face.
    let (g, _) = ap.margin(&[0.5, 0.0], &theta);
    assert_eq!(g, 0.5);
    // On a facet.
    let (g, _) = ap.margin(&[3.0, 0.0], &theta);
    assert_eq!(g, 0.0);
}

#[test]
fn shrinking_theta_never_decreases_margin() {
    let ap = box_2d(1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..3.0)).collect();
        let kappa = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let (g, _) = ap.margin(&kappa, &theta);
        let mut smaller = theta.clone();
        let m = rng.random_range(0..4);
        smaller[m] -= rng.random_range(0.0..1.0);
        let (g2, _) = ap.margin(&kappa, &smaller);
        assert!(g2 >= g - 1e-12);
    }
}

#[test]
fn box_membership_grid_oracle() {
    // Sign tests on a dense grid agree with direct set membership of
    // {kappa : [I; -I] kappa <= theta}.
    let ap = box_2d(1);
    let theta = vec![3.0, 2.0, -1.0, 2.0];
    let mut boundary_seen = false;
    for i in 0..=40 {
        for j in 0..=40 {
            let x = -1.0 + 0.125 * i as f64;
            let y = -3.0 + 0.125 * j as f64;
            let inside = (1.0..=3.0).contains(&x) && (-2.0..=2.0).contains(&y);
            let (g, _) = ap.margin(&[x, y], &theta);
            if g == 0.0 {
                boundary_seen = true;
                assert!(inside, "boundary points belong to the closed region");
            } else {
                assert_eq!(g < 0.0, inside && g != 0.0, "grid point ({x},{y})");
                if g > 0.0 {
                    assert!(!(x > 1.0 && x < 3.0 && y > -2.0 && y < 2.0));
                }
            }
        }
    }
    assert!(boundary_seen);
}

#[test]
fn cost_examples() {
    let c = CostFunction::quadratic();
    let constant = Trajectory::from_states(vec![vec![2.0]; 4]);
    assert_eq!(c.cost(&constant), 0.0);
    assert!(c.grad_state(&constant, 2).iter().all(|&g| g == 0.0));

    let path = Trajectory::from_states(vec![
        vec![0.0],
        vec![1.0],
        vec![2.0],
        vec![1.0],
        vec![0.0],
    ]);
    assert_eq!(c.cost(&path), 4.0);

    let w = CostFunction::weighted_quadratic(vec![1.0]);
    assert_eq!(w.cost(&path), c.cost(&path));
}

#[test]
fn unit_weight_gradient_matches_unweighted() {
    let path = Trajectory::from_states(vec![vec![0.0, 1.0], vec![0.5, 0.25], vec![2.0, -1.0]]);
    let c = CostFunction::quadratic();
    let w = CostFunction::weighted_quadratic(vec![1.0, 1.0]);
    for t in 1..=3 {
        assert_eq!(c.grad_state(&path, t), w.grad_state(&path, t));
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let families = [
        CostFunction::quadratic(),
        CostFunction::weighted_quadratic(vec![0.7, 1.3]),
        CostFunction::weighted_l1(vec![0.5, 2.0]),
    ];
    for _ in 0..100 {
        let t_max = rng.random_range(3..7);
        let states: Vec<Vec<f64>> = (0..t_max)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let traj = Trajectory::from_states(states);
        for c in &families {
            let h = 1e-6;
            for t in 1..=t_max {
                let grad = c.grad_state(&traj, t);
                for d in 0..2 {
                    if c.l1_nondifferentiable(&traj, t, d) {
                        continue;
                    }
                    let mut plus = traj.clone();
                    plus.states[t - 1][d] += h;
                    let mut minus = traj.clone();
                    minus.states[t - 1][d] -= h;
                    let fd = (c.cost(&plus) - c.cost(&minus)) / (2.0 * h);
                    let scale = grad[d].abs().max(1.0);
                    assert!(
                        (grad[d] - fd).abs() <= 1e-6 * scale + 1e-7,
                        "family {:?} t={t} d={d}: {} vs {}",
                        c.family,
                        grad[d],
                        fd
                    );
                }
            }
        }
    }
}

fn toy_problem() -> Problem {
    Problem {
        state_dim: 1,
        domain: vec![(-10.0, 10.0)],
        aps: vec![ApDefinition::halfspaces(
            1,
            EtaMap::Identity,
            vec![vec![-1.0]],
            vec![(0.0, 5.0)],
        )],
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

#[test]
fn demo_validation_accepts_consistent() {
    let p = toy_problem();
    let traj = Trajectory::from_states(vec![
        vec![0.0],
        vec![1.0],
        vec![2.0],
        vec![1.0],
        vec![0.0],
    ]);
    let mut demo = Demonstration::new(traj, 0.0);
    demo.goal = Some(vec![0.0]);
    p.validate_demo(&demo).unwrap();
}

#[test]
fn demo_validation_rejects_violations() {
    let p = toy_problem();

    // Control bound broken (step of 2 > 1.5).
    let traj = Trajectory::from_states(vec![vec![0.0], vec![2.0], vec![0.0]]);
    let demo = Demonstration::new(traj, 0.0);
    assert!(matches!(
        p.validate_demo(&demo),
        Err(ProblemError::BadDemo(_))
    ));

    // Controls inconsistent with the integrator.
    let mut traj = Trajectory::from_states(vec![vec![0.0], vec![1.0], vec![0.0]]);
    traj.controls[0][0] = 0.5;
    let demo = Demonstration::new(traj, 0.0);
    assert!(matches!(
        p.validate_demo(&demo),
        Err(ProblemError::BadDemo(_))
    ));

    // Negative suboptimality bound.
    let traj = Trajectory::from_states(vec![vec![0.0], vec![1.0], vec![0.0]]);
    let demo = Demonstration {
        delta: -0.1,
        ..Demonstration::new(traj, 0.0)
    };
    assert!(p.validate_demo(&demo).is_err());
}

#[test]
fn problem_file_roundtrip() {
    let text = r#"{
        "state_dim": 2,
        "domain": [[-5, 5], [-5, 5]],
        "u_max": [1, 1],
        "start": [0, 0],
        "goal": [4, 0],
        "aps": [
            {"index": 1, "template": {"type": "box", "dim": 2},
             "theta_bounds": [[-5,5],[-5,5],[-5,5],[-5,5]],
             "nominal": {"theta": [3, 2, -1, 2], "radius": 0.05}}
        ],
        "cost": {"family": "quadratic-increments", "weights": null, "bounds": []},
        "horizon": 8
    }"#;
    let file: ProblemFile = serde_json::from_str(text).unwrap();
    let p = file.into_problem().unwrap();
    assert_eq!(p.n_aps(), 1);
    assert_eq!(p.ap(1).n_rows(), 4);
    assert_eq!(p.ap(1).nominal.as_ref().unwrap().theta, vec![3.0, 2.0, -1.0, 2.0]);
    assert!(p.known_cost().is_ok());
}

#[test]
fn demo_file_roundtrip() {
    let p = toy_problem();
    let traj = Trajectory::from_states(vec![
        vec![0.0],
        vec![1.0],
        vec![2.0],
        vec![1.0],
        vec![0.0],
    ]);
    let mut demo = Demonstration::new(traj, 0.25);
    demo.goal = Some(vec![0.0]);
    let file = DemoFile::from_demo(&demo);
    let text = serde_json::to_string(&file).unwrap();
    let back: DemoFile = serde_json::from_str(&text).unwrap();
    let demo2 = back.into_demo();
    p.validate_demo(&demo2).unwrap();
    assert_eq!(demo2.trajectory, demo.trajectory);
    assert_eq!(demo2.delta, 0.25);
}

#[test]
fn known_constraints_shape() {
    let p = toy_problem();
    let kc = p.known_constraints(5, &[0.0], Some(&[0.0]));
    // start + goal equalities, and 2 increment rows per step.
    assert_eq!(kc.equalities.len(), 2);
    assert_eq!(kc.inequalities.len(), 2 * 4);
    assert!(kc.inequalities.iter().all(|i| i.is_linear()));
}

#[test]
fn step_ball_gradient_matches_finite_differences() {
    let row = KnownIneq::SquaredStepBall { t: 1, radius: 1.0 };
    let traj = Trajectory::from_states(vec![vec![0.3, -0.2], vec![0.9, 0.4]]);
    let grad = row.grad(&traj);
    let h = 1e-6;
    for &(t, d, g) in &grad {
        let mut plus = traj.clone();
        plus.states[t - 1][d] += h;
        let mut minus = traj.clone();
        minus.states[t - 1][d] -= h;
        let fd = (row.eval(&plus) - row.eval(&minus)) / (2.0 * h);
        assert!((g - fd).abs() < 1e-6);
    }
}
