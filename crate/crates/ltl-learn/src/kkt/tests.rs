use super::*;
use crate::config::Config;
use crate::ltl::Formula;
use crate::milp::{Bin, LinExpr, Model, SolveStatus};
use crate::problem::{
    ApDefinition, ApRow, CostFamily, CostSpec, Demonstration, EtaMap, LinearRow, Problem,
    Trajectory,
};

fn cfg() -> Config {
    Config::default()
}

fn fig3_box() -> ApDefinition {
    ApDefinition::axis_box(1, EtaMap::Identity, 2, vec![(-5.0, 5.0); 4])
}

/// Plain-arithmetic oracle for the indicator rows: enumerate every (z, s)
/// assignment and keep those satisfying the four row groups literally.
fn indicator_oracle(g: &[f64], m: f64, m_eps: f64) -> Vec<(bool, Vec<bool>)> {
    let n = g.len();
    let mut feasible = vec![];
    for mask in 0..(1u32 << n) {
        let s: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
        for z in [false, true] {
            let zf = if z { 1.0 } else { 0.0 };
            let s_sum: f64 = s.iter().map(|&b| if b { 1.0 } else { 0.0 }).sum();
            let ok = g.iter().zip(&s).all(|(&gm, &sm)| {
                let sf = if sm { 1.0 } else { 0.0 };
                gm <= m * (1.0 - sf) + 1e-9 && gm >= -m * sf - 1e-9
            }) && s_sum - n as f64 <= m * zf - m_eps + 1e-9
                && s_sum - n as f64 >= -m * (1.0 - zf) - 1e-9;
            if ok {
                feasible.push((z, s.clone()));
            }
        }
    }
    feasible
}

#[test]
fn indicator_strictly_inside_forces_z1() {
    // Box [1,3] x [-2,2] at kappa = (1.5, 1): strictly inside.
    let ap = fig3_box();
    let theta = vec![3.0, 2.0, -1.0, 2.0];
    let (_, rows) = ap.margin(&[1.5, 1.0], &theta);
    let feasible = indicator_oracle(&rows, 1e3, 0.5);
    assert_eq!(feasible, vec![(true, vec![true; 4])]);
}

#[test]
fn indicator_violated_row_forces_z0() {
    // kappa = (5, 0): row 1 violated by 2.
    let ap = fig3_box();
    let theta = vec![3.0, 2.0, -1.0, 2.0];
    let (_, rows) = ap.margin(&[5.0, 0.0], &theta);
    let feasible = indicator_oracle(&rows, 1e3, 0.5);
    assert!(!feasible.is_empty());
    assert!(feasible.iter().all(|(z, s)| !z && !s[0]));
}

#[test]
fn indicator_boundary_leaves_z_free() {
    // kappa on the x1 = 3 facet.
    let ap = fig3_box();
    let theta = vec![3.0, 2.0, -1.0, 2.0];
    let (_, rows) = ap.margin(&[3.0, 0.0], &theta);
    let feasible = indicator_oracle(&rows, 1e3, 0.5);
    assert!(feasible.iter().any(|(z, _)| *z));
    assert!(feasible.iter().any(|(z, _)| !*z));
}

#[test]
fn encoded_indicator_matches_oracle() {
    // The emitted rows agree with the enumeration oracle on whether each
    // (z, s) assignment is feasible, across inside/outside/boundary
    // points.
    let ap = fig3_box();
    let theta = vec![3.0, 2.0, -1.0, 2.0];
    let config = cfg();
    for kappa in [[1.5, 1.0], [5.0, 0.0], [3.0, 0.0], [0.5, -3.0]] {
        let (_, rows) = ap.margin(&kappa, &theta);
        let oracle = indicator_oracle(&rows, config.m, config.m_eps);
        for mask in 0..(1u32 << 4) {
            let s_vals: Vec<bool> = (0..4).map(|k| mask >> k & 1 == 1).collect();
            for z_val in [false, true] {
                let mut model = Model::new("ind");
                let z = Bin::Pos(model.binary("z"));
                let s: Vec<Bin> = (0..4).map(|k| Bin::Pos(model.binary(format!("s{k}")))).collect();
                let g: Vec<LinExpr> = rows.iter().map(|&v| LinExpr::constant(v)).collect();
                encode_indicator(&mut model, &config, &g, z, &s);
                model.fix_bin(z, z_val);
                for (b, v) in s.iter().zip(&s_vals) {
                    model.fix_bin(*b, *v);
                }
                let sol = model.feasibility(&config).unwrap();
                let expect = oracle.contains(&(z_val, s_vals.clone()));
                assert_eq!(
                    sol.status == SolveStatus::Optimal,
                    expect,
                    "kappa {kappa:?} z={z_val} s={s_vals:?}"
                );
            }
        }
    }
}

fn halfline_ap() -> ApDefinition {
    // S = { x : x >= theta }, one row g = theta - x.
    ApDefinition {
        index: 1,
        eta: EtaMap::Identity,
        rows: vec![ApRow::Linear(LinearRow {
            theta_coeffs: vec![1.0],
            kappa_coeffs: vec![-1.0],
            offset: 0.0,
        })],
        theta_bounds: vec![(0.0, 5.0)],
        nominal: None,
    }
}

fn toy_problem(theta_bounds: Vec<(f64, f64)>) -> Problem {
    let mut ap = halfline_ap();
    ap.theta_bounds = theta_bounds;
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
        Trajectory::from_states(vec![vec![0.0], vec![1.0], vec![2.0], vec![1.0], vec![0.0]]),
        0.0,
    )
}

fn eventually_p1(t_max: usize) -> Formula {
    Formula::eventually(0, t_max - 1, Formula::ap(1))
}

#[test]
fn comp_slack_active_row_pins_boundary() {
    // With lambda fixed positive and s = 1, complementary slackness plus
    // primal feasibility pin g to zero: theta = kappa.
    let config = cfg();
    let mut model = Model::new("comp");
    let theta = model.cont("theta", 0.0, 5.0);
    // g = theta - 2 at kappa = 2.
    let g = vec![LinExpr::from(theta) - LinExpr::constant(2.0)];
    let s = vec![Bin::Pos(model.binary("s"))];
    let z = Bin::Pos(model.binary("z"));
    encode_indicator(&mut model, &config, &g, z, &s);
    model.fix_bin(z, true);
    let lam = model.cont("lam", 0.0, config.m_lambda);
    model.add_eq(LinExpr::from(lam), LinExpr::constant(2.0));
    encode_comp_slack(&mut model, &config, "c", &[lam], &g, &s);

    let mut lo = model.clone();
    lo.minimize(LinExpr::from(theta));
    let lo = lo.solve(&config).unwrap();
    let mut hi = model.clone();
    hi.maximize(LinExpr::from(theta));
    let hi = hi.solve(&config).unwrap();
    assert!((lo.objective - 2.0).abs() < 1e-6, "lo = {}", lo.objective);
    assert!((hi.objective - 2.0).abs() < 1e-6, "hi = {}", hi.objective);
}

#[test]
fn comp_slack_inactive_row_zeroes_multiplier() {
    // Numeric row strictly on its signed-feasible side: lambda must be 0.
    let config = cfg();
    let mut model = Model::new("comp0");
    let g = vec![LinExpr::constant(-1.0)];
    let s = vec![Bin::Const(true)];
    let lam = model.cont("lam", 0.0, config.m_lambda);
    encode_comp_slack(&mut model, &config, "c", &[lam], &g, &s);
    model.maximize(LinExpr::from(lam));
    let sol = model.solve(&config).unwrap();
    assert!(sol.objective.abs() < 1e-9);

    // Boundary row: lambda free, "or both" admissible.
    let mut model = Model::new("comp_b");
    let g = vec![LinExpr::constant(0.0)];
    let lam = model.cont("lam", 0.0, config.m_lambda);
    encode_comp_slack(&mut model, &config, "c", &[lam], &g, &[Bin::Const(true)]);
    model.add_eq(LinExpr::from(lam), LinExpr::constant(0.0));
    assert_eq!(model.feasibility(&config).unwrap().status, SolveStatus::Optimal);
}

#[test]
fn stationarity_pins_theta_on_1d_example() {
    // Demo 0,1,2,1,0 under quadratic cost with structure F[0,4](x >= theta):
    // the only KKT-consistent parameter is theta = 2 (multiplier 4 at the
    // peak), so the feasible set projects to a point.
    let problem = toy_problem(vec![(0.0, 5.0)]);
    let demos = vec![toy_demo()];
    let interval =
        theta_projection_interval(&problem, &demos, &eventually_p1(5), 0, 0, &cfg())
            .unwrap()
            .expect("feasible");
    assert!((interval.0 - 2.0).abs() < 1e-4, "{interval:?}");
    assert!((interval.1 - 2.0).abs() < 1e-4, "{interval:?}");
}

#[test]
fn vacuous_kkt_leaves_theta_free() {
    // An unconstrained-optimal demo strictly inside the AP at every step:
    // any theta in the box is consistent and the projection returns the
    // whole box.
    let problem = toy_problem(vec![(-10.0, -5.0)]);
    let demos = vec![Demonstration::new(
        Trajectory::from_states(vec![vec![0.0]; 5]),
        0.0,
    )];
    let interval =
        theta_projection_interval(&problem, &demos, &eventually_p1(5), 0, 0, &cfg())
            .unwrap()
            .expect("feasible");
    assert!((interval.0 + 10.0).abs() < 1e-6);
    assert!((interval.1 + 5.0).abs() < 1e-6);
}

#[test]
fn fixed_template_solves_and_rechecks() {
    let problem = toy_problem(vec![(0.0, 5.0)]);
    let demos = vec![toy_demo()];
    let res = solve_fixed_template(
        &problem,
        &demos,
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    )
    .unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    let theta = res.theta_p.as_ref().unwrap();
    assert!((theta[0][0] - 2.0).abs() < 1e-6);
    assert!(recheck_indicators(&problem, &demos, theta, &res.z, &cfg()));
    // The demonstration can only satisfy p1 at the peak.
    assert!(res.z[0][0][2]);
}

#[test]
fn active_control_bound_admits_multiplier() {
    // With u_max = 1 every step of the demo rides the bound; the KKT
    // system stays feasible and still pins theta = 2.
    let mut problem = toy_problem(vec![(0.0, 5.0)]);
    problem.u_max = vec![1.0];
    let demos = vec![toy_demo()];
    let interval =
        theta_projection_interval(&problem, &demos, &eventually_p1(5), 0, 0, &cfg())
            .unwrap()
            .expect("feasible");
    assert!((interval.0 - 2.0).abs() < 1e-4);
    assert!((interval.1 - 2.0).abs() < 1e-4);
}

#[test]
fn labels_fix_membership_rows() {
    // Forcing the label "outside at the peak" contradicts the only
    // consistent explanation: infeasible.
    let problem = toy_problem(vec![(0.0, 5.0)]);
    let mut demo = toy_demo();
    demo.labels = Some(vec![vec![None, None, Some(false), None, None]]);
    let res = solve_fixed_template(
        &problem,
        &vec![demo],
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    )
    .unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
}

#[test]
fn suboptimal_mode_zero_residual_on_exact_instances() {
    let problem = toy_problem(vec![(0.0, 5.0)]);
    let demos = vec![toy_demo()];
    let res = solve_suboptimal(
        &problem,
        &demos,
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    )
    .unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(res.residual.abs() < 1e-6, "residual {}", res.residual);
}

#[test]
fn suboptimal_mode_recovers_from_noise() {
    // Perturb the interior states by 1e-3; the exact system becomes
    // infeasible but the relaxed one stays close to the truth.
    let problem = toy_problem(vec![(0.0, 5.0)]);
    let noisy = Demonstration::new(
        Trajectory::from_states(vec![
            vec![0.0],
            vec![1.001],
            vec![1.9992],
            vec![0.999],
            vec![0.0],
        ]),
        0.1,
    );
    let demos = vec![noisy];
    let exact = solve_fixed_template(
        &problem,
        &demos,
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    )
    .unwrap();
    assert_eq!(exact.status, SolveStatus::Infeasible);
    let relaxed = solve_suboptimal(
        &problem,
        &demos,
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    )
    .unwrap();
    assert_eq!(relaxed.status, SolveStatus::Optimal);
    assert!(relaxed.residual > 0.0);
    let theta = relaxed.theta_p.unwrap();
    assert!(
        (theta[0][0] - 2.0).abs() < 0.05,
        "recovered theta {}",
        theta[0][0]
    );
}

#[test]
fn nominal_radius_constrains_theta() {
    let mut problem = toy_problem(vec![(0.0, 5.0)]);
    problem.aps[0].nominal = Some(crate::problem::Nominal {
        theta: vec![1.0],
        radius: Some(0.5),
    });
    // theta is pinned to 2 by stationarity but the nominal ball only
    // allows [0.5, 1.5]: infeasible.
    let res = solve_fixed_template(
        &problem,
        &vec![toy_demo()],
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    )
    .unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
}

#[test]
fn theta_dependent_gradient_rejected() {
    struct Curved;
    impl crate::problem::RowEval for Curved {
        fn theta_coeffs(&self, kappa: &[f64]) -> Vec<f64> {
            vec![kappa[0]]
        }
        fn constant(&self, kappa: &[f64]) -> f64 {
            -kappa[0]
        }
        fn grad_kappa(&self, _k: &[f64], theta: &[f64]) -> Vec<f64> {
            vec![theta[0] - 1.0]
        }
        fn gradient_theta_free(&self) -> bool {
            false
        }
    }
    let mut problem = toy_problem(vec![(0.0, 5.0)]);
    problem.aps[0].rows = vec![ApRow::Custom(std::sync::Arc::new(Curved))];
    let err = solve_fixed_template(
        &problem,
        &vec![toy_demo()],
        &eventually_p1(5),
        TemplateOptions::default(),
        &cfg(),
    );
    assert!(matches!(err, Err(KktError::Unsupported(_))));
}
