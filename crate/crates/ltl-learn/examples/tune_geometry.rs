//! Scratch harness for checking the experiment geometries: plans the true
//! and rival formulas and prints touch patterns and costs.

use ltl_learn::config::Config;
use ltl_learn::experiments::*;
use ltl_learn::ltl::Formula;
use ltl_learn::planner::{plan, PlanOutcome};
use ltl_learn::problem::CostFunction;

fn describe(tag: &str, out: &PlanOutcome, world_aps: usize, theta: &[Vec<f64>], p: &ltl_learn::problem::Problem) {
    match out {
        PlanOutcome::Optimal(r) => {
            println!("{tag}: cost {:.6}", r.cost);
            for (t, s) in r.trajectory.states.iter().enumerate() {
                let mut touches = vec![];
                for ai in 0..world_aps {
                    let (g, _) = p.aps[ai].margin(&p.aps[ai].eta.apply(s), &theta[ai]);
                    if g.abs() < 1e-6 { touches.push(format!("b{}", ai + 1)); }
                    else if g < 0.0 { touches.push(format!("IN{}", ai + 1)); }
                }
                println!("  t{}: ({:.4}, {:.4}) {}", t + 1, s[0], s[1], touches.join(" "));
            }
        }
        PlanOutcome::Infeasible => println!("{tag}: infeasible"),
    }
}

fn main() {
    let cfg = Config::default();
    let which = std::env::args().nth(1).unwrap_or_else(|| "ordering".into());
    match which.as_str() {
        "ordering" => {
            let w = ordering_world();
            let c = CostFunction::quadratic();
            let unordered = Formula::and(
                Formula::eventually(0, w.t_max - 1, Formula::ap(1)),
                Formula::eventually(0, w.t_max - 1, Formula::ap(2)),
            );
            for (name, start) in [("aligned", &w.start_aligned), ("reversed", &w.start_reversed)] {
                let a = plan(&w.problem, &w.formula, &w.theta_true, &c, w.t_max, start, Some(&w.goal), &cfg).unwrap();
                describe(&format!("{name}/ordered"), &a, 2, &w.theta_true, &w.problem);
                let b = plan(&w.problem, &unordered, &w.theta_true, &c, w.t_max, start, Some(&w.goal), &cfg).unwrap();
                describe(&format!("{name}/unordered"), &b, 2, &w.theta_true, &w.problem);
            }
        }
        "transfer" => {
            let w = transfer_world();
            let c = CostFunction::quadratic();
            let full = w.t_max - 1;
            let orderless = Formula::conj([
                Formula::avoid(Formula::ap(4)),
                Formula::avoid(Formula::ap(5)),
                Formula::eventually(0, full, Formula::ap(1)),
                Formula::eventually(0, full, Formula::ap(2)),
                Formula::eventually(0, full, Formula::ap(3)),
            ]);
            let phi0 = Formula::conj([
                Formula::avoid(Formula::ap(4)),
                Formula::avoid(Formula::ap(5)),
                Formula::eventually(0, full, Formula::ap(2)),
                Formula::eventually(0, full, Formula::ap(3)),
                Formula::seq(Formula::ap(1), Formula::ap(2)),
            ]);
            for (e, theta) in w.envs.iter().enumerate() {
                let a = plan(&w.problem, &w.formula, theta, &c, w.t_max, &w.starts[e], None, &cfg).unwrap();
                describe(&format!("env{}/true", e + 1), &a, 5, theta, &w.problem);
                let b = plan(&w.problem, &orderless, theta, &c, w.t_max, &w.starts[e], None, &cfg).unwrap();
                describe(&format!("env{}/orderless", e + 1), &b, 5, theta, &w.problem);
                let d = plan(&w.problem, &phi0, theta, &c, w.t_max, &w.starts[e], None, &cfg).unwrap();
                describe(&format!("env{}/phi0", e + 1), &d, 5, theta, &w.problem);
            }
        }
        "surveillance" => {
            let w = surveillance_world();
            let c = CostFunction::weighted_quadratic(w.theta_c_true.clone());
            for (k, start) in w.starts.iter().enumerate() {
                let a = plan(&w.problem, &w.formula, &w.theta_true, &c, w.t_max, start, None, &cfg).unwrap();
                describe(&format!("demo{}", k + 1), &a, 4, &w.theta_true, &w.problem);
            }
        }
        "single" => {
            let w = single_region();
            let c = CostFunction::quadratic();
            let a = plan(&w.problem, &w.formula, &w.theta_true, &c, w.t_max, &w.problem.start.clone(), w.problem.goal.as_deref(), &cfg).unwrap();
            describe("single", &a, 1, &w.theta_true, &w.problem);
        }
        _ => eprintln!("unknown world"),
    }
}
