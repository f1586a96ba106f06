use super::*;
use crate::config::Config;

fn cfg() -> Config {
    Config::default()
}

#[test]
fn min_with_lower_bound() {
    let mut m = Model::new("lb");
    let x = m.cont("x", -100.0, 100.0);
    m.add_ge(LinExpr::from(x), LinExpr::constant(3.0));
    m.minimize(LinExpr::from(x));
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(x) - 3.0).abs() < 1e-8);
    assert!(sol.max_violation <= 1e-5);
}

#[test]
fn big_m_forces_binary() {
    let mut m = Model::new("force");
    let x = m.cont("x", 0.0, 100.0);
    let y = m.binary("y");
    // x <= M y, x >= 2 => y must be 1.
    m.add_le(LinExpr::from(x), LinExpr::term(y, 1e3));
    m.add_ge(LinExpr::from(x), LinExpr::constant(2.0));
    m.minimize(LinExpr::from(y));
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.bin_value(Bin::Pos(y)));
}

#[test]
fn contradictory_bounds_infeasible() {
    let mut m = Model::new("contra");
    let x = m.cont("x", 0.0, 1.0);
    m.add_ge(LinExpr::from(x), LinExpr::constant(2.0));
    m.minimize(LinExpr::default());
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn constant_row_folding_detects_contradiction() {
    let mut m = Model::new("const");
    let _x = m.cont("x", 0.0, 1.0);
    m.add_ge(LinExpr::constant(1.0), LinExpr::constant(2.0));
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn signed_multiplier_matches_definition() {
    // w = lambda * (2s - 1), enumerated over s and a lambda grid.
    for s_val in [false, true] {
        for lam_val in [0.0, 0.5, 1.7, 999.0] {
            let mut m = Model::new("signed");
            let lam = m.cont("lam", 0.0, 1e3);
            let s = Bin::Pos(m.binary("s"));
            let w = m.signed_multiplier("w", lam, s, 1e3);
            m.add_eq(LinExpr::from(lam), LinExpr::constant(lam_val));
            m.fix_bin(s, s_val);
            m.minimize(LinExpr::default());
            let sol = m.solve(&cfg()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            let expect = lam_val * if s_val { 1.0 } else { -1.0 };
            assert!(
                (sol.expr_value(&w) - expect).abs() < 1e-6,
                "lambda={lam_val} s={s_val}"
            );
        }
    }
}

#[test]
fn signed_expr_matches_definition() {
    for s_val in [false, true] {
        for z_val in [-3.25, 0.0, 7.5] {
            let mut m = Model::new("signed_expr");
            let z = m.cont("z", -10.0, 10.0);
            let s = Bin::Pos(m.binary("s"));
            let ze = LinExpr::from(z) + LinExpr::constant(1.0);
            let w = m.signed_expr("w", &ze, s, 20.0);
            m.add_eq(LinExpr::from(z), LinExpr::constant(z_val - 1.0));
            m.fix_bin(s, s_val);
            m.minimize(LinExpr::default());
            let sol = m.solve(&cfg()).unwrap();
            let expect = z_val * if s_val { 1.0 } else { -1.0 };
            assert!((sol.expr_value(&w) - expect).abs() < 1e-6);
        }
    }
}

#[test]
fn boolean_gates_exhaustive() {
    // force_and / force_or against their truth tables on up to 3 inputs,
    // both satisfiability of the correct output value and infeasibility of
    // the flipped one.
    for n in 1..=3usize {
        for mask in 0..(1u32 << n) {
            for and_gate in [true, false] {
                for flip in [false, true] {
                    let mut m = Model::new("gate");
                    let ins: Vec<Bin> =
                        (0..n).map(|i| Bin::Pos(m.binary(format!("i{i}")))).collect();
                    let out = Bin::Pos(m.binary("out"));
                    if and_gate {
                        m.force_and(out, &ins);
                    } else {
                        m.force_or(out, &ins);
                    }
                    let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    for (b, &v) in ins.iter().zip(&bits) {
                        m.fix_bin(*b, v);
                    }
                    let truth = if and_gate {
                        bits.iter().all(|&b| b)
                    } else {
                        bits.iter().any(|&b| b)
                    };
                    m.fix_bin(out, truth ^ flip);
                    m.minimize(LinExpr::default());
                    let sol = m.solve(&cfg()).unwrap();
                    if flip {
                        assert_eq!(sol.status, SolveStatus::Infeasible);
                    } else {
                        assert_eq!(sol.status, SolveStatus::Optimal);
                    }
                }
            }
        }
    }
}

#[test]
fn continuous_qp() {
    let mut m = Model::new("qp");
    let x = m.cont("x", 0.0, 10.0);
    let y = m.cont("y", 0.0, 10.0);
    m.add_le(LinExpr::from(x) + LinExpr::from(y), LinExpr::constant(2.0));
    m.minimize(LinExpr::default());
    m.add_quadratic(1.0, LinExpr::from(x) - LinExpr::constant(1.0));
    m.add_quadratic(1.0, LinExpr::from(y) - LinExpr::constant(2.0));
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(x) - 0.5).abs() < 1e-5);
    assert!((sol.value(y) - 1.5).abs() < 1e-5);
}

#[test]
fn miqp_outer_approximation() {
    // min (x - 0.7)^2 + (z - 0.3)^2 with binary z: optimum picks z = 0.
    let mut m = Model::new("miqp");
    let x = m.cont("x", 0.0, 1.0);
    let z = m.binary("z");
    m.minimize(LinExpr::default());
    m.add_quadratic(1.0, LinExpr::from(x) - LinExpr::constant(0.7));
    m.add_quadratic(1.0, LinExpr::from(z) - LinExpr::constant(0.3));
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(!sol.bin_value(Bin::Pos(z)));
    assert!((sol.value(x) - 0.7).abs() < 1e-5);
    assert!((sol.objective - 0.09).abs() < 1e-5);
}

#[test]
fn miqp_with_coupling_constraint() {
    // min (x-2)^2 + (y-2)^2 s.t. x + y <= 2 + 3 z, z binary penalized 5.
    // With z = 0: optimum (1,1) cost 2. With z = 1: (2,2) cost 5. Pick z=0.
    let mut m = Model::new("miqp2");
    let x = m.cont("x", -5.0, 5.0);
    let y = m.cont("y", -5.0, 5.0);
    let z = m.binary("z");
    m.add_le(
        LinExpr::from(x) + LinExpr::from(y),
        LinExpr::constant(2.0) + LinExpr::term(z, 3.0),
    );
    m.minimize(LinExpr::term(z, 5.0));
    m.add_quadratic(1.0, LinExpr::from(x) - LinExpr::constant(2.0));
    m.add_quadratic(1.0, LinExpr::from(y) - LinExpr::constant(2.0));
    let sol = m.solve(&cfg()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(!sol.bin_value(Bin::Pos(z)));
    assert!((sol.objective - 2.0).abs() < 1e-5);
    assert!((sol.value(x) - 1.0).abs() < 1e-4);
}

#[test]
fn maximize_linear() {
    let mut m = Model::new("max");
    let x = m.cont("x", 0.0, 4.0);
    m.maximize(LinExpr::from(x));
    let sol = m.solve(&cfg()).unwrap();
    assert!((sol.objective - 4.0).abs() < 1e-8);
}

#[test]
fn maximize_quadratic_rejected() {
    let mut m = Model::new("maxq");
    let x = m.cont("x", 0.0, 4.0);
    m.maximize(LinExpr::from(x));
    m.add_quadratic(1.0, LinExpr::from(x));
    assert!(matches!(m.solve(&cfg()), Err(SolveError::BadModel(_))));
}

#[test]
fn lp_export_smoke() {
    let mut m = Model::new("export");
    let x = m.cont("x", 0.0, 1.0);
    let b = m.binary("b");
    m.add_le(LinExpr::from(x) + LinExpr::term(b, 2.0), LinExpr::constant(2.5));
    m.minimize(LinExpr::from(x));
    m.add_quadratic(0.5, LinExpr::from(x) - LinExpr::constant(0.25));
    let mut buf = Vec::new();
    m.write_lp(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("Minimize"));
    assert!(text.contains("Binaries"));
    assert!(text.contains("End"));
}

#[test]
fn audit_reports_violation() {
    let mut m = Model::new("audit");
    let x = m.cont("x", 0.0, 1.0);
    m.add_le(LinExpr::from(x), LinExpr::constant(0.5));
    assert!(m.max_violation(&[0.9]) > 0.39);
    assert_eq!(m.max_violation(&[0.2]), 0.0);
}
