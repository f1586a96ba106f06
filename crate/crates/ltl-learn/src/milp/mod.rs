//! Solver-agnostic mixed-integer model builder.
//!
//! Every encoding in the crate goes through [`Model`]: continuous/binary
//! variables with finite bounds, sparse linear rows, and an objective that
//! is linear plus an optional convex sum of squared affine terms. Solving
//! dispatches on shape — pure LP/MILP and continuous QP go straight to the
//! backend, convex quadratic objectives over binaries run through an
//! outer-approximation loop (see [`solve`]).
//!
//! Finite bounds on all continuous variables are a hard requirement; big-M
//! soundness depends on them.

mod lpfile;
mod solve;

pub use solve::SolveError;

use serde::{Deserialize, Serialize};

use crate::config::Config;

/// Index of a registered variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Var(pub(crate) u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug)]
pub(crate) struct VarInfo {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

/// Affine expression `sum(coeff * var) + constant`.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: vec![],
            constant: c,
        }
    }

    pub fn term(v: Var, c: f64) -> Self {
        LinExpr {
            terms: vec![(v, c)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: Var, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        for &(v, c) in &other.terms {
            self.add_term(v, scale * c);
        }
    }

    pub fn sum<I: IntoIterator<Item = LinExpr>>(items: I) -> Self {
        let mut out = LinExpr::default();
        for e in items {
            out.add_expr(&e, 1.0);
        }
        out
    }

    /// Merge duplicate variables and drop zero coefficients.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|(v, _)| v.0);
        let mut merged: Vec<(Var, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.terms = merged;
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0 as usize])
                .sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl std::ops::Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_expr(&rhs, 1.0);
        self
    }
}

impl std::ops::Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_expr(&rhs, -1.0);
        self
    }
}

impl std::ops::Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        self.constant *= k;
        for t in &mut self.terms {
            t.1 *= k;
        }
        self
    }
}

/// A binary value: a constant, a binary variable, or its complement.
/// Complements cost no extra rows anywhere.
#[derive(Clone, Copy, Debug)]
pub enum Bin {
    Const(bool),
    Pos(Var),
    Neg(Var),
}

impl Bin {
    pub fn not(self) -> Bin {
        match self {
            Bin::Const(b) => Bin::Const(!b),
            Bin::Pos(v) => Bin::Neg(v),
            Bin::Neg(v) => Bin::Pos(v),
        }
    }

    pub fn expr(self) -> LinExpr {
        match self {
            Bin::Const(false) => LinExpr::constant(0.0),
            Bin::Const(true) => LinExpr::constant(1.0),
            Bin::Pos(v) => LinExpr::term(v, 1.0),
            Bin::Neg(v) => {
                let mut e = LinExpr::constant(1.0);
                e.add_term(v, -1.0);
                e
            }
        }
    }

    pub fn as_const(self) -> Option<bool> {
        match self {
            Bin::Const(b) => Some(b),
            _ => None,
        }
    }
}

impl From<bool> for Bin {
    fn from(b: bool) -> Self {
        Bin::Const(b)
    }
}

/// Linear row `lb <= terms <= ub` (use infinities for one-sided rows).
#[derive(Clone, Debug)]
pub struct Row {
    pub terms: Vec<(Var, f64)>,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Mixed-integer model with linear rows and a linear + sum-of-squares
/// objective. Single-owner mutable while building; immutable to solve.
#[derive(Clone, Debug)]
pub struct Model {
    pub(crate) name: String,
    pub(crate) vars: Vec<VarInfo>,
    pub(crate) rows: Vec<Row>,
    pub(crate) sense: Sense,
    pub(crate) obj: LinExpr,
    /// Convex part: `sum(weight * expr^2)` with nonnegative weights.
    pub(crate) quad: Vec<(f64, LinExpr)>,
    /// Set when constraint folding detects a contradiction among constants.
    pub(crate) build_infeasible: Option<String>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model {
            name: name.into(),
            vars: vec![],
            rows: vec![],
            sense: Sense::Minimize,
            obj: LinExpr::default(),
            quad: vec![],
            build_infeasible: None,
        }
    }

    pub fn cont(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> Var {
        assert!(
            lb.is_finite() && ub.is_finite() && lb <= ub,
            "continuous variable must carry finite ordered bounds, got [{lb}, {ub}]"
        );
        self.vars.push(VarInfo {
            name: name.into(),
            kind: VarKind::Continuous,
            lb,
            ub,
        });
        Var(self.vars.len() as u32 - 1)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Var {
        self.vars.push(VarInfo {
            name: name.into(),
            kind: VarKind::Binary,
            lb: 0.0,
            ub: 1.0,
        });
        Var(self.vars.len() as u32 - 1)
    }

    /// A binary wrapped as [`Bin`], or a constant when already decided.
    pub fn bin(&mut self, name: impl Into<String>, forced: Option<bool>) -> Bin {
        match forced {
            Some(b) => Bin::Const(b),
            None => Bin::Pos(self.binary(name)),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn var_bounds(&self, v: Var) -> (f64, f64) {
        let info = &self.vars[v.0 as usize];
        (info.lb, info.ub)
    }

    pub fn set_var_bounds(&mut self, v: Var, lb: f64, ub: f64) {
        let info = &mut self.vars[v.0 as usize];
        info.lb = lb;
        info.ub = ub;
    }

    fn add_row(&mut self, expr: LinExpr, lb: f64, ub: f64) {
        let e = expr.normalized();
        if e.terms.is_empty() {
            // No decision variables left: the row is a numeric fact.
            let v = e.constant;
            if v < lb - 1e-9 || v > ub + 1e-9 {
                if self.build_infeasible.is_none() {
                    self.build_infeasible =
                        Some(format!("constant row violated: {v} not in [{lb}, {ub}]"));
                }
            }
            return;
        }
        self.rows.push(Row {
            terms: e.terms,
            lb: lb - e.constant,
            ub: ub - e.constant,
        });
    }

    pub fn add_le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add_row(lhs - rhs, f64::NEG_INFINITY, 0.0);
    }

    pub fn add_ge(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add_row(lhs - rhs, 0.0, f64::INFINITY);
    }

    pub fn add_eq(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add_row(lhs - rhs, 0.0, 0.0);
    }

    pub fn add_range(&mut self, expr: LinExpr, lb: f64, ub: f64) {
        self.add_row(expr, lb, ub);
    }

    pub fn minimize(&mut self, obj: LinExpr) {
        self.sense = Sense::Minimize;
        self.obj = obj.normalized();
    }

    pub fn maximize(&mut self, obj: LinExpr) {
        self.sense = Sense::Maximize;
        self.obj = obj.normalized();
    }

    /// Add `weight * expr^2` to the objective. Only valid when minimizing.
    pub fn add_quadratic(&mut self, weight: f64, expr: LinExpr) {
        assert!(weight >= 0.0, "squared terms must have nonnegative weights");
        if weight > 0.0 {
            self.quad.push((weight, expr.normalized()));
        }
    }

    pub fn has_quadratic(&self) -> bool {
        !self.quad.is_empty()
    }

    pub fn objective_at(&self, values: &[f64]) -> f64 {
        let mut v = self.obj.eval(values);
        for (w, e) in &self.quad {
            let x = e.eval(values);
            v += w * x * x;
        }
        v
    }

    /// Interval bound on `|expr|` from variable bounds.
    pub(crate) fn abs_bound(&self, expr: &LinExpr) -> f64 {
        let mut lo = expr.constant;
        let mut hi = expr.constant;
        for &(v, c) in &expr.terms {
            let (lb, ub) = self.var_bounds(v);
            if c >= 0.0 {
                lo += c * lb;
                hi += c * ub;
            } else {
                lo += c * ub;
                hi += c * lb;
            }
        }
        lo.abs().max(hi.abs())
    }

    // ----- big-M utilities -----------------------------------------------

    /// `cond = 1` forces `lhs <= rhs`; inactive otherwise (slack `m`).
    pub fn implies_le(&mut self, cond: Bin, lhs: LinExpr, rhs: LinExpr, m: f64) {
        match cond {
            Bin::Const(true) => self.add_le(lhs, rhs),
            Bin::Const(false) => {}
            _ => {
                let relax = cond.not().expr() * m;
                self.add_le(lhs, rhs + relax);
            }
        }
    }

    /// `cond = 1` forces `lhs >= rhs`.
    pub fn implies_ge(&mut self, cond: Bin, lhs: LinExpr, rhs: LinExpr, m: f64) {
        match cond {
            Bin::Const(true) => self.add_ge(lhs, rhs),
            Bin::Const(false) => {}
            _ => {
                let relax = cond.not().expr() * m;
                self.add_ge(lhs, rhs - relax);
            }
        }
    }

    /// Fresh `w` constrained to equal `lambda * (2s - 1)` for a nonnegative
    /// multiplier `lambda` bounded by `m_lambda`:
    /// `w <= lambda`, `w >= -lambda`, `w >= lambda - 2*m_lambda*(1-s)`,
    /// `w <= -lambda + 2*m_lambda*s`.
    pub fn signed_multiplier(
        &mut self,
        name: impl Into<String>,
        lambda: Var,
        s: Bin,
        m_lambda: f64,
    ) -> LinExpr {
        let lam = LinExpr::from(lambda);
        match s {
            Bin::Const(true) => lam,
            Bin::Const(false) => lam * -1.0,
            _ => {
                let w = self.cont(name, -m_lambda, m_lambda);
                let we = LinExpr::from(w);
                self.add_le(we.clone(), lam.clone());
                self.add_ge(we.clone(), lam.clone() * -1.0);
                self.add_ge(
                    we.clone(),
                    lam.clone() - s.not().expr() * (2.0 * m_lambda),
                );
                self.add_le(we.clone(), lam * -1.0 + s.expr() * (2.0 * m_lambda));
                we
            }
        }
    }

    /// Fresh `w` constrained to equal `z * (2s - 1)` for a general affine
    /// `z` with `|z| <= bound`.
    pub fn signed_expr(
        &mut self,
        name: impl Into<String>,
        z: &LinExpr,
        s: Bin,
        bound: f64,
    ) -> LinExpr {
        match s {
            Bin::Const(true) => z.clone(),
            Bin::Const(false) => z.clone() * -1.0,
            _ => {
                let w = self.cont(name, -bound, bound);
                let we = LinExpr::from(w);
                let relax_pos = s.not().expr() * (2.0 * bound);
                let relax_neg = s.expr() * (2.0 * bound);
                self.add_le(we.clone(), z.clone() + relax_pos.clone());
                self.add_ge(we.clone(), z.clone() - relax_pos);
                self.add_le(we.clone(), z.clone() * -1.0 + relax_neg.clone());
                self.add_ge(we.clone(), z.clone() * -1.0 - relax_neg);
                we
            }
        }
    }

    // ----- boolean structure (unit big-M; all operands are 0/1-valued) ----

    /// Force `out = AND(ins)`. Operands may be continuous as long as the
    /// surrounding rows pin them to 0/1 at every feasible point.
    pub fn force_and(&mut self, out: Bin, ins: &[Bin]) {
        let mut live: Vec<Bin> = Vec::with_capacity(ins.len());
        for &b in ins {
            match b.as_const() {
                Some(true) => {}
                Some(false) => {
                    self.add_eq(out.expr(), LinExpr::constant(0.0));
                    return;
                }
                None => live.push(b),
            }
        }
        if live.is_empty() {
            self.add_eq(out.expr(), LinExpr::constant(1.0));
            return;
        }
        if live.len() == 1 {
            self.add_eq(out.expr(), live[0].expr());
            return;
        }
        let mut sum = LinExpr::constant(-((live.len() - 1) as f64));
        for b in &live {
            self.add_le(out.expr(), b.expr());
            sum.add_expr(&b.expr(), 1.0);
        }
        self.add_ge(out.expr(), sum);
    }

    /// Force `out = OR(ins)`.
    pub fn force_or(&mut self, out: Bin, ins: &[Bin]) {
        let mut live: Vec<Bin> = Vec::with_capacity(ins.len());
        for &b in ins {
            match b.as_const() {
                Some(false) => {}
                Some(true) => {
                    self.add_eq(out.expr(), LinExpr::constant(1.0));
                    return;
                }
                None => live.push(b),
            }
        }
        if live.is_empty() {
            self.add_eq(out.expr(), LinExpr::constant(0.0));
            return;
        }
        if live.len() == 1 {
            self.add_eq(out.expr(), live[0].expr());
            return;
        }
        let mut sum = LinExpr::default();
        for b in &live {
            self.add_ge(out.expr(), b.expr());
            sum.add_expr(&b.expr(), 1.0);
        }
        self.add_le(out.expr(), sum);
    }

    /// Force `out = a AND b` for exactly two operands.
    pub fn force_and2(&mut self, out: Bin, a: Bin, b: Bin) {
        self.force_and(out, &[a, b]);
    }

    /// Force `out = a OR b`.
    pub fn force_or2(&mut self, out: Bin, a: Bin, b: Bin) {
        self.force_or(out, &[a, b]);
    }

    /// Pin a [`Bin`] to a constant truth value.
    pub fn fix_bin(&mut self, b: Bin, value: bool) {
        self.add_eq(b.expr(), LinExpr::constant(if value { 1.0 } else { 0.0 }));
    }

    // ----- audit ----------------------------------------------------------

    /// Largest violation of any row or bound at `values`, exact arithmetic
    /// on the stored rows.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let v: f64 = row.terms.iter().map(|&(x, c)| c * values[x.0 as usize]).sum();
            worst = worst.max(row.lb - v).max(v - row.ub);
        }
        for (i, info) in self.vars.iter().enumerate() {
            let v = values[i];
            worst = worst.max(info.lb - v).max(v - info.ub);
            if info.kind == VarKind::Binary {
                worst = worst.max((v - v.round()).abs());
            }
        }
        worst
    }

    pub fn solve(&self, cfg: &Config) -> Result<Solution, SolveError> {
        solve::solve(self, cfg)
    }

    /// Feasibility check: solves with a zero objective.
    pub fn feasibility(&self, cfg: &Config) -> Result<Solution, SolveError> {
        let mut m = self.clone();
        m.minimize(LinExpr::default());
        m.quad.clear();
        solve::solve(&m, cfg)
    }

    /// Export in CPLEX LP format for offline debugging.
    pub fn write_lp<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        lpfile::write_lp(self, w)
    }
}

/// Result classification of a solve.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Proven optimal (for feasibility problems: a feasible point).
    Optimal,
    /// Feasible incumbent without an optimality proof.
    Feasible,
    /// Proven infeasible.
    Infeasible,
    /// Hit the time limit; any values carried are the incumbent.
    TimeLimit,
}

/// Values and status returned by a solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Best proven bound on the objective (equals `objective` at optimality).
    pub bound: f64,
    pub max_violation: f64,
}

impl Solution {
    pub fn infeasible() -> Self {
        Solution {
            status: SolveStatus::Infeasible,
            values: vec![],
            objective: f64::NAN,
            bound: f64::NAN,
            max_violation: 0.0,
        }
    }

    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.0 as usize]
    }

    pub fn expr_value(&self, e: &LinExpr) -> f64 {
        e.eval(&self.values)
    }

    pub fn bin_value(&self, b: Bin) -> bool {
        match b {
            Bin::Const(c) => c,
            Bin::Pos(v) => self.value(v) > 0.5,
            Bin::Neg(v) => self.value(v) <= 0.5,
        }
    }
}

#[cfg(test)]
mod tests;
