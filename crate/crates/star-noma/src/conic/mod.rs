//! Minimal disciplined conic-problem layer: linear objective over real
//! scalars and Hermitian matrix variables, with equality, inequality,
//! second-order-cone, and PSD constraints, plus the in-tree interior
//! point backend that solves the compiled standard form.
//!
//! # Backend contract
//!
//! Compilation targets the form `min c.x, A x = b, x in K` with `K` a
//! product of a nonnegative orthant and Hermitian PSD blocks. Any
//! interior-point backend supporting {linear, SOC, PSD} cones can sit
//! behind [`ConicProblem::solve`]; the bundled one ([`solver`]) accepts
//! SOC constraints through their PSD representations (a rotated cone
//! `z^2 <= x y` is the 2x2 matrix `[[x, z], [z, y]] >= 0`, a general cone
//! `||v|| <= t` the arrow matrix `[[t, v'], [v, t I]] >= 0`), which keeps
//! a single cone family in the Newton system. Free scalars are split
//! into differences of nonnegative pairs. Complex Hermitian blocks are
//! handled natively; the real symmetric embedding `[[Re, -Im], [Im,
//! Re]]` in [`embed`] is used by the problem dump so external real-cone
//! solvers can cross-check a dumped instance.
//!
//! Determinism: compilation and the backend are free of randomness, so
//! identical problems and tolerances produce identical solutions.

pub mod embed;
mod expr;
pub(crate) mod solver;

pub use expr::LinExpr;
pub use solver::SolveStatus;

use crate::{C64, CMat};
use solver::{MatCoef, RowCoef, Standard};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("reference to a variable from a different problem")]
    ForeignVariable,
    #[error("variable `{0}` is not a scalar")]
    NotScalar(String),
    #[error("variable `{0}` is not Hermitian")]
    NotHermitian(String),
    #[error("coefficient for `{0}` is not Hermitian or has wrong order")]
    BadCoefficient(String),
    #[error("PSD constraint applies only to Hermitian variables")]
    PsdOnScalar,
    #[error("Hermitian variable `{0}` needs a PSD constraint for this backend")]
    UnconstrainedHermitian(String),
    #[error("second-order cone needs at least one vector entry")]
    EmptyCone,
}

/// Handle to a declared variable; only valid with the problem that
/// created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId {
    tag: u64,
    index: usize,
}

#[derive(Debug, Clone)]
enum VarKind {
    Scalar { nonneg: bool },
    Hermitian(usize),
}

#[derive(Debug, Clone)]
struct VarDecl {
    name: String,
    kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Eq,
    Ineq,
    Soc,
    Psd,
}

#[derive(Debug, Clone)]
enum Constraint {
    /// `expr = 0`
    Eq(LinExpr),
    /// `expr <= 0`
    Le(LinExpr),
    /// `||v|| <= t`
    Soc { t: LinExpr, v: Vec<LinExpr> },
    /// `z^2 <= x y`, `x, y >= 0`
    Rotated { x: LinExpr, y: LinExpr, z: LinExpr },
    /// variable is PSD
    Psd(usize),
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Eq(_) => ConstraintKind::Eq,
            Constraint::Le(_) => ConstraintKind::Ineq,
            Constraint::Soc { .. } | Constraint::Rotated { .. } => ConstraintKind::Soc,
            Constraint::Psd(_) => ConstraintKind::Psd,
        }
    }
}

/// Value of one variable in a solution.
#[derive(Debug, Clone)]
pub enum Value {
    Scalar(f64),
    Hermitian(CMat),
}

impl Value {
    pub fn as_scalar(&self) -> f64 {
        match self {
            Value::Scalar(v) => *v,
            Value::Hermitian(_) => panic!("expected a scalar value"),
        }
    }
    pub fn as_matrix(&self) -> &CMat {
        match self {
            Value::Hermitian(m) => m,
            Value::Scalar(_) => panic!("expected a matrix value"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Value of the (maximized) objective at the returned point.
    pub objective_value: f64,
    /// Matching dual bound reported by the backend.
    pub dual_bound: f64,
    values: HashMap<String, Value>,
    pub max_constraint_violation: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn value(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }
    pub fn scalar(&self, name: &str) -> f64 {
        self.values[name].as_scalar()
    }
    pub fn matrix(&self, name: &str) -> &CMat {
        self.values[name].as_matrix()
    }
}

static PROBLEM_TAG: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(1);

/// Builder for one conic program; single-owner mutable, solve as often
/// as desired.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    tag: u64,
    vars: Vec<VarDecl>,
    names: HashMap<String, usize>,
    constraints: Vec<Constraint>,
    objective: LinExpr,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProblem {
    pub fn new() -> ConicProblem {
        ConicProblem {
            tag: PROBLEM_TAG.fetch_add(1, std::sync::atomic::Ordering::Relaxed),
            vars: Vec::new(),
            names: HashMap::new(),
            constraints: Vec::new(),
            objective: LinExpr::default(),
        }
    }

    fn declare(&mut self, name: &str, kind: VarKind) -> Result<VarId, ConicError> {
        if self.names.contains_key(name) {
            return Err(ConicError::DuplicateName(name.to_string()));
        }
        let index = self.vars.len();
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind,
        });
        self.names.insert(name.to_string(), index);
        Ok(VarId {
            tag: self.tag,
            index,
        })
    }

    /// Free real scalar.
    pub fn add_scalar(&mut self, name: &str) -> Result<VarId, ConicError> {
        self.declare(name, VarKind::Scalar { nonneg: false })
    }

    /// Nonnegative real scalar.
    pub fn add_nonneg_scalar(&mut self, name: &str) -> Result<VarId, ConicError> {
        self.declare(name, VarKind::Scalar { nonneg: true })
    }

    /// Hermitian matrix variable of the given order.
    pub fn add_hermitian(&mut self, name: &str, order: usize) -> Result<VarId, ConicError> {
        self.declare(name, VarKind::Hermitian(order))
    }

    fn check_expr(&self, e: &LinExpr) -> Result<(), ConicError> {
        for (v, _) in &e.scalar_terms {
            if v.tag != self.tag {
                return Err(ConicError::ForeignVariable);
            }
            match self.vars[v.index].kind {
                VarKind::Scalar { .. } => {}
                VarKind::Hermitian(_) => {
                    return Err(ConicError::NotScalar(self.vars[v.index].name.clone()))
                }
            }
        }
        for (v, c) in &e.trace_terms {
            if v.tag != self.tag {
                return Err(ConicError::ForeignVariable);
            }
            match self.vars[v.index].kind {
                VarKind::Hermitian(n) => {
                    if c.nrows() != n || c.ncols() != n {
                        return Err(ConicError::BadCoefficient(self.vars[v.index].name.clone()));
                    }
                    let dev = (c - c.adjoint()).norm();
                    if dev > 1e-9 * (1.0 + c.norm()) {
                        return Err(ConicError::BadCoefficient(self.vars[v.index].name.clone()));
                    }
                }
                VarKind::Scalar { .. } => {
                    return Err(ConicError::NotHermitian(self.vars[v.index].name.clone()))
                }
            }
        }
        Ok(())
    }

    /// `expr = 0`.
    pub fn add_eq(&mut self, expr: LinExpr) -> Result<(), ConicError> {
        self.check_expr(&expr)?;
        self.constraints.push(Constraint::Eq(expr));
        Ok(())
    }

    /// `expr <= 0`.
    pub fn add_le(&mut self, expr: LinExpr) -> Result<(), ConicError> {
        self.check_expr(&expr)?;
        self.constraints.push(Constraint::Le(expr));
        Ok(())
    }

    /// `expr >= 0`.
    pub fn add_ge(&mut self, expr: LinExpr) -> Result<(), ConicError> {
        self.add_le(-expr)
    }

    /// `||v|| <= t` over affine entries.
    pub fn add_soc(&mut self, t: LinExpr, v: Vec<LinExpr>) -> Result<(), ConicError> {
        if v.is_empty() {
            return Err(ConicError::EmptyCone);
        }
        self.check_expr(&t)?;
        for e in &v {
            self.check_expr(e)?;
        }
        self.constraints.push(Constraint::Soc { t, v });
        Ok(())
    }

    /// Rotated cone `z^2 <= x * y` with `x, y >= 0`.
    pub fn add_rotated_cone(&mut self, x: LinExpr, y: LinExpr, z: LinExpr) -> Result<(), ConicError> {
        self.check_expr(&x)?;
        self.check_expr(&y)?;
        self.check_expr(&z)?;
        self.constraints.push(Constraint::Rotated { x, y, z });
        Ok(())
    }

    /// Constrain a Hermitian variable to the PSD cone.
    pub fn add_psd(&mut self, var: VarId) -> Result<(), ConicError> {
        if var.tag != self.tag {
            return Err(ConicError::ForeignVariable);
        }
        match self.vars[var.index].kind {
            VarKind::Hermitian(_) => {
                if !self
                    .constraints
                    .iter()
                    .any(|c| matches!(c, Constraint::Psd(i) if *i == var.index))
                {
                    self.constraints.push(Constraint::Psd(var.index));
                }
                Ok(())
            }
            VarKind::Scalar { .. } => Err(ConicError::PsdOnScalar),
        }
    }

    /// Objective, maximized.
    pub fn set_objective(&mut self, expr: LinExpr) -> Result<(), ConicError> {
        self.check_expr(&expr)?;
        self.objective = expr;
        Ok(())
    }

    pub fn constraint_kinds(&self) -> Vec<ConstraintKind> {
        self.constraints.iter().map(|c| c.kind()).collect()
    }

    // -----------------------------------------------------------------
    // compilation
    // -----------------------------------------------------------------

    fn compile(&self) -> Result<Compiled, ConicError> {
        // variable layout
        let mut nonneg_len = 0usize;
        let mut herm_orders = Vec::new();
        let mut layout = Vec::with_capacity(self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            match v.kind {
                VarKind::Scalar { nonneg } => {
                    if nonneg {
                        layout.push(Slot::NonNeg(nonneg_len));
                        nonneg_len += 1;
                    } else {
                        layout.push(Slot::Split(nonneg_len, nonneg_len + 1));
                        nonneg_len += 2;
                    }
                }
                VarKind::Hermitian(n) => {
                    let has_psd = self
                        .constraints
                        .iter()
                        .any(|c| matches!(c, Constraint::Psd(idx) if *idx == i));
                    if !has_psd {
                        return Err(ConicError::UnconstrainedHermitian(v.name.clone()));
                    }
                    layout.push(Slot::Block(herm_orders.len()));
                    herm_orders.push(n);
                }
            }
        }

        let mut p = Standard {
            nonneg_len,
            herm_orders: herm_orders.clone(),
            rows: Vec::new(),
            b: Vec::new(),
            cost: RowCoef::default(),
        };

        // expression -> row coefficients + moved constant
        let to_row = |expr: &LinExpr| -> (RowCoef, f64) {
            let mut row = RowCoef::default();
            for (v, coef) in &expr.scalar_terms {
                match layout[v.index] {
                    Slot::NonNeg(i) => row.scalars.push((i, *coef)),
                    Slot::Split(ip, im) => {
                        row.scalars.push((ip, *coef));
                        row.scalars.push((im, -*coef));
                    }
                    Slot::Block(_) => unreachable!("checked at declaration"),
                }
            }
            for (v, c) in &expr.trace_terms {
                if let Slot::Block(b) = layout[v.index] {
                    let n = c.nrows();
                    let mut mc = MatCoef::default();
                    for j in 0..n {
                        for i in 0..=j {
                            // average the two triangles so mc is exactly Hermitian
                            let val = if i == j {
                                C64::from(c[(i, i)].re)
                            } else {
                                (c[(i, j)] + c[(j, i)].conj()) * C64::from(0.5)
                            };
                            if val.norm() > 0.0 {
                                mc.entries.push((i, j, val));
                            }
                        }
                    }
                    merge_mat(&mut row.mats, b, mc);
                }
            }
            (row, expr.constant)
        };

        for c in &self.constraints {
            match c {
                Constraint::Eq(e) => {
                    let (row, k) = to_row(e);
                    p.rows.push(row);
                    p.b.push(-k);
                }
                Constraint::Le(e) => {
                    let (mut row, k) = to_row(e);
                    let slack = p.nonneg_len;
                    p.nonneg_len += 1;
                    row.scalars.push((slack, 1.0));
                    p.rows.push(row);
                    p.b.push(-k);
                }
                Constraint::Rotated { x, y, z } => {
                    let b = p.herm_orders.len();
                    p.herm_orders.push(2);
                    // entry links: B00 = x, B11 = y, Re B01 = z, Im B01 = 0
                    let links: [(usize, usize, C64, &LinExpr); 3] = [
                        (0, 0, C64::from(1.0), x),
                        (1, 1, C64::from(1.0), y),
                        (0, 1, C64::from(1.0), z),
                    ];
                    for (i, j, unit, e) in links {
                        let (mut row, k) = to_row(e);
                        row.scale(-1.0);
                        // off-diagonal link: Tr picks 2 Re(conj(coef) B01),
                        // so coefficient 1/2 reads Re B01 exactly.
                        let coef = if i == j { unit } else { unit * C64::from(0.5) };
                        merge_mat(
                            &mut row.mats,
                            b,
                            MatCoef {
                                entries: vec![(i, j, coef)],
                            },
                        );
                        p.rows.push(row);
                        p.b.push(k);
                    }
                    // Im B01 = 0: coefficient i/2 reads Im B01
                    p.rows.push(RowCoef {
                        scalars: vec![],
                        mats: vec![(
                            b,
                            MatCoef {
                                entries: vec![(0, 1, C64::new(0.0, 0.5))],
                            },
                        )],
                    });
                    p.b.push(0.0);
                }
                Constraint::Soc { t, v } => {
                    let d = v.len() + 1;
                    let b = p.herm_orders.len();
                    p.herm_orders.push(d);
                    // arrow matrix [[t, v'],[v, t I]]
                    fn link(
                        p: &mut Standard,
                        b: usize,
                        i: usize,
                        j: usize,
                        coef: C64,
                        row_k: Option<(RowCoef, f64)>,
                    ) {
                        let (mut row, k) = row_k.unwrap_or((RowCoef::default(), 0.0));
                        row.scale(-1.0);
                        merge_mat(
                            &mut row.mats,
                            b,
                            MatCoef {
                                entries: vec![(i, j, coef)],
                            },
                        );
                        p.rows.push(row);
                        p.b.push(k);
                    }
                    link(&mut p, b, 0, 0, C64::from(1.0), Some(to_row(t)));
                    for (idx, e) in v.iter().enumerate() {
                        let j = idx + 1;
                        link(&mut p, b, 0, j, C64::from(0.5), Some(to_row(e)));
                        link(&mut p, b, 0, j, C64::new(0.0, 0.5), None); // imaginary part zero
                        // diagonal tied to t: B_jj - t = 0
                        link(&mut p, b, j, j, C64::from(1.0), Some(to_row(t)));
                    }
                    for i in 1..d {
                        for j in (i + 1)..d {
                            link(&mut p, b, i, j, C64::from(0.5), None);
                            link(&mut p, b, i, j, C64::new(0.0, 0.5), None);
                        }
                    }
                }
                Constraint::Psd(_) => {} // handled by layout
            }
        }

        // objective: maximize expr == minimize -expr
        let (mut cost, cost_const) = to_row(&self.objective);
        cost.scale(-1.0);
        p.cost = cost;

        Ok(Compiled {
            standard: p,
            layout,
            objective_constant: cost_const,
        })
    }

    /// Compile and solve at the given tolerance.
    pub fn solve(&self, tol: f64) -> Result<ConicSolution, ConicError> {
        let compiled = self.compile()?;
        let opts = solver::SolverOptions {
            tol,
            max_iter: 100,
        };
        let raw = solver::solve(&compiled.standard, &opts);
        let mut values = HashMap::new();
        if matches!(raw.status, SolveStatus::Optimal | SolveStatus::NumericalLimit) {
            for (decl, slot) in self.vars.iter().zip(&compiled.layout) {
                let v = match *slot {
                    Slot::NonNeg(i) => Value::Scalar(raw.x.s[i]),
                    Slot::Split(ip, im) => Value::Scalar(raw.x.s[ip] - raw.x.s[im]),
                    Slot::Block(b) => Value::Hermitian(raw.x.m[b].clone()),
                };
                values.insert(decl.name.clone(), v);
            }
        }
        let max_violation = self.max_violation(&values);
        Ok(ConicSolution {
            status: raw.status,
            objective_value: -raw.primal_objective + compiled.objective_constant,
            dual_bound: -raw.dual_objective + compiled.objective_constant,
            values,
            max_constraint_violation: max_violation,
            iterations: raw.iterations,
        })
    }

    fn eval(&self, e: &LinExpr, values: &HashMap<String, Value>) -> f64 {
        self.eval_scaled(e, values).0
    }

    /// Expression value together with the magnitude of its terms, used to
    /// normalize residuals on arbitrarily scaled constraints.
    fn eval_scaled(&self, e: &LinExpr, values: &HashMap<String, Value>) -> (f64, f64) {
        let mut acc = e.constant;
        let mut scale = e.constant.abs();
        for (v, coef) in &e.scalar_terms {
            let t = coef * values[&self.vars[v.index].name].as_scalar();
            acc += t;
            scale += t.abs();
        }
        for (v, c) in &e.trace_terms {
            let m = values[&self.vars[v.index].name].as_matrix();
            let t = (c.adjoint() * m).trace().re;
            acc += t;
            scale += t.abs();
        }
        (acc, scale)
    }

    /// Worst violation of the declared constraints at the given values.
    pub fn max_violation(&self, values: &HashMap<String, Value>) -> f64 {
        if values.is_empty() {
            return f64::NAN;
        }
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let v = match c {
                Constraint::Eq(e) => {
                    let (val, scale) = self.eval_scaled(e, values);
                    val.abs() / scale.max(1.0)
                }
                Constraint::Le(e) => {
                    let (val, scale) = self.eval_scaled(e, values);
                    val.max(0.0) / scale.max(1.0)
                }
                Constraint::Soc { t, v } => {
                    let (tv, ts) = self.eval_scaled(t, values);
                    let nv = v.iter().map(|e| self.eval(e, values).powi(2)).sum::<f64>().sqrt();
                    (nv - tv).max(0.0) / ts.max(nv).max(1.0)
                }
                Constraint::Rotated { x, y, z } => {
                    let (xv, xs) = self.eval_scaled(x, values);
                    let (yv, ys) = self.eval_scaled(y, values);
                    let zv = self.eval(z, values);
                    let scale = (xs * ys).max(zv * zv).max(1.0);
                    ((zv * zv - xv * yv).max(0.0) / scale)
                        .max(-xv / xs.max(1.0))
                        .max(-yv / ys.max(1.0))
                }
                Constraint::Psd(idx) => {
                    let m = values[&self.vars[*idx].name].as_matrix();
                    if m.nrows() == 0 {
                        0.0
                    } else {
                        let eig = m.clone().symmetric_eigen();
                        let lo = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                        let hi = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                        (-lo).max(0.0) / hi.max(1.0)
                    }
                }
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Plain-text dump of the problem in a documented sparse layout:
    /// one `var`/`objective`/`constraint` stanza per line group, Hermitian
    /// coefficients listed entrywise on the real symmetric embedding.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "conic v1").unwrap();
        for v in &self.vars {
            match v.kind {
                VarKind::Scalar { nonneg } => {
                    writeln!(out, "var scalar {} {}", v.name, if nonneg { "nonneg" } else { "free" })
                        .unwrap()
                }
                VarKind::Hermitian(n) => {
                    writeln!(out, "var hermitian {} {} embedded {}", v.name, n, 2 * n).unwrap()
                }
            }
        }
        let write_expr = |out: &mut String, e: &LinExpr| {
            writeln!(out, "  const {}", e.constant).unwrap();
            for (v, coef) in &e.scalar_terms {
                writeln!(out, "  s {} {}", self.vars[v.index].name, coef).unwrap();
            }
            for (v, c) in &e.trace_terms {
                let emb = embed::embed_hermitian(c);
                for i in 0..emb.nrows() {
                    for j in i..emb.ncols() {
                        if emb[(i, j)] != 0.0 {
                            writeln!(
                                out,
                                "  m {} {} {} {}",
                                self.vars[v.index].name,
                                i,
                                j,
                                // halve so the symmetric pair sums back
                                if i == j { emb[(i, j)] * 0.5 } else { emb[(i, j)] }
                            )
                            .unwrap();
                        }
                    }
                }
            }
        };
        writeln!(out, "objective maximize").unwrap();
        write_expr(&mut out, &self.objective);
        for c in &self.constraints {
            match c {
                Constraint::Eq(e) => {
                    writeln!(out, "constraint eq").unwrap();
                    write_expr(&mut out, e);
                }
                Constraint::Le(e) => {
                    writeln!(out, "constraint le").unwrap();
                    write_expr(&mut out, e);
                }
                Constraint::Soc { t, v } => {
                    writeln!(out, "constraint soc {}", v.len() + 1).unwrap();
                    write_expr(&mut out, t);
                    for e in v {
                        writeln!(out, " entry").unwrap();
                        write_expr(&mut out, e);
                    }
                }
                Constraint::Rotated { x, y, z } => {
                    writeln!(out, "constraint rotated").unwrap();
                    write_expr(&mut out, x);
                    write_expr(&mut out, y);
                    write_expr(&mut out, z);
                }
                Constraint::Psd(i) => {
                    writeln!(out, "constraint psd {}", self.vars[*i].name).unwrap();
                }
            }
        }
        out
    }
}

fn merge_mat(mats: &mut Vec<(usize, MatCoef)>, block: usize, mc: MatCoef) {
    if let Some((_, existing)) = mats.iter_mut().find(|(b, _)| *b == block) {
        existing.entries.extend(mc.entries);
    } else {
        mats.push((block, mc));
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    NonNeg(usize),
    Split(usize, usize),
    Block(usize),
}

struct Compiled {
    standard: Standard,
    layout: Vec<Slot>,
    objective_constant: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-7;

    #[test]
    fn maximize_with_upper_bound() {
        let mut p = ConicProblem::new();
        let x = p.add_scalar("x").unwrap();
        p.add_le(LinExpr::scalar(x, 1.0).add_const(-5.0)).unwrap();
        p.set_objective(LinExpr::scalar(x, 1.0)).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 5.0).abs() < 1e-6);
        assert!((sol.scalar("x") - 5.0).abs() < 1e-6);
        assert!(sol.max_constraint_violation <= 1e-7);
        assert!((sol.dual_bound - sol.objective_value).abs() <= 10.0 * TOL * 5.0 + 1e-6);
    }

    #[test]
    fn euclidean_norm_cone() {
        // minimize t s.t. ||(3,4)|| <= t  -> 5
        let mut p = ConicProblem::new();
        let t = p.add_scalar("t").unwrap();
        p.add_soc(
            LinExpr::scalar(t, 1.0),
            vec![LinExpr::constant(3.0), LinExpr::constant(4.0)],
        )
        .unwrap();
        p.set_objective(LinExpr::scalar(t, -1.0)).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.scalar("t") - 5.0).abs() < 1e-6, "t = {}", sol.scalar("t"));
    }

    #[test]
    fn trace_cap_sdp() {
        // maximize Tr(X) s.t. X psd (2x2), X <= I elementwise via trace rows:
        // here: X_00 <= 1, X_11 <= 1 is weaker than X <= I; use the
        // spectral form through Tr with I and a second variable bound.
        // The classic: max Tr X, X psd, I - X psd -> 2.
        let mut p = ConicProblem::new();
        let x = p.add_hermitian("x", 2).unwrap();
        let s = p.add_hermitian("slack", 2).unwrap();
        p.add_psd(x).unwrap();
        p.add_psd(s).unwrap();
        // X + S = I entrywise
        for (i, j, unit) in [
            (0usize, 0usize, C64::from(1.0)),
            (1, 1, C64::from(1.0)),
            (0, 1, C64::from(0.5)),
            (0, 1, C64::new(0.0, 0.5)),
        ] {
            let mut c = CMat::zeros(2, 2);
            c[(i, j)] = unit;
            c[(j, i)] = unit.conj();
            if i == j {
                c[(i, j)] = unit;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            p.add_eq(
                LinExpr::trace(x, c.clone())
                    .add_trace(s, c)
                    .add_const(-target),
            )
            .unwrap();
        }
        p.set_objective(LinExpr::trace(x, CMat::identity(2, 2))).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-5, "{}", sol.objective_value);
        let xm = sol.matrix("x");
        assert!((xm[(0, 0)].re - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rotated_cone_geometric_mean() {
        // maximize z s.t. z^2 <= x*y, x = 4, y = 9 -> z = 6
        let mut p = ConicProblem::new();
        let x = p.add_nonneg_scalar("x").unwrap();
        let y = p.add_nonneg_scalar("y").unwrap();
        let z = p.add_scalar("z").unwrap();
        p.add_eq(LinExpr::scalar(x, 1.0).add_const(-4.0)).unwrap();
        p.add_eq(LinExpr::scalar(y, 1.0).add_const(-9.0)).unwrap();
        p.add_rotated_cone(
            LinExpr::scalar(x, 1.0),
            LinExpr::scalar(y, 1.0),
            LinExpr::scalar(z, 1.0),
        )
        .unwrap();
        p.set_objective(LinExpr::scalar(z, 1.0)).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.scalar("z") - 6.0).abs() < 1e-5, "z = {}", sol.scalar("z"));
    }

    #[test]
    fn builder_rejects_misuse() {
        let mut p = ConicProblem::new();
        let x = p.add_scalar("x").unwrap();
        assert!(matches!(
            p.add_scalar("x"),
            Err(ConicError::DuplicateName(_))
        ));
        assert!(matches!(p.add_psd(x), Err(ConicError::PsdOnScalar)));
        let mut other = ConicProblem::new();
        let foreign = other.add_scalar("y").unwrap();
        assert!(matches!(
            p.add_eq(LinExpr::scalar(foreign, 1.0)),
            Err(ConicError::ForeignVariable)
        ));
        let h = p.add_hermitian("h", 2).unwrap();
        // non-Hermitian coefficient
        let mut c = CMat::zeros(2, 2);
        c[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            p.add_eq(LinExpr::trace(h, c)),
            Err(ConicError::BadCoefficient(_))
        ));
        // Hermitian variable without PSD constraint is rejected at solve
        let mut q = ConicProblem::new();
        let hq = q.add_hermitian("h", 2).unwrap();
        q.set_objective(LinExpr::trace(hq, CMat::identity(2, 2))).unwrap();
        assert!(matches!(
            q.solve(TOL),
            Err(ConicError::UnconstrainedHermitian(_))
        ));
    }

    #[test]
    fn infeasible_sdp_detected() {
        // X psd with Tr(X) = -1
        let mut p = ConicProblem::new();
        let x = p.add_hermitian("x", 2).unwrap();
        p.add_psd(x).unwrap();
        p.add_eq(LinExpr::trace(x, CMat::identity(2, 2)).add_const(1.0)).unwrap();
        p.set_objective(LinExpr::constant(0.0)).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = ConicProblem::new();
        let x = p.add_nonneg_scalar("x").unwrap();
        p.set_objective(LinExpr::scalar(x, 1.0)).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn complex_sdp_with_off_diagonal_objective() {
        // maximize 2 Re X_01 s.t. X psd, X_00 = 1, X_11 = 1
        // optimum: X = ones -> objective 2
        let mut p = ConicProblem::new();
        let x = p.add_hermitian("x", 2).unwrap();
        p.add_psd(x).unwrap();
        let e00 = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { C64::from(1.0) } else { C64::from(0.0) });
        let e11 = CMat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { C64::from(1.0) } else { C64::from(0.0) });
        p.add_eq(LinExpr::trace(x, e00).add_const(-1.0)).unwrap();
        p.add_eq(LinExpr::trace(x, e11).add_const(-1.0)).unwrap();
        let mut c = CMat::zeros(2, 2);
        c[(0, 1)] = C64::from(1.0);
        c[(1, 0)] = C64::from(1.0);
        p.set_objective(LinExpr::trace(x, c)).unwrap();
        let sol = p.solve(TOL).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-5);
        let xm = sol.matrix("x");
        assert!((xm[(0, 1)] - C64::from(1.0)).norm() < 1e-4);
    }

    #[test]
    fn randomized_mixed_problems_self_certify() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xc0ffee);
        let mut optimal = 0;
        for trial in 0..40 {
            let n = rng.gen_range(2..5);
            let mut p = ConicProblem::new();
            let h = p.add_hermitian("h", n).unwrap();
            p.add_psd(h).unwrap();
            let s = p.add_nonneg_scalar("s").unwrap();
            let t = p.add_scalar("t").unwrap();
            // random Hermitian objective
            let a = CMat::from_fn(n, n, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let c = (&a + a.adjoint()) * C64::from(0.5);
            // tr(h) + s = budget, t bounded by a norm cone over entries of h diag
            let budget = rng.gen_range(1.0..4.0);
            p.add_eq(
                LinExpr::trace(h, CMat::identity(n, n))
                    .add_scalar(s, 1.0)
                    .add_const(-budget),
            )
            .unwrap();
            let mut e00 = CMat::zeros(n, n);
            e00[(0, 0)] = C64::from(1.0);
            p.add_soc(
                LinExpr::scalar(t, 1.0),
                vec![LinExpr::trace(h, e00), LinExpr::constant(0.5)],
            )
            .unwrap();
            p.add_le(LinExpr::scalar(t, 1.0).add_const(-2.0)).unwrap();
            p.set_objective(LinExpr::trace(h, c).add_scalar(t, 0.3)).unwrap();
            let sol = p.solve(1e-7).unwrap();
            assert!(
                matches!(sol.status, SolveStatus::Optimal),
                "trial {trial}: status {:?}",
                sol.status
            );
            optimal += 1;
            assert!(
                sol.max_constraint_violation <= 1e-6,
                "trial {trial}: violation {}",
                sol.max_constraint_violation
            );
            let gap = (sol.objective_value - sol.dual_bound).abs();
            assert!(
                gap <= 1e-5 * (1.0 + sol.objective_value.abs()),
                "trial {trial}: gap {gap}"
            );
        }
        assert_eq!(optimal, 40);
    }

    #[test]
    fn dump_contains_declarations() {
        let mut p = ConicProblem::new();
        let x = p.add_hermitian("x", 2).unwrap();
        p.add_psd(x).unwrap();
        p.set_objective(LinExpr::trace(x, CMat::identity(2, 2))).unwrap();
        let d = p.dump();
        assert!(d.contains("conic v1"));
        assert!(d.contains("var hermitian x 2 embedded 4"));
        assert!(d.contains("constraint psd x"));
    }
}
