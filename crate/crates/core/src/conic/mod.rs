//! Second-order cone programs and a primal-dual interior-point solver.
//!
//! A [`ConicProgram`] is stated with sparse affine expressions; [`solve`]
//! lowers it to the dense standard form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b,   G x + s = h,   s ∈ R_+^p × Q^{d_1} × … × Q^{d_r}
//! ```
//!
//! and runs a Mehrotra predictor–corrector method with Nesterov–Todd scaling.

mod cones;
mod dump;
mod ipm;
mod kkt;
mod standard;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::write_program;
pub use ipm::solve;

/// `Σ coef·x[index] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(value: f64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn var(index: usize) -> Self {
        Self::term(index, 1.0)
    }

    pub fn term(index: usize, coef: f64) -> Self {
        Self { terms: vec![(index, coef)], constant: 0.0 }
    }

    pub fn plus(mut self, index: usize, coef: f64) -> Self {
        self.terms.push((index, coef));
        self
    }

    pub fn offset(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    LessEqual,
    Equal,
}

/// `expr (≤ | =) bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub expr: AffineExpr,
    pub relation: Relation,
    pub bound: f64,
}

/// `‖tail‖₂ ≤ head`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub head: AffineExpr,
    pub tail: Vec<AffineExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxConstraint {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Linear objective over real variables with linear, nonnegativity, box and
/// second-order cone constraints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    linear: Vec<LinearConstraint>,
    socs: Vec<SocConstraint>,
    nonneg: Vec<usize>,
    boxes: Vec<BoxConstraint>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            ..Default::default()
        }
    }

    /// Appends `count` variables and returns their index range.
    pub fn add_variables(&mut self, count: usize) -> std::ops::Range<usize> {
        let start = self.num_vars;
        self.num_vars += count;
        self.objective.resize(self.num_vars, 0.0);
        start..self.num_vars
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn linear_constraints(&self) -> &[LinearConstraint] {
        &self.linear
    }

    pub fn soc_constraints(&self) -> &[SocConstraint] {
        &self.socs
    }

    pub fn nonneg_indices(&self) -> &[usize] {
        &self.nonneg
    }

    pub fn box_constraints(&self) -> &[BoxConstraint] {
        &self.boxes
    }

    pub fn set_cost(&mut self, index: usize, cost: f64) {
        self.objective[index] = cost;
    }

    pub fn add_linear(&mut self, expr: AffineExpr, relation: Relation, bound: f64) {
        self.linear.push(LinearConstraint { expr, relation, bound });
    }

    pub fn add_soc(&mut self, head: AffineExpr, tail: Vec<AffineExpr>) {
        self.socs.push(SocConstraint { head, tail });
    }

    pub fn add_nonneg(&mut self, index: usize) {
        self.nonneg.push(index);
    }

    pub fn add_box(&mut self, index: usize, lower: f64, upper: f64) {
        self.boxes.push(BoxConstraint { index, lower, upper });
    }

    pub fn boxes_mut(&mut self) -> &mut [BoxConstraint] {
        &mut self.boxes
    }

    /// Checks index ranges, finiteness, nonempty cone tails and box order.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        let check_expr = |e: &AffineExpr, what: &str| -> Result<()> {
            if let Some(i) = e.max_index() {
                if i >= n {
                    return Err(Error::Program(format!("{what} references variable {i} of {n}")));
                }
            }
            if !e.constant.is_finite() || e.terms.iter().any(|t| !t.1.is_finite()) {
                return Err(Error::Program(format!("{what} has non-finite coefficients")));
            }
            Ok(())
        };
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Program("objective has non-finite coefficients".into()));
        }
        for (k, c) in self.linear.iter().enumerate() {
            check_expr(&c.expr, &format!("linear constraint {k}"))?;
            if !c.bound.is_finite() {
                return Err(Error::Program(format!("linear constraint {k} has non-finite bound")));
            }
        }
        for (k, c) in self.socs.iter().enumerate() {
            if c.tail.is_empty() {
                return Err(Error::Program(format!("cone {k} has an empty tail")));
            }
            check_expr(&c.head, &format!("cone {k} head"))?;
            for t in &c.tail {
                check_expr(t, &format!("cone {k} tail"))?;
            }
        }
        if let Some(i) = self.nonneg.iter().find(|&&i| i >= n) {
            return Err(Error::Program(format!("nonnegativity on variable {i} of {n}")));
        }
        for b in &self.boxes {
            if b.index >= n {
                return Err(Error::Program(format!("box on variable {} of {n}", b.index)));
            }
            if !(b.lower <= b.upper) || !b.lower.is_finite() || !b.upper.is_finite() {
                return Err(Error::Program(format!(
                    "box on variable {} has bounds [{}, {}]",
                    b.index, b.lower, b.upper
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.linear {
            let r = c.expr.eval(x) - c.bound;
            worst = worst.max(match c.relation {
                Relation::LessEqual => r,
                Relation::Equal => r.abs(),
            });
        }
        for c in &self.socs {
            let tail = c.tail.iter().map(|t| t.eval(x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(tail - c.head.eval(x));
        }
        for &i in &self.nonneg {
            worst = worst.max(-x[i]);
        }
        for b in &self.boxes {
            worst = worst.max(b.lower - x[b.index]).max(x[b.index] - b.upper);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::MaxIterations => "max_iterations",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Primal violation, scaled dual residual and complementarity gap.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub kkt_residuals: KktResiduals,
    pub iterations: usize,
    /// Context for non-optimal exits.
    pub message: Option<String>,
}

impl SolverResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }
}
