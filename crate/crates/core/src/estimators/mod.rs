//! Grid-based sparse estimators of spatial frequencies.
//!
//! All four methods fit `y ≈ D c` with a nonnegative block-sparse `c`:
//!
//! | method            | blocks per grid point             | `b` |
//! |-------------------|-----------------------------------|-----|
//! | `lasso`           | `a(v_l)`                          | 1   |
//! | `neighbor_glasso` | `a(v_l)`, `a(v_l + δ/2)`          | 2   |
//! | `taylor1_glasso`  | `a(v_l)`, `a'(v_l)`               | 2   |
//! | `taylor2_glasso`  | `a(v_l)`, `a'(v_l)`, `a''(v_l)/2` | 3   |
//!
//! and are solved as second-order cone programs by [`crate::conic`].

mod covariance;
mod extract;
mod programs;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::array_model::Snapshot;
use crate::conic::{self, KktResiduals, SolverSettings, SolverStatus};
use crate::dictionary::DictionarySet;
use crate::error::{Error, Result};

pub use covariance::{build_covariance_model, covariance_dictionary, CovarianceModel};
pub use extract::{extract_frequencies, extract_frequencies_with, select_peaks, ExtractOptions, Extraction, OffsetRule};
pub use programs::{build_program, ProgramLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(alias = "LASSO")]
    Lasso,
    #[serde(rename = "neighbor_glasso", alias = "neighbor")]
    Neighbor,
    #[serde(rename = "taylor1_glasso", alias = "taylor1")]
    Taylor1,
    #[serde(rename = "taylor2_glasso", alias = "taylor2")]
    Taylor2,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lasso, Method::Neighbor, Method::Taylor1, Method::Taylor2];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::Neighbor => "neighbor_glasso",
            Method::Taylor1 => "taylor1_glasso",
            Method::Taylor2 => "taylor2_glasso",
        }
    }

    /// Coefficients per grid point.
    pub fn block_len(&self) -> usize {
        match self {
            Method::Lasso => 1,
            Method::Neighbor | Method::Taylor1 => 2,
            Method::Taylor2 => 3,
        }
    }

    /// Minimum dictionary order the method reads.
    pub fn required_order(&self) -> usize {
        match self {
            Method::Lasso | Method::Neighbor => 0,
            Method::Taylor1 => 1,
            Method::Taylor2 => 2,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(Method::Lasso),
            "neighbor" | "neighbor_glasso" => Ok(Method::Neighbor),
            "taylor1" | "taylor1_glasso" => Ok(Method::Taylor1),
            "taylor2" | "taylor2_glasso" => Ok(Method::Taylor2),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// How the data-fit term enters the program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// `½‖y - Dc‖² + μ‖c‖₂,₁`.
    Regularized,
    /// `‖c‖₂,₁` subject to `‖y - Dc‖ ≤ ε`.
    Constrained { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Regularisation weight `μ`.
    pub mu: f64,
    /// Slack bound `η` of the relaxed proportionality cone.
    pub eta: f64,
    /// Number of sources `K` to extract.
    pub source_count: usize,
    pub formulation: Formulation,
    pub extract: ExtractOptions,
    pub solver: SolverSettings,
}

pub const DEFAULT_ETA: f64 = 1e-5;

impl EstimatorConfig {
    pub fn new(method: Method, mu: f64, source_count: usize) -> Self {
        Self {
            method,
            mu,
            eta: DEFAULT_ETA,
            source_count,
            formulation: Formulation::Regularized,
            extract: ExtractOptions::default(),
            solver: SolverSettings::default(),
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self { method, ..self.clone() }
    }

    pub fn validate(&self, grid_size: f64) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if self.source_count == 0 {
            return Err(Error::Config("source count must be at least 1".into()));
        }
        if let Formulation::Constrained { epsilon } = self.formulation {
            if !(epsilon.is_finite() && epsilon > 0.0) {
                return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
            }
        }
        let half = 0.5 * grid_size;
        if self.method == Method::Taylor2 && self.eta >= half * half {
            warn!(
                "eta = {} is not small against (δ/2)² = {}; the proportionality constraint is loose",
                self.eta,
                half * half
            );
        }
        Ok(())
    }
}

/// Taylor-coefficient blocks `(x₁, x₂, x₃)` and the proportionality slack
/// `z`. Methods with fewer blocks leave the trailing ones at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockSignal {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub x3: Vec<f64>,
    pub z: Vec<f64>,
}

impl BlockSignal {
    pub fn zeros(len: usize) -> Self {
        Self {
            x1: vec![0.0; len],
            x2: vec![0.0; len],
            x3: vec![0.0; len],
            z: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    /// Per-grid-point Euclidean norm `‖(x₁ₗ, x₂ₗ, x₃ₗ)‖`.
    pub fn block_norms(&self) -> Vec<f64> {
        (0..self.len())
            .map(|l| (self.x1[l].powi(2) + self.x2[l].powi(2) + self.x3[l].powi(2)).sqrt())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect();
        Self {
            x1: s(&self.x1),
            x2: s(&self.x2),
            x3: s(&self.x3),
            z: s(&self.z),
        }
    }

    /// Largest violation of the box, nonnegativity, slack and relaxed
    /// proportionality constraints for grid size `δ` and slack bound `η`.
    pub fn constraint_violation(&self, grid_size: f64, eta: f64) -> f64 {
        let h = 0.5 * grid_size;
        let mut worst = 0.0f64;
        for l in 0..self.len() {
            let (x1, x2, x3, z) = (self.x1[l], self.x2[l], self.x3[l], self.z[l]);
            worst = worst
                .max(-x1)
                .max(x2.abs() - h * x1)
                .max(-x3)
                .max(x3 - h * h * x1)
                .max(-z)
                .max(z - eta)
                .max((4.0 * x2 * x2 + (x1 - x3).powi(2)).sqrt() - (x1 + x3 + z));
        }
        worst
    }
}

/// Coefficients of the neighbour-grid model: weights of `a(v_l)` and
/// `a(v_l + δ/2)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborCoefficients {
    pub base: Vec<f64>,
    pub shifted: Vec<f64>,
}

impl NeighborCoefficients {
    pub fn block_norms(&self) -> Vec<f64> {
        self.base.iter().zip(&self.shifted).map(|(a, b)| a.hypot(*b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Blocks(BlockSignal),
    Neighbor(NeighborCoefficients),
}

impl Coefficients {
    pub fn block_norms(&self) -> Vec<f64> {
        match self {
            Coefficients::Blocks(b) => b.block_norms(),
            Coefficients::Neighbor(n) => n.block_norms(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSummary {
    pub status: SolverStatus,
    pub iterations: usize,
    pub objective_value: f64,
    pub kkt_residuals: KktResiduals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Success,
    /// The solver did not reach an optimal point.
    SolverFailed,
    /// Fewer than `K` separated nonzero blocks.
    EmptySupport,
}

impl EstimateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateStatus::Success => "success",
            EstimateStatus::SolverFailed => "solver_failed",
            EstimateStatus::EmptySupport => "empty_support",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    pub status: EstimateStatus,
    pub coefficients: Coefficients,
    /// Selected grid indices, ordered like `frequencies`.
    pub support: Vec<usize>,
    pub offsets: Vec<f64>,
    /// Ascending frequency estimates `û_k = v_{l_k} + p̂_k`.
    pub frequencies: Vec<f64>,
    pub solver: SolverSummary,
}

impl EstimateResult {
    pub fn is_success(&self) -> bool {
        self.status == EstimateStatus::Success
    }
}

/// Runs the method selected in `config`.
pub fn estimate(snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> Result<EstimateResult> {
    if snapshot.len() != dict.rows() {
        return Err(Error::Dimension(format!(
            "snapshot has {} entries but the dictionary has {} rows",
            snapshot.len(),
            dict.rows()
        )));
    }
    if dict.taylor_order() < config.method.required_order() {
        return Err(Error::Config(format!(
            "{} needs a dictionary of order {}, got {}",
            config.method,
            config.method.required_order(),
            dict.taylor_order()
        )));
    }
    let grid = dict.grid();
    config.validate(grid.grid_size())?;

    let (program, layout) = build_program(snapshot, dict, config);
    let result = conic::solve(&program, &config.solver)?;
    let summary = SolverSummary {
        status: result.status,
        iterations: result.iterations,
        objective_value: result.objective_value,
        kkt_residuals: result.kkt_residuals,
    };
    let coefficients = layout.coefficients(&result.primal);
    let mut out = EstimateResult {
        method: config.method,
        status: EstimateStatus::Success,
        coefficients,
        support: Vec::new(),
        offsets: Vec::new(),
        frequencies: Vec::new(),
        solver: summary,
    };
    if !result.is_optimal() {
        out.status = EstimateStatus::SolverFailed;
        return Ok(out);
    }
    let norms = out.coefficients.block_norms();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    if peak <= 100.0 * config.solver.tolerance {
        out.status = EstimateStatus::EmptySupport;
        return Ok(out);
    }
    let extraction = match &out.coefficients {
        Coefficients::Blocks(b) => extract_frequencies_with(b, grid, config.source_count, &config.extract),
        Coefficients::Neighbor(c) => extract::extract_neighbor(c, grid, config.source_count, &config.extract),
    };
    match extraction {
        Some(e) => {
            out.support = e.support;
            out.offsets = e.offsets;
            out.frequencies = e.frequencies;
        }
        None => out.status = EstimateStatus::EmptySupport,
    }
    Ok(out)
}

fn run_as(method: Method, snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> Result<EstimateResult> {
    estimate(snapshot, dict, &config.with_method(method))
}

/// Second-order Taylor group LASSO.
pub fn solve_taylor2(snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> Result<EstimateResult> {
    run_as(Method::Taylor2, snapshot, dict, config)
}

/// First-order Taylor group LASSO.
pub fn solve_taylor1(snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> Result<EstimateResult> {
    run_as(Method::Taylor1, snapshot, dict, config)
}

/// Nonnegative LASSO on the grid dictionary; offsets are always zero.
pub fn solve_lasso(snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> Result<EstimateResult> {
    run_as(Method::Lasso, snapshot, dict, config)
}

/// Neighbour-grid group LASSO pairing `a(v_l)` with `a(v_l + δ/2)`.
pub fn solve_neighbor(snapshot: &Snapshot, dict: &DictionarySet, config: &EstimatorConfig) -> Result<EstimateResult> {
    run_as(Method::Neighbor, snapshot, dict, config)
}

/// Group-LASSO objective `½‖y - D c‖² + μ Σ_l ‖c_l‖` of a block signal,
/// evaluated in original units on the leading `blocks` dictionary blocks.
pub fn regularized_objective(snapshot: &Snapshot, dict: &DictionarySet, block: &BlockSignal, blocks: usize, mu: f64) -> f64 {
    let d = dict.leading_blocks(blocks);
    let l = dict.grid().len();
    let parts = [&block.x1, &block.x2, &block.x3];
    let mut r: Vec<num_complex::Complex64> = snapshot.observation().to_vec();
    for (b, part) in parts.iter().enumerate().take(blocks) {
        for (j, &c) in part.iter().enumerate() {
            if c != 0.0 {
                for (m, rm) in r.iter_mut().enumerate() {
                    *rm -= d[(m, b * l + j)] * c;
                }
            }
        }
    }
    let fit = 0.5 * r.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let norms = block.block_norms();
    fit + mu * norms.iter().sum::<f64>()
}
