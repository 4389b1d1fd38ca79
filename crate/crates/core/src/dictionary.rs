//! Uniform spatial-frequency grid and derivative-augmented dictionaries.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::array_model::ArrayGeometry;
use crate::error::{Error, Result};

/// `L` grid points `v_l = -1 + lδ` covering `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    grid_size: f64,
}

impl FrequencyGrid {
    /// Builds the grid for spacing `δ`; `δ` must divide 2 (to 1e-9).
    pub fn new(grid_size: f64) -> Result<Self> {
        if !(grid_size.is_finite() && grid_size > 0.0 && grid_size <= 1.0) {
            return Err(Error::Config(format!("grid size must lie in (0, 1], got {grid_size}")));
        }
        let count = (2.0 / grid_size).round();
        if (count * grid_size - 2.0).abs() > 1e-9 {
            return Err(Error::Config(format!("grid size {grid_size} does not divide 2")));
        }
        let points = (0..count as usize).map(|l| -1.0 + l as f64 * grid_size).collect();
        Ok(Self { points, grid_size })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn grid_size(&self) -> f64 {
        self.grid_size
    }

    pub fn point(&self, l: usize) -> f64 {
        self.points[l]
    }

    /// Index of the grid point closest to `u`, clamped to the grid.
    pub fn nearest(&self, u: f64) -> usize {
        let idx = ((u + 1.0) / self.grid_size).round();
        idx.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Shorthand for [`FrequencyGrid::new`].
pub fn build_grid(grid_size: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::new(grid_size)
}

/// Generator of dictionary columns and their `u`-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnModel {
    /// Physical array: columns are steering vectors `a(u)`.
    Array(ArrayGeometry),
    /// Vectorised covariance: columns are `conj(a(u)) ⊗ a(u)`.
    Covariance(ArrayGeometry),
}

impl ColumnModel {
    pub fn rows(&self) -> usize {
        match self {
            ColumnModel::Array(g) => g.num_sensors(),
            ColumnModel::Covariance(g) => g.num_sensors() * g.num_sensors(),
        }
    }

    /// `order`-th derivative (0, 1 or 2) of the column at `u`.
    pub fn column(&self, u: f64, order: usize) -> Vec<Complex64> {
        match self {
            ColumnModel::Array(g) => g.steering_column(u, order),
            ColumnModel::Covariance(g) => {
                let derivs: Vec<Vec<Complex64>> = (0..=order).map(|k| g.steering_column(u, k)).collect();
                khatri_rao_derivative(&derivs, order)
            }
        }
    }
}

/// `d^order/du^order [conj(a) ⊗ a]` by the product rule, given `a` and its
/// derivatives up to `order`. Entry `n·M + m` pairs `conj(a_n)` with `a_m`.
fn khatri_rao_derivative(derivs: &[Vec<Complex64>], order: usize) -> Vec<Complex64> {
    let m = derivs[0].len();
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for k in 0..=order {
        let weight = binomial(order, k) as f64;
        let left = &derivs[k];
        let right = &derivs[order - k];
        for n in 0..m {
            let c = left[n].conj() * weight;
            for (mm, r) in right.iter().enumerate() {
                out[n * m + mm] += c * r;
            }
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `A(v)`, `A'(v)`, `A''(v)/2` and their concatenation `[A, A', A''/2]`.
#[derive(Debug, Clone)]
pub struct DictionarySet {
    model: ColumnModel,
    grid: FrequencyGrid,
    taylor_order: usize,
    base: DMatrix<Complex64>,
    first: Option<DMatrix<Complex64>>,
    second_halved: Option<DMatrix<Complex64>>,
    block: DMatrix<Complex64>,
}

impl DictionarySet {
    pub fn build(model: ColumnModel, grid: &FrequencyGrid, taylor_order: usize) -> Result<Self> {
        if taylor_order > 2 {
            return Err(Error::Config(format!("taylor order must be 0, 1 or 2, got {taylor_order}")));
        }
        let base = column_matrix(&model, grid.points(), 0, 1.0);
        let first = (taylor_order >= 1).then(|| column_matrix(&model, grid.points(), 1, 1.0));
        let second_halved = (taylor_order >= 2).then(|| column_matrix(&model, grid.points(), 2, 0.5));
        let mut parts = vec![&base];
        parts.extend(first.iter());
        parts.extend(second_halved.iter());
        let block = hconcat(&parts);
        Ok(Self {
            model,
            grid: grid.clone(),
            taylor_order,
            base,
            first,
            second_halved,
            block,
        })
    }

    pub fn model(&self) -> &ColumnModel {
        &self.model
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn taylor_order(&self) -> usize {
        self.taylor_order
    }

    pub fn rows(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &DMatrix<Complex64> {
        &self.base
    }

    pub fn first(&self) -> Option<&DMatrix<Complex64>> {
        self.first.as_ref()
    }

    pub fn second_halved(&self) -> Option<&DMatrix<Complex64>> {
        self.second_halved.as_ref()
    }

    /// `[A, A', A''/2]` truncated to the built order.
    pub fn block(&self) -> &DMatrix<Complex64> {
        &self.block
    }

    /// The first `blocks` dictionary blocks side by side (`blocks ≤ order+1`).
    pub fn leading_blocks(&self, blocks: usize) -> DMatrix<Complex64> {
        let l = self.grid.len();
        self.block.columns(0, blocks * l).into_owned()
    }

    /// Columns at the half-shifted points `v_l + δ/2`.
    pub fn shifted_base(&self) -> DMatrix<Complex64> {
        let half = 0.5 * self.grid.grid_size();
        let pts: Vec<f64> = self.grid.points().iter().map(|v| v + half).collect();
        column_matrix(&self.model, &pts, 0, 1.0)
    }
}

/// Dictionary for a physical array up to `taylor_order`.
pub fn build_dictionary(geometry: &ArrayGeometry, grid: &FrequencyGrid, taylor_order: usize) -> Result<DictionarySet> {
    DictionarySet::build(ColumnModel::Array(geometry.clone()), grid, taylor_order)
}

fn column_matrix(model: &ColumnModel, points: &[f64], order: usize, scale: f64) -> DMatrix<Complex64> {
    let rows = model.rows();
    let mut data = Vec::with_capacity(rows * points.len());
    for &v in points {
        data.extend(model.column(v, order).into_iter().map(|x| x * scale));
    }
    DMatrix::from_vec(rows, points.len(), data)
}

fn hconcat(parts: &[&DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let rows = parts[0].nrows();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.ncols()).copy_from(*p);
        at += p.ncols();
    }
    out
}

/// Scales every column to unit Euclidean norm. Returns the normalised matrix
/// and the scales, so that `original[:, p] = scale[p] · normalised[:, p]`.
pub fn normalize_columns(matrix: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let mut out = matrix.clone();
    let mut scales = Vec::with_capacity(matrix.ncols());
    for (p, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm > f64::MIN_POSITIVE) {
            return Err(Error::DegenerateDictionary { column: p });
        }
        col.unscale_mut(norm);
        scales.push(norm);
    }
    Ok((out, scales))
}

/// Norm of the second-order Taylor remainder of `a(u)` about its nearest grid
/// point.
pub fn taylor_residual(geometry: &ArrayGeometry, grid: &FrequencyGrid, u: f64) -> f64 {
    taylor_residual_of_order(geometry, grid, u, 2)
}

/// Remainder norm of the Taylor model truncated at `order` (0, 1 or 2).
pub fn taylor_residual_of_order(geometry: &ArrayGeometry, grid: &FrequencyGrid, u: f64, order: usize) -> f64 {
    let v = grid.point(grid.nearest(u));
    let p = u - v;
    let mut approx = geometry.steering_column(v, 0);
    let mut coeff = 1.0;
    for k in 1..=order {
        coeff *= p / k as f64;
        for (a, d) in approx.iter_mut().zip(geometry.steering_column(v, k)) {
            *a += d * coeff;
        }
    }
    geometry
        .steering_vector(u)
        .iter()
        .zip(&approx)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
