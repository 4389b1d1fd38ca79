use std::time::Instant;

use crate::array_model::{noise_std_for_snr, synthesize_snapshot, ArrayGeometry, SourceScene};
use crate::conic;
use crate::dictionary::{build_dictionary, FrequencyGrid};
use crate::error::{Error, Result};
use crate::estimators::{build_program, EstimatorConfig, Method, DEFAULT_ETA};

/// Median solve cost of one method at one grid size.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub method: Method,
    pub num_grid: usize,
    pub per_iteration_ms: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityConfig {
    pub num_sensors: usize,
    /// Grid sizes `L`; the grid spacing is `2/L`.
    pub grid_points: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            num_sensors: 16,
            grid_points: vec![50, 100, 200, 400],
            methods: vec![Method::Lasso, Method::Neighbor, Method::Taylor1, Method::Taylor2],
            trials: 3,
            snr_db: 20.0,
            seed: 1,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times the conic solve of each method's program (program assembly
/// excluded) on a two-source scene and reports the median wall time per
/// interior-point iteration. `η` shrinks with the squared grid spacing so
/// every grid size solves the same relative problem.
pub fn complexity_probe(cfg: &ComplexityConfig) -> Result<Vec<ComplexityRow>> {
    if cfg.trials == 0 || cfg.grid_points.is_empty() {
        return Err(Error::Config("complexity probe needs trials and grid sizes".into()));
    }
    let geometry = ArrayGeometry::random_subarray(cfg.num_sensors.max(20), cfg.num_sensors, cfg.seed)?;
    let scene = SourceScene::unit_amplitude(vec![0.1815, 0.7942], cfg.snr_db)?;
    let mu_scale = (cfg.num_sensors as f64 * (cfg.num_sensors as f64).ln()).sqrt();
    let mut rows = Vec::new();
    for &l in &cfg.grid_points {
        if l < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {l}")));
        }
        let grid_size = 2.0 / l as f64;
        let grid = FrequencyGrid::new(grid_size)?;
        let dict = build_dictionary(&geometry, &grid, 2)?;
        for &method in &cfg.methods {
            let mut times = Vec::with_capacity(cfg.trials);
            let mut iters = Vec::with_capacity(cfg.trials);
            for t in 0..cfg.trials {
                let y = synthesize_snapshot(&geometry, &scene, cfg.seed.wrapping_add(t as u64));
                let mut est = EstimatorConfig::new(method, noise_std_for_snr(cfg.snr_db) * mu_scale, 2);
                est.eta = DEFAULT_ETA * (grid_size / 0.01).powi(2);
                let (program, _) = build_program(&y, &dict, &est);
                let start = Instant::now();
                let result = conic::solve(&program, &est.solver)?;
                let elapsed = start.elapsed().as_secs_f64() * 1e3;
                let n = result.iterations.max(1);
                times.push(elapsed / n as f64);
                iters.push(n as f64);
            }
            rows.push(ComplexityRow {
                method,
                num_grid: l,
                per_iteration_ms: median(times),
                iterations: median(iters).round() as usize,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log(per-iteration time)` against `log L` for one
/// method. `None` with fewer than two grid sizes.
pub fn growth_exponent(rows: &[ComplexityRow], method: Method) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.method == method && r.per_iteration_ms > 0.0)
        .map(|r| ((r.num_grid as f64).ln(), r.per_iteration_ms.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
