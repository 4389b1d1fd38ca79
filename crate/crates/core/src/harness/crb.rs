use nalgebra::DMatrix;

use crate::array_model::{ArrayGeometry, SourceScene};

/// Mean Cramér–Rao variance `tr(F⁻¹)/K` of the spatial frequencies for one
/// snapshot with known amplitudes and circular noise of variance `σ²`, where
/// `F = (2/σ²) Re(Bᴴ B)` and column `k` of `B` is `s_k a'(u_k)`. `None` when
/// the Fisher information is singular or the scene is noiseless.
pub fn crb_mean_variance(geometry: &ArrayGeometry, scene: &SourceScene) -> Option<f64> {
    let sigma2 = scene.noise_std().powi(2);
    if sigma2 <= 0.0 {
        return None;
    }
    let cols: Vec<Vec<_>> = scene
        .frequencies()
        .iter()
        .zip(scene.amplitudes())
        .map(|(&u, &s)| {
            geometry
                .steering_derivative(u, 1)
                .expect("first derivative is always available")
                .into_iter()
                .map(|v| v * s)
                .collect()
        })
        .collect();
    let k = cols.len();
    let fisher = DMatrix::from_fn(k, k, |i, j| {
        let g: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| (a.conj() * b).re).sum();
        2.0 * g / sigma2
    });
    let scale = fisher.diagonal().max();
    if !(scale > 0.0) {
        return None;
    }
    let chol = (fisher.clone() / scale).cholesky()?;
    let inv = chol.inverse() / scale;
    let trace = inv.trace();
    let smallest = chol.l().diagonal().min().powi(2);
    if !(trace.is_finite() && trace > 0.0) || smallest < 1e-12 {
        return None;
    }
    Some(trace / k as f64)
}

/// [`crb_mean_variance`] on the RMSE scale, `10 log10 √var`.
pub fn crb_reference(geometry: &ArrayGeometry, scene: &SourceScene) -> Option<f64> {
    crb_mean_variance(geometry, scene).map(variance_to_db)
}

pub(crate) fn variance_to_db(var: f64) -> f64 {
    10.0 * var.sqrt().log10()
}
