use num_complex::Complex64;

use crate::array_model::{ArrayGeometry, Snapshot};
use crate::dictionary::{ColumnModel, DictionarySet, FrequencyGrid};
use crate::error::{Error, Result};

/// Virtual single observation `vec(R̂) - σ²·vec(I)` built from several
/// snapshots. Entry `n·M + m` holds `R̂[m, n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub observation: Snapshot,
    pub num_sensors: usize,
    pub num_snapshots: usize,
}

pub fn build_covariance_model(snapshots: &[Snapshot], noise_variance: f64) -> Result<CovarianceModel> {
    if snapshots.len() < 2 {
        return Err(Error::TooFewSnapshots(snapshots.len()));
    }
    if !(noise_variance.is_finite() && noise_variance >= 0.0) {
        return Err(Error::Config(format!("noise variance must be nonnegative, got {noise_variance}")));
    }
    let m = snapshots[0].len();
    if let Some(bad) = snapshots.iter().find(|s| s.len() != m) {
        return Err(Error::Dimension(format!(
            "snapshots have lengths {m} and {}",
            bad.len()
        )));
    }
    let mut r = vec![Complex64::new(0.0, 0.0); m * m];
    for s in snapshots {
        let y = s.observation();
        for n in 0..m {
            let yn = y[n].conj();
            for (mm, ym) in y.iter().enumerate() {
                r[n * m + mm] += ym * yn;
            }
        }
    }
    let t = snapshots.len() as f64;
    for v in r.iter_mut() {
        *v /= t;
    }
    for k in 0..m {
        r[k * m + k] -= noise_variance;
    }
    Ok(CovarianceModel {
        observation: Snapshot::new(r),
        num_sensors: m,
        num_snapshots: snapshots.len(),
    })
}

/// Dictionary over Khatri-Rao columns `conj(a(v)) ⊗ a(v)`.
pub fn covariance_dictionary(geometry: &ArrayGeometry, grid: &FrequencyGrid, taylor_order: usize) -> Result<DictionarySet> {
    DictionarySet::build(ColumnModel::Covariance(geometry.clone()), grid, taylor_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::add_noise;
    use rand::SeedableRng;

    #[test]
    fn single_snapshot_rejected() {
        let s = Snapshot::new(vec![Complex64::new(1.0, 0.0); 3]);
        assert!(matches!(build_covariance_model(&[s], 0.0), Err(Error::TooFewSnapshots(1))));
    }

    #[test]
    fn noiseless_source_gives_khatri_rao_column() {
        let geo = ArrayGeometry::ula(5).unwrap();
        let grid = FrequencyGrid::new(0.1).unwrap();
        let dict = covariance_dictionary(&geo, &grid, 0).unwrap();
        let a = geo.steering_vector(grid.point(13));
        // Unit-power source with random phases per snapshot.
        let snaps: Vec<Snapshot> = (0..4)
            .map(|t| {
                let ph = Complex64::from_polar(1.0, 0.7 * t as f64);
                Snapshot::new(a.iter().map(|v| v * ph).collect())
            })
            .collect();
        let cov = build_covariance_model(&snaps, 0.0).unwrap();
        for (i, v) in cov.observation.observation().iter().enumerate() {
            assert!((v - dict.base()[(i, 13)]).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_is_removed_on_average() {
        let m = 4;
        let t = 10_000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let snaps: Vec<Snapshot> = (0..t)
            .map(|_| {
                let mut y = vec![Complex64::new(0.0, 0.0); m];
                add_noise(&mut y, 1.0, &mut rng);
                Snapshot::new(y)
            })
            .collect();
        let cov = build_covariance_model(&snaps, 1.0).unwrap();
        let tol = 5.0 / (t as f64).sqrt();
        for v in cov.observation.observation() {
            assert!(v.norm() < tol, "{v}");
        }
    }
}
