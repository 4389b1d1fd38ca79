//! Linear array geometry, steering vectors and synthetic observations.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::substream;

/// Sensor positions of a linear array.
///
/// Positions are kept in units of the wavelength (`q / λ`); only that ratio
/// enters the array response.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions_wl: Vec<f64>,
}

/// On-disk form of a geometry: positions in half-wavelength units.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub positions: Vec<f64>,
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
}

fn default_wavelength() -> f64 {
    1.0
}

impl ArrayGeometry {
    /// Builds a geometry from physical positions `q` and the wavelength `λ`.
    pub fn new(positions: &[f64], wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::Geometry(format!(
                "wavelength must be positive and finite, got {wavelength}"
            )));
        }
        let positions_wl: Vec<f64> = positions.iter().map(|q| q / wavelength).collect();
        Self::from_wavelength_units(positions_wl)
    }

    pub fn from_wavelength_units(positions_wl: Vec<f64>) -> Result<Self> {
        if positions_wl.len() < 2 {
            return Err(Error::Geometry(format!(
                "need at least 2 sensors, got {}",
                positions_wl.len()
            )));
        }
        if let Some(bad) = positions_wl.iter().find(|p| !p.is_finite()) {
            return Err(Error::Geometry(format!("non-finite position {bad}")));
        }
        let mut sorted = positions_wl.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Geometry("sensor positions must be distinct".into()));
        }
        Ok(Self { positions_wl })
    }

    /// Positions given as multiples of `λ/2`.
    pub fn from_half_wavelength_units(positions: &[f64]) -> Result<Self> {
        Self::from_wavelength_units(positions.iter().map(|p| 0.5 * p).collect())
    }

    /// `m`-element uniform linear array with half-wavelength spacing, first
    /// sensor at the origin.
    pub fn ula(m: usize) -> Result<Self> {
        let pos: Vec<f64> = (0..m).map(|i| i as f64).collect();
        Self::from_half_wavelength_units(&pos)
    }

    /// `m` sensors drawn uniformly without replacement from an `n`-element
    /// half-wavelength ULA, kept in ascending order.
    pub fn random_subarray(n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, 0);
        Self::random_subarray_with(n, m, &mut rng)
    }

    pub(crate) fn random_subarray_with<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m > n {
            return Err(Error::Geometry(format!("cannot select {m} of {n} sensors")));
        }
        let mut picked = rand::seq::index::sample(rng, n, m).into_vec();
        picked.sort_unstable();
        let pos: Vec<f64> = picked.into_iter().map(|i| i as f64).collect();
        Self::from_half_wavelength_units(&pos)
    }

    pub fn from_file(file: &GeometryFile) -> Result<Self> {
        if !(file.wavelength.is_finite() && file.wavelength > 0.0) {
            return Err(Error::Geometry(format!(
                "wavelength must be positive and finite, got {}",
                file.wavelength
            )));
        }
        Self::from_half_wavelength_units(&file.positions)
    }

    pub fn to_file(&self) -> GeometryFile {
        GeometryFile {
            positions: self.positions_wl.iter().map(|p| 2.0 * p).collect(),
            wavelength: 1.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: GeometryFile = toml::from_str(&text)?;
        Self::from_file(&file)
    }

    pub fn num_sensors(&self) -> usize {
        self.positions_wl.len()
    }

    pub fn positions_wavelengths(&self) -> &[f64] {
        &self.positions_wl
    }

    /// Electrical phase slopes `θ_m = 2π q_m / λ`.
    pub fn phase_slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions_wl.iter().map(|p| 2.0 * PI * p)
    }

    /// Array response `a(u)`, element `m` equal to `exp(j θ_m u)`.
    pub fn steering_vector(&self, u: f64) -> Vec<Complex64> {
        self.phase_slopes().map(|theta| Complex64::cis(theta * u)).collect()
    }

    /// `order`-th derivative of [`Self::steering_vector`] with respect to `u`.
    pub fn steering_derivative(&self, u: f64, order: usize) -> Result<Vec<Complex64>> {
        if !(order == 1 || order == 2) {
            return Err(Error::DerivativeOrder(order));
        }
        Ok(self.steering_column(u, order))
    }

    /// `(jθ_m)^order · exp(jθ_m u)`; order 0 is the steering vector itself.
    pub(crate) fn steering_column(&self, u: f64, order: usize) -> Vec<Complex64> {
        self.phase_slopes()
            .map(|theta| Complex64::new(0.0, theta).powu(order as u32) * Complex64::cis(theta * u))
            .collect()
    }
}

/// Far-field narrowband sources seen by the array.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScene {
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    noise_std: f64,
}

impl SourceScene {
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<f64>, noise_std: f64) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::Scene("need at least one source".into()));
        }
        if frequencies.len() != amplitudes.len() {
            return Err(Error::Scene(format!(
                "{} frequencies but {} amplitudes",
                frequencies.len(),
                amplitudes.len()
            )));
        }
        if let Some(u) = frequencies.iter().find(|u| !(-1.0..1.0).contains(*u)) {
            return Err(Error::Scene(format!("spatial frequency {u} outside [-1, 1)")));
        }
        if let Some(s) = amplitudes.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Scene(format!("amplitudes must be positive, got {s}")));
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(Error::Scene(format!("noise std must be >= 0, got {noise_std}")));
        }
        Ok(Self {
            frequencies,
            amplitudes,
            noise_std,
        })
    }

    /// Unit-amplitude sources at `snr_db`, with `SNR = -20 log10 σ`.
    pub fn unit_amplitude(frequencies: Vec<f64>, snr_db: f64) -> Result<Self> {
        let k = frequencies.len();
        Self::new(frequencies, vec![1.0; k], noise_std_for_snr(snr_db))
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn num_sources(&self) -> usize {
        self.frequencies.len()
    }

    pub fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Result<Self> {
        Self::new(self.frequencies.clone(), amplitudes, self.noise_std)
    }
}

/// Noise standard deviation for unit-amplitude sources at `snr_db`.
pub fn noise_std_for_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// One array observation `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    observation: Vec<Complex64>,
}

impl Snapshot {
    pub fn new(observation: Vec<Complex64>) -> Self {
        Self { observation }
    }

    pub fn observation(&self) -> &[Complex64] {
        &self.observation
    }

    pub fn len(&self) -> usize {
        self.observation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observation.is_empty()
    }

    /// Reads `re,im` pairs, one sensor per line. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut obs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Dimension(format!(
                    "snapshot line has {} fields, expected re,im",
                    rec.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad snapshot value {s:?}: {e}")))
            };
            obs.push(Complex64::new(parse(&rec[0])?, parse(&rec[1])?));
        }
        Ok(Self::new(obs))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for y in &self.observation {
            w.write_record([y.re.to_string(), y.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `y = Σ s_k a(u_k) + n` with circular complex Gaussian noise of
/// per-element variance `σ²`. Deterministic in `rng_seed`.
pub fn synthesize_snapshot(geometry: &ArrayGeometry, scene: &SourceScene, rng_seed: u64) -> Snapshot {
    let mut rng = substream(rng_seed, 0);
    synthesize_snapshot_with(geometry, scene, &mut rng)
}

pub(crate) fn synthesize_snapshot_with<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    scene: &SourceScene,
    rng: &mut R,
) -> Snapshot {
    let mut y = vec![Complex64::new(0.0, 0.0); geometry.num_sensors()];
    for (&u, &s) in scene.frequencies.iter().zip(&scene.amplitudes) {
        for (ym, am) in y.iter_mut().zip(geometry.steering_vector(u)) {
            *ym += am * s;
        }
    }
    if scene.noise_std > 0.0 {
        add_noise(&mut y, scene.noise_std, rng);
    }
    Snapshot::new(y)
}

pub(crate) fn add_noise<R: Rng + ?Sized>(y: &mut [Complex64], noise_std: f64, rng: &mut R) {
    let normal = Normal::new(0.0, noise_std / std::f64::consts::SQRT_2).expect("finite std");
    for ym in y {
        *ym += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
}
