//! Monte Carlo probe of the block restricted isometry constant of the
//! column-normalised dictionary `D̄`.
//!
//! For a random unit-norm block-sparse `c̄`, `β = |‖D̄c̄‖² − 1|`; the probe
//! reports how often `β < 1` and `β < √2 − 1`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dictionary::{normalize_columns, DictionarySet};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::seeding::{stream_id, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// I.i.d. standard complex Gaussian entries in the active blocks.
    Gaussian,
    /// Active block `l` is `x₁·(1, p, p²)` with `x₁ = |N(0,1)|` and
    /// `p ~ U[−δ/2, δ/2]`.
    Proportional,
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::Proportional => "proportional",
        }
    }

    fn code(&self) -> u64 {
        match self {
            Generator::Gaussian => 0,
            Generator::Proportional => 1,
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Generator::Gaussian),
            "proportional" => Ok(Generator::Proportional),
            other => Err(Error::Config(format!("unknown generator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSparseSpec {
    pub block_len: usize,
    pub num_blocks: usize,
    /// Number of active blocks.
    pub sparsity: usize,
    pub generator: Generator,
    /// Grid size `δ`; bounds the proportional offsets.
    pub grid_size: f64,
}

impl BlockSparseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.block_len) {
            return Err(Error::Config(format!("block length must be 1, 2 or 3, got {}", self.block_len)));
        }
        if self.sparsity == 0 || self.sparsity > self.num_blocks {
            return Err(Error::Config(format!(
                "sparsity must be in 1..={}, got {}",
                self.num_blocks, self.sparsity
            )));
        }
        if self.generator == Generator::Proportional && self.block_len != 3 {
            return Err(Error::Config("the proportional generator needs block length 3".into()));
        }
        Ok(())
    }
}

/// Unit-norm block-sparse vector of length `b·L`; entry `k·L + l` belongs to
/// block `l`.
pub fn random_block_sparse(spec: &BlockSparseSpec, seed: u64) -> Result<Vec<Complex64>> {
    spec.validate()?;
    Ok(random_block_sparse_with(spec, &mut substream(seed, 0)))
}

pub(crate) fn random_block_sparse_with<R: Rng + ?Sized>(spec: &BlockSparseSpec, rng: &mut R) -> Vec<Complex64> {
    let (b, l) = (spec.block_len, spec.num_blocks);
    let mut c = vec![Complex64::new(0.0, 0.0); b * l];
    let active = rand::seq::index::sample(rng, l, spec.sparsity);
    let half = 0.5 * spec.grid_size;
    for j in active.iter() {
        match spec.generator {
            Generator::Gaussian => {
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                for k in 0..b {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    c[k * l + j] = Complex64::new(re * scale, im * scale);
                }
            }
            Generator::Proportional => {
                let x1: f64 = StandardNormal.sample(rng);
                let x1 = x1.abs();
                let p = rng.random_range(-half..=half);
                c[j] = Complex64::new(x1, 0.0);
                c[l + j] = Complex64::new(x1 * p, 0.0);
                c[2 * l + j] = Complex64::new(x1 * p * p, 0.0);
            }
        }
    }
    let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut c {
            *v /= norm;
        }
    }
    c
}

/// `β = |‖D̄c̄‖² − 1|` for a unit-norm `c̄`.
pub fn beta_sample(normalized: &DMatrix<Complex64>, c_bar: &[Complex64]) -> Result<f64> {
    if c_bar.len() != normalized.ncols() {
        return Err(Error::Dimension(format!(
            "vector has {} entries but the dictionary has {} columns",
            c_bar.len(),
            normalized.ncols()
        )));
    }
    let norm = c_bar.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Contract(format!("β needs a unit-norm vector, got norm {norm}")));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); normalized.nrows()];
    for (j, cj) in c_bar.iter().enumerate() {
        if *cj != Complex64::new(0.0, 0.0) {
            for (o, d) in out.iter_mut().zip(normalized.column(j).iter()) {
                *o += d * cj;
            }
        }
    }
    let energy: f64 = out.iter().map(|v| v.norm_sqr()).sum();
    Ok((energy - 1.0).abs())
}

/// Column-normalised leading `b` blocks of `dict`.
pub fn normalized_block_dictionary(dict: &DictionarySet, block_len: usize) -> Result<DMatrix<Complex64>> {
    if block_len == 0 || block_len > dict.taylor_order() + 1 {
        return Err(Error::Config(format!(
            "block length {block_len} needs a dictionary of order {}",
            block_len.saturating_sub(1)
        )));
    }
    Ok(normalize_columns(&dict.leading_blocks(block_len))?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl BetaSummary {
    fn from_samples(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |f: f64| v[((v.len() - 1) as f64 * f).round() as usize];
        Some(Self {
            min: v[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipEstimate {
    /// Number of active blocks (`2K`).
    pub sparsity: usize,
    pub trials: usize,
    pub prob_lt_1: f64,
    pub prob_lt_sqrt2m1: f64,
    pub stderr_1: f64,
    pub stderr_s21: f64,
    pub beta_summary: Option<BetaSummary>,
}

impl RipEstimate {
    fn from_betas(sparsity: usize, betas: Vec<f64>) -> Self {
        let n = betas.len() as f64;
        let threshold = std::f64::consts::SQRT_2 - 1.0;
        let p1 = betas.iter().filter(|&&b| b < 1.0).count() as f64 / n;
        let p2 = betas.iter().filter(|&&b| b < threshold).count() as f64 / n;
        let se = |p: f64| (p * (1.0 - p) / n).sqrt();
        Self {
            sparsity,
            trials: betas.len(),
            prob_lt_1: p1,
            prob_lt_sqrt2m1: p2,
            stderr_1: se(p1),
            stderr_s21: se(p2),
            beta_summary: BetaSummary::from_samples(betas),
        }
    }
}

/// Probe settings shared by all sparsity levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub block_len: usize,
    pub sparsities: Vec<usize>,
    pub trials: usize,
    pub generator: Generator,
    pub seed: u64,
}

/// Empirical `P(β < 1)` and `P(β < √2 − 1)` for each sparsity level. Trial
/// `t` at sparsity `s` draws from its own substream, so results do not
/// depend on the worker count.
pub fn estimate_probabilities(dict: &DictionarySet, config: &ProbeConfig) -> Result<Vec<RipEstimate>> {
    if config.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let normalized = normalized_block_dictionary(dict, config.block_len)?;
    let mut out = Vec::with_capacity(config.sparsities.len());
    for &sparsity in &config.sparsities {
        let spec = BlockSparseSpec {
            block_len: config.block_len,
            num_blocks: dict.grid().len(),
            sparsity,
            generator: config.generator,
            grid_size: dict.grid().grid_size(),
        };
        spec.validate()?;
        let betas = map_indexed(config.trials, |t| {
            let mut rng = substream(config.seed, stream_id(config.generator.code(), sparsity as u64, t as u64));
            let c = random_block_sparse_with(&spec, &mut rng);
            beta_sample(&normalized, &c)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        out.push(RipEstimate::from_betas(sparsity, betas));
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 8] = [
    "b",
    "generator",
    "two_K",
    "trials",
    "prob_lt_1",
    "prob_lt_sqrt2m1",
    "stderr_1",
    "stderr_s21",
];

/// Writes probe results as CSV, header included.
pub fn write_csv<W: Write>(out: W, rows: &[(usize, Generator, RipEstimate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (b, g, e) in rows {
        w.write_record([
            b.to_string(),
            g.name().to_string(),
            e.sparsity.to_string(),
            e.trials.to_string(),
            e.prob_lt_1.to_string(),
            e.prob_lt_sqrt2m1.to_string(),
            e.stderr_1.to_string(),
            e.stderr_s21.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::ArrayGeometry;
    use crate::dictionary::{build_dictionary, FrequencyGrid};

    fn spec(b: usize, l: usize, s: usize, g: Generator) -> BlockSparseSpec {
        BlockSparseSpec { block_len: b, num_blocks: l, sparsity: s, generator: g, grid_size: 0.01 }
    }

    #[test]
    fn full_sparsity_is_dense() {
        let c = random_block_sparse(&spec(1, 30, 30, Generator::Gaussian), 4).unwrap();
        assert!(c.iter().all(|v| v.norm() > 0.0));
        let n: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_sparsity() {
        let c = random_block_sparse(&spec(3, 50, 7, Generator::Gaussian), 9).unwrap();
        let active = (0..50).filter(|&l| (0..3).any(|k| c[k * 50 + l].norm() > 0.0)).count();
        assert_eq!(active, 7);
    }

    #[test]
    fn proportional_blocks_keep_the_ratio() {
        let c = random_block_sparse(&spec(3, 40, 5, Generator::Proportional), 2).unwrap();
        for l in 0..40 {
            let (x1, x2, x3) = (c[l].re, c[40 + l].re, c[80 + l].re);
            if x3 != 0.0 {
                assert!(x1 > 0.0);
                assert!((x2 * x2 / (x1 * x3) - 1.0).abs() < 1e-12);
                assert!((x2 / x1).abs() <= 0.005);
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(spec(2, 10, 3, Generator::Proportional).validate().is_err());
        assert!(spec(3, 10, 11, Generator::Gaussian).validate().is_err());
        assert!(spec(4, 10, 1, Generator::Gaussian).validate().is_err());
    }

    #[test]
    fn isometry_gives_zero() {
        let d = DMatrix::<Complex64>::identity(4, 4);
        let c = vec![Complex64::new(0.5, 0.5), Complex64::new(0.0, 0.5), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)];
        assert!(beta_sample(&d, &c).unwrap().abs() < 1e-15);
    }

    #[test]
    fn coherent_columns_give_one() {
        let mut d = DMatrix::<Complex64>::zeros(3, 3);
        d[(0, 0)] = Complex64::new(1.0, 0.0);
        d[(0, 1)] = Complex64::new(1.0, 0.0);
        d[(1, 2)] = Complex64::new(1.0, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::new(0.0, 0.0)];
        assert!((beta_sample(&d, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unit_input_is_rejected() {
        let d = DMatrix::<Complex64>::identity(2, 2);
        let c = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(beta_sample(&d, &c), Err(Error::Contract(_))));
    }

    #[test]
    fn probabilities_are_nested_and_reproducible() {
        let geo = ArrayGeometry::ula(8).unwrap();
        let grid = FrequencyGrid::new(0.02).unwrap();
        let dict = build_dictionary(&geo, &grid, 2).unwrap();
        let cfg = ProbeConfig { block_len: 3, sparsities: vec![2, 6, 12], trials: 200, generator: Generator::Gaussian, seed: 3 };
        let a = estimate_probabilities(&dict, &cfg).unwrap();
        let b = estimate_probabilities(&dict, &cfg).unwrap();
        assert_eq!(a, b);
        for e in &a {
            assert!(e.prob_lt_sqrt2m1 <= e.prob_lt_1);
            assert_eq!(e.trials, 200);
        }
    }

    #[test]
    fn csv_layout() {
        let e = RipEstimate::from_betas(2, vec![0.1, 0.5, 1.5, 0.2]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[(3, Generator::Proportional, e)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "b,generator,two_K,trials,prob_lt_1,prob_lt_sqrt2m1,stderr_1,stderr_s21");
        assert!(lines.next().unwrap().starts_with("3,proportional,2,4,0.75,0.5,"));
    }
}
