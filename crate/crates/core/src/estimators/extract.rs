use serde::{Deserialize, Serialize};

use crate::dictionary::FrequencyGrid;

use super::{BlockSignal, NeighborCoefficients};

/// Blocks below this fraction of the largest block norm count as zero.
pub const RELATIVE_SUPPORT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetRule {
    /// `p̂ = x₂ / x₁`.
    Ratio,
    /// `p̂ = sign(x₂)·√(x₃ / x₁)`.
    SignedSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub offset_rule: OffsetRule,
    /// Minimum index distance between two selected blocks.
    pub min_separation: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            offset_rule: OffsetRule::Ratio,
            min_separation: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub support: Vec<usize>,
    pub offsets: Vec<f64>,
    pub frequencies: Vec<f64>,
}

/// Indices of the `k` largest nonzero norms at least `min_separation`
/// apart, or `None` when fewer than `k` qualify.
pub fn select_peaks(norms: &[f64], k: usize, min_separation: usize) -> Option<Vec<usize>> {
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let floor = RELATIVE_SUPPORT_FLOOR * peak;
    let mut order: Vec<usize> = (0..norms.len()).filter(|&l| norms[l] > floor).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for l in order {
        if chosen.len() == k {
            break;
        }
        if chosen.iter().all(|&c| c.abs_diff(l) >= min_separation.max(1)) {
            chosen.push(l);
        }
    }
    (chosen.len() == k).then_some(chosen)
}

/// Support, offsets and ascending frequencies with default options.
pub fn extract_frequencies(block: &BlockSignal, grid: &FrequencyGrid, k: usize) -> Option<Extraction> {
    extract_frequencies_with(block, grid, k, &ExtractOptions::default())
}

pub fn extract_frequencies_with(
    block: &BlockSignal,
    grid: &FrequencyGrid,
    k: usize,
    options: &ExtractOptions,
) -> Option<Extraction> {
    let support = select_peaks(&block.block_norms(), k, options.min_separation)?;
    let half = 0.5 * grid.grid_size();
    let offsets = support
        .iter()
        .map(|&l| {
            let (x1, x2, x3) = (block.x1[l], block.x2[l], block.x3[l]);
            if x1 <= 0.0 {
                return 0.0;
            }
            let p = match options.offset_rule {
                OffsetRule::Ratio => x2 / x1,
                OffsetRule::SignedSqrt => x2.signum() * (x3.max(0.0) / x1).sqrt(),
            };
            p.clamp(-half, half)
        })
        .collect();
    Some(finish(support, offsets, grid))
}

/// Neighbour model: `û = v_l + (δ/2)·c₂/(c₁ + c₂)`.
pub(crate) fn extract_neighbor(
    coef: &NeighborCoefficients,
    grid: &FrequencyGrid,
    k: usize,
    options: &ExtractOptions,
) -> Option<Extraction> {
    let support = select_peaks(&coef.block_norms(), k, options.min_separation)?;
    let half = 0.5 * grid.grid_size();
    let offsets = support
        .iter()
        .map(|&l| {
            let (c1, c2) = (coef.base[l].max(0.0), coef.shifted[l].max(0.0));
            if c1 + c2 > 0.0 {
                half * c2 / (c1 + c2)
            } else {
                0.0
            }
        })
        .collect();
    Some(finish(support, offsets, grid))
}

fn finish(support: Vec<usize>, offsets: Vec<f64>, grid: &FrequencyGrid) -> Extraction {
    let mut rows: Vec<(f64, usize, f64)> = support
        .into_iter()
        .zip(offsets)
        .map(|(l, p)| (grid.point(l) + p, l, p))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Extraction {
        support: rows.iter().map(|r| r.1).collect(),
        offsets: rows.iter().map(|r| r.2).collect(),
        frequencies: rows.iter().map(|r| r.0).collect(),
    }
}
