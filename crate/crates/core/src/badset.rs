//! Grid scans for the singular set: where does sup_n ‖T_n(e^{iη})‖ blow up?
//!
//! A scan evolves the norm kernel at every grid angle for each β in the
//! probe set and keeps the running sup of log‖T_n‖. Angles are independent
//! work items writing into per-angle slots, so reports are bit-identical at
//! any worker count. Super-level sets of the sup statistic stand in for the
//! singular set at finite depth, and a box-counting fit upper-bounds their
//! dimension at the scanned scales.

use rayon::prelude::*;
use thiserror::Error;

use crate::coeffs::VerblunskySequence;
use crate::szego::NormKernel;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("beta probe set must be non-empty")]
    EmptyBetas,
    #[error("grid must be non-empty and strictly inside (0, 2π)")]
    BadGrid,
    #[error("box counting needs ≥ 3 positive scales below the domain span")]
    BadScales,
    #[error("domain [{0}, {1}) is empty")]
    BadDomain(f64, f64),
}

/// Uniform midpoint grid of `count` angles on (lo, hi); returns the angles
/// and the cell width.
pub fn uniform_grid(count: usize, lo: f64, hi: f64) -> Result<(Vec<f64>, f64), ScanError> {
    if count == 0 || !(lo > 0.0 && lo < hi && hi < TAU) {
        return Err(ScanError::BadGrid);
    }
    let h = (hi - lo) / count as f64;
    let grid = (0..count).map(|i| lo + (i as f64 + 0.5) * h).collect();
    Ok((grid, h))
}

/// The standard scan window: clear of the 1/η singularity, covering most
/// of the circle.
pub const DEFAULT_ETA_MIN: f64 = 0.3;
pub const DEFAULT_ETA_MAX: f64 = TAU - 0.3;

/// Per-angle sup statistics of one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub grid: Vec<f64>,
    pub spacing: f64,
    /// max over n ≤ n_max and over the β set of log‖T_n‖; NaN if failed.
    pub sup_log_t: Vec<f64>,
    /// step index attaining the sup (over the maximizing β).
    pub argmax_n: Vec<u32>,
    pub failed: Vec<bool>,
    pub n_max: usize,
    pub betas: Vec<f64>,
    pub seq_id: String,
    pub gamma: Option<f64>,
}

impl ScanReport {
    pub fn any_failed(&self) -> bool {
        self.failed.iter().any(|&f| f)
    }
}

/// Scan the grid: for each angle, evolve under every β and record the
/// running sup of log‖T_n‖. Failures are marked per angle, never aborting
/// the rest of the scan.
pub fn scan(
    seq: &VerblunskySequence,
    grid: &[f64],
    spacing: f64,
    n_max: usize,
    betas: &[f64],
) -> Result<ScanReport, ScanError> {
    if betas.is_empty() {
        return Err(ScanError::EmptyBetas);
    }
    if grid.is_empty() || grid.iter().any(|&e| !(e > 0.0 && e < TAU)) {
        return Err(ScanError::BadGrid);
    }
    let kernels: Vec<NormKernel> = betas
        .iter()
        .map(|&b| NormKernel::prepare(seq, b, n_max))
        .collect();
    let rows: Vec<(f64, u32, bool)> = grid
        .par_iter()
        .map(|&eta| {
            let mut sup = f64::NEG_INFINITY;
            let mut arg = 0u32;
            let mut failed = false;
            for kernel in &kernels {
                match kernel.sup_log_norm(eta, n_max) {
                    Some((s, n)) => {
                        if s > sup {
                            sup = s;
                            arg = n as u32;
                        }
                    }
                    None => failed = true,
                }
            }
            if failed {
                (f64::NAN, 0, true)
            } else {
                (sup, arg, false)
            }
        })
        .collect();
    Ok(ScanReport {
        grid: grid.to_vec(),
        spacing,
        sup_log_t: rows.iter().map(|r| r.0).collect(),
        argmax_n: rows.iter().map(|r| r.1).collect(),
        failed: rows.iter().map(|r| r.2).collect(),
        n_max,
        betas: betas.to_vec(),
        seq_id: seq.fingerprint(),
        gamma: seq.gamma_hint(),
    })
}

/// Grid cells whose sup exceeds log M. Monotone decreasing in M as sets;
/// failed cells never qualify.
pub fn superlevel_set(report: &ScanReport, m: f64) -> Vec<usize> {
    let log_m = m.ln();
    report
        .sup_log_t
        .iter()
        .enumerate()
        .filter(|(i, &s)| !report.failed[*i] && s > log_m)
        .map(|(i, _)| i)
        .collect()
}

/// Box-counting fit: occupied-box counts against dyadic widths.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionFit {
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// least-squares slope of log(count) against log(1/scale), in [0, 1]
    pub slope: f64,
    pub r2: f64,
    /// set when the input point set was empty (slope pinned to 0)
    pub empty: bool,
}

/// Count boxes of each width intersecting the point set and fit the
/// dimension. Scales are sorted ascending internally; boxes are anchored at
/// the domain's left edge, so widths that are nested multiples give
/// monotone counts.
pub fn box_dimension(
    points: &[f64],
    domain: (f64, f64),
    scales: &[f64],
) -> Result<DimensionFit, ScanError> {
    let (lo, hi) = domain;
    if !(hi > lo) {
        return Err(ScanError::BadDomain(lo, hi));
    }
    let span = hi - lo;
    let mut scales: Vec<f64> = scales.to_vec();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    if scales.len() < 3 || scales.iter().any(|&s| !(s > 0.0) || s > span) {
        return Err(ScanError::BadScales);
    }
    if points.is_empty() {
        return Ok(DimensionFit {
            counts: vec![0; scales.len()],
            scales,
            slope: 0.0,
            r2: 0.0,
            empty: true,
        });
    }
    let mut sorted: Vec<f64> = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let counts: Vec<usize> = scales
        .iter()
        .map(|&s| {
            let mut count = 0usize;
            let mut last_box = usize::MAX;
            for &x in &sorted {
                if x < lo || x >= hi {
                    continue;
                }
                let b = ((x - lo) / s).floor() as usize;
                if b != last_box {
                    count += 1;
                    last_box = b;
                }
            }
            count
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|&s| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let raw_slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(DimensionFit {
        scales,
        counts,
        slope: raw_slope.clamp(0.0, 1.0),
        r2,
        empty: false,
    })
}
