//! Verblunsky coefficient sequences and their block partitions.
//!
//! A sequence α₀, α₁, … in the open unit disk drives everything downstream.
//! This module generates the test families (power decay, weighted-square
//! summable with random phases, sparse supports, explicit lists), rotates
//! them by a unit phase, and computes the dyadic block partition together
//! with per-block diagnostics and nested adaptive subdivisions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kahan::Kahan;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error, PartialEq)]
pub enum CoeffsError {
    #[error("coefficient modulus {0} must be < 1 (unit disk)")]
    ModulusOutOfDisk(f64),
    #[error("parameter {name} = {value} outside valid range {range}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("index {index} out of range (n_max = {n_max})")]
    IndexOutOfRange { index: usize, n_max: usize },
    #[error("all coefficients vanish: finitely supported / trivial partition")]
    AllZero,
    #[error("adaptive partition would need {cells} cells (guard: {max})")]
    CellOverflow { cells: u128, max: u64 },
    #[error("block needs {needed} cells but the budget is {budget}")]
    CellBudget { needed: usize, budget: u64 },
    #[error("explicit value at index {0} is not finite")]
    NonFiniteValue(usize),
}

/// Unit phase e^{iβ}, exact at the two distinguished angles 0 and π.
///
/// β = π identifies the second-kind polynomials with a first-kind evolution,
/// so the sign flip is kept exact rather than going through sin/cos.
pub fn unit_phase(beta: f64) -> Complex64 {
    if beta == 0.0 {
        Complex64::new(1.0, 0.0)
    } else if beta == std::f64::consts::PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, beta)
    }
}

/// Generation recipe. Serializing this (plus the rotation) is enough to
/// rebuild a sequence bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SeqSpec {
    /// |α_n| = c·(1+n)^{−δ} with phases drawn per index from the seed.
    PowerDecay {
        c: f64,
        delta: f64,
        seed: u64,
        n_max: usize,
    },
    /// |α_n| = 0.9·(1+n)^{−(1+γ+margin)/2}; the weighted square sum
    /// Σ n^γ|α_n|² then converges with room to spare.
    RandomWeighted {
        gamma: f64,
        margin: f64,
        seed: u64,
        n_max: usize,
    },
    /// Fixed modulus on an explicit support set, zero elsewhere.
    Sparse {
        indices: Vec<usize>,
        modulus: f64,
        seed: u64,
        n_max: usize,
    },
    /// Verbatim values, stored as (re, im) pairs.
    Explicit { values: Vec<(f64, f64)> },
}

impl SeqSpec {
    pub fn n_max(&self) -> usize {
        match self {
            SeqSpec::PowerDecay { n_max, .. }
            | SeqSpec::RandomWeighted { n_max, .. }
            | SeqSpec::Sparse { n_max, .. } => *n_max,
            SeqSpec::Explicit { values } => values.len(),
        }
    }

    /// Decay class exponent if the family declares one.
    pub fn gamma_hint(&self) -> Option<f64> {
        match self {
            SeqSpec::RandomWeighted { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }
}

/// A finite Verblunsky coefficient sequence with its generation metadata.
///
/// Values always satisfy |α_n| < 1. `rotation` records the accumulated
/// e^{iβ} applied on top of the base family, so `values = base × e^{iβ}`
/// holds exactly and regeneration from the serialized spec is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct VerblunskySequence {
    values: Vec<Complex64>,
    spec: SeqSpec,
    rotation: f64,
}

/// Phase for index n: one draw from a per-index stream of the seeded
/// generator, so the value at n never depends on how many neighbours were
/// generated.
fn phase_at(base: &ChaCha12Rng, n: usize) -> f64 {
    let mut rng = base.clone();
    rng.set_stream(n as u64 + 1);
    rng.gen::<f64>() * TAU
}

impl VerblunskySequence {
    fn from_spec_values(spec: SeqSpec, values: Vec<Complex64>) -> Self {
        VerblunskySequence {
            values,
            spec,
            rotation: 0.0,
        }
    }

    /// |α_n| = c·(1+n)^{−δ}, random phases. Rejects c ≥ 1: the first
    /// coefficient would leave the unit disk.
    pub fn power_decay(c: f64, delta: f64, seed: u64, n_max: usize) -> Result<Self, CoeffsError> {
        if !(0.0..1.0).contains(&c) {
            return Err(CoeffsError::InvalidParam {
                name: "c",
                value: c,
                range: "[0, 1)",
            });
        }
        if delta <= 0.0 {
            return Err(CoeffsError::InvalidParam {
                name: "delta",
                value: delta,
                range: "(0, ∞)",
            });
        }
        let base = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..n_max)
            .map(|n| {
                let modulus = c * (1.0 + n as f64).powf(-delta);
                Complex64::from_polar(modulus, phase_at(&base, n))
            })
            .collect();
        Ok(Self::from_spec_values(
            SeqSpec::PowerDecay {
                c,
                delta,
                seed,
                n_max,
            },
            values,
        ))
    }

    /// Random-phase sequence in the γ decay class: Σ n^γ|α_n|² < ∞ by a
    /// margin in the exponent. The leading modulus is pinned at 0.9.
    pub fn random_weighted(
        gamma: f64,
        margin: f64,
        seed: u64,
        n_max: usize,
    ) -> Result<Self, CoeffsError> {
        if !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
            return Err(CoeffsError::InvalidParam {
                name: "gamma",
                value: gamma,
                range: "(0, 1)",
            });
        }
        if margin <= 0.0 {
            return Err(CoeffsError::InvalidParam {
                name: "margin",
                value: margin,
                range: "(0, ∞)",
            });
        }
        let c = 0.9;
        let exponent = (1.0 + gamma + margin) / 2.0;
        let base = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..n_max)
            .map(|n| {
                let modulus = c * (1.0 + n as f64).powf(-exponent);
                Complex64::from_polar(modulus, phase_at(&base, n))
            })
            .collect();
        Ok(Self::from_spec_values(
            SeqSpec::RandomWeighted {
                gamma,
                margin,
                seed,
                n_max,
            },
            values,
        ))
    }

    /// Fixed modulus at the given indices, zero elsewhere. Phases are still
    /// drawn from the seed so sparse tests exercise genuinely complex values.
    pub fn sparse(
        indices: &[usize],
        modulus: f64,
        seed: u64,
        n_max: usize,
    ) -> Result<Self, CoeffsError> {
        if !(0.0..1.0).contains(&modulus) {
            return Err(CoeffsError::ModulusOutOfDisk(modulus));
        }
        let mut sorted: Vec<usize> = indices.iter().copied().filter(|&i| i < n_max).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let base = ChaCha12Rng::seed_from_u64(seed);
        let mut values = vec![Complex64::new(0.0, 0.0); n_max];
        for &i in &sorted {
            values[i] = Complex64::from_polar(modulus, phase_at(&base, i));
        }
        Ok(Self::from_spec_values(
            SeqSpec::Sparse {
                indices: sorted,
                modulus,
                seed,
                n_max,
            },
            values,
        ))
    }

    /// Wrap an explicit list. Every value must be finite and inside the disk.
    pub fn explicit(values: Vec<Complex64>) -> Result<Self, CoeffsError> {
        for (i, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(CoeffsError::NonFiniteValue(i));
            }
            if v.norm() >= 1.0 {
                return Err(CoeffsError::ModulusOutOfDisk(v.norm()));
            }
        }
        let pairs = values.iter().map(|v| (v.re, v.im)).collect();
        Ok(Self::from_spec_values(
            SeqSpec::Explicit { values: pairs },
            values,
        ))
    }

    /// Rebuild from a serialized recipe; bit-identical to the original.
    pub fn from_spec(spec: &SeqSpec, rotation: f64) -> Result<Self, CoeffsError> {
        let base = match spec {
            SeqSpec::PowerDecay {
                c,
                delta,
                seed,
                n_max,
            } => Self::power_decay(*c, *delta, *seed, *n_max)?,
            SeqSpec::RandomWeighted {
                gamma,
                margin,
                seed,
                n_max,
            } => Self::random_weighted(*gamma, *margin, *seed, *n_max)?,
            SeqSpec::Sparse {
                indices,
                modulus,
                seed,
                n_max,
            } => Self::sparse(indices, *modulus, *seed, *n_max)?,
            SeqSpec::Explicit { values } => Self::explicit(
                values
                    .iter()
                    .map(|&(re, im)| Complex64::new(re, im))
                    .collect(),
            )?,
        };
        Ok(if rotation == 0.0 {
            base
        } else {
            base.rotate(rotation)
        })
    }

    /// Multiply every coefficient by e^{iβ}. Moduli are untouched, so every
    /// modulus-derived diagnostic (weighted tails, block norms, partitions)
    /// is preserved exactly.
    ///
    /// Composed rotations are re-applied to the regenerated base values so
    /// that `values = base × e^{i·rotation}` stays exact.
    pub fn rotate(&self, beta: f64) -> Self {
        let rotation = (self.rotation + beta).rem_euclid(TAU);
        let base = Self::from_spec(&self.spec, 0.0)
            .expect("spec previously validated")
            .values;
        let phase = unit_phase(rotation);
        let values = if rotation == 0.0 {
            base
        } else {
            base.into_iter().map(|v| v * phase).collect()
        };
        VerblunskySequence {
            values,
            spec: self.spec.clone(),
            rotation,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> &SeqSpec {
        &self.spec
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn gamma_hint(&self) -> Option<f64> {
        self.spec.gamma_hint()
    }

    /// Σ_{k=0}^{n} k^γ |α_k|². The k = 0 weight follows the IEEE pow
    /// convention: 0^γ = 0 for γ > 0 and 0^0 = 1, so the zeroth term only
    /// counts in the unweighted sum.
    pub fn weighted_tail(&self, gamma: f64, n: usize) -> Result<f64, CoeffsError> {
        if n >= self.values.len() {
            return Err(CoeffsError::IndexOutOfRange {
                index: n,
                n_max: self.values.len(),
            });
        }
        let mut acc = Kahan::new();
        for (k, v) in self.values[..=n].iter().enumerate() {
            acc.add((k as f64).powf(gamma) * v.norm_sqr());
        }
        Ok(acc.value())
    }

    /// SHA-256 over the raw value bits; stable across runs and platforms
    /// with IEEE doubles.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            hasher.update(v.re.to_le_bytes());
            hasher.update(v.im.to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            let _ = write!(out, "{byte:02x}");
        }
        out
    }
}

fn is_nonzero(v: &Complex64) -> bool {
    v.re != 0.0 || v.im != 0.0
}

/// Dyadic block endpoints: x₀ = 0 and each next endpoint is the smallest
/// power of two whose half-open block picks up at least one nonzero
/// coefficient. A trailing block that would extend past the end of the data
/// is treated as partial and dropped.
pub fn dyadic_partition(seq: &VerblunskySequence) -> Result<Vec<usize>, CoeffsError> {
    let values = seq.values();
    if !values.iter().any(is_nonzero) {
        return Err(CoeffsError::AllZero);
    }
    let n_max = values.len();
    let mut x = vec![0usize];
    loop {
        let lo = *x.last().unwrap();
        if lo >= n_max {
            break;
        }
        let mut p = if lo == 0 { 1 } else { lo * 2 };
        let accepted = loop {
            let hi = p.min(n_max);
            if values[lo..hi].iter().any(is_nonzero) {
                break Some(p);
            }
            if p >= n_max {
                break None;
            }
            p *= 2;
        };
        match accepted {
            Some(p) if p <= n_max => x.push(p),
            _ => break,
        }
    }
    Ok(x)
}

/// Per-block record: size, restricted norms, the two convergence-driving
/// terms, and the subdivision count N_n.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagnostics {
    /// Block number n (block spans [x_{n-1}, x_n)).
    pub index: usize,
    pub lo: usize,
    pub hi: usize,
    pub dx: usize,
    pub l1: f64,
    pub l2: f64,
    /// Δx^{(1−D)/2} · ‖α‖₂ restricted to the block.
    pub goal_term: f64,
    /// ‖α‖₁ · (Δx^{(1−D)/2}‖α‖₂)^N for the supplied exponent N.
    pub goal2_term: f64,
    /// N_n = max(1, ⌊(Δx^{1−D}‖α‖₂²)^{−1/2}⌋).
    pub n_sub: u64,
}

fn block_norms(values: &[Complex64], lo: usize, hi: usize) -> (f64, f64) {
    let mut l1 = Kahan::new();
    let mut l2sq = Kahan::new();
    for v in &values[lo..hi] {
        l1.add(v.norm());
        l2sq.add(v.norm_sqr());
    }
    (l1.value(), l2sq.value().sqrt())
}

/// Subdivision count for a block: ⌊1/√(Δx^{1−D}‖α‖₂²)⌋ clamped below by 1.
/// An empty block degenerates to 1.
pub fn block_n_sub(dx: usize, l2: f64, d: f64) -> u64 {
    let q = (dx as f64).powf(1.0 - d) * l2 * l2;
    if q <= 0.0 {
        return 1;
    }
    let raw = (1.0 / q.sqrt()).floor();
    if raw < 1.0 {
        1
    } else {
        raw as u64
    }
}

/// Smallest admissible exponent for the second goal term:
/// the least integer strictly above (2−γ−D)/(D+γ−1), clamped to ≥ 1.
pub fn default_goal2_exponent(gamma: f64, d: f64) -> u32 {
    let denom = d + gamma - 1.0;
    if denom <= 0.0 {
        // outside the admissible window; any exponent works formally
        return 1;
    }
    let bound = (2.0 - gamma - d) / denom;
    let n = bound.floor() + 1.0;
    if n < 1.0 {
        1
    } else {
        n as u32
    }
}

/// Evaluate the per-block diagnostics for every completed block of `x`.
///
/// The exponent D is expected to sit in (1−γ, 1) for the decay class γ of the
/// sequence; callers outside that window get numbers anyway (exploratory use)
/// and are responsible for warning.
pub fn block_diagnostics(
    seq: &VerblunskySequence,
    x: &[usize],
    d: f64,
    goal2_exponent: u32,
) -> Vec<BlockDiagnostics> {
    let values = seq.values();
    x.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (lo, hi) = (w[0], w[1]);
            let dx = hi - lo;
            let (l1, l2) = block_norms(values, lo, hi);
            let goal_term = (dx as f64).powf((1.0 - d) / 2.0) * l2;
            let goal2_term = l1 * goal_term.powi(goal2_exponent as i32);
            BlockDiagnostics {
                index: i + 1,
                lo,
                hi,
                dx,
                l1,
                l2,
                goal_term,
                goal2_term,
                n_sub: block_n_sub(dx, l2, d),
            }
        })
        .collect()
}

/// Cell budget guard for adaptive subdivision.
pub const MAX_ADAPTIVE_CELLS: u64 = 1 << 20;

/// Nested subdivision points of one block: N_n^j + 1 non-decreasing points
/// from the left endpoint to the right endpoint.
///
/// Cells are packed greedily: each cell absorbs coefficients while its ℓ¹
/// mass stays within ‖α‖₁(block)·N_n^{−3j/4}; a single coefficient that
/// alone exceeds the threshold becomes a singleton cell. Unused trailing
/// points repeat the right endpoint, so padding cells are empty. Every cell
/// therefore lands in one of the three allowed states: singleton, empty, or
/// mass at most the threshold.
pub fn adaptive_partition(
    seq: &VerblunskySequence,
    lo: usize,
    hi: usize,
    n_sub: u64,
    depth: u32,
) -> Result<Vec<usize>, CoeffsError> {
    assert!(lo < hi, "block must be non-empty");
    assert!(hi <= seq.len(), "block must lie inside the sequence");
    assert!(n_sub >= 1 && depth >= 1);
    let cells = (n_sub as u128)
        .checked_pow(depth)
        .unwrap_or(u128::from(u64::MAX) + 1);
    if cells > u128::from(MAX_ADAPTIVE_CELLS) {
        return Err(CoeffsError::CellOverflow {
            cells,
            max: MAX_ADAPTIVE_CELLS,
        });
    }
    let cells = cells as u64;
    let values = seq.values();
    let (block_l1, _) = block_norms(values, lo, hi);
    let threshold = block_l1 * (n_sub as f64).powf(-0.75 * depth as f64);

    let mut z = vec![lo];
    let mut cur = lo;
    while cur < hi {
        let mut end = cur;
        let mut mass = 0.0f64;
        while end < hi {
            let next = mass + values[end].norm();
            if next > threshold {
                break;
            }
            mass = next;
            end += 1;
        }
        if end == cur {
            // single coefficient above the threshold: isolate it
            end = cur + 1;
        }
        z.push(end);
        cur = end;
    }
    let needed = z.len() - 1;
    if needed as u64 > cells {
        return Err(CoeffsError::CellBudget {
            needed,
            budget: cells,
        });
    }
    z.resize(cells as usize + 1, hi);
    Ok(z)
}

/// Full partition plan: dyadic endpoints, per-block subdivision counts, and
/// the nested point lists at a fixed depth.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    pub x: Vec<usize>,
    pub d: f64,
    pub depth: u32,
    pub n_sub: Vec<u64>,
    /// One z-list per block; `None` where the cell budget guard tripped.
    pub nested: Vec<Option<Vec<usize>>>,
}

impl PartitionPlan {
    pub fn build(
        seq: &VerblunskySequence,
        d: f64,
        depth: u32,
        goal2_exponent: u32,
    ) -> Result<Self, CoeffsError> {
        let x = dyadic_partition(seq)?;
        let diags = block_diagnostics(seq, &x, d, goal2_exponent);
        let n_sub: Vec<u64> = diags.iter().map(|b| b.n_sub).collect();
        let nested = diags
            .iter()
            .map(
                |b| match adaptive_partition(seq, b.lo, b.hi, b.n_sub, depth) {
                    Ok(z) => Ok(Some(z)),
                    Err(CoeffsError::CellOverflow { .. }) => Ok(None),
                    Err(e) => Err(e),
                },
            )
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PartitionPlan {
            x,
            d,
            depth,
            n_sub,
            nested,
        })
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.x.windows(2).map(|w| (w[0], w[1]))
    }
}
