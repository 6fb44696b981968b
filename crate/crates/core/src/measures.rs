//! Finite atomic approximations of uniformly D-Hölder measures on the
//! circle, supported away from the angular singularity at 0 and 2π.
//!
//! The workhorse is the midpoint-atom Cantor construction: exact
//! self-similarity dimension, exact mass bookkeeping, atoms strictly inside
//! the support interval. A uniform grid (D ≈ 1) and a single atom (the D → 0
//! pole) cover the sanity edges of the dimension axis.

use num_complex::Complex64;
use thiserror::Error;

use crate::kahan::Kahan;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("support [{a}, {b}] must satisfy 0 < a < b < 2π")]
    BadSupport { a: f64, b: f64 },
    #[error("contraction ratio {0} must lie in (0, 1/2)")]
    BadRatio(f64),
    #[error("atom weight {0} must be positive")]
    BadWeight(f64),
    #[error("integrand not finite at atom {index} (eta = {eta})")]
    NonFiniteIntegrand { index: usize, eta: f64 },
    #[error("measure needs at least one atom")]
    Empty,
}

/// Point mass at angle `eta` with weight `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub eta: f64,
    pub w: f64,
}

/// Atomic measure with Hölder metadata. Atoms are kept sorted by angle and
/// live in (δ, 2π−δ) for the recorded support gap δ.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderMeasure {
    atoms: Vec<Atom>,
    d_target: f64,
    level: u32,
    support_gap: f64,
    holder_c: f64,
    total_mass: f64,
}

/// Scales used for the construction-time Hölder constant estimate: dyadic
/// fractions of the support span.
fn default_scales(span: f64) -> Vec<f64> {
    (3..=9).map(|k| span * 2f64.powi(-k)).collect()
}

impl HolderMeasure {
    fn finish(mut atoms: Vec<Atom>, d_target: f64, level: u32) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        for a in &atoms {
            if !(a.w > 0.0) {
                return Err(MeasureError::BadWeight(a.w));
            }
            if !(a.eta > 0.0 && a.eta < TAU) {
                return Err(MeasureError::BadSupport { a: a.eta, b: a.eta });
            }
        }
        atoms.sort_by(|x, y| x.eta.total_cmp(&y.eta));
        let lo = atoms.first().unwrap().eta;
        let hi = atoms.last().unwrap().eta;
        let support_gap = lo.min(TAU - hi);
        let mut mass = Kahan::new();
        for a in &atoms {
            mass.add(a.w);
        }
        let mut m = HolderMeasure {
            atoms,
            d_target,
            level,
            support_gap,
            holder_c: f64::NAN,
            total_mass: mass.value(),
        };
        let span = (hi - lo).max(m.support_gap);
        m.holder_c = m.holder_constant(d_target, &default_scales(span));
        Ok(m)
    }

    /// Self-similar Cantor measure on [a, b]: each generation keeps the two
    /// outer sub-intervals of relative length `ratio`; after `level`
    /// generations one unit atom sits at the midpoint of each of the
    /// 2^level pieces, weight 2^−level. The similarity dimension is
    /// log 2 / log(1/ratio).
    pub fn cantor(ratio: f64, level: u32, a: f64, b: f64) -> Result<Self, MeasureError> {
        if !(ratio > 0.0 && ratio < 0.5) {
            return Err(MeasureError::BadRatio(ratio));
        }
        if !(a > 0.0 && a < b && b < TAU) {
            return Err(MeasureError::BadSupport { a, b });
        }
        let d_target = 2f64.ln() / (1.0 / ratio).ln();
        let mut intervals = vec![(a, b)];
        for _ in 0..level {
            let mut next = Vec::with_capacity(intervals.len() * 2);
            for (lo, hi) in intervals {
                let len = hi - lo;
                next.push((lo, lo + ratio * len));
                next.push((hi - ratio * len, hi));
            }
            intervals = next;
        }
        let w = 2f64.powi(-(level as i32));
        let atoms = intervals
            .into_iter()
            .map(|(lo, hi)| Atom {
                eta: 0.5 * (lo + hi),
                w,
            })
            .collect();
        Self::finish(atoms, d_target, level)
    }

    /// Uniform grid of `count` midpoint atoms on [a, b], total mass 1. The
    /// D ≈ 1 end of the dimension axis.
    pub fn uniform(count: usize, a: f64, b: f64) -> Result<Self, MeasureError> {
        if count == 0 {
            return Err(MeasureError::Empty);
        }
        if !(a > 0.0 && a < b && b < TAU) {
            return Err(MeasureError::BadSupport { a, b });
        }
        let h = (b - a) / count as f64;
        let w = 1.0 / count as f64;
        let atoms = (0..count)
            .map(|i| Atom {
                eta: a + (i as f64 + 0.5) * h,
                w,
            })
            .collect();
        Self::finish(atoms, 1.0, 0)
    }

    /// One point mass — the degenerate D → 0 sanity pole.
    pub fn single_atom(eta: f64, w: f64) -> Result<Self, MeasureError> {
        Self::finish(vec![Atom { eta, w }], 0.0, 0)
    }

    /// Direct construction from atom data (artifact loading).
    pub fn from_atoms(atoms: Vec<Atom>, d_target: f64, level: u32) -> Result<Self, MeasureError> {
        Self::finish(atoms, d_target, level)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn d_target(&self) -> f64 {
        self.d_target
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn support_gap(&self) -> f64 {
        self.support_gap
    }

    pub fn holder_c(&self) -> f64 {
        self.holder_c
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.atoms.first().unwrap().eta,
            self.atoms.last().unwrap().eta,
        )
    }

    /// ν([lo, hi)) by prefix lookup on the sorted atoms.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let start = self.atoms.partition_point(|a| a.eta < lo);
        let end = self.atoms.partition_point(|a| a.eta < hi);
        self.atoms[start..end].iter().map(|a| a.w).sum()
    }

    /// Sliding-window estimate of sup_I ν(I)/|I|^D over intervals of the
    /// given lengths, stride a quarter of the scale.
    pub fn holder_constant(&self, d: f64, scales: &[f64]) -> f64 {
        let (lo, hi) = self.support();
        let mut best = 0.0f64;
        for &s in scales {
            if !(s > 0.0) {
                continue;
            }
            let denom = s.powf(d);
            let stride = s / 4.0;
            let mut x = lo - s;
            while x <= hi {
                let mass = self.mass_in(x, x + s);
                best = best.max(mass / denom);
                x += stride;
            }
        }
        best
    }

    /// Σ_k w_k f(η_k); rejects non-finite integrand values.
    pub fn integrate<F: Fn(f64) -> Complex64>(&self, f: F) -> Result<Complex64, MeasureError> {
        let mut re = Kahan::new();
        let mut im = Kahan::new();
        for (index, a) in self.atoms.iter().enumerate() {
            let v = f(a.eta);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(MeasureError::NonFiniteIntegrand { index, eta: a.eta });
            }
            re.add(a.w * v.re);
            im.add(a.w * v.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    #[test]
    fn cantor_level_zero_is_midpoint_atom() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 0, 1.0, 2.0).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms()[0].eta, 1.5);
        assert_eq!(m.atoms()[0].w, 1.0);
    }

    #[test]
    fn cantor_dimension_is_log2_over_log3() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 4, 0.5, 5.5).unwrap();
        assert!((m.d_target() - 0.630_929_753_571_457_4).abs() < 1e-15);
    }

    #[test]
    fn cantor_mass_is_exactly_one() {
        for level in [0, 1, 5, 10] {
            let m = HolderMeasure::cantor(0.3, level, 0.6, 5.9).unwrap();
            assert_eq!(m.total_mass(), 1.0);
            assert_eq!(m.len(), 1usize << level);
        }
    }

    #[test]
    fn cantor_respects_support_gap() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 6, 0.5, TAU - 0.5).unwrap();
        assert!(m.support_gap() >= 0.5);
        let (lo, hi) = m.support();
        assert!(lo >= 0.5 && hi <= TAU - 0.5);
    }

    #[test]
    fn cantor_rejects_degenerate_input() {
        assert!(HolderMeasure::cantor(0.5, 2, 1.0, 2.0).is_err());
        assert!(HolderMeasure::cantor(1.0 / 3.0, 2, 2.0, 1.0).is_err());
        assert!(HolderMeasure::cantor(1.0 / 3.0, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn single_atom_holder_ratio() {
        let m = HolderMeasure::single_atom(3.0, 1.0).unwrap();
        let s = 0.7;
        let c = m.holder_constant(0.5, &[s]);
        assert!((c - 1.0 / s.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn holder_constant_stable_at_matched_dimension() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 10, 0.5, TAU - 0.5).unwrap();
        let d = m.d_target();
        let span = TAU - 1.0;
        let per_scale: Vec<f64> = (3..=9)
            .map(|k| m.holder_constant(d, &[span * 2f64.powi(-k)]))
            .collect();
        let lo = per_scale.iter().cloned().fold(f64::MAX, f64::min);
        let hi = per_scale.iter().cloned().fold(f64::MIN, f64::max);
        assert!(
            hi / lo < 2.0,
            "estimate should be stable within a factor 2: {per_scale:?}"
        );
        assert!(m.holder_c().is_finite());
    }

    #[test]
    fn holder_constant_detects_dimension_mismatch() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 10, 0.5, TAU - 0.5).unwrap();
        let span = TAU - 1.0;
        let coarse = m.holder_constant(0.9, &[span * 2f64.powi(-3)]);
        let fine = m.holder_constant(0.9, &[span * 2f64.powi(-9)]);
        assert!(
            fine > 2.0 * coarse,
            "D = 0.9 against a 0.63-dimensional measure must blow up: {coarse} vs {fine}"
        );
    }

    #[test]
    fn integrate_mass_and_zero() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 5, 0.5, 5.0).unwrap();
        let total = m.integrate(|_| ONE).unwrap();
        assert!((total.re - 1.0).abs() < 1e-12);
        assert_eq!(total.im, 0.0);
        let zero = m.integrate(|_| Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn integrate_left_half_indicator_is_half() {
        for level in 1..=8 {
            let m = HolderMeasure::cantor(1.0 / 3.0, level, 1.0, 5.0).unwrap();
            let mid = 3.0;
            let half = m
                .integrate(|eta| {
                    if eta < mid {
                        ONE
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .unwrap();
            assert_eq!(half.re, 0.5);
        }
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let m = HolderMeasure::single_atom(1.0, 1.0).unwrap();
        let err = m.integrate(|_| Complex64::new(f64::NAN, 0.0)).unwrap_err();
        assert!(matches!(err, MeasureError::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn refinement_preserves_mass_exactly() {
        for level in 0..12 {
            let m = HolderMeasure::cantor(0.25, level, 0.7, 4.7).unwrap();
            assert_eq!(m.total_mass(), 1.0);
        }
    }

    #[test]
    fn functions_outside_support_integrate_to_zero() {
        let m = HolderMeasure::cantor(1.0 / 3.0, 6, 1.0, 5.0).unwrap();
        let gap = m.support_gap();
        let v = m
            .integrate(|eta| {
                if eta < gap || eta > TAU - gap {
                    ONE
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn uniform_grid_has_unit_dimension_target() {
        let m = HolderMeasure::uniform(64, 0.5, 5.5).unwrap();
        assert_eq!(m.d_target(), 1.0);
        assert!((m.total_mass() - 1.0).abs() < 1e-14);
        assert_eq!(m.len(), 64);
    }

    #[test]
    fn mass_in_is_half_open() {
        let m = HolderMeasure::uniform(4, 1.0, 2.0).unwrap();
        let a = m.atoms()[1].eta;
        assert_eq!(m.mass_in(a, a), 0.0);
        assert_eq!(m.mass_in(a, a + 1e-9), 0.25);
    }
}
