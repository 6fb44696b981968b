//! Pointwise Szegő recursion on the unit circle.
//!
//! At a fixed circle point z = e^{iη} the recursion advances the orthonormal
//! first-kind pair (φ, φ*), the second-kind column (ψ, −ψ*), and the
//! accumulated 2×2 Szegő matrix T_n. Polynomials are carried as values, not
//! coefficient vectors: every quantity consumed downstream is pointwise.
//!
//! Norms can grow exponentially on the singular set, so the state carries a
//! shared power-of-two exponent: once entries pass the rescale threshold all
//! values are scaled down exactly and norm reports move to log space.

use num_complex::Complex64;
use thiserror::Error;

use crate::coeffs::{unit_phase, VerblunskySequence};
use crate::kahan::Kahan;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error, PartialEq)]
pub enum SzegoError {
    #[error("angle eta = {0} outside (0, 2π)")]
    EtaOutOfRange(f64),
    #[error("coefficient modulus {0} must be < 1")]
    ModulusOutOfDisk(f64),
    #[error("step cap {n_max} exceeds sequence length {len}")]
    NMaxExceedsSequence { n_max: usize, len: usize },
    #[error("non-finite value encountered at step {0}")]
    NonFinite(usize),
}

/// A point e^{iη} on the unit circle, η ∈ (0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePoint {
    eta: f64,
    z: Complex64,
}

impl CirclePoint {
    pub fn new(eta: f64) -> Result<Self, SzegoError> {
        if !(eta > 0.0 && eta < std::f64::consts::TAU) {
            return Err(SzegoError::EtaOutOfRange(eta));
        }
        Ok(CirclePoint {
            eta,
            z: Complex64::from_polar(1.0, eta),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }
}

/// 2×2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub m00: Complex64,
    pub m01: Complex64,
    pub m10: Complex64,
    pub m11: Complex64,
}

impl Matrix2 {
    pub fn identity() -> Self {
        Matrix2 {
            m00: Complex64::new(1.0, 0.0),
            m01: Complex64::new(0.0, 0.0),
            m10: Complex64::new(0.0, 0.0),
            m11: Complex64::new(1.0, 0.0),
        }
    }

    pub fn mul(&self, rhs: &Matrix2) -> Matrix2 {
        Matrix2 {
            m00: self.m00 * rhs.m00 + self.m01 * rhs.m10,
            m01: self.m00 * rhs.m01 + self.m01 * rhs.m11,
            m10: self.m10 * rhs.m00 + self.m11 * rhs.m10,
            m11: self.m10 * rhs.m01 + self.m11 * rhs.m11,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn scale(&self, factor: f64) -> Matrix2 {
        Matrix2 {
            m00: self.m00 * factor,
            m01: self.m01 * factor,
            m10: self.m10 * factor,
            m11: self.m11 * factor,
        }
    }

    pub fn max_abs_component(&self) -> f64 {
        let mut m = 0.0f64;
        for v in [self.m00, self.m01, self.m10, self.m11] {
            m = m.max(v.re.abs()).max(v.im.abs());
        }
        m
    }

    /// Largest singular value.
    ///
    /// Computed from the eigenvalues of the Hermitian Gram matrix M*M via
    /// the (h11 − h22, h12) rotation form. Unlike the textbook
    /// √((F² ± √(F⁴ − 4|det|²))/2) route, this stays accurate when the two
    /// singular values nearly coincide (F⁴ − 4|det|² cancels to roundoff
    /// there, which would pollute σ_max by ~1e-8). The off-diagonal term
    /// goes through hypot so the formula survives entries up to ~1e150.
    pub fn op_norm(&self) -> f64 {
        let h11 = self.m00.norm_sqr() + self.m10.norm_sqr();
        let h22 = self.m01.norm_sqr() + self.m11.norm_sqr();
        let h12 = self.m00.conj() * self.m01 + self.m10.conj() * self.m11;
        let r = f64::hypot(h11 - h22, 2.0 * h12.norm());
        (0.5 * ((h11 + h22) + r)).sqrt()
    }
}

/// One-step transfer matrix (1/ρ)[[z, −ᾱ], [−αz, 1]] with ρ = √(1−|α|²).
/// Its determinant is z exactly (up to rounding).
pub fn transfer_matrix(alpha: Complex64, z: Complex64) -> Result<Matrix2, SzegoError> {
    let mod2 = alpha.norm_sqr();
    if !(mod2 < 1.0) {
        return Err(SzegoError::ModulusOutOfDisk(mod2.sqrt()));
    }
    let inv_rho = 1.0 / (1.0 - mod2).sqrt();
    Ok(Matrix2 {
        m00: z * inv_rho,
        m01: -alpha.conj() * inv_rho,
        m10: -(alpha * z) * inv_rho,
        m11: Complex64::new(inv_rho, 0.0),
    })
}

/// Snapshot of the recursion at step n. All complex values share the
/// power-of-two exponent `scale_exp`; true values are `field × 2^scale_exp`.
#[derive(Debug, Clone, PartialEq)]
pub struct SzegoState {
    pub n: usize,
    pub phi: Complex64,
    pub phi_star: Complex64,
    pub psi: Complex64,
    pub psi_star: Complex64,
    pub t: Matrix2,
    pub scale_exp: i64,
    /// Σ_{j<n} ln ρ_j — converts the orthonormal φ back to the monic Φ.
    pub log_monic_scale: f64,
}

impl SzegoState {
    /// log‖T_n‖ (operator norm), exact across rescalings.
    pub fn log_t_norm(&self) -> f64 {
        self.t.op_norm().ln() + self.scale_exp as f64 * LN_2
    }

    /// log|Φ_n(z)| of the monic polynomial: |φ_n|·Πρ_j with the shared
    /// exponent folded back in.
    pub fn log_abs_monic_phi(&self) -> f64 {
        self.phi.norm().ln() + self.scale_exp as f64 * LN_2 + self.log_monic_scale
    }

    /// T rebuilt from the polynomial combination
    /// ½[[φ+ψ, φ−ψ], [φ*−ψ*, φ*+ψ*]]; agrees with the accumulated product.
    pub fn t_from_combination(&self) -> Matrix2 {
        let half = 0.5;
        Matrix2 {
            m00: (self.phi + self.psi) * half,
            m01: (self.phi - self.psi) * half,
            m10: (self.phi_star - self.psi_star) * half,
            m11: (self.phi_star + self.psi_star) * half,
        }
    }
}

/// Rescale once entries pass this bound; norm reports switch to pure log
/// space well before any intermediate could overflow.
const RESCALE_THRESHOLD: f64 = 1e150;

/// Evolution of the Szegő recursion at a fixed circle point under the
/// coefficient family e^{iβ}α_n. Iterating yields states n = 0..=n_max.
pub struct SzegoEvolution {
    rotated: Vec<Complex64>,
    z: Complex64,
    n_max: usize,
    state: SzegoState,
    log_monic: Kahan,
    emitted: usize,
    sup_log_t: f64,
    argmax_n: usize,
}

/// Start an evolution; `n_max` may not exceed the sequence length.
pub fn evolve(
    seq: &VerblunskySequence,
    point: CirclePoint,
    n_max: usize,
    beta: f64,
) -> Result<SzegoEvolution, SzegoError> {
    if n_max > seq.len() {
        return Err(SzegoError::NMaxExceedsSequence {
            n_max,
            len: seq.len(),
        });
    }
    let phase = unit_phase(beta);
    let rotated = seq.values()[..n_max].iter().map(|&a| a * phase).collect();
    let one = Complex64::new(1.0, 0.0);
    Ok(SzegoEvolution {
        rotated,
        z: point.z(),
        n_max,
        state: SzegoState {
            n: 0,
            phi: one,
            phi_star: one,
            psi: one,
            psi_star: one,
            t: Matrix2::identity(),
            scale_exp: 0,
            log_monic_scale: 0.0,
        },
        log_monic: Kahan::new(),
        emitted: 0,
        sup_log_t: 0.0,
        argmax_n: 0,
    })
}

impl SzegoEvolution {
    pub fn state(&self) -> &SzegoState {
        &self.state
    }

    pub fn sup_log_t(&self) -> f64 {
        self.sup_log_t
    }

    pub fn argmax_n(&self) -> usize {
        self.argmax_n
    }

    /// Advance one step. Returns false once n_max is reached.
    pub fn advance(&mut self) -> Result<bool, SzegoError> {
        let n = self.state.n;
        if n >= self.n_max {
            return Ok(false);
        }
        let alpha = self.rotated[n];
        let mod2 = alpha.norm_sqr();
        if !(mod2 < 1.0) {
            return Err(SzegoError::ModulusOutOfDisk(mod2.sqrt()));
        }
        let rho = (1.0 - mod2).sqrt();
        let inv_rho = 1.0 / rho;
        let z = self.z;
        let alpha_conj = alpha.conj();
        let w = alpha * z;

        let s = &mut self.state;
        let phi = (z * s.phi - alpha_conj * s.phi_star) * inv_rho;
        let phi_star = (s.phi_star - w * s.phi) * inv_rho;
        // second-kind column (ψ, −ψ*) under the same one-step matrix
        let (u, v) = (s.psi, -s.psi_star);
        let psi = (z * u - alpha_conj * v) * inv_rho;
        let neg_psi_star = (v - w * u) * inv_rho;
        let t = Matrix2 {
            m00: (z * s.t.m00 - alpha_conj * s.t.m10) * inv_rho,
            m01: (z * s.t.m01 - alpha_conj * s.t.m11) * inv_rho,
            m10: (s.t.m10 - w * s.t.m00) * inv_rho,
            m11: (s.t.m11 - w * s.t.m01) * inv_rho,
        };

        self.log_monic.add(rho.ln());
        s.n = n + 1;
        s.phi = phi;
        s.phi_star = phi_star;
        s.psi = psi;
        s.psi_star = -neg_psi_star;
        s.t = t;
        s.log_monic_scale = self.log_monic.value();

        let peak = s.t.max_abs_component();
        if !peak.is_finite() {
            return Err(SzegoError::NonFinite(s.n));
        }
        if peak > RESCALE_THRESHOLD {
            let e = peak.log2().floor() as i32;
            let factor = 2.0f64.powi(-e);
            s.phi *= factor;
            s.phi_star *= factor;
            s.psi *= factor;
            s.psi_star *= factor;
            s.t = s.t.scale(factor);
            s.scale_exp += e as i64;
        }

        let log_norm = s.log_t_norm();
        if log_norm > self.sup_log_t {
            self.sup_log_t = log_norm;
            self.argmax_n = s.n;
        }
        Ok(true)
    }

    /// Run to n_max, discarding intermediate snapshots.
    pub fn run_to_end(&mut self) -> Result<(), SzegoError> {
        while self.advance()? {}
        Ok(())
    }
}

impl Iterator for SzegoEvolution {
    type Item = Result<SzegoState, SzegoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.emitted > self.n_max {
            return None;
        }
        if self.emitted == 0 {
            self.emitted = 1;
            return Some(Ok(self.state.clone()));
        }
        self.emitted += 1;
        match self.advance() {
            Ok(true) => Some(Ok(self.state.clone())),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

/// Relative difference between ψ_n from the direct second-kind recursion and
/// φ_n evolved under the sign-flipped coefficients e^{iπ}α.
pub fn second_kind_equivalence(
    seq: &VerblunskySequence,
    point: CirclePoint,
    n: usize,
) -> Result<f64, SzegoError> {
    let mut direct = evolve(seq, point, n, 0.0)?;
    direct.run_to_end()?;
    let mut flipped = evolve(seq, point, n, std::f64::consts::PI)?;
    flipped.run_to_end()?;
    let a = direct.state();
    let b = flipped.state();
    let shift = 2.0f64.powi((b.scale_exp - a.scale_exp) as i32);
    let diff = (a.psi - b.phi * shift).norm();
    let denom = a.psi.norm().max(f64::MIN_POSITIVE);
    Ok(diff / denom)
}

/// Lean norm-only kernel for grid scans: rotated coefficients and 1/ρ are
/// precomputed once per (sequence, β) and shared across all angles.
pub struct NormKernel {
    rotated: Vec<Complex64>,
    inv_rho: Vec<f64>,
}

impl NormKernel {
    pub fn prepare(seq: &VerblunskySequence, beta: f64, n_max: usize) -> Self {
        let phase = unit_phase(beta);
        let n = n_max.min(seq.len());
        let rotated: Vec<Complex64> = seq.values()[..n].iter().map(|&a| a * phase).collect();
        let inv_rho = rotated
            .iter()
            .map(|a| 1.0 / (1.0 - a.norm_sqr()).sqrt())
            .collect();
        NormKernel { rotated, inv_rho }
    }

    pub fn len(&self) -> usize {
        self.rotated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotated.is_empty()
    }

    /// sup_{n ≤ n_max} log‖T_n(e^{iη})‖ together with the maximizing step.
    /// Returns None if the evolution degenerates to non-finite values.
    pub fn sup_log_norm(&self, eta: f64, n_max: usize) -> Option<(f64, usize)> {
        let n_max = n_max.min(self.rotated.len());
        let z = Complex64::from_polar(1.0, eta);
        let mut t = Matrix2::identity();
        // rescale well below the squared-overflow line so the fast
        // discriminant form below never leaves the finite range
        let rescale_at: f64 = 2.0f64.powi(200);
        let mut exp_bits: i64 = 0;
        // best sup tracked as (σ², exponent) to avoid a log per step
        let mut best_lambda = 1.0f64;
        let mut best_exp = 0i64;
        let mut best_n = 0usize;
        for n in 0..n_max {
            let alpha = self.rotated[n];
            let inv_rho = self.inv_rho[n];
            let alpha_conj = alpha.conj();
            let w = alpha * z;
            t = Matrix2 {
                m00: (z * t.m00 - alpha_conj * t.m10) * inv_rho,
                m01: (z * t.m01 - alpha_conj * t.m11) * inv_rho,
                m10: (t.m10 - w * t.m00) * inv_rho,
                m11: (t.m11 - w * t.m01) * inv_rho,
            };
            let mut h11 = t.m00.norm_sqr() + t.m10.norm_sqr();
            let mut h22 = t.m01.norm_sqr() + t.m11.norm_sqr();
            if h11 > rescale_at || h22 > rescale_at {
                let e = (h11.max(h22).log2() * 0.5).floor() as i32;
                let factor = 2.0f64.powi(-e);
                t = t.scale(factor);
                exp_bits += e as i64;
                h11 = t.m00.norm_sqr() + t.m10.norm_sqr();
                h22 = t.m01.norm_sqr() + t.m11.norm_sqr();
            }
            let h12 = t.m00.conj() * t.m01 + t.m10.conj() * t.m11;
            let d = h11 - h22;
            let r = (d * d + 4.0 * h12.norm_sqr()).sqrt();
            let lambda = 0.5 * ((h11 + h22) + r);
            let improved = if exp_bits == best_exp {
                lambda > best_lambda
            } else {
                // exponents differ only around rare rescales
                lambda.ln() + 2.0 * LN_2 * exp_bits as f64
                    > best_lambda.ln() + 2.0 * LN_2 * best_exp as f64
            };
            if improved {
                best_lambda = lambda;
                best_exp = exp_bits;
                best_n = n + 1;
            }
        }
        if !t.max_abs_component().is_finite() || !best_lambda.is_finite() {
            return None;
        }
        Some((0.5 * best_lambda.ln() + LN_2 * best_exp as f64, best_n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::VerblunskySequence;
    use std::f64::consts::PI;

    fn single(alpha: Complex64, n_max: usize) -> VerblunskySequence {
        let mut v = vec![Complex64::new(0.0, 0.0); n_max];
        v[0] = alpha;
        VerblunskySequence::explicit(v).unwrap()
    }

    #[test]
    fn circle_point_unit_modulus() {
        for eta in [0.1, 1.0, PI, 5.9] {
            let p = CirclePoint::new(eta).unwrap();
            assert!((p.z().norm() - 1.0).abs() <= 1e-14);
        }
        assert!(CirclePoint::new(0.0).is_err());
        assert!(CirclePoint::new(std::f64::consts::TAU).is_err());
    }

    #[test]
    fn transfer_matrix_free_step() {
        let z = Complex64::from_polar(1.0, 1.3);
        let m = transfer_matrix(Complex64::new(0.0, 0.0), z).unwrap();
        assert_eq!(m.m00, z);
        assert_eq!(m.m01.norm(), 0.0);
        assert_eq!(m.m10.norm(), 0.0);
        assert_eq!(m.m11, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn transfer_matrix_half_at_one() {
        let m = transfer_matrix(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let s = 1.0 / 0.75f64.sqrt();
        assert!((m.m00 - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((m.m01 - Complex64::new(-0.5 * s, 0.0)).norm() < 1e-15);
        assert!((m.m10 - Complex64::new(-0.5 * s, 0.0)).norm() < 1e-15);
        assert!((m.m11 - Complex64::new(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transfer_matrix_det_is_z() {
        let seq = VerblunskySequence::power_decay(0.9, 0.5, 3, 50).unwrap();
        for eta in [0.7, 2.0, 4.4] {
            let z = Complex64::from_polar(1.0, eta);
            for &a in seq.values() {
                let det = transfer_matrix(a, z).unwrap().det();
                assert!((det - z).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn transfer_matrix_rejects_boundary() {
        assert!(transfer_matrix(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn op_norm_exact_on_diagonal_near_degenerate() {
        // the naive F⁴ − 4|det|² discriminant would lose ~8 digits here
        let eps = 3e-13;
        let m = Matrix2 {
            m00: Complex64::new(1.0 + eps, 0.0),
            m01: Complex64::new(0.0, 0.0),
            m10: Complex64::new(0.0, 0.0),
            m11: Complex64::new(1.0, 0.0),
        };
        assert!((m.op_norm() - (1.0 + eps)).abs() < 1e-15);
    }

    #[test]
    fn free_evolution_is_unitary() {
        let seq = VerblunskySequence::explicit(vec![Complex64::new(0.0, 0.0); 200]).unwrap();
        let p = CirclePoint::new(2.2).unwrap();
        let mut ev = evolve(&seq, p, 200, 0.0).unwrap();
        while ev.advance().unwrap() {
            let s = ev.state();
            assert!((s.t.op_norm() - 1.0).abs() <= 1e-12);
            // T = diag(z^n, 1)
            assert!((s.t.m00 - p.z().powi(s.n as i32)).norm() <= 1e-11);
            assert_eq!(s.t.m11, Complex64::new(1.0, 0.0));
        }
        assert_eq!(ev.sup_log_t(), 0.0);
    }

    #[test]
    fn single_coefficient_monic_value() {
        // Φ₁(z) = z − ᾱ₀ at z = i with α₀ = 1/2: |Φ₁| = √1.25
        let seq = single(Complex64::new(0.5, 0.0), 1);
        let p = CirclePoint::new(PI / 2.0).unwrap();
        let mut ev = evolve(&seq, p, 1, 0.0).unwrap();
        ev.run_to_end().unwrap();
        let log_phi = ev.state().log_abs_monic_phi();
        assert!((log_phi - 1.25f64.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn determinant_law_random_sequences() {
        let seq = VerblunskySequence::random_weighted(0.5, 0.2, 77, 300).unwrap();
        for eta in [0.5, 1.8, 3.9, 5.5] {
            let p = CirclePoint::new(eta).unwrap();
            let mut ev = evolve(&seq, p, 300, 0.0).unwrap();
            while ev.advance().unwrap() {
                let s = ev.state();
                assert_eq!(s.scale_exp, 0);
                let zn = Complex64::from_polar(1.0, eta * s.n as f64);
                assert!(
                    (s.t.det() - zn).norm() <= s.n as f64 * 1e-13,
                    "det drifted at n = {}",
                    s.n
                );
            }
        }
    }

    #[test]
    fn star_modulus_symmetry_on_circle() {
        let seq = VerblunskySequence::power_decay(0.8, 0.4, 5, 400).unwrap();
        let p = CirclePoint::new(1.1).unwrap();
        let mut ev = evolve(&seq, p, 400, 0.0).unwrap();
        while ev.advance().unwrap() {
            let s = ev.state();
            let rel = (s.phi_star.norm() - s.phi.norm()).abs() / s.phi.norm();
            assert!(rel <= 1e-12);
            let rel2 = (s.psi_star.norm() - s.psi.norm()).abs() / s.psi.norm();
            assert!(rel2 <= 1e-12);
        }
    }

    #[test]
    fn combination_formula_matches_product() {
        let seq = VerblunskySequence::random_weighted(0.4, 0.3, 13, 1000).unwrap();
        let p = CirclePoint::new(2.7).unwrap();
        let mut ev = evolve(&seq, p, 1000, 0.0).unwrap();
        ev.run_to_end().unwrap();
        let s = ev.state();
        let c = s.t_from_combination();
        for (a, b) in [
            (s.t.m00, c.m00),
            (s.t.m01, c.m01),
            (s.t.m10, c.m10),
            (s.t.m11, c.m11),
        ] {
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn norm_never_below_one() {
        let seq = VerblunskySequence::random_weighted(0.3, 0.4, 2, 500).unwrap();
        let p = CirclePoint::new(4.0).unwrap();
        let mut ev = evolve(&seq, p, 500, 0.0).unwrap();
        while ev.advance().unwrap() {
            assert!(ev.state().log_t_norm() >= -1e-13);
        }
    }

    #[test]
    fn second_kind_is_flipped_first_kind() {
        // one step by hand: ρ₀ψ₁(z) = z + ᾱ₀ matches Φ₁ of the flipped sign
        let seq = single(Complex64::new(0.5, 0.0), 1);
        let p = CirclePoint::new(PI / 2.0).unwrap();
        let mut ev = evolve(&seq, p, 1, 0.0).unwrap();
        ev.run_to_end().unwrap();
        let psi1 = ev.state().psi;
        let expect = (p.z() + Complex64::new(0.5, 0.0)) / 0.75f64.sqrt();
        assert!((psi1 - expect).norm() < 1e-14);

        let seq = VerblunskySequence::random_weighted(0.6, 0.2, 21, 1000).unwrap();
        let d = second_kind_equivalence(&seq, p, 1000).unwrap();
        assert!(d <= 1e-10, "relative difference {d}");

        let free = VerblunskySequence::explicit(vec![Complex64::new(0.0, 0.0); 64]).unwrap();
        assert_eq!(second_kind_equivalence(&free, p, 64).unwrap(), 0.0);
    }

    #[test]
    fn finitely_supported_norms_freeze_after_support() {
        let seq = VerblunskySequence::sparse(&[2, 7, 19], 0.6, 3, 64).unwrap();
        let p = CirclePoint::new(0.9).unwrap();
        let mut ev = evolve(&seq, p, 64, 0.0).unwrap();
        let mut norms = vec![ev.state().log_t_norm()];
        while ev.advance().unwrap() {
            norms.push(ev.state().log_t_norm());
        }
        let frozen = norms[20];
        for (n, &v) in norms.iter().enumerate().skip(20) {
            assert!((v - frozen).abs() <= 1e-12, "norm moved at n = {n}");
        }
        let sup = norms.iter().cloned().fold(f64::MIN, f64::max);
        let sup_prefix = norms[..21].iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(sup, sup_prefix);
    }

    #[test]
    fn lean_kernel_matches_full_evolution() {
        let seq = VerblunskySequence::power_decay(0.85, 0.35, 9, 600).unwrap();
        for beta in [0.0, PI] {
            let kernel = NormKernel::prepare(&seq, beta, 600);
            for eta in [0.45, 1.9, 3.3, 5.7] {
                let p = CirclePoint::new(eta).unwrap();
                let mut ev = evolve(&seq, p, 600, beta).unwrap();
                ev.run_to_end().unwrap();
                let (sup, argmax) = kernel.sup_log_norm(eta, 600).unwrap();
                assert!(
                    (sup - ev.sup_log_t()).abs() <= 1e-12 * sup.abs().max(1.0),
                    "sup mismatch at eta = {eta}: {sup} vs {}",
                    ev.sup_log_t()
                );
                assert_eq!(argmax, ev.argmax_n());
            }
        }
    }

    #[test]
    fn rescale_guard_under_forced_blowup() {
        // constant large modulus pushes ‖T‖ past the threshold quickly
        let v = vec![Complex64::new(0.88, 0.2); 3000];
        let seq = VerblunskySequence::explicit(v).unwrap();
        let p = CirclePoint::new(1.0).unwrap();
        let mut ev = evolve(&seq, p, 3000, 0.0).unwrap();
        ev.run_to_end().unwrap();
        let s = ev.state();
        assert!(s.scale_exp > 0, "rescale should have triggered");
        assert!(s.log_t_norm().is_finite());
        assert!(ev.sup_log_t() > 350.0);

        let kernel = NormKernel::prepare(&seq, 0.0, 3000);
        let (sup, _) = kernel.sup_log_norm(1.0, 3000).unwrap();
        assert!((sup - ev.sup_log_t()).abs() <= 1e-9 * sup);
    }
}
