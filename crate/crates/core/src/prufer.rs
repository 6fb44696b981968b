//! Prüfer variables: the polar form Φ_n = R_n e^{i(nη + θ_n)} of the monic
//! polynomial at a circle point, evolved directly from the coefficients.
//!
//! The phase θ is stored unwrapped on the real line and every accumulator
//! (log R, θ, Σ|α|², the asymptotic residual) runs through compensated
//! summation so that 10⁵–10⁶ step runs keep the cross-representation
//! contracts. The phase branch is unambiguous: the update's right-hand side
//! has positive real part whenever |α| < 1, so the principal argument keeps
//! every increment inside (−π/2, π/2).

use num_complex::Complex64;
use thiserror::Error;

use crate::coeffs::VerblunskySequence;
use crate::kahan::Kahan;
use crate::szego::{self, CirclePoint};

#[derive(Debug, Error, PartialEq)]
pub enum PruferError {
    #[error("coefficient modulus {0} must be < 1")]
    ModulusOutOfDisk(f64),
    #[error("eta = {0} must be positive (1/η enters the corrected phase)")]
    EtaNotPositive(f64),
    #[error("step cap {n} exceeds sequence length {len}")]
    NExceedsSequence { n: usize, len: usize },
    #[error("non-finite intermediate at step {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Szego(#[from] szego::SzegoError),
}

/// Prüfer data at step n. `log_r` and `theta` refer to the monic polynomial
/// of the β-rotated coefficient family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruferState {
    pub n: usize,
    pub log_r: f64,
    /// Continuously branched phase, |θ_{n+1} − θ_n| < π at every step.
    pub theta: f64,
    /// τ(n) = 2θ_n − (1/η)Σ_{j<n}|α_j|².
    pub tau: f64,
    pub eta: f64,
    pub beta: f64,
    /// Σ_{j<n} |α_j|².
    pub cum_mod2: f64,
    /// log R_n + Σ_{j<n} Re(α_j e^{iψ_j}) — the error term of the ℓ²
    /// asymptotic formula; plateaus for square-summable coefficients.
    pub fs_residual: f64,
}

impl PruferState {
    /// ψ(n) = (n+1)η + β + 2θ_n, the phase driving the next step.
    pub fn psi(&self) -> f64 {
        (self.n as f64 + 1.0) * self.eta + self.beta + 2.0 * self.theta
    }

    /// ω(n) + τ(n) − ψ(n), scaled by the phase magnitude. The two routes to
    /// ψ agree up to rounding of O(nη)-sized sums, so the residual is
    /// meaningful relative to max(1, |ψ|).
    pub fn phase_identity_residual(&self) -> f64 {
        let omega = (self.n as f64 + 1.0) * self.eta + self.beta + self.cum_mod2 / self.eta;
        let psi = self.psi();
        ((omega + self.tau) - psi).abs() / psi.abs().max(1.0)
    }

    /// log r_n = log|φ_n| of the orthonormal polynomial, given Σ ln ρ_j.
    pub fn log_r_orthonormal(&self, log_monic_scale: f64) -> f64 {
        self.log_r - log_monic_scale
    }
}

/// Raw update increments for one step at driving phase ψ.
/// Returns (Δlog R, Δθ, |α|², Re(α e^{iψ})).
fn step_increments(alpha: Complex64, psi: f64) -> Result<(f64, f64, f64, f64), PruferError> {
    let mod2 = alpha.norm_sqr();
    if !(mod2 < 1.0) {
        return Err(PruferError::ModulusOutOfDisk(mod2.sqrt()));
    }
    let w = alpha * Complex64::from_polar(1.0, psi);
    let d = 1.0 + mod2 - 2.0 * w.re;
    let d_log_r = 0.5 * d.ln();
    // −arg(1 − α e^{iψ}); the real part 1 − Re(w) is positive for |α| < 1
    let d_theta = f64::atan2(w.im, 1.0 - w.re);
    if !d_log_r.is_finite() || !d_theta.is_finite() {
        return Err(PruferError::NonFinite(0));
    }
    Ok((d_log_r, d_theta, mod2, w.re))
}

/// Single-step form: advance one state by one coefficient.
pub fn prufer_step(state: &PruferState, alpha: Complex64) -> Result<PruferState, PruferError> {
    let (d_log_r, d_theta, mod2, re_w) = step_increments(alpha, state.psi())?;
    let cum_mod2 = state.cum_mod2 + mod2;
    let theta = state.theta + d_theta;
    Ok(PruferState {
        n: state.n + 1,
        log_r: state.log_r + d_log_r,
        theta,
        tau: 2.0 * theta - cum_mod2 / state.eta,
        eta: state.eta,
        beta: state.beta,
        cum_mod2,
        fs_residual: state.fs_residual + d_log_r + re_w,
    })
}

/// Long-run evolution with compensated accumulators.
pub struct PruferEvolution<'a> {
    values: &'a [Complex64],
    eta: f64,
    beta: f64,
    n: usize,
    log_r: Kahan,
    theta: Kahan,
    cum_mod2: Kahan,
    fs: Kahan,
    last_d_theta: f64,
}

impl<'a> PruferEvolution<'a> {
    pub fn start(seq: &'a VerblunskySequence, eta: f64, beta: f64) -> Result<Self, PruferError> {
        if !(eta > 0.0) {
            return Err(PruferError::EtaNotPositive(eta));
        }
        Ok(PruferEvolution {
            values: seq.values(),
            eta,
            beta,
            n: 0,
            log_r: Kahan::new(),
            theta: Kahan::new(),
            cum_mod2: Kahan::new(),
            fs: Kahan::new(),
            last_d_theta: 0.0,
        })
    }

    pub fn state(&self) -> PruferState {
        let theta = self.theta.value();
        let cum = self.cum_mod2.value();
        PruferState {
            n: self.n,
            log_r: self.log_r.value(),
            theta,
            tau: 2.0 * theta - cum / self.eta,
            eta: self.eta,
            beta: self.beta,
            cum_mod2: cum,
            fs_residual: self.fs.value(),
        }
    }

    /// θ increment of the most recent step.
    pub fn last_d_theta(&self) -> f64 {
        self.last_d_theta
    }

    pub fn step(&mut self) -> Result<bool, PruferError> {
        if self.n >= self.values.len() {
            return Ok(false);
        }
        let psi = (self.n as f64 + 1.0) * self.eta + self.beta + 2.0 * self.theta.value();
        let (d_log_r, d_theta, mod2, re_w) =
            step_increments(self.values[self.n], psi).map_err(|e| match e {
                PruferError::NonFinite(_) => PruferError::NonFinite(self.n),
                other => other,
            })?;
        self.log_r.add(d_log_r);
        self.theta.add(d_theta);
        self.cum_mod2.add(mod2);
        self.fs.add(d_log_r + re_w);
        self.last_d_theta = d_theta;
        self.n += 1;
        Ok(true)
    }

    pub fn run_to(&mut self, n: usize) -> Result<(), PruferError> {
        if n > self.values.len() {
            return Err(PruferError::NExceedsSequence {
                n,
                len: self.values.len(),
            });
        }
        while self.n < n {
            self.step()?;
        }
        Ok(())
    }
}

/// ω(s, η, β) = (s+1)η + β + (1/η)Σ_{k<s}|α_k|², the WKB phase. The sum is
/// empty at s = 0.
pub fn omega(seq: &VerblunskySequence, s: usize, eta: f64, beta: f64) -> Result<f64, PruferError> {
    if !(eta > 0.0) {
        return Err(PruferError::EtaNotPositive(eta));
    }
    if s > seq.len() {
        return Err(PruferError::NExceedsSequence {
            n: s,
            len: seq.len(),
        });
    }
    let mut cum = Kahan::new();
    for v in &seq.values()[..s] {
        cum.add(v.norm_sqr());
    }
    Ok((s as f64 + 1.0) * eta + beta + cum.value() / eta)
}

/// ω(s, η, β) for every s = 0..=max_s in one pass.
pub fn omega_table(
    seq: &VerblunskySequence,
    max_s: usize,
    eta: f64,
    beta: f64,
) -> Result<Vec<f64>, PruferError> {
    if !(eta > 0.0) {
        return Err(PruferError::EtaNotPositive(eta));
    }
    if max_s > seq.len() {
        return Err(PruferError::NExceedsSequence {
            n: max_s,
            len: seq.len(),
        });
    }
    let mut cum = Kahan::new();
    let mut out = Vec::with_capacity(max_s + 1);
    for s in 0..=max_s {
        out.push((s as f64 + 1.0) * eta + beta + cum.value() / eta);
        if s < seq.len() {
            cum.add(seq.values()[s].norm_sqr());
        }
    }
    Ok(out)
}

/// Residual of the ℓ² asymptotic formula at step n.
pub fn fs_residual(
    seq: &VerblunskySequence,
    eta: f64,
    beta: f64,
    n: usize,
) -> Result<f64, PruferError> {
    let mut ev = PruferEvolution::start(seq, eta, beta)?;
    ev.run_to(n)?;
    Ok(ev.state().fs_residual)
}

/// Relative difference between R_n from the Prüfer flow and |Φ_n(e^{iη})|
/// from the polynomial recursion, both under the β-rotated coefficients.
/// The comparison runs in log space so it survives norm blow-up.
pub fn consistency_check(
    seq: &VerblunskySequence,
    eta: f64,
    beta: f64,
    n: usize,
) -> Result<f64, PruferError> {
    let mut pr = PruferEvolution::start(seq, eta, beta)?;
    pr.run_to(n)?;
    let point = CirclePoint::new(eta)?;
    let mut ev = szego::evolve(seq, point, n, beta)?;
    ev.run_to_end()?;
    let log_phi = ev.state().log_abs_monic_phi();
    Ok(((pr.state().log_r - log_phi).exp() - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(alpha: Complex64, n_max: usize) -> VerblunskySequence {
        let mut v = vec![Complex64::new(0.0, 0.0); n_max];
        v[0] = alpha;
        VerblunskySequence::explicit(v).unwrap()
    }

    fn zero_state(eta: f64, beta: f64) -> PruferState {
        PruferState {
            n: 0,
            log_r: 0.0,
            theta: 0.0,
            tau: 0.0,
            eta,
            beta,
            cum_mod2: 0.0,
            fs_residual: 0.0,
        }
    }

    #[test]
    fn zero_coefficient_is_a_no_op() {
        let s = prufer_step(&zero_state(1.3, 0.7), Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(s.log_r, 0.0);
        assert_eq!(s.theta, 0.0);
        assert_eq!(s.tau, 0.0);
        assert_eq!(s.n, 1);
    }

    #[test]
    fn hand_case_half_at_pi_over_two() {
        let s = prufer_step(&zero_state(PI / 2.0, 0.0), Complex64::new(0.5, 0.0)).unwrap();
        assert!((s.log_r - 0.5 * 1.25f64.ln()).abs() < 1e-15);
        assert!(((2.0 * s.log_r).exp() - 1.25).abs() < 1e-14);
        assert!((s.theta - 0.5f64.atan()).abs() < 1e-15);
    }

    #[test]
    fn rejects_disk_boundary_and_bad_eta() {
        assert!(matches!(
            prufer_step(&zero_state(1.0, 0.0), Complex64::new(0.0, 1.0)),
            Err(PruferError::ModulusOutOfDisk(_))
        ));
        let seq = single(Complex64::new(0.5, 0.0), 4);
        assert!(matches!(
            PruferEvolution::start(&seq, 0.0, 0.0),
            Err(PruferError::EtaNotPositive(_))
        ));
        assert!(matches!(
            omega(&seq, 1, -0.5, 0.0),
            Err(PruferError::EtaNotPositive(_))
        ));
    }

    #[test]
    fn radius_update_is_definitional() {
        let seq = VerblunskySequence::random_weighted(0.5, 0.2, 4, 500).unwrap();
        let mut ev = PruferEvolution::start(&seq, 2.1, 0.0).unwrap();
        for n in 0..500 {
            let before = ev.state();
            let psi = before.psi();
            ev.step().unwrap();
            let after = ev.state();
            let w = seq.values()[n] * Complex64::from_polar(1.0, psi);
            let d = 1.0 + seq.values()[n].norm_sqr() - 2.0 * w.re;
            let measured = (2.0 * (after.log_r - before.log_r)).exp();
            assert!((measured - d).abs() <= 1e-14 * d.max(1.0));
            assert!(ev.last_d_theta().abs() < PI / 2.0);
        }
    }

    #[test]
    fn omega_values() {
        let free = VerblunskySequence::explicit(vec![Complex64::new(0.0, 0.0); 8]).unwrap();
        for s in 0..8 {
            let w = omega(&free, s, 1.1, 0.4).unwrap();
            assert!((w - ((s as f64 + 1.0) * 1.1 + 0.4)).abs() < 1e-12);
        }
        let seq = single(Complex64::new(0.5, 0.0), 4);
        // s = 0: the correction sum is empty regardless of coefficients
        assert_eq!(omega(&seq, 0, 0.7, 0.3).unwrap(), 0.7 + 0.3);
        // s = 1, η = π/2: ω = π + (2/π)·0.25
        let w = omega(&seq, 1, PI / 2.0, 0.0).unwrap();
        assert!((w - (PI + 0.25 / (PI / 2.0))).abs() < 1e-14);
        assert!((w - 3.300_747_596_681_688).abs() < 1e-12);
    }

    #[test]
    fn omega_table_matches_pointwise() {
        let seq = VerblunskySequence::power_decay(0.6, 0.7, 8, 64).unwrap();
        let table = omega_table(&seq, 64, 0.9, PI).unwrap();
        for (s, &t) in table.iter().enumerate() {
            assert_eq!(t, omega(&seq, s, 0.9, PI).unwrap());
        }
    }

    #[test]
    fn fs_residual_free_case_exactly_zero() {
        let free = VerblunskySequence::explicit(vec![Complex64::new(0.0, 0.0); 128]).unwrap();
        for n in [0, 1, 64, 128] {
            assert_eq!(fs_residual(&free, 1.7, 0.0, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn fs_residual_single_coefficient_plateau() {
        // at η = π/2 the oscillatory term vanishes for the first step
        let seq = single(Complex64::new(0.5, 0.0), 32);
        let expect = 0.5 * 1.25f64.ln();
        for n in 1..=32 {
            let r = fs_residual(&seq, PI / 2.0, 0.0, n).unwrap();
            assert!((r - expect).abs() < 1e-15, "residual moved at n = {n}");
        }
    }

    #[test]
    fn fs_residual_plateaus_for_l2_sequences() {
        let seq = VerblunskySequence::random_weighted(0.6, 0.2, 12, 10_000).unwrap();
        let mut ev = PruferEvolution::start(&seq, 2.4, 0.0).unwrap();
        ev.run_to(1000).unwrap();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        while ev.state().n < 10_000 {
            ev.step().unwrap();
            let r = ev.state().fs_residual;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        // oscillation over [1e3, 1e4] is controlled by the tail of Σ|α|²
        let tail: f64 = seq.values()[1000..].iter().map(|v| v.norm_sqr()).sum();
        assert!(hi - lo <= 10.0 * tail, "osc {} vs tail {}", hi - lo, tail);
    }

    #[test]
    fn phase_identity_holds_along_runs() {
        let seq = VerblunskySequence::random_weighted(0.4, 0.3, 3, 20_000).unwrap();
        for beta in [0.0, PI] {
            let mut ev = PruferEvolution::start(&seq, 3.0, beta).unwrap();
            while ev.step().unwrap() {
                assert!(ev.state().phase_identity_residual() <= 1e-12);
            }
        }
    }

    #[test]
    fn tau_increment_bounded_by_neighbour_moduli() {
        let seq = VerblunskySequence::power_decay(0.9, 0.6, 7, 20_000).unwrap();
        let mut ev = PruferEvolution::start(&seq, 1.9, 0.0).unwrap();
        let mut sup_ratio = 0.0f64;
        let mut prev_tau = ev.state().tau;
        for n in 0..seq.len() - 1 {
            ev.step().unwrap();
            let tau = ev.state().tau;
            let denom = seq.values()[n].norm() + seq.values()[n + 1].norm();
            if denom > 0.0 {
                sup_ratio = sup_ratio.max((tau - prev_tau).abs() / denom);
            }
            prev_tau = tau;
        }
        assert!(sup_ratio.is_finite());
        // 2|Δθ| ≤ 2·asin|α| plus the |α|²/η drift: comfortably O(1) here
        assert!(sup_ratio < 10.0, "sup ratio {sup_ratio}");
    }

    #[test]
    fn consistency_free_and_hand_case() {
        // the Prüfer side is exactly 0; the polynomial side only drifts by
        // the rounding of 64 unit-modulus multiplications
        let free = VerblunskySequence::explicit(vec![Complex64::new(0.0, 0.0); 64]).unwrap();
        assert!(consistency_check(&free, 1.0, 0.0, 64).unwrap() < 1e-13);

        let seq = single(Complex64::new(0.5, 0.0), 1);
        let d = consistency_check(&seq, PI / 2.0, 0.0, 1).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn consistency_random_sequences_both_betas() {
        let seq = VerblunskySequence::random_weighted(0.5, 0.3, 19, 1000).unwrap();
        for beta in [0.0, PI] {
            for eta in [0.8, 2.9, 5.1] {
                let d = consistency_check(&seq, eta, beta, 1000).unwrap();
                assert!(d <= 1e-8, "consistency {d} at eta {eta} beta {beta}");
            }
        }
    }

    #[test]
    fn orthonormal_radius_matches_szego_phi() {
        let seq = VerblunskySequence::power_decay(0.7, 0.9, 2, 200).unwrap();
        let eta = 1.4;
        let mut pr = PruferEvolution::start(&seq, eta, 0.0).unwrap();
        pr.run_to(200).unwrap();
        let point = CirclePoint::new(eta).unwrap();
        let mut ev = szego::evolve(&seq, point, 200, 0.0).unwrap();
        ev.run_to_end().unwrap();
        let s = ev.state();
        let log_phi_ortho = s.phi.norm().ln() + s.scale_exp as f64 * std::f64::consts::LN_2;
        let got = pr.state().log_r_orthonormal(s.log_monic_scale);
        assert!((got - log_phi_ortho).abs() < 1e-10);
    }
}
