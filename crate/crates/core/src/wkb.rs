//! WKB-transform norm estimates against atomic D-Hölder measures.
//!
//! For an atomic measure the sharp constant of the transform bound is an
//! honest largest-singular-value problem: with A[s,k] = √w_k e^{iω(s,η_k,β)}
//! the supremum of Σ_s |∫ f e^{iω(s,·)} dν|² over ‖f‖_{L²(ν)} = 1 equals
//! σ_max(A)². We assemble the small Gram side of A and extract its top
//! eigenvalue with a deterministic Krylov iteration from a fixed all-ones
//! start, so results are reproducible bit for bit at any worker count
//! (rows are reduced sequentially, workers only split rows).
//!
//! The block-sum estimate is the transpose problem over the same matrix, so
//! its sharp constant must agree — that adjoint equality is a test target,
//! not an assumption.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::coeffs::VerblunskySequence;
use crate::kahan::Kahan;
use crate::measures::HolderMeasure;
use crate::prufer;

#[derive(Debug, Error, PartialEq)]
pub enum WkbError {
    #[error("power iteration hit the cap after {iterations} iterations (lambda = {lambda}, residual = {residual})")]
    NonConvergence {
        lambda: f64,
        residual: f64,
        iterations: u32,
    },
    #[error("scaling fit needs at least 4 distinct cutoffs, got {0}")]
    DegenerateGrid(usize),
    #[error("index range [{lo}, {hi}) invalid for length {len}")]
    RangeError { lo: usize, hi: usize, len: usize },
    #[error("f has {got} values but {want} are required")]
    LengthMismatch { got: usize, want: usize },
    #[error("gram dimension {0} exceeds the {1} guard")]
    GramTooLarge(usize, usize),
    #[error("exponent p = {0} must lie in (1, 2)")]
    BadExponent(f64),
    #[error(transparent)]
    Prufer(#[from] prufer::PruferError),
    #[error(transparent)]
    Measure(#[from] crate::measures::MeasureError),
}

/// Outcome of a sharp-constant computation. For the transform estimate the
/// operator has rows s = 0..=L; for a block estimate the rows are the block
/// and `l + 1` is the block width.
#[derive(Debug, Clone, PartialEq)]
pub struct WkbResult {
    /// Cutoff index: rows are s = 0..=l (possibly shifted into a block).
    pub l: usize,
    /// Sharp quadratic-form constant σ_max(A)².
    pub lambda_max: f64,
    /// lambda_max / (l+1)^{1−D}.
    pub ratio: f64,
    pub d: f64,
    pub beta: f64,
    pub iterations: u32,
    /// ‖Gv − λv‖ at acceptance; bounded by 1e-8·λ.
    pub residual: f64,
}

/// Prefix sums Σ_{k<s}|α_k|² for s = 0..=max_s; a sequence shorter than
/// max_s is extended by zeros (the finite-support continuation).
fn cum_mod2_table(seq: &VerblunskySequence, max_s: usize) -> Vec<f64> {
    let mut cum = Kahan::new();
    let mut out = Vec::with_capacity(max_s + 1);
    out.push(0.0);
    for s in 0..max_s {
        if s < seq.len() {
            cum.add(seq.values()[s].norm_sqr());
        }
        out.push(cum.value());
    }
    out
}

/// Σ_k w_k f_k e^{iω(s, η_k, β)} — the transform of atom values f at row s.
pub fn wkb_transform(
    f: &[Complex64],
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    s: usize,
    beta: f64,
) -> Result<Complex64, WkbError> {
    if f.len() != measure.len() {
        return Err(WkbError::LengthMismatch {
            got: f.len(),
            want: measure.len(),
        });
    }
    let mut re = Kahan::new();
    let mut im = Kahan::new();
    for (fk, atom) in f.iter().zip(measure.atoms()) {
        let w = prufer::omega(seq, s, atom.eta, beta)?;
        let v = fk * Complex64::from_polar(atom.w, w);
        re.add(v.re);
        im.add(v.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Sampling matrix rows s ∈ [s_lo, s_hi), columns the atoms:
/// A[s,k] = √w_k · e^{iω(s, η_k, β)}. Row-major.
fn assemble_rows(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    s_lo: usize,
    s_hi: usize,
    beta: f64,
) -> Vec<Complex64> {
    let cum = cum_mod2_table(seq, s_hi);
    let atoms = measure.atoms();
    let k = atoms.len();
    let rows = s_hi - s_lo;
    let mut a = vec![Complex64::new(0.0, 0.0); rows * k];
    a.par_chunks_mut(k).enumerate().for_each(|(r, row)| {
        let s = s_lo + r;
        let c = cum[s];
        for (j, atom) in atoms.iter().enumerate() {
            let phase = (s as f64 + 1.0) * atom.eta + beta + c / atom.eta;
            row[j] = Complex64::from_polar(atom.w.sqrt(), phase);
        }
    });
    a
}

/// Hermitian Gram A^H A (k × k) of a rows×k row-major matrix. Each output
/// row sums over the s-rows sequentially; parallelism only splits output
/// rows, so the result is independent of the worker count.
fn gram_columns(a: &[Complex64], rows: usize, k: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0); k * k];
    g.par_chunks_mut(k).enumerate().for_each(|(i, out)| {
        for j in i..k {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..rows {
                acc += a[s * k + i].conj() * a[s * k + j];
            }
            out[j] = acc;
        }
    });
    // mirror the strict lower triangle
    for i in 0..k {
        for j in 0..i {
            g[i * k + j] = g[j * k + i].conj();
        }
    }
    g
}

/// Gram A A^H (rows × rows) — the f-side of the block problem.
fn gram_rows(a: &[Complex64], rows: usize, k: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0); rows * rows];
    g.par_chunks_mut(rows).enumerate().for_each(|(i, out)| {
        for j in i..rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..k {
                acc += a[i * k + t] * a[j * k + t].conj();
            }
            out[j] = acc;
        }
    });
    for i in 0..rows {
        for j in 0..i {
            g[i * rows + j] = g[j * rows + i].conj();
        }
    }
    g
}

const ITERATION_CAP: u32 = 10_000;
const RAYLEIGH_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_GRAM_DIM: usize = 8192;
const RITZ_CHECK_EVERY: u32 = 8;

/// Eigenvalue count below x for a symmetric tridiagonal (Sturm sequence).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..diag.len() {
        let off2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - off2 / d;
        if d == 0.0 {
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal by bisection.
fn tridiag_top_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let k = diag.len();
    let mut hi = f64::MIN;
    let mut lo = f64::MAX;
    for i in 0..k {
        let b_left = if i == 0 { 0.0 } else { off[i - 1].abs() };
        let b_right = if i + 1 == k { 0.0 } else { off[i].abs() };
        hi = hi.max(diag[i] + b_left + b_right);
        lo = lo.min(diag[i] - b_left - b_right);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    hi += scale * 1e-12;
    // λ_max is the infimum of x with count(x) = k
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solve (T − shift·I) x = rhs in place for a symmetric tridiagonal T, by
/// LU with partial pivoting on the band (fill-in adds one superdiagonal).
fn tridiag_shifted_solve(diag: &[f64], off: &[f64], shift: f64, x: &mut [f64]) {
    let k = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|&v| v - shift).collect(); // main
    let mut u1 = vec![0.0f64; k]; // first super
    let mut u2 = vec![0.0f64; k]; // second super (pivot fill-in)
    u1[..k - 1].copy_from_slice(off);
    let mut sub = off.to_vec();
    for i in 0..k - 1 {
        if sub[i].abs() > d[i].abs() {
            // swap rows i and i+1 (row i+1 occupies columns i, i+1, i+2)
            let next_u1 = if i + 1 < k - 1 { u1[i + 1] } else { 0.0 };
            let (di, u1i, u2i) = (d[i], u1[i], u2[i]);
            d[i] = sub[i];
            u1[i] = d[i + 1];
            u2[i] = next_u1;
            x.swap(i, i + 1);
            let m = di / d[i];
            d[i + 1] = u1i - m * u1[i];
            u1[i + 1] = u2i - m * u2[i];
            x[i + 1] -= m * x[i];
        } else {
            let m = if d[i] == 0.0 { 0.0 } else { sub[i] / d[i] };
            d[i + 1] -= m * u1[i];
            u1[i + 1] -= m * u2[i];
            x[i + 1] -= m * x[i];
        }
        sub[i] = 0.0;
    }
    for i in (0..k).rev() {
        let mut v = x[i];
        if i + 1 < k {
            v -= u1[i] * x[i + 1];
        }
        if i + 2 < k {
            v -= u2[i] * x[i + 2];
        }
        let pivot = if d[i] != 0.0 { d[i] } else { 1e-300 };
        x[i] = v / pivot;
    }
}

/// Last component (magnitude) of the unit eigenvector of a symmetric
/// tridiagonal at eigenvalue θ, via inverse iteration.
fn tridiag_top_vector_last(diag: &[f64], off: &[f64], theta: f64) -> f64 {
    let k = diag.len();
    if k == 1 {
        return 1.0;
    }
    let scale = diag.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    let shift = theta + 1e-14 * scale;
    let mut y = vec![1.0f64 / (k as f64).sqrt(); k];
    for _ in 0..3 {
        tridiag_shifted_solve(diag, off, shift, &mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return 1.0; // degenerate solve; pessimistic bound
        }
        for v in y.iter_mut() {
            *v /= norm;
        }
    }
    y[k - 1].abs()
}

/// Largest eigenvalue of a Hermitian PSD matrix.
///
/// Krylov (Lanczos) iteration with full reorthogonalization from the
/// normalized all-ones vector: deterministic, one matvec per step.
/// Convergence requires the top Ritz value to settle (increment below
/// 1e-10 relative between checks) and its residual ‖Gy − θy‖ = β|s_k| to
/// fall below 1e-8·θ. Plain single-vector power iteration satisfies the
/// same contract only when the top of the spectrum is well separated; the
/// Fourier-type Grams produced by near-uniform measures have clustered top
/// eigenvalues that stall it, while the Krylov form cuts through.
fn lanczos_lambda_max(g: &[Complex64], n: usize) -> Result<(f64, u32, f64), WkbError> {
    let matvec = |v: &[Complex64], out: &mut [Complex64]| {
        out.par_iter_mut().enumerate().for_each(|(i, wi)| {
            let row = &g[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (gij, vj) in row.iter().zip(v.iter()) {
                acc += gij * vj;
            }
            *wi = acc;
        });
    };

    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    basis.push(vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut theta_prev = f64::NAN;
    let mut theta = 0.0f64;
    let mut residual = f64::INFINITY;
    let cap = ITERATION_CAP.min(n as u32 + 8);

    for it in 1..=cap {
        let q = basis.last().unwrap().clone();
        matvec(&q, &mut w);
        let alpha: f64 = q.iter().zip(w.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        alphas.push(alpha);
        for (wi, qi) in w.iter_mut().zip(q.iter()) {
            *wi -= qi * alpha;
        }
        if let Some(beta_prev) = betas.last() {
            let qm = &basis[basis.len() - 2];
            for (wi, qi) in w.iter_mut().zip(qm.iter()) {
                *wi -= qi * *beta_prev;
            }
        }
        // full reorthogonalization keeps the basis honest at 1e4 steps
        for q_old in &basis {
            let proj: Complex64 = q_old.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            for (wi, qi) in w.iter_mut().zip(q_old.iter()) {
                *wi -= qi * proj;
            }
        }
        let beta = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();

        let scale = alphas.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
        let breakdown = beta <= 1e-14 * scale.max(1.0);
        let check = breakdown || it % RITZ_CHECK_EVERY == 0 || it == cap;
        if check {
            theta = tridiag_top_eigenvalue(&alphas, &betas);
            let s_last = tridiag_top_vector_last(&alphas, &betas, theta);
            residual = if breakdown { 0.0 } else { beta * s_last };
            let settled = (theta - theta_prev).abs() <= RAYLEIGH_TOL * theta.abs().max(1.0);
            // a breakdown means the Krylov space is invariant: the Ritz
            // value is exact there and the residual certificate is 0
            if (settled || breakdown) && residual <= RESIDUAL_TOL * theta.abs().max(1e-300) {
                return Ok((theta, it, residual));
            }
            theta_prev = theta;
        }
        let inv = 1.0 / beta;
        basis.push(w.iter().map(|x| x * inv).collect());
        betas.push(beta);
    }
    Err(WkbError::NonConvergence {
        lambda: theta,
        residual,
        iterations: cap,
    })
}

/// Which Gram of the sampling matrix carries the eigenproblem. Both sides
/// share their nonzero spectrum; the block adjoint test computes them
/// independently on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GramSide {
    Atoms,
    Rows,
    Smaller,
}

fn sharp_constant(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    s_lo: usize,
    s_hi: usize,
    beta: f64,
    side: GramSide,
) -> Result<WkbResult, WkbError> {
    let rows = s_hi - s_lo;
    let k = measure.len();
    let side = match side {
        GramSide::Smaller => {
            if rows < k {
                GramSide::Rows
            } else {
                GramSide::Atoms
            }
        }
        s => s,
    };
    let dim = match side {
        GramSide::Rows => rows,
        _ => k,
    };
    if dim > MAX_GRAM_DIM {
        return Err(WkbError::GramTooLarge(dim, MAX_GRAM_DIM));
    }
    let a = assemble_rows(measure, seq, s_lo, s_hi, beta);
    let g = match side {
        GramSide::Rows => gram_rows(&a, rows, k),
        _ => gram_columns(&a, rows, k),
    };
    drop(a);
    let (lambda_max, iterations, residual) = lanczos_lambda_max(&g, dim)?;
    let d = measure.d_target();
    Ok(WkbResult {
        l: rows - 1,
        lambda_max,
        ratio: lambda_max / (rows as f64).powf(1.0 - d),
        d,
        beta,
        iterations,
        residual,
    })
}

/// Sharp constant of the transform estimate with rows s = 0..=L:
/// λ_max = σ_max(A)² for the (L+1)×K sampling matrix.
pub fn wkb_gram_norm(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    l: usize,
    beta: f64,
) -> Result<WkbResult, WkbError> {
    sharp_constant(measure, seq, 0, l + 1, beta, GramSide::Smaller)
}

/// Sharp constant over the rows of one block [lo, hi).
pub fn block_gram_norm(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    lo: usize,
    hi: usize,
    beta: f64,
) -> Result<WkbResult, WkbError> {
    if lo >= hi {
        return Err(WkbError::RangeError {
            lo,
            hi,
            len: seq.len(),
        });
    }
    sharp_constant(measure, seq, lo, hi, beta, GramSide::Atoms)
}

/// The same block constant computed from the transposed problem
/// (sequences on the block → functions of η): sup_f ∫|Σ_s f_s e^{iω}|²dν
/// over ‖f‖_{ℓ²} = 1. Must equal `block_gram_norm` up to iteration error.
pub fn block_sharp_dual(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    lo: usize,
    hi: usize,
    beta: f64,
) -> Result<WkbResult, WkbError> {
    if lo >= hi {
        return Err(WkbError::RangeError {
            lo,
            hi,
            len: seq.len(),
        });
    }
    sharp_constant(measure, seq, lo, hi, beta, GramSide::Rows)
}

/// Both sides of the block-sum estimate for a concrete f on the block:
/// lhs = ∫|Σ_{s∈block} f(s) e^{iω(s,η,β)}|² dν,
/// rhs = Δx^{1−D} Σ|f|².
pub fn block_bound_check(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    lo: usize,
    hi: usize,
    f: &[Complex64],
    beta: f64,
) -> Result<(f64, f64), WkbError> {
    if lo >= hi {
        return Err(WkbError::RangeError {
            lo,
            hi,
            len: seq.len(),
        });
    }
    let width = hi - lo;
    if f.len() != width {
        return Err(WkbError::LengthMismatch {
            got: f.len(),
            want: width,
        });
    }
    let a = assemble_rows(measure, seq, lo, hi, beta);
    let k = measure.len();
    // column j of A already carries √w_j, so |Σ_s f_s A[s,j]|² = w_j|Σ f e^{iω}|²
    let mut lhs = Kahan::new();
    for j in 0..k {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, fs) in f.iter().enumerate() {
            acc += fs * a[s * k + j];
        }
        lhs.add(acc.norm_sqr());
    }
    let f_l2: f64 = f.iter().map(|x| x.norm_sqr()).sum();
    let rhs = (width as f64).powf(1.0 - measure.d_target()) * f_l2;
    Ok((lhs.value(), rhs))
}

/// Fit of log λ_max against log(L+1) across a cutoff grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_ratio: f64,
}

/// Least-squares exponent of the λ_max(L) growth. Needs ≥ 4 distinct
/// cutoffs to be meaningful.
pub fn scaling_fit(results: &[WkbResult]) -> Result<ScalingFit, WkbError> {
    let mut ls: Vec<usize> = results.iter().map(|r| r.l).collect();
    ls.sort_unstable();
    ls.dedup();
    if ls.len() < 4 {
        return Err(WkbError::DegenerateGrid(ls.len()));
    }
    let xs: Vec<f64> = results.iter().map(|r| ((r.l + 1) as f64).ln()).collect();
    let ys: Vec<f64> = results.iter().map(|r| r.lambda_max.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    let slope = sxy / sxx;
    Ok(ScalingFit {
        slope,
        intercept: ym - slope * xm,
        max_ratio: results.iter().map(|r| r.ratio).fold(f64::MIN, f64::max),
    })
}

/// Trailing-window slopes (window of up to 4 points) per grid entry; the
/// first entry has no window and reports NaN.
pub fn windowed_slopes(results: &[WkbResult], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(results.len());
    for i in 0..results.len() {
        if i == 0 {
            out.push(f64::NAN);
            continue;
        }
        let lo = i.saturating_sub(window.max(2) - 1);
        let xs: Vec<f64> = results[lo..=i]
            .iter()
            .map(|r| ((r.l + 1) as f64).ln())
            .collect();
        let ys: Vec<f64> = results[lo..=i].iter().map(|r| r.lambda_max.ln()).collect();
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (x, y) in xs.iter().zip(ys.iter()) {
            sxx += (x - xm) * (x - xm);
            sxy += (x - xm) * (y - ym);
        }
        out.push(sxy / sxx);
    }
    out
}

/// Which summation-by-parts identity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbpForm {
    /// Σ_{j=Jl}^{Jr} a_j (b_{j+1} − b_j)
    ///   = (a_Jr b_{Jr+1} − a_Jl b_Jl) − Σ_{j=Jl+1}^{Jr} b_j (a_j − a_{j−1}).
    First,
    /// Σ_{j=Jl}^{Jr} a_j b_j
    ///   = a_Jl Σ_{j=Jl}^{Jr} b_j + Σ_{j=Jl}^{Jr−1} (a_{j+1} − a_j) Σ_{k=j+1}^{Jr} b_k.
    Second,
}

/// Evaluate both sides of the selected identity on absolute index ranges.
/// Form `First` additionally reads b at Jr+1.
pub fn sum_by_parts(
    a: &[Complex64],
    b: &[Complex64],
    jl: usize,
    jr: usize,
    form: SbpForm,
) -> Result<(Complex64, Complex64), WkbError> {
    if jl > jr || jr >= a.len() {
        return Err(WkbError::RangeError {
            lo: jl,
            hi: jr + 1,
            len: a.len(),
        });
    }
    let b_needed = match form {
        SbpForm::First => jr + 2,
        SbpForm::Second => jr + 1,
    };
    if b.len() < b_needed {
        return Err(WkbError::RangeError {
            lo: jl,
            hi: b_needed,
            len: b.len(),
        });
    }
    match form {
        SbpForm::First => {
            let mut lhs = Complex64::new(0.0, 0.0);
            for j in jl..=jr {
                lhs += a[j] * (b[j + 1] - b[j]);
            }
            let mut tail = Complex64::new(0.0, 0.0);
            for j in jl + 1..=jr {
                tail += b[j] * (a[j] - a[j - 1]);
            }
            let rhs = (a[jr] * b[jr + 1] - a[jl] * b[jl]) - tail;
            Ok((lhs, rhs))
        }
        SbpForm::Second => {
            let mut lhs = Complex64::new(0.0, 0.0);
            for j in jl..=jr {
                lhs += a[j] * b[j];
            }
            let mut b_sum = Complex64::new(0.0, 0.0);
            for bj in &b[jl..=jr] {
                b_sum += bj;
            }
            // suffix sums Σ_{k=j+1}^{Jr} b_k, built from the right
            let mut rhs = a[jl] * b_sum;
            let mut suffix = Complex64::new(0.0, 0.0);
            for j in (jl..jr).rev() {
                suffix += b[j + 1];
                rhs += (a[j + 1] - a[j]) * suffix;
            }
            Ok((lhs, rhs))
        }
    }
}

/// Both sides of the maximal-function inequality
/// (∫ M_n(η)^q dν)^{1/q} ≤ C (Σ_{j∈block} |α_j|^p)^{1/p} with q the Hölder
/// conjugate of p. The constant C is not pinned anywhere, so this is a
/// reporting diagnostic only; callers ratio the two sides.
pub fn maximal_inequality_sides(
    measure: &HolderMeasure,
    seq: &VerblunskySequence,
    lo: usize,
    hi: usize,
    beta: f64,
    p: f64,
) -> Result<(f64, f64), WkbError> {
    if !(p > 1.0 && p < 2.0) {
        return Err(WkbError::BadExponent(p));
    }
    let q = p / (p - 1.0);
    let mut lhs_q = Kahan::new();
    for atom in measure.atoms() {
        let m = maximal_function(seq, atom.eta, beta, lo, hi)?;
        lhs_q.add(atom.w * m.powf(q));
    }
    let rhs_p: f64 = seq.values()[lo..hi].iter().map(|v| v.norm().powf(p)).sum();
    Ok((lhs_q.value().powf(1.0 / q), rhs_p.powf(1.0 / p)))
}

/// max_{ξ ∈ [lo, hi)} |Σ_{j=lo}^{ξ} α_j e^{iω(j,η,β)}| — the block maximal
/// function of the coefficient-weighted WKB exponentials.
pub fn maximal_function(
    seq: &VerblunskySequence,
    eta: f64,
    beta: f64,
    lo: usize,
    hi: usize,
) -> Result<f64, WkbError> {
    if lo >= hi || hi > seq.len() {
        return Err(WkbError::RangeError {
            lo,
            hi,
            len: seq.len(),
        });
    }
    let omegas = prufer::omega_table(seq, hi - 1, eta, beta)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut best = 0.0f64;
    for (v, om) in seq.values()[lo..hi].iter().zip(&omegas[lo..hi]) {
        acc += v * Complex64::from_polar(1.0, *om);
        best = best.max(acc.norm());
    }
    Ok(best)
}
