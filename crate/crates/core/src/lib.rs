//! Numerical laboratory for orthogonal polynomials on the unit circle.
//!
//! The crate evolves the Szegő recursion pointwise on the circle, tracks the
//! associated transfer-matrix cocycle and its Prüfer-variable form, measures
//! oscillatory-sum operator norms against fractal (D-Hölder) measures, and
//! scans angle grids for the set where the cocycle norm blows up.
//!
//! Modules mirror the pipeline:
//!
//! * [`coeffs`] — Verblunsky coefficient sequences, dyadic block partitions,
//!   and adaptive subdivision diagnostics.
//! * [`szego`] — pointwise Szegő recursion: first/second-kind polynomials and
//!   the accumulated 2×2 Szegő matrices with spectral norms.
//! * [`prufer`] — log-radius/phase flow equivalent to the recursion, plus the
//!   derived phases τ, ψ, ω.
//! * [`measures`] — atomic approximations of uniformly D-Hölder measures.
//! * [`wkb`] — WKB-transform Gram norms, scaling fits, summation by parts,
//!   and block maximal functions.
//! * [`badset`] — sup-norm scans over angle grids, super-level sets, and
//!   box-counting dimension fits.
//! * [`io`] — CSV/JSON artifact formats shared by the CLI and tests.

// `!(x < bound)` guards double as NaN rejections; the "positive" spelling
// clippy prefers would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod badset;
pub mod coeffs;
pub mod io;
pub mod kahan;
pub mod measures;
pub mod prufer;
pub mod szego;
pub mod wkb;

pub use num_complex::Complex64;
