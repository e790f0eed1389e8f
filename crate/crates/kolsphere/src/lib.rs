//! Spectral analysis of the linearized two-jet Kolmogorov type flow on the
//! unit sphere.
//!
//! The stationary flow has stream function proportional to the zonal
//! spherical harmonic `Y_2^0`. Linearizing the vorticity equation around it
//! and restricting to a single azimuthal wavenumber `m` gives a tridiagonal
//! operator
//!
//! ```text
//! L_{alpha,m} = A_m - i*alpha*m*Lambda_m
//! ```
//!
//! acting on spherical-harmonic coefficients of degree `n >= max(2,|m|)`,
//! where `A = Delta + 2` is the diffusive part and
//! `Lambda_m = M_{cos theta} (I + 6 Delta^{-1})` the advective part.
//! This crate assembles those operators, computes resolvent norms along the
//! imaginary axis, the pseudospectral bound `Psi`, propagator norm curves
//! for `e^{t L}`, and the envelope/coercivity quantities that control the
//! enhanced-dissipation decay rate `~ |alpha|^{1/2} |m|^{2/3}`.
//!
//! Modules mirror the pipeline: [`harmonics`] (basis evaluation and
//! quadrature), [`operators`] (banded assembly), [`numkernels`]
//! (singular values, eigenvalues, matrix exponentials), [`pseudospectrum`]
//! (sweeps, envelopes, coercivity scans) and [`semigroup`] (decay curves and
//! scaling studies).

// Pull in the BLAS implementation so `ndarray`'s matrix products link
// against it (the LAPACK side is wired through `ndarray-linalg`).
extern crate blas_src;

pub mod harmonics;
pub mod numkernels;
pub mod operators;
pub mod pseudospectrum;
pub mod semigroup;

pub use harmonics::{Degree, Order, QuadratureRule};
pub use numkernels::Tolerance;
pub use operators::{BandedOperator, ModeSpace, SpaceKind, SpectralVector};
pub use pseudospectrum::{EnvelopeParams, GridSpec, SweepResult};
pub use semigroup::{DecayEstimate, PropagatorCurve, ScalingStudy, TimeGrid, TransientStudy};
