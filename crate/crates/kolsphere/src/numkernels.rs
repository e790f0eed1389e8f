//! Numerical linear-algebra kernels behind the analysis modules: smallest
//! singular values, Hermitian extremal eigenvalues, operator norms, and the
//! matrix exponential.
//!
//! Two regimes coexist. Dense inputs (dimension <= [`DENSE_MAX_DIM`]) go
//! through LAPACK. Tridiagonal operators of any size use a Givens-rotation
//! QR factorization plus power iteration on the inverse Gram matrix, which
//! keeps resolvent sweeps at truncation degrees in the thousands cheap and
//! deterministic. All reductions run in a fixed index order so repeated runs
//! are bit-identical.

use crate::operators::BandedOperator;
use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{EigValsh, Inverse, JobSvd, OperationNorm, SVD, SVDDC, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest dimension handled by dense LAPACK kernels.
pub const DENSE_MAX_DIM: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum NumError {
    #[error("relative tolerance {0} outside [1e-14, 1e-2]")]
    BadTolerance(f64),
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix deviates from Hermitian by {deviation}")]
    NonHermitian { deviation: f64 },
    #[error("{kernel} did not converge within {iterations} iterations")]
    NoConvergence { kernel: &'static str, iterations: usize },
    #[error("{0}")]
    Unsupported(&'static str),
    #[error("dense linear algebra failed: {0}")]
    Lapack(String),
}

/// Relative accuracy target for iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    rel: f64,
}

impl Tolerance {
    pub fn new(rel: f64) -> Result<Self, NumError> {
        if !(1e-14..=1e-2).contains(&rel) {
            return Err(NumError::BadTolerance(rel));
        }
        Ok(Tolerance { rel })
    }

    pub fn rel(&self) -> f64 {
        self.rel
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-10 }
    }
}

fn lapack_err(e: impl std::fmt::Display) -> NumError {
    NumError::Lapack(e.to_string())
}

fn require_square(a: &ArrayView2<Complex64>) -> Result<usize, NumError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(NumError::NonSquare { rows, cols });
    }
    Ok(rows)
}

/// QR factorization of a tridiagonal matrix by Givens rotations.
///
/// `T = Q R` with `R` upper triangular of bandwidth 2 and `Q` the product of
/// the stored rotations. Solves with `T`, `T*`, `R` and `R*` are all O(n).
pub(crate) struct TriQr {
    /// R diagonal, first and second superdiagonals.
    r0: Vec<Complex64>,
    r1: Vec<Complex64>,
    r2: Vec<Complex64>,
    /// Rotation (c real, s complex) that acted on rows (k, k+1).
    cs: Vec<(f64, Complex64)>,
}

fn givens(f: Complex64, g: Complex64) -> (f64, Complex64, Complex64) {
    // Unitary G = [[c, s], [-conj(s), c]] with real c >= 0 and
    // G [f, g]^T = [r, 0]^T.
    let fa = f.norm();
    let ga = g.norm();
    if ga == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0), f);
    }
    if fa == 0.0 {
        let phase = g.conj() / ga;
        return (0.0, phase, Complex64::new(ga, 0.0));
    }
    let d = fa.hypot(ga);
    let c = fa / d;
    let phase = f / fa;
    let s = phase * g.conj() / d;
    (c, s, phase * d)
}

impl TriQr {
    /// Factor the tridiagonal matrix with the given bands
    /// (`sub[k] = T[k+1,k]`, `diag[k] = T[k,k]`, `sup[k] = T[k,k+1]`).
    pub(crate) fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64]) -> TriQr {
        let n = diag.len();
        assert!(n >= 1);
        assert_eq!(sub.len(), n.saturating_sub(1));
        assert_eq!(sup.len(), n.saturating_sub(1));
        let mut r0 = vec![Complex64::new(0.0, 0.0); n];
        let mut r1 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
        let mut r2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut cs = Vec::with_capacity(n.saturating_sub(1));
        let mut d = diag[0];
        let mut s1 = if n > 1 { sup[0] } else { Complex64::new(0.0, 0.0) };
        for k in 0..n.saturating_sub(1) {
            let (c, s, r) = givens(d, sub[k]);
            r0[k] = r;
            let next_diag = diag[k + 1];
            let next_sup = if k + 2 < n { sup[k + 1] } else { Complex64::new(0.0, 0.0) };
            r1[k] = c * s1 + s * next_diag;
            if k + 2 < n {
                r2[k] = s * next_sup;
            }
            d = -s.conj() * s1 + c * next_diag;
            s1 = c * next_sup;
            cs.push((c, s));
        }
        r0[n - 1] = d;
        TriQr { r0, r1, r2, cs }
    }

    pub(crate) fn from_banded(t: &BandedOperator) -> Result<TriQr, NumError> {
        if t.bandwidth() > 1 {
            return Err(NumError::Unsupported(
                "tridiagonal factorization requires bandwidth <= 1",
            ));
        }
        let n = t.dim();
        let zeros_off = vec![Complex64::new(0.0, 0.0); n - 1];
        let zeros_diag = vec![Complex64::new(0.0, 0.0); n];
        let sub = t.band(-1).map_or(zeros_off.clone(), |b| b.to_vec());
        let diag = t.band(0).map_or(zeros_diag, |b| b.to_vec());
        let sup = t.band(1).map_or(zeros_off, |b| b.to_vec());
        Ok(TriQr::factor(&sub, &diag, &sup))
    }

    pub(crate) fn dim(&self) -> usize {
        self.r0.len()
    }

    /// Smallest diagonal magnitude of R; zero iff T is exactly singular.
    pub(crate) fn min_r_diag(&self) -> f64 {
        self.r0.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min)
    }

    /// In-place back-substitution `x <- R^{-1} x`.
    pub(crate) fn solve_r(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= self.r1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= self.r2[i] * x[i + 2];
            }
            x[i] = acc / self.r0[i];
        }
    }

    /// In-place forward substitution `x <- R^{-*} x`.
    pub(crate) fn solve_r_adjoint(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = x[i];
            if i >= 1 {
                acc -= self.r1[i - 1].conj() * x[i - 1];
            }
            if i >= 2 {
                acc -= self.r2[i - 2].conj() * x[i - 2];
            }
            x[i] = acc / self.r0[i].conj();
        }
    }

    /// In-place `x <- Q* x` (rotations in factorization order).
    pub(crate) fn apply_q_adjoint(&self, x: &mut [Complex64]) {
        for (k, (c, s)) in self.cs.iter().enumerate() {
            let top = x[k];
            let bot = x[k + 1];
            x[k] = *c * top + *s * bot;
            x[k + 1] = -s.conj() * top + *c * bot;
        }
    }

    /// In-place solve `T x = b` (`x <- R^{-1} Q* b`).
    pub(crate) fn solve(&self, x: &mut [Complex64]) {
        self.apply_q_adjoint(x);
        self.solve_r(x);
    }
}

fn norm_of(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [Complex64]) -> f64 {
    let n = norm_of(x);
    if n > 0.0 {
        let inv = 1.0 / n;
        for c in x.iter_mut() {
            *c *= inv;
        }
    }
    n
}

pub(crate) fn seeded_unit_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    normalize(&mut x);
    x
}

const POWER_ITER_CAP: usize = 20_000;

/// Power iteration for the largest eigenvalue of the Hermitian positive
/// semidefinite map `x -> op(x)` whose Rayleigh quotient at a unit `x` is
/// returned alongside the image by `op`. Terminates on three consecutive
/// relative changes below `rel/8`.
fn hermitian_power_iteration<F>(
    x: &mut Vec<Complex64>,
    rel: f64,
    kernel: &'static str,
    mut op: F,
) -> Result<f64, NumError>
where
    F: FnMut(&[Complex64], &mut Vec<Complex64>) -> f64,
{
    normalize(x);
    let mut image = vec![Complex64::new(0.0, 0.0); x.len()];
    let mut last = f64::NAN;
    let mut calm = 0usize;
    for iter in 0..POWER_ITER_CAP {
        let rayleigh = op(x, &mut image);
        if !rayleigh.is_finite() {
            // Effectively singular input: the inverse iterate overflowed.
            return Ok(f64::INFINITY);
        }
        let scale = normalize(&mut image);
        if scale == 0.0 {
            return Ok(rayleigh);
        }
        std::mem::swap(x, &mut image);
        if last.is_finite() {
            let change = (rayleigh - last).abs() / rayleigh.abs().max(f64::MIN_POSITIVE);
            if change <= rel / 8.0 {
                calm += 1;
                if calm >= 3 && iter >= 3 {
                    return Ok(rayleigh);
                }
            } else {
                calm = 0;
            }
        }
        last = rayleigh;
    }
    Err(NumError::NoConvergence { kernel, iterations: POWER_ITER_CAP })
}

/// Smallest singular value of a tridiagonal operator, by power iteration on
/// the inverse Gram matrix `(T* T)^{-1} = R^{-1} R^{-*}` of its QR factors.
/// `warm`, when provided, carries the iterate between calls so that sweeps
/// over nearby operators converge in a handful of iterations.
pub fn min_singular_value_banded_warm(
    t: &BandedOperator,
    tol: Tolerance,
    warm: &mut Option<Vec<Complex64>>,
) -> Result<f64, NumError> {
    let qr = TriQr::from_banded(t)?;
    let n = qr.dim();
    if qr.min_r_diag() == 0.0 {
        return Ok(0.0);
    }
    let mut x = match warm.take() {
        Some(v) if v.len() == n => v,
        _ => seeded_unit_vector(n, 0x6b6f6c73),
    };
    // x* (R^{-1} R^{-*}) x = ||R^{-*} x||^2 for unit x.
    let lambda_max = hermitian_power_iteration(&mut x, tol.rel(), "min_singular_value", |v, out| {
        out.clear();
        out.extend_from_slice(v);
        qr.solve_r_adjoint(out);
        let rayleigh = out.iter().map(|c| c.norm_sqr()).sum::<f64>();
        qr.solve_r(out);
        rayleigh
    })?;
    *warm = Some(x);
    if lambda_max == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(lambda_max.powf(-0.5))
}

/// Smallest singular value of a banded operator (tridiagonal iterative path;
/// wider bands fall back to the dense kernel).
pub fn min_singular_value_banded(t: &BandedOperator, tol: Tolerance) -> Result<f64, NumError> {
    if t.bandwidth() <= 1 {
        let mut warm = None;
        return min_singular_value_banded_warm(t, tol, &mut warm);
    }
    if t.dim() <= DENSE_MAX_DIM {
        return min_singular_value(t.to_dense().view(), tol);
    }
    Err(NumError::Unsupported(
        "bandwidth-2 operators above the dense threshold are not supported",
    ))
}

/// Smallest singular value of a dense square matrix (LAPACK SVD).
pub fn min_singular_value(a: ArrayView2<Complex64>, _tol: Tolerance) -> Result<f64, NumError> {
    require_square(&a)?;
    let (_, sv, _) = a.svd(false, false).map_err(lapack_err)?;
    Ok(sv[sv.len() - 1])
}

/// Smallest eigenvalue of a Hermitian matrix; the input must be Hermitian
/// within 1e-12 entrywise.
pub fn hermitian_min_eig(h: ArrayView2<Complex64>, _tol: Tolerance) -> Result<f64, NumError> {
    let n = require_square(&h)?;
    let mut deviation = 0.0f64;
    for i in 0..n {
        for j in i..n {
            deviation = deviation.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if deviation > 1e-12 {
        return Err(NumError::NonHermitian { deviation });
    }
    let values: Array1<f64> = h.eigvalsh(UPLO::Lower).map_err(lapack_err)?;
    Ok(values[0])
}

/// Largest singular value of a dense matrix (LAPACK divide-and-conquer SVD).
/// Direct factorization rather than iteration: the propagator blocks this
/// serves have singular values clustering toward 1 as `t -> 0`, where
/// power-type iterations stagnate.
pub fn operator_norm(a: ArrayView2<Complex64>, _tol: Tolerance) -> Result<f64, NumError> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let (_, sv, _) = a.svddc(JobSvd::None).map_err(lapack_err)?;
    Ok(sv[0])
}

/// Largest singular value of a banded operator by power iteration on `M* M`.
pub fn operator_norm_banded(m: &BandedOperator, tol: Tolerance) -> Result<f64, NumError> {
    let n = m.dim();
    let mut x = seeded_unit_vector(n, 0x6e6f726d);
    let mut mid = vec![Complex64::new(0.0, 0.0); n];
    let lambda = hermitian_power_iteration(&mut x, tol.rel(), "operator_norm", |v, out| {
        m.apply(v, &mut mid);
        let rayleigh = mid.iter().map(|c| c.norm_sqr()).sum::<f64>();
        m.apply_adjoint(&mid, out);
        rayleigh
    })?;
    Ok(lambda.sqrt())
}

/// Diagonal Pade approximants to `exp` used by scaling-and-squaring, with
/// the 1-norm thresholds at which each order is accurate to unit roundoff.
const PADE_THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coefficients(order: usize) -> Vec<f64> {
    // b_k = (2q-k)! q! / ((2q)! k! (q-k)!) scaled to integer form.
    let q = order;
    let mut b = vec![0.0f64; q + 1];
    b[q] = 1.0;
    for k in (0..q).rev() {
        // b_k / b_{k+1} = (k+1)(2q-k) / (q-k)  inverted for descending fill.
        b[k] = b[k + 1] * ((k + 1) as f64) * ((2 * q - k) as f64) / ((q - k) as f64);
    }
    // Normalize so that b_q = 1 is replaced by the conventional integer
    // scaling; only ratios matter for the rational approximant.
    b
}

fn pade_u_v(a: &Array2<Complex64>, order: usize) -> (Array2<Complex64>, Array2<Complex64>) {
    let n = a.nrows();
    let b = pade_coefficients(order);
    let id = Array2::<Complex64>::eye(n);
    let a2 = a.dot(a);
    let cplx = |x: f64| Complex64::new(x, 0.0);
    if order <= 9 {
        // U = A (b1 I + b3 A^2 + ...), V = b0 I + b2 A^2 + ...
        let mut even = &id * cplx(b[0]);
        let mut odd = &id * cplx(b[1]);
        let mut power = id.clone();
        let mut k = 2;
        while k <= order {
            power = power.dot(&a2);
            even = even + &power * cplx(b[k]);
            if k + 1 <= order {
                odd = odd + &power * cplx(b[k + 1]);
            }
            k += 2;
        }
        (a.dot(&odd), even)
    } else {
        let a4 = a2.dot(&a2);
        let a6 = a4.dot(&a2);
        let u_hi = &a6 * cplx(b[13]) + &a4 * cplx(b[11]) + &a2 * cplx(b[9]);
        let u_lo = &a6 * cplx(b[7]) + &a4 * cplx(b[5]) + &a2 * cplx(b[3]) + &id * cplx(b[1]);
        let u = a.dot(&(a6.dot(&u_hi) + u_lo));
        let v_hi = &a6 * cplx(b[12]) + &a4 * cplx(b[10]) + &a2 * cplx(b[8]);
        let v = a6.dot(&v_hi) + &a6 * cplx(b[6]) + &a4 * cplx(b[4]) + &a2 * cplx(b[2]) + &id * cplx(b[0]);
        (u, v)
    }
}

/// Matrix exponential `e^{tL}` by scaling-and-squaring with diagonal Pade
/// approximants; accurate for stiff dissipative spectra (the squaring phase
/// only ever multiplies contractions for the operators assembled here).
pub fn propagator(l: ArrayView2<Complex64>, t: f64, _tol: Tolerance) -> Result<Array2<Complex64>, NumError> {
    let n = require_square(&l)?;
    if t < 0.0 {
        return Err(NumError::Unsupported("propagator requires t >= 0"));
    }
    if n > DENSE_MAX_DIM {
        return Err(NumError::Unsupported("dense propagator limited to dimension 4096"));
    }
    if t == 0.0 {
        return Ok(Array2::eye(n));
    }
    let a = l.mapv(|e| e * t);
    let norm1 = a.opnorm_one().map_err(lapack_err)?;
    if !norm1.is_finite() {
        return Err(NumError::Unsupported("non-finite input to propagator"));
    }
    let (order, theta13) = (13usize, PADE_THETA[4].1);
    let mut chosen = order;
    for (m, theta) in PADE_THETA {
        if norm1 <= theta {
            chosen = m;
            break;
        }
    }
    let mut squarings = 0u32;
    let scaled = if chosen == 13 && norm1 > theta13 {
        squarings = (norm1 / theta13).log2().ceil().max(0.0) as u32;
        a.mapv(|e| e / Complex64::new(f64::from(2u32.pow(squarings.min(63))), 0.0))
    } else {
        a
    };
    let (u, v) = pade_u_v(&scaled, chosen);
    let p = &v + &u;
    let q = &v - &u;
    let qinv = q.inv().map_err(lapack_err)?;
    let mut x = qinv.dot(&p);
    for _ in 0..squarings {
        x = x.dot(&x);
    }
    Ok(x)
}
