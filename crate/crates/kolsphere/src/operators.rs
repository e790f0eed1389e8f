//! Truncated spectral operators of the linearized two-jet flow.
//!
//! For a fixed azimuthal wavenumber `m != 0` the linearization acts on the
//! span of `Y_n^m`, `n = n_lo ..= n_hi`, through banded matrices in the
//! spherical-harmonic basis:
//!
//! * `A`      — diagonal, entries `2 - lambda_n`;
//! * `B2`     — diagonal, entries `1 - 6/lambda_n`;
//! * `C`      — the `cos(theta)` multiplier, symmetric tridiagonal with the
//!              couplings `a_n^m`;
//! * `Lambda` — `C * B2`, tridiagonal, generally non-symmetric;
//! * `L`      — `A - i*alpha*m*Lambda`, the drift-diffusion generator;
//! * `S`      — `I - C^T C`, the truncated `sin^2(theta)` quadratic form.
//!
//! Two index ranges appear: the full mode space starts at
//! `n_lo = max(2, |m|)` and the reduced space (orthogonal complement of
//! `Y_2^m` for `|m| <= 2`) starts at `n_lo = max(3, |m|)`. The reduced space
//! is realized as a sub-slice of the full one, so restrictions of banded
//! operators are again banded.

use crate::harmonics::{self, coupling, laplace_eigenvalue, Degree, HarmonicsError, Order};
use ndarray::Array2;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorsError {
    #[error("azimuthal wavenumber m must be nonzero")]
    ZeroOrder,
    #[error("truncation n_hi={n_hi} too small; need n_hi >= n_lo + 8 = {}", n_lo + 8)]
    TruncationTooSmall { n_lo: Degree, n_hi: Degree },
    #[error("operand spaces differ")]
    SpaceMismatch,
    #[error("expected a {expected:?} space")]
    WrongKind { expected: SpaceKind },
    #[error("band with offset {offset} has {got} entries, expected {expected}")]
    BadBandLength { offset: i32, got: usize, expected: usize },
    #[error("bandwidth {0} unsupported (must be <= 2)")]
    BandwidthTooLarge(u32),
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("jet degree must be >= 1")]
    JetDegreeZero,
    #[error("theta={0} outside the open interval (0, pi)")]
    ThetaNotInterior(f64),
    #[error("banded text parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
}

/// Which index range of degrees a space retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// All degrees `n >= max(2, |m|)`.
    Full,
    /// Degrees `n >= max(3, |m|)`; complement of `Y_2^m` when `|m| <= 2`.
    Reduced,
}

/// Truncated single-wavenumber mode space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSpace {
    m: Order,
    n_lo: Degree,
    n_hi: Degree,
    kind: SpaceKind,
}

impl ModeSpace {
    fn new(m: Order, n_hi: Degree, kind: SpaceKind) -> Result<Self, OperatorsError> {
        if m == 0 {
            return Err(OperatorsError::ZeroOrder);
        }
        let floor = match kind {
            SpaceKind::Full => 2,
            SpaceKind::Reduced => 3,
        };
        let n_lo = floor.max(m.unsigned_abs());
        if n_hi < n_lo + 8 {
            return Err(OperatorsError::TruncationTooSmall { n_lo, n_hi });
        }
        Ok(ModeSpace { m, n_lo, n_hi, kind })
    }

    /// Full space: degrees `max(2, |m|) ..= n_hi`.
    pub fn full(m: Order, n_hi: Degree) -> Result<Self, OperatorsError> {
        Self::new(m, n_hi, SpaceKind::Full)
    }

    /// Reduced space: degrees `max(3, |m|) ..= n_hi`.
    pub fn reduced(m: Order, n_hi: Degree) -> Result<Self, OperatorsError> {
        Self::new(m, n_hi, SpaceKind::Reduced)
    }

    pub fn m(&self) -> Order {
        self.m
    }

    pub fn n_lo(&self) -> Degree {
        self.n_lo
    }

    pub fn n_hi(&self) -> Degree {
        self.n_hi
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Number of retained degrees.
    pub fn dim(&self) -> usize {
        (self.n_hi - self.n_lo + 1) as usize
    }

    pub fn degrees(&self) -> impl Iterator<Item = Degree> {
        self.n_lo..=self.n_hi
    }

    /// Position of degree `n` in the coefficient vector, if retained.
    pub fn index_of(&self, n: Degree) -> Option<usize> {
        (self.n_lo..=self.n_hi).contains(&n).then(|| (n - self.n_lo) as usize)
    }

    /// The reduced companion of a full space over the same `m`, `n_hi`.
    pub fn to_reduced(&self) -> Result<Self, OperatorsError> {
        Self::reduced(self.m, self.n_hi)
    }

    /// True when the reduced space drops a degree relative to the full one,
    /// i.e. when `|m| <= 2` so that `Y_2^m` is present and projected away.
    pub fn has_y2(&self) -> bool {
        self.m.unsigned_abs() <= 2
    }
}

/// Default truncation degree for a target wave parameter `alpha*m`: scales
/// like `6*sqrt(|alpha*m|)` because resolvent mass concentrates below the
/// degree where diffusion `~n^2` balances advection `~alpha*m`.
pub fn default_n_hi(alpha: f64, m: Order, kind: SpaceKind) -> Degree {
    let floor: Degree = match kind {
        SpaceKind::Full => 2,
        SpaceKind::Reduced => 3,
    };
    let n_lo = floor.max(m.unsigned_abs());
    let spread = (6.0 * (alpha * f64::from(m)).abs().sqrt()).ceil() as Degree;
    (n_lo + spread).max(64)
}

/// Coefficient vector over a [`ModeSpace`]; entry `k` multiplies
/// `Y_{n_lo + k}^m`, and the squared norm is the plain coefficient sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    space: ModeSpace,
    coeffs: Vec<Complex64>,
}

impl SpectralVector {
    pub fn new(space: ModeSpace, coeffs: Vec<Complex64>) -> Result<Self, OperatorsError> {
        if coeffs.len() != space.dim() {
            return Err(OperatorsError::SpaceMismatch);
        }
        if !coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(OperatorsError::NonFinite);
        }
        Ok(SpectralVector { space, coeffs })
    }

    pub fn zero(space: ModeSpace) -> Self {
        SpectralVector { space, coeffs: vec![Complex64::new(0.0, 0.0); space.dim()] }
    }

    /// Unit coefficient on degree `n`, zero elsewhere.
    pub fn basis(space: ModeSpace, n: Degree) -> Result<Self, OperatorsError> {
        let idx = space.index_of(n).ok_or(OperatorsError::SpaceMismatch)?;
        let mut v = Self::zero(space);
        v.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64, OperatorsError> {
        if self.space != other.space {
            return Err(OperatorsError::SpaceMismatch);
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Square banded matrix over a [`ModeSpace`]. Band `offset` holds the
/// entries `M[k, k+offset]` (for `offset >= 0`) or `M[k+|offset|, k]`
/// (for `offset < 0`), each of length `dim - |offset|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    space: ModeSpace,
    bandwidth: u32,
    bands: BTreeMap<i32, Vec<Complex64>>,
}

impl BandedOperator {
    pub fn from_bands(
        space: ModeSpace,
        bands: BTreeMap<i32, Vec<Complex64>>,
    ) -> Result<Self, OperatorsError> {
        let dim = space.dim();
        let mut bandwidth = 0u32;
        for (offset, entries) in &bands {
            let width = offset.unsigned_abs();
            if width > 2 {
                return Err(OperatorsError::BandwidthTooLarge(width));
            }
            let expected = dim - width as usize;
            if entries.len() != expected {
                return Err(OperatorsError::BadBandLength {
                    offset: *offset,
                    got: entries.len(),
                    expected,
                });
            }
            if !entries.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                return Err(OperatorsError::NonFinite);
            }
            bandwidth = bandwidth.max(width);
        }
        Ok(BandedOperator { space, bandwidth, bands })
    }

    pub fn space(&self) -> ModeSpace {
        self.space
    }

    pub fn bandwidth(&self) -> u32 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn band(&self, offset: i32) -> Option<&[Complex64]> {
        self.bands.get(&offset).map(|v| v.as_slice())
    }

    /// Entry at (row, col) in 0-based space-local indices.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let offset = col as i64 - row as i64;
        if offset.unsigned_abs() > u64::from(self.bandwidth) {
            return Complex64::new(0.0, 0.0);
        }
        let k = row.min(col);
        self.bands
            .get(&(offset as i32))
            .map_or(Complex64::new(0.0, 0.0), |band| band[k])
    }

    /// `y = M x` in a fixed index order.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        y.fill(Complex64::new(0.0, 0.0));
        for (offset, band) in &self.bands {
            if *offset >= 0 {
                let o = *offset as usize;
                for (k, e) in band.iter().enumerate() {
                    y[k] += e * x[k + o];
                }
            } else {
                let o = offset.unsigned_abs() as usize;
                for (k, e) in band.iter().enumerate() {
                    y[k + o] += e * x[k];
                }
            }
        }
    }

    /// `y = M* x` (conjugate transpose) in a fixed index order.
    pub fn apply_adjoint(&self, x: &[Complex64], y: &mut [Complex64]) {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        y.fill(Complex64::new(0.0, 0.0));
        for (offset, band) in &self.bands {
            if *offset >= 0 {
                let o = *offset as usize;
                for (k, e) in band.iter().enumerate() {
                    y[k + o] += e.conj() * x[k];
                }
            } else {
                let o = offset.unsigned_abs() as usize;
                for (k, e) in band.iter().enumerate() {
                    y[k] += e.conj() * x[k + o];
                }
            }
        }
    }

    /// `zeta*I - M`, same bandwidth.
    pub fn sub_from_scalar(&self, zeta: Complex64) -> BandedOperator {
        let dim = self.dim();
        let mut bands = BTreeMap::new();
        for (offset, band) in &self.bands {
            if *offset == 0 {
                continue;
            }
            bands.insert(*offset, band.iter().map(|e| -e).collect());
        }
        let mut diag = vec![zeta; dim];
        if let Some(d) = self.bands.get(&0) {
            for (slot, e) in diag.iter_mut().zip(d) {
                *slot -= e;
            }
        }
        bands.insert(0, diag);
        BandedOperator { space: self.space, bandwidth: self.bandwidth.max(0), bands }
    }

    /// Restriction to the reduced space (drop the `n=2` row and column when
    /// present; otherwise just retag). Banded structure is preserved.
    pub fn restrict_to_reduced(&self) -> Result<BandedOperator, OperatorsError> {
        if self.space.kind != SpaceKind::Full {
            return Err(OperatorsError::WrongKind { expected: SpaceKind::Full });
        }
        let reduced = self.space.to_reduced()?;
        let drop = (reduced.n_lo - self.space.n_lo) as usize;
        let mut bands = BTreeMap::new();
        for (offset, band) in &self.bands {
            bands.insert(*offset, band[drop..].to_vec());
        }
        BandedOperator::from_bands(reduced, bands)
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let dim = self.dim();
        let mut out = Array2::zeros((dim, dim));
        for (offset, band) in &self.bands {
            for (k, e) in band.iter().enumerate() {
                let (row, col) = if *offset >= 0 {
                    (k, k + *offset as usize)
                } else {
                    (k + offset.unsigned_abs() as usize, k)
                };
                out[(row, col)] = *e;
            }
        }
        out
    }

    /// Plain-text serialization (versioned; see README for the schema).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# banded-operator v1");
        let _ = writeln!(s, "m {}", self.space.m);
        let _ = writeln!(s, "n_lo {}", self.space.n_lo);
        let _ = writeln!(s, "n_hi {}", self.space.n_hi);
        let kind = match self.space.kind {
            SpaceKind::Full => "FULL",
            SpaceKind::Reduced => "REDUCED",
        };
        let _ = writeln!(s, "kind {kind}");
        let _ = writeln!(s, "bandwidth {}", self.bandwidth);
        for (offset, band) in &self.bands {
            let _ = write!(s, "band {offset}");
            for e in band {
                let _ = write!(s, " {},{}", e.re, e.im);
            }
            let _ = writeln!(s);
        }
        s
    }

    /// Parse the output of [`BandedOperator::to_text`].
    pub fn from_text(text: &str) -> Result<Self, OperatorsError> {
        let bad = |msg: &str| OperatorsError::Parse(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        if header.trim() != "# banded-operator v1" {
            return Err(bad("missing or unsupported header line"));
        }
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut band_lines = Vec::new();
        for line in lines {
            let mut parts = line.trim().splitn(2, ' ');
            let key = parts.next().ok_or_else(|| bad("blank line"))?;
            let rest = parts.next().unwrap_or("");
            if key == "band" {
                band_lines.push(rest.to_string());
            } else {
                fields.insert(
                    match key {
                        "m" => "m",
                        "n_lo" => "n_lo",
                        "n_hi" => "n_hi",
                        "kind" => "kind",
                        "bandwidth" => "bandwidth",
                        other => return Err(bad(&format!("unknown field {other}"))),
                    },
                    rest,
                );
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
        let m: Order = get("m")?.trim().parse().map_err(|_| bad("bad m"))?;
        let n_hi: Degree = get("n_hi")?.trim().parse().map_err(|_| bad("bad n_hi"))?;
        let kind = match get("kind")?.trim() {
            "FULL" => SpaceKind::Full,
            "REDUCED" => SpaceKind::Reduced,
            other => return Err(bad(&format!("unknown kind {other}"))),
        };
        let space = ModeSpace::new(m, n_hi, kind)?;
        let n_lo: Degree = get("n_lo")?.trim().parse().map_err(|_| bad("bad n_lo"))?;
        if n_lo != space.n_lo {
            return Err(bad("n_lo inconsistent with m and kind"));
        }
        let mut bands = BTreeMap::new();
        for line in band_lines {
            let mut toks = line.split_whitespace();
            let offset: i32 = toks
                .next()
                .ok_or_else(|| bad("band missing offset"))?
                .parse()
                .map_err(|_| bad("bad band offset"))?;
            let mut entries = Vec::new();
            for tok in toks {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| bad("band entry not re,im"))?;
                entries.push(Complex64::new(
                    re.parse().map_err(|_| bad("bad real part"))?,
                    im.parse().map_err(|_| bad("bad imaginary part"))?,
                ));
            }
            bands.insert(offset, entries);
        }
        BandedOperator::from_bands(space, bands)
    }
}

/// Diffusion part: diagonal entries `2 - lambda_n`.
pub fn assemble_a(space: ModeSpace) -> BandedOperator {
    let diag = space
        .degrees()
        .map(|n| Complex64::new(2.0 - laplace_eigenvalue(n), 0.0))
        .collect();
    BandedOperator {
        space,
        bandwidth: 0,
        bands: BTreeMap::from([(0, diag)]),
    }
}

/// Vorticity-to-stream factor: diagonal entries `1 - 6/lambda_n`.
pub fn assemble_b2(space: ModeSpace) -> BandedOperator {
    let diag = space
        .degrees()
        .map(|n| Complex64::new(1.0 - 6.0 / laplace_eigenvalue(n), 0.0))
        .collect();
    BandedOperator {
        space,
        bandwidth: 0,
        bands: BTreeMap::from([(0, diag)]),
    }
}

/// `cos(theta)` multiplier: symmetric tridiagonal with couplings `a_n^m`;
/// the coupling out of `n_hi` is dropped (Dirichlet truncation).
pub fn assemble_cos(space: ModeSpace) -> Result<BandedOperator, OperatorsError> {
    let m = space.m;
    let mut off = Vec::with_capacity(space.dim() - 1);
    for n in space.n_lo + 1..=space.n_hi {
        off.push(Complex64::new(coupling(n, m)?, 0.0));
    }
    BandedOperator::from_bands(
        space,
        BTreeMap::from([(-1, off.clone()), (1, off)]),
    )
}

/// Advection factor `Lambda = C * B2`: column `n` carries
/// `(1 - 6/lambda_n) a_n^m` at row `n-1` and `(1 - 6/lambda_n) a_{n+1}^m`
/// at row `n+1`. Column `n = 2` vanishes identically.
pub fn assemble_lambda(space: ModeSpace) -> Result<BandedOperator, OperatorsError> {
    let m = space.m;
    let dim = space.dim();
    let mut sup = Vec::with_capacity(dim - 1); // row n, col n+1: scale of column n+1
    let mut sub = Vec::with_capacity(dim - 1); // row n+1, col n: scale of column n
    for n in space.n_lo..space.n_hi {
        let a = coupling(n + 1, m)?;
        let b_hi = 1.0 - 6.0 / laplace_eigenvalue(n + 1);
        let b_lo = 1.0 - 6.0 / laplace_eigenvalue(n);
        sup.push(Complex64::new(b_hi * a, 0.0));
        sub.push(Complex64::new(b_lo * a, 0.0));
    }
    BandedOperator::from_bands(space, BTreeMap::from([(-1, sub), (1, sup)]))
}

/// Generator `L = A - i*alpha*m*Lambda` with `m` read from the space.
pub fn assemble_l(space: ModeSpace, alpha: f64) -> Result<BandedOperator, OperatorsError> {
    let lambda = assemble_lambda(space)?;
    let factor = Complex64::new(0.0, -alpha * f64::from(space.m));
    let mut bands: BTreeMap<i32, Vec<Complex64>> = lambda
        .bands
        .iter()
        .map(|(o, band)| (*o, band.iter().map(|e| factor * e).collect()))
        .collect();
    bands.insert(
        0,
        space
            .degrees()
            .map(|n| Complex64::new(2.0 - laplace_eigenvalue(n), 0.0))
            .collect(),
    );
    BandedOperator::from_bands(space, bands)
}

/// Truncated `sin^2(theta)` quadratic form `S = I - C^T C`, pentadiagonal
/// real symmetric; `u* S u` evaluates `||sin(theta) u||^2` up to truncation
/// (slightly over-estimated at the top edge).
pub fn assemble_sin2_form(space: ModeSpace) -> Result<BandedOperator, OperatorsError> {
    let m = space.m;
    let dim = space.dim();
    // a[k] = a_{n_lo + k}^m for k = 0..=dim (one past the top is needed for
    // the diagonal at n_hi, where the Dirichlet truncation drops it).
    let mut a = Vec::with_capacity(dim + 1);
    for n in space.n_lo..=space.n_hi + 1 {
        a.push(coupling(n, m)?);
    }
    let mut diag = Vec::with_capacity(dim);
    for k in 0..dim {
        let up = if k + 1 < dim { a[k + 1] } else { 0.0 };
        diag.push(Complex64::new(1.0 - a[k] * a[k] - up * up, 0.0));
    }
    let mut two = Vec::with_capacity(dim - 2);
    for k in 0..dim - 2 {
        two.push(Complex64::new(-a[k + 1] * a[k + 2], 0.0));
    }
    BandedOperator::from_bands(
        space,
        BTreeMap::from([(-2, two.clone()), (0, diag), (2, two)]),
    )
}

/// Orthogonal projection onto the reduced space: zeroes the `n = 2`
/// coefficient when `|m| <= 2`, identity otherwise.
pub fn project_q(u: &SpectralVector) -> Result<SpectralVector, OperatorsError> {
    if u.space.kind != SpaceKind::Full {
        return Err(OperatorsError::WrongKind { expected: SpaceKind::Full });
    }
    let mut out = u.clone();
    if let Some(idx) = u.space.index_of(2) {
        out.coeffs[idx] = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Which diagonal weight a Sobolev-type scaling uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevWeight {
    /// `lambda_n^s` — powers of `-Delta`.
    MinusLaplace,
    /// `(lambda_n - 2)^s` — powers of `-A` (positive on all retained degrees).
    MinusA,
}

/// Scales coefficient `c_n` by `lambda_n^s` or `(lambda_n - 2)^s`.
pub fn sobolev_scale(u: &SpectralVector, s: f64, which: SobolevWeight) -> SpectralVector {
    let mut out = u.clone();
    for (n, c) in u.space.degrees().zip(out.coeffs.iter_mut()) {
        let base = match which {
            SobolevWeight::MinusLaplace => laplace_eigenvalue(n),
            SobolevWeight::MinusA => laplace_eigenvalue(n) - 2.0,
        };
        *c *= base.powf(s);
    }
    out
}

/// Zonal speed of the `n`-jet base flow with amplitude `a`:
/// `-(a / (lambda_n sin(theta))) * d/dtheta P_bar_n^0` at each grid point.
/// Grid points must lie strictly inside `(0, pi)`.
pub fn velocity_profile(
    n: Degree,
    a: f64,
    theta_grid: &[f64],
) -> Result<Vec<f64>, OperatorsError> {
    if n == 0 {
        return Err(OperatorsError::JetDegreeZero);
    }
    let mut out = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(OperatorsError::ThetaNotInterior(theta));
        }
        let d = harmonics::eval_basis_dtheta(n, 0, theta)?;
        out.push(-(a / (laplace_eigenvalue(n) * theta.sin())) * d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vector(space: ModeSpace, rng: &mut ChaCha8Rng) -> SpectralVector {
        let coeffs = (0..space.dim())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralVector::new(space, coeffs).unwrap()
    }

    #[test]
    fn space_ranges() {
        let full = ModeSpace::full(1, 64).unwrap();
        assert_eq!((full.n_lo(), full.n_hi(), full.dim()), (2, 64, 63));
        let red = ModeSpace::reduced(-2, 64).unwrap();
        assert_eq!(red.n_lo(), 3);
        let high = ModeSpace::full(7, 64).unwrap();
        assert_eq!(high.n_lo(), 7);
        assert_eq!(ModeSpace::reduced(7, 64).unwrap().n_lo(), 7);
        assert_eq!(ModeSpace::full(0, 64), Err(OperatorsError::ZeroOrder));
        assert!(matches!(
            ModeSpace::full(1, 9),
            Err(OperatorsError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn default_truncation_scales() {
        assert_eq!(default_n_hi(0.0, 1, SpaceKind::Full), 64);
        let n = default_n_hi(1e4, 1, SpaceKind::Full);
        assert_eq!(n, 2 + 600);
        assert!(default_n_hi(1e5, 8, SpaceKind::Full) > 5000);
    }

    #[test]
    fn a_is_diagonal_dissipative() {
        let space = ModeSpace::full(1, 64).unwrap();
        let a = assemble_a(space);
        assert_eq!(a.bandwidth(), 0);
        assert_eq!(a.get(0, 0), Complex64::new(-4.0, 0.0));
        assert_eq!(a.get(1, 1), Complex64::new(-10.0, 0.0));
        // (-A u, u) >= 4 ||u||^2 on random vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u = random_vector(space, &mut rng);
            let mut au = vec![Complex64::new(0.0, 0.0); space.dim()];
            a.apply(u.coeffs(), &mut au);
            let quad: f64 = u
                .coeffs()
                .iter()
                .zip(&au)
                .map(|(c, ac)| (ac.conj() * c).re)
                .sum();
            assert!(-quad >= 4.0 * u.norm().powi(2) - 1e-9);
        }
    }

    #[test]
    fn b2_diagonal_values() {
        let space = ModeSpace::full(2, 64).unwrap();
        let b2 = assemble_b2(space);
        assert_abs_diff_eq!(b2.get(0, 0).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b2.get(1, 1).re, 0.5, epsilon = 1e-15);
        let idx10 = space.index_of(10).unwrap();
        assert_abs_diff_eq!(b2.get(idx10, idx10).re, 1.0 - 6.0 / 110.0, epsilon = 1e-15);
    }

    #[test]
    fn cos_matches_quadrature_oracle() {
        // Entries of the truncated cos-multiplier equal
        // 2*pi*sum_k w_k cos(theta_k) P_n P_n' by polynomial exactness.
        let space = ModeSpace::full(1, 40).unwrap();
        let c = assemble_cos(space).unwrap();
        assert_eq!(c.get(0, 1), c.get(1, 0));
        let rule = harmonics::gauss_legendre(64).unwrap();
        for n in space.degrees() {
            for np in space.degrees() {
                let mut integral = 0.0;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let theta = x.acos();
                    let pn = harmonics::eval_basis(n, 1, theta).unwrap();
                    let pnp = harmonics::eval_basis(np, 1, theta).unwrap();
                    integral += 2.0 * std::f64::consts::PI * w * x * pn * pnp;
                }
                let i = space.index_of(n).unwrap();
                let j = space.index_of(np).unwrap();
                assert_abs_diff_eq!(c.get(i, j).re, integral, epsilon = 1e-12);
            }
        }
        let i2 = space.index_of(2).unwrap();
        let i3 = space.index_of(3).unwrap();
        assert_abs_diff_eq!(c.get(i2, i3).re, (8.0f64 / 35.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lambda_column_structure() {
        // Column n=2 vanishes; column n=3 of the m=3 space puts
        // (1/2)*a_4^3 = 1/6 in row 4; norm stays below 1.
        let space = ModeSpace::full(1, 64).unwrap();
        let lam = assemble_lambda(space).unwrap();
        let i2 = space.index_of(2).unwrap();
        for row in 0..space.dim() {
            assert_eq!(lam.get(row, i2), Complex64::new(0.0, 0.0));
        }
        let space3 = ModeSpace::full(3, 64).unwrap();
        let lam3 = assemble_lambda(space3).unwrap();
        let col = space3.index_of(3).unwrap();
        let row = space3.index_of(4).unwrap();
        assert_abs_diff_eq!(lam3.get(row, col).re, 0.5 / 3.0, epsilon = 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u = random_vector(space, &mut rng);
            let mut lu = vec![Complex64::new(0.0, 0.0); space.dim()];
            lam.apply(u.coeffs(), &mut lu);
            let norm_lu = lu.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!(norm_lu <= u.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn l_assembly_entries() {
        let space = ModeSpace::full(1, 64).unwrap();
        let l0 = assemble_l(space, 0.0).unwrap();
        let a = assemble_a(space);
        for i in 0..space.dim() {
            for j in i.saturating_sub(1)..(i + 2).min(space.dim()) {
                assert_eq!(l0.get(i, j), a.get(i, j));
            }
        }
        let l = assemble_l(space, 10.0).unwrap();
        // Diagonal independent of alpha.
        assert_eq!(l.get(1, 1), Complex64::new(-10.0, 0.0));
        // Entry (row n=4, col n=3) = -10i * (1/2) * a_4^1.
        let row = space.index_of(4).unwrap();
        let col = space.index_of(3).unwrap();
        let expect = -10.0 * 0.5 * (15.0f64 / 63.0).sqrt();
        assert_abs_diff_eq!(l.get(row, col).im, expect, epsilon = 1e-7);
        assert_abs_diff_eq!(l.get(row, col).im, -2.4397501, epsilon = 1e-7);
        assert_eq!(l.get(row, col).re, 0.0);
        // Conjugation symmetry in the sign of m.
        let lm = assemble_l(ModeSpace::full(-1, 64).unwrap(), 10.0).unwrap();
        for i in 0..space.dim() {
            for j in i.saturating_sub(1)..(i + 2).min(space.dim()) {
                assert_eq!(lm.get(i, j), l.get(i, j).conj());
            }
        }
    }

    #[test]
    fn sin2_form_against_quadrature() {
        let space = ModeSpace::full(2, 30).unwrap();
        let s = assemble_sin2_form(space).unwrap();
        // Diagonal at n=2, m=2: 1 - a_2^2 - a_3^2 = 6/7.
        assert_abs_diff_eq!(s.get(0, 0).re, 6.0 / 7.0, epsilon = 1e-14);
        let rule = harmonics::gauss_legendre(64).unwrap();
        let mut oracle = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let p = harmonics::eval_basis(2, 2, x.acos()).unwrap();
            oracle += 2.0 * std::f64::consts::PI * w * (1.0 - x * x) * p * p;
        }
        assert_abs_diff_eq!(s.get(0, 0).re, oracle, epsilon = 1e-12);
        // Interior diagonals 1 - a_n^2 - a_{n+1}^2 in (0, 1].
        for n in space.degrees() {
            let k = space.index_of(n).unwrap();
            let v = s.get(k, k).re;
            assert!(v > 0.0 && v <= 1.0);
        }
        // Semidefiniteness of the quadratic form on random vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let u = random_vector(space, &mut rng);
            let mut su = vec![Complex64::new(0.0, 0.0); space.dim()];
            s.apply(u.coeffs(), &mut su);
            let quad: f64 = u
                .coeffs()
                .iter()
                .zip(&su)
                .map(|(c, sc)| (sc.conj() * c).re)
                .sum();
            assert!(quad >= -1e-12 * u.norm().powi(2));
        }
    }

    #[test]
    fn q_projection() {
        let space = ModeSpace::full(1, 64).unwrap();
        let y2 = SpectralVector::basis(space, 2).unwrap();
        let proj = project_q(&y2).unwrap();
        assert_eq!(proj.norm(), 0.0);
        let space3 = ModeSpace::full(3, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_vector(space3, &mut rng);
        assert_eq!(project_q(&u).unwrap(), u);
        let v = random_vector(space, &mut rng);
        let once = project_q(&v).unwrap();
        assert_eq!(project_q(&once).unwrap(), once);
    }

    #[test]
    fn sobolev_scaling() {
        let space = ModeSpace::full(1, 64).unwrap();
        let y3 = SpectralVector::basis(space, 3).unwrap();
        let scaled = sobolev_scale(&y3, 0.5, SobolevWeight::MinusLaplace);
        let idx = space.index_of(3).unwrap();
        assert_abs_diff_eq!(scaled.coeffs()[idx].re, 12.0f64.sqrt(), epsilon = 1e-14);
        let id = sobolev_scale(&y3, 0.0, SobolevWeight::MinusA);
        assert_eq!(id, y3);
        // (2/3)||(-Delta)^{1/2} u||^2 <= ||(-A)^{1/2} u||^2 <= ||(-Delta)^{1/2} u||^2.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let u = random_vector(space, &mut rng);
            let half_lap = sobolev_scale(&u, 0.5, SobolevWeight::MinusLaplace).norm().powi(2);
            let half_a = sobolev_scale(&u, 0.5, SobolevWeight::MinusA).norm().powi(2);
            assert!(half_a <= half_lap * (1.0 + 1e-12));
            assert!(half_a >= (2.0 / 3.0) * half_lap * (1.0 - 1e-12));
        }
        let y2 = SpectralVector::basis(space, 2).unwrap();
        let lhs = sobolev_scale(&y2, 0.5, SobolevWeight::MinusA).norm().powi(2);
        let rhs = (2.0 / 3.0) * sobolev_scale(&y2, 0.5, SobolevWeight::MinusLaplace).norm().powi(2);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn symmetrized_advection_identity() {
        // Im (Lambda u, B2 u) = 0: the form is (C B2 u, B2 u) with C real
        // symmetric, so it is exactly real for every complex u.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for m in [1i32, 2, 3, 6] {
            let space = ModeSpace::full(m, 80).unwrap();
            let lam = assemble_lambda(space).unwrap();
            let b2 = assemble_b2(space);
            for _ in 0..100 {
                let u = random_vector(space, &mut rng);
                let mut lu = vec![Complex64::new(0.0, 0.0); space.dim()];
                let mut b2u = vec![Complex64::new(0.0, 0.0); space.dim()];
                lam.apply(u.coeffs(), &mut lu);
                b2.apply(u.coeffs(), &mut b2u);
                let ip: Complex64 = lu.iter().zip(&b2u).map(|(a, b)| b.conj() * a).sum();
                assert!(ip.im.abs() <= 1e-12 * u.norm().powi(2));
            }
        }
    }

    #[test]
    fn reduced_restriction_is_subslice() {
        let space = ModeSpace::full(2, 40).unwrap();
        let l = assemble_l(space, 3.5).unwrap();
        let restricted = l.restrict_to_reduced().unwrap();
        let direct = assemble_l(ModeSpace::reduced(2, 40).unwrap(), 3.5).unwrap();
        assert_eq!(restricted, direct);
        // |m| >= 3: restriction only retags.
        let space5 = ModeSpace::full(5, 40).unwrap();
        let l5 = assemble_l(space5, 3.5).unwrap();
        let r5 = l5.restrict_to_reduced().unwrap();
        assert_eq!(r5.space().n_lo(), 5);
        assert_eq!(r5.to_dense(), l5.to_dense());
    }

    #[test]
    fn velocity_profiles() {
        let grid: Vec<f64> = (1..40).map(|k| std::f64::consts::PI * k as f64 / 40.0).collect();
        // n=1 is rigid rotation: constant (a/2) sqrt(3/4pi).
        let v1 = velocity_profile(1, 2.0, &grid).unwrap();
        let expect = (3.0 / (4.0 * std::f64::consts::PI)).sqrt();
        for v in &v1 {
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-12);
        }
        let v0 = velocity_profile(2, 0.0, &grid).unwrap();
        assert!(v0.iter().all(|v| *v == 0.0));
        // n=2 gives two counter-jets, odd about the equator.
        let v2 = velocity_profile(2, 1.0, &grid).unwrap();
        for (k, v) in v2.iter().enumerate() {
            assert_abs_diff_eq!(*v, -v2[v2.len() - 1 - k], epsilon = 1e-12);
        }
        assert!(velocity_profile(2, 1.0, &[0.0]).is_err());
        assert!(velocity_profile(2, 1.0, &[std::f64::consts::PI]).is_err());
        assert!(velocity_profile(0, 1.0, &grid).is_err());
    }

    #[test]
    fn banded_text_roundtrip() {
        let space = ModeSpace::full(2, 32).unwrap();
        let l = assemble_l(space, 7.25).unwrap();
        let text = l.to_text();
        let back = BandedOperator::from_text(&text).unwrap();
        assert_eq!(back, l);
        assert!(BandedOperator::from_text("garbage").is_err());
    }

    #[test]
    fn banded_apply_matches_dense() {
        let space = ModeSpace::full(1, 24).unwrap();
        let s = assemble_sin2_form(space).unwrap();
        let dense = s.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u = random_vector(space, &mut rng);
        let mut via_band = vec![Complex64::new(0.0, 0.0); space.dim()];
        s.apply(u.coeffs(), &mut via_band);
        for i in 0..space.dim() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..space.dim() {
                acc += dense[(i, j)] * u.coeffs()[j];
            }
            assert_abs_diff_eq!(acc.re, via_band[i].re, epsilon = 1e-13);
            assert_abs_diff_eq!(acc.im, via_band[i].im, epsilon = 1e-13);
        }
        // Adjoint apply agrees with the conjugate transpose.
        let l = assemble_l(space, 4.0).unwrap();
        let mut adj = vec![Complex64::new(0.0, 0.0); space.dim()];
        l.apply_adjoint(u.coeffs(), &mut adj);
        let ld = l.to_dense();
        for i in 0..space.dim() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..space.dim() {
                acc += ld[(j, i)].conj() * u.coeffs()[j];
            }
            assert_abs_diff_eq!(acc.re, adj[i].re, epsilon = 1e-13);
            assert_abs_diff_eq!(acc.im, adj[i].im, epsilon = 1e-13);
        }
    }

    #[test]
    fn shift_helper() {
        let space = ModeSpace::full(1, 24).unwrap();
        let l = assemble_l(space, 2.0).unwrap();
        let zeta = Complex64::new(0.0, 3.0);
        let t = l.sub_from_scalar(zeta);
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let expect = if i == j { zeta - l.get(i, j) } else { -l.get(i, j) };
                assert_eq!(t.get(i, j), expect);
            }
        }
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn lambda_kernel_and_reduced_injectivity(m in 1i32..=2, n_hi in 20u32..90) {
            // On the full space the n=2 basis vector is annihilated; the
            // reduced restriction has strictly positive column sums.
            let space = ModeSpace::full(m, n_hi).unwrap();
            let lam = assemble_lambda(space).unwrap();
            let e2 = SpectralVector::basis(space, 2).unwrap();
            let mut out = vec![Complex64::new(0.0, 0.0); space.dim()];
            lam.apply(e2.coeffs(), &mut out);
            prop_assert!(out.iter().all(|c| c.norm() == 0.0));
            let red = assemble_lambda(ModeSpace::reduced(m, n_hi).unwrap()).unwrap();
            for col in 0..red.dim() {
                let mut colsum = 0.0;
                for row in 0..red.dim() {
                    colsum += red.get(row, col).norm();
                }
                prop_assert!(colsum > 0.0);
            }
        }

        #[test]
        fn operators_even_in_m(m in 1i32..=12, n_hi in 24u32..80) {
            prop_assume!(n_hi >= 2.max(m.unsigned_abs()) + 8);
            let plus = ModeSpace::full(m, n_hi).unwrap();
            let minus = ModeSpace::full(-m, n_hi).unwrap();
            prop_assert_eq!(assemble_a(plus).to_dense(), assemble_a(minus).to_dense());
            prop_assert_eq!(
                assemble_cos(plus).unwrap().to_dense(),
                assemble_cos(minus).unwrap().to_dense()
            );
            prop_assert_eq!(
                assemble_lambda(plus).unwrap().to_dense(),
                assemble_lambda(minus).unwrap().to_dense()
            );
        }

        #[test]
        fn b2_coercive_on_reduced(m in 1i32..=6, n_hi in 20u32..80, seed in 0u64..1000) {
            // (u, B2 u) >= 0.5||u||^2 and ||B2 u||^2 >= 0.25||u||^2 on the
            // reduced space.
            prop_assume!(n_hi >= 3.max(m.unsigned_abs()) + 8);
            use rand::{Rng, SeedableRng};
            let space = ModeSpace::reduced(m, n_hi).unwrap();
            let b2 = assemble_b2(space);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<Complex64> = (0..space.dim())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let u = SpectralVector::new(space, coeffs).unwrap();
            let mut b2u = vec![Complex64::new(0.0, 0.0); space.dim()];
            b2.apply(u.coeffs(), &mut b2u);
            let quad: f64 = u.coeffs().iter().zip(&b2u).map(|(c, b)| (b.conj() * c).re).sum();
            let nb2: f64 = b2u.iter().map(|c| c.norm_sqr()).sum();
            let nu = u.norm().powi(2);
            prop_assert!(quad >= 0.5 * nu - 1e-10);
            prop_assert!(nb2 >= 0.25 * nu - 1e-10);
        }
    }
}
