//! Spherical-harmonic basis profiles, recurrence coefficients and
//! Gauss-Legendre quadrature.
//!
//! Everything is per fixed azimuthal wavenumber `m`: the basis function
//! `Y_n^m = P_bar_n^m(theta) * e^{i m phi}` is represented by its normalized
//! colatitude profile `P_bar_n^m`, orthonormal in the sense
//! `2*pi * int_0^pi P_bar_n^m P_bar_n'^m sin(theta) dtheta = delta_{nn'}`.
//! The Condon-Shortley phase is included, so `P_bar_n^{-m} = (-1)^m P_bar_n^m`
//! and `Y_n^{-m} = (-1)^m * conj(Y_n^m)`.

use std::f64::consts::PI;
use thiserror::Error;

/// Spherical-harmonic degree `n >= 0`.
pub type Degree = u32;

/// Azimuthal wavenumber `m`, signed; valid together with a degree `n` when
/// `|m| <= n`.
pub type Order = i32;

#[derive(Debug, Error, PartialEq)]
pub enum HarmonicsError {
    #[error("degree n={n} is smaller than |m|={m_abs}")]
    DegreeBelowOrder { n: Degree, m_abs: u32 },
    #[error("colatitude theta={0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("quadrature size must be >= 1")]
    EmptyRule,
}

/// Eigenvalue `lambda_n = n(n+1)` of `-Delta` on the unit sphere.
#[inline]
pub fn laplace_eigenvalue(n: Degree) -> f64 {
    let nf = f64::from(n);
    nf * (nf + 1.0)
}

/// Recurrence coefficient `a_n^m` in
/// `cos(theta) * Y_n^m = a_n^m Y_{n-1}^m + a_{n+1}^m Y_{n+1}^m`.
///
/// `a_n^m = sqrt((n-m)(n+m) / ((2n-1)(2n+1)))`, even in `m`, and zero at
/// `n = |m|` (consistent with the convention `Y_{|m|-1}^m = 0`).
pub fn coupling(n: Degree, m: Order) -> Result<f64, HarmonicsError> {
    let m_abs = m.unsigned_abs();
    if n < m_abs {
        return Err(HarmonicsError::DegreeBelowOrder { n, m_abs });
    }
    if n == m_abs {
        return Ok(0.0);
    }
    let nf = f64::from(n);
    let mf = f64::from(m_abs);
    Ok(((nf - mf) * (nf + mf) / ((2.0 * nf - 1.0) * (2.0 * nf + 1.0))).sqrt())
}

fn check_theta(theta: f64) -> Result<(), HarmonicsError> {
    if !(0.0..=PI).contains(&theta) {
        return Err(HarmonicsError::ThetaOutOfRange(theta));
    }
    Ok(())
}

/// Rescaling threshold for the upward recurrence; keeps intermediates inside
/// the normal f64 range for degrees up to ~10^4 even at near-pole angles.
const RESCALE_LIMIT: f64 = 1e280;

/// Undo the running rescaling; far-underflowing magnitudes land on 0, which
/// is the correct limit for the suppressed near-pole profiles.
fn materialize(v: f64, scale: i32) -> f64 {
    let mut x = v;
    let mut s = scale;
    while s < 0 && x != 0.0 {
        x /= RESCALE_LIMIT;
        s += 1;
    }
    while s > 0 {
        x *= RESCALE_LIMIT;
        s -= 1;
    }
    x
}

/// Evaluates `P_bar_n^m(theta)` for all degrees `n = |m| ..= n_max` in one
/// upward sweep. Entry `k` of the result holds degree `|m| + k`.
///
/// Seeds at the diagonal `n = |m|` and recurses upward, renormalizing the
/// running pair whenever it leaves the representable band, so the sweep is
/// stable for `n` up to ~10^4 without forming factorial ratios.
pub fn eval_basis_upto(m: Order, n_max: Degree, theta: f64) -> Result<Vec<f64>, HarmonicsError> {
    check_theta(theta)?;
    let m_abs = m.unsigned_abs();
    if n_max < m_abs {
        return Err(HarmonicsError::DegreeBelowOrder { n: n_max, m_abs });
    }
    let len = (n_max - m_abs + 1) as usize;
    let mut out = vec![0.0; len];

    // Negative orders differ only by the Condon-Shortley sign.
    let order_sign = if m < 0 && m_abs % 2 == 1 { -1.0 } else { 1.0 };

    let sin_t = theta.sin();
    let cos_t = theta.cos();

    if theta == 0.0 || theta == PI || sin_t == 0.0 {
        // Poles: only m = 0 survives; P_bar_n^0(0) = sqrt((2n+1)/4pi) and
        // P_bar_n^0(pi) = (-1)^n of that.
        if m_abs == 0 {
            let at_south = theta > 1.0;
            for (k, slot) in out.iter_mut().enumerate() {
                let n = k as u32;
                let v = ((2.0 * f64::from(n) + 1.0) / (4.0 * PI)).sqrt();
                *slot = if at_south && n % 2 == 1 { -v } else { v };
            }
        }
        return Ok(out);
    }

    // Diagonal seed P_bar_{m,m} = (-1)^m sqrt((2m+1)!!/(4pi (2m)!!)) sin^m,
    // accumulated as mantissa * RESCALE_LIMIT^scale to survive large m.
    let mut mant = 1.0 / (4.0 * PI).sqrt();
    let mut scale: i32 = 0;
    for k in 1..=m_abs {
        let kf = f64::from(k);
        mant *= sin_t * ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt();
        if mant.abs() < 1.0 / RESCALE_LIMIT {
            mant *= RESCALE_LIMIT;
            scale -= 1;
        }
    }
    if m_abs % 2 == 1 {
        mant = -mant;
    }

    // p_prev = P_bar_{n-1}, p_curr = P_bar_n, both carrying `scale`.
    let mut p_prev = 0.0f64;
    let mut p_curr = mant;
    out[0] = materialize(order_sign * p_curr, scale);
    let mut a_curr = 0.0f64; // a_n^m at the current n
    for n in m_abs..n_max {
        let a_next = coupling(n + 1, m)?;
        let p_next = (cos_t * p_curr - a_curr * p_prev) / a_next;
        p_prev = p_curr;
        p_curr = p_next;
        a_curr = a_next;
        let mag = p_curr.abs().max(p_prev.abs());
        if mag > RESCALE_LIMIT {
            p_curr /= RESCALE_LIMIT;
            p_prev /= RESCALE_LIMIT;
            scale += 1;
        } else if mag != 0.0 && mag < 1.0 / RESCALE_LIMIT {
            p_curr *= RESCALE_LIMIT;
            p_prev *= RESCALE_LIMIT;
            scale -= 1;
        }
        out[(n + 1 - m_abs) as usize] = materialize(order_sign * p_curr, scale);
    }
    Ok(out)
}

/// Normalized colatitude profile `P_bar_n^m(theta)` of the spherical
/// harmonic `Y_n^m`.
pub fn eval_basis(n: Degree, m: Order, theta: f64) -> Result<f64, HarmonicsError> {
    let m_abs = m.unsigned_abs();
    if n < m_abs {
        return Err(HarmonicsError::DegreeBelowOrder { n, m_abs });
    }
    let values = eval_basis_upto(m, n, theta)?;
    Ok(values[(n - m_abs) as usize])
}

/// Derivative profiles `d/dtheta P_bar_n^m(theta)` for `n = |m| ..= n_max`.
///
/// Away from the poles uses
/// `dP_bar_n/dtheta = (n a_{n+1} P_bar_{n+1} - (n+1) a_n P_bar_{n-1}) / sin(theta)`;
/// at the poles the analytic limit is zero except for `|m| = 1`, where the
/// slopes obey the same three-term recurrence as the profiles.
pub fn eval_basis_dtheta_upto(
    m: Order,
    n_max: Degree,
    theta: f64,
) -> Result<Vec<f64>, HarmonicsError> {
    check_theta(theta)?;
    let m_abs = m.unsigned_abs();
    if n_max < m_abs {
        return Err(HarmonicsError::DegreeBelowOrder { n: n_max, m_abs });
    }
    let len = (n_max - m_abs + 1) as usize;
    let order_sign = if m < 0 && m_abs % 2 == 1 { -1.0 } else { 1.0 };
    let sin_t = theta.sin();

    if theta == 0.0 || theta == PI || sin_t == 0.0 {
        let mut out = vec![0.0; len];
        if m_abs == 1 {
            // Pole slopes d_n = dP_bar_n^1/dtheta(0) satisfy
            // d_n = a_n d_{n-1} + a_{n+1} d_{n+1}, seeded by
            // P_bar_1^1 = -sqrt(3/8pi) sin(theta); at theta = pi the value
            // picks up the parity factor (-1)^n.
            let at_south = theta > 1.0;
            let mut d_prev = 0.0f64;
            let mut d_curr = -(3.0 / (8.0 * PI)).sqrt();
            for n in 1..=n_max {
                let parity = if at_south && n % 2 == 1 { -1.0 } else { 1.0 };
                out[(n - 1) as usize] = order_sign * parity * d_curr;
                if n < n_max {
                    let a_n = coupling(n, 1)?;
                    let a_next = coupling(n + 1, 1)?;
                    let d_next = (d_curr - a_n * d_prev) / a_next;
                    d_prev = d_curr;
                    d_curr = d_next;
                }
            }
        }
        return Ok(out);
    }

    let profiles = eval_basis_upto(m_abs as Order, n_max + 1, theta)?;
    let mut out = vec![0.0; len];
    for n in m_abs..=n_max {
        let idx = (n - m_abs) as usize;
        let p_next = profiles[idx + 1];
        let p_prev = if idx == 0 { 0.0 } else { profiles[idx - 1] };
        let a_n = coupling(n, m)?;
        let a_next = coupling(n + 1, m)?;
        let nf = f64::from(n);
        out[idx] = order_sign * (nf * a_next * p_next - (nf + 1.0) * a_n * p_prev) / sin_t;
    }
    Ok(out)
}

/// Derivative `d/dtheta P_bar_n^m(theta)`, with analytic limits at the poles.
pub fn eval_basis_dtheta(n: Degree, m: Order, theta: f64) -> Result<f64, HarmonicsError> {
    let m_abs = m.unsigned_abs();
    if n < m_abs {
        return Err(HarmonicsError::DegreeBelowOrder { n, m_abs });
    }
    let values = eval_basis_dtheta_upto(m, n, theta)?;
    Ok(values[(n - m_abs) as usize])
}

/// Gauss-Legendre rule on `[-1, 1]`: strictly increasing nodes (values of
/// `cos(theta)`) and positive weights summing to 2. Exact for polynomials of
/// degree `2*len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f(x)` over `[-1, 1]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(*x);
        }
        acc
    }
}

/// Legendre polynomial value and derivative at `x` by upward recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Nodes and weights of the `npts`-point Gauss-Legendre rule, nodes to 1e-14.
pub fn gauss_legendre(npts: usize) -> Result<QuadratureRule, HarmonicsError> {
    if npts == 0 {
        return Err(HarmonicsError::EmptyRule);
    }
    let mut nodes = vec![0.0; npts];
    let mut weights = vec![0.0; npts];
    let half = npts / 2;
    for k in 0..half {
        // Initial guess for the k-th root from the top, then Newton.
        let mut x = (PI * (k as f64 + 0.75) / (npts as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(npts, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(npts, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[npts - 1 - k] = x;
        nodes[k] = -x;
        weights[npts - 1 - k] = w;
        weights[k] = w;
    }
    if npts % 2 == 1 {
        let (_, dp) = legendre_pair(npts, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}
