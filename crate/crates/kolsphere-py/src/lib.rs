//! Python bindings for the kolsphere spectral-analysis library: the
//! pseudospectral bound and resolvent norms of the truncated generator
//! `L = A - i*alpha*m*Lambda`, propagator norm curves with certified decay
//! rates, envelope evaluation, and the base-flow velocity profile.
//!
//! Error mapping mirrors the CLI's exit-code split: input-domain failures
//! raise `ValueError`, numerical-contract failures raise `RuntimeError`.

use kolsphere::operators::{default_n_hi, velocity_profile, SpaceKind};
use kolsphere::pseudospectrum::{
    envelope_g, fit_envelope_constant, resolvent_norm_at, sweep, EnvelopeParams, GridSpec,
    PsError,
};
use kolsphere::semigroup::{curve_n_hi, decay_rate, propagator_curve, SemiError, TimeGrid};
use kolsphere::{harmonics, Degree, Order};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn ps_err(e: PsError) -> PyErr {
    match e {
        PsError::ZeroAlpha | PsError::BadKappa(_) | PsError::Operators(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn semi_err(e: SemiError) -> PyErr {
    match e {
        SemiError::BadTimeGrid
        | SemiError::BadGridScales(_, _)
        | SemiError::BadScalingInput
        | SemiError::BadTransientInput
        | SemiError::ZetaAtKernel
        | SemiError::ZetaOutsideHalfPlane(_)
        | SemiError::Operators(_) => PyValueError::new_err(e.to_string()),
        SemiError::Ps(inner) => ps_err(inner),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn grid_spec(n_hi: Degree) -> GridSpec {
    GridSpec { n_hi: (n_hi > 0).then_some(n_hi), ..GridSpec::default() }
}

/// Laplace-Beltrami eigenvalue `lambda_n = n (n + 1)` on the unit sphere.
#[pyfunction]
fn laplace_eigenvalue(n: Degree) -> f64 {
    harmonics::laplace_eigenvalue(n)
}

/// Recurrence coupling `a_n^m = sqrt((n-m)(n+m) / ((2n-1)(2n+1)))`.
#[pyfunction]
fn coupling(n: Degree, m: Order) -> PyResult<f64> {
    harmonics::coupling(n, m).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Normalized colatitude profile of the spherical harmonic `Y_n^m`.
#[pyfunction]
fn eval_basis(n: Degree, m: Order, theta: f64) -> PyResult<f64> {
    harmonics::eval_basis(n, m, theta).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Resolvent norm `||(i lambda - L)^{-1}||` on the reduced space;
/// `n_hi = 0` uses the default truncation policy.
#[pyfunction]
#[pyo3(signature = (alpha, m, lam, n_hi = 0))]
fn resolvent_norm(alpha: f64, m: Order, lam: f64, n_hi: Degree) -> PyResult<f64> {
    let n_hi = if n_hi > 0 { n_hi } else { default_n_hi(alpha, m, SpaceKind::Reduced) };
    resolvent_norm_at(alpha, m, lam, n_hi).map_err(ps_err)
}

/// Resolvent envelope `G_m(alpha, mu)` along the imaginary axis.
#[pyfunction]
#[pyo3(signature = (alpha, m, mu, kappa = 0.0625))]
fn envelope(alpha: f64, m: Order, mu: f64, kappa: f64) -> PyResult<f64> {
    let params = EnvelopeParams::new(kappa).map_err(ps_err)?;
    Ok(envelope_g(alpha, m, mu, &params))
}

/// Pseudospectral bound of one `(alpha, m)` pair: sweeps the imaginary
/// axis with truncation doubling and returns
/// `{psi, mu_peak, c_star, n_hi_used, converged}`.
#[pyfunction]
#[pyo3(signature = (alpha, m, n_hi = 0, kappa = 0.0625))]
fn psi_bound(
    py: Python<'_>,
    alpha: f64,
    m: Order,
    n_hi: Degree,
    kappa: f64,
) -> PyResult<Py<PyDict>> {
    let params = EnvelopeParams::new(kappa).map_err(ps_err)?;
    let result = sweep(alpha, m, &grid_spec(n_hi)).map_err(ps_err)?;
    let out = PyDict::new(py);
    out.set_item("psi", result.psi)?;
    out.set_item("mu_peak", result.mu_peak)?;
    out.set_item("c_star", fit_envelope_constant(&result, &params))?;
    out.set_item("n_hi_used", result.n_hi_used)?;
    out.set_item("converged", result.converged)?;
    Ok(out.unbind())
}

/// Partitioned propagator norms of `e^{tL}` at explicit times:
/// `{t, qq, pq, pp, n_hi_used, converged}`; `pq`/`pp` are `None` for
/// `|m| >= 3`, where the kernel direction is outside the space.
#[pyfunction]
#[pyo3(signature = (alpha, m, times, n_hi = 0))]
fn propagator_norms(
    py: Python<'_>,
    alpha: f64,
    m: Order,
    times: Vec<f64>,
    n_hi: Degree,
) -> PyResult<Py<PyDict>> {
    let grid = TimeGrid::explicit(times).map_err(semi_err)?;
    let n_hi = if n_hi > 0 { n_hi } else { curve_n_hi(alpha, m) };
    let curve = propagator_curve(alpha, m, &grid, n_hi).map_err(semi_err)?;
    let out = PyDict::new(py);
    out.set_item("t", curve.t_grid.clone())?;
    out.set_item("qq", curve.qq_norms.clone())?;
    out.set_item("pq", curve.pq_norms.clone())?;
    out.set_item("pp", curve.pp_residuals.clone())?;
    out.set_item("n_hi_used", curve.n_hi_used)?;
    out.set_item("converged", curve.converged)?;
    Ok(out.unbind())
}

/// Certified decay rate of `||Q e^{tL} Q||`: the largest `sigma` with
/// `qq(t) <= c_cap e^{-sigma t}` on a log-spaced grid sized from the
/// pseudospectral bound. Returns
/// `{sigma, achieved_prefactor, capped, t_min, t_max, psi, n_hi_used}`.
#[pyfunction]
#[pyo3(signature = (alpha, m, c_cap = 10.0))]
fn certified_decay(py: Python<'_>, alpha: f64, m: Order, c_cap: f64) -> PyResult<Py<PyDict>> {
    let (grid, psi) = if alpha == 0.0 {
        (TimeGrid::log_spaced(10.0, 40, 1e-8).map_err(semi_err)?, None)
    } else {
        let psi = sweep(alpha, m, &GridSpec::default()).map_err(ps_err)?.psi;
        (TimeGrid::from_psi(psi), Some(psi))
    };
    let curve = propagator_curve(alpha, m, &grid, curve_n_hi(alpha, m)).map_err(semi_err)?;
    let estimate = decay_rate(&curve, c_cap).map_err(semi_err)?;
    let out = PyDict::new(py);
    out.set_item("sigma", estimate.sigma)?;
    out.set_item("achieved_prefactor", estimate.achieved_prefactor)?;
    out.set_item("capped", estimate.capped)?;
    out.set_item("t_min", estimate.t_range.0)?;
    out.set_item("t_max", estimate.t_range.1)?;
    out.set_item("psi", psi)?;
    out.set_item("n_hi_used", curve.n_hi_used)?;
    Ok(out.unbind())
}

/// Zonal speed of the `n`-jet base flow at interior colatitudes.
#[pyfunction]
#[pyo3(signature = (n, amplitude, thetas))]
fn velocity(n: Degree, amplitude: f64, thetas: Vec<f64>) -> PyResult<Vec<f64>> {
    velocity_profile(n, amplitude, &thetas).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn kolsphere_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(laplace_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(coupling, m)?)?;
    m.add_function(wrap_pyfunction!(eval_basis, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_norm, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(psi_bound, m)?)?;
    m.add_function(wrap_pyfunction!(propagator_norms, m)?)?;
    m.add_function(wrap_pyfunction!(certified_decay, m)?)?;
    m.add_function(wrap_pyfunction!(velocity, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
