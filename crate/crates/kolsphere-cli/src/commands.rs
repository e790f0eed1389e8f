//! Subcommand implementations. Each command resolves its inputs from the
//! layered [`StudyConfig`], fans independent `(alpha, m)` jobs out over a
//! worker pool (`KOLSPHERE_WORKERS` caps the thread count), merges results
//! in input order, and emits versioned CSV tables plus a JSON summary that
//! embeds the fully resolved configuration and the code version. Optional
//! SVG line charts are rendered from the same data.

use std::path::PathBuf;

use kolsphere::operators::{
    assemble_a, assemble_l, assemble_lambda, velocity_profile, ModeSpace,
};
use kolsphere::pseudospectrum::{
    coercivity_scan, envelope_g, fit_envelope_constant, sweep, CoercivityRecord, SweepResult,
};
use kolsphere::semigroup::{
    curve_n_hi, decay_rate, propagator_curve, scaling_study_with_cap, transient_study, SlopeFit,
};
use kolsphere::{Degree, Order, PropagatorCurve, TimeGrid};
use serde_json::json;

use crate::config::StudyConfig;
use crate::errors::CliError;
use crate::output::{csv_float, csv_opt_float, write_csv, write_json, SvgChart, SvgSeries};

/// Worker threads for a batch of `jobs` independent tasks: the
/// `KOLSPHERE_WORKERS` environment variable when set (minimum 1), otherwise
/// the machine parallelism, never more threads than jobs.
fn worker_count(jobs: usize) -> usize {
    let requested = std::env::var("KOLSPHERE_WORKERS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|w| *w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    requested.min(jobs).max(1)
}

/// Runs `f(0..jobs)` across the worker pool with strided assignment and an
/// in-order merge, so outputs (and the reported error, when several jobs
/// fail: the lowest index wins) are independent of scheduling.
fn run_indexed<T, F>(jobs: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    let workers = worker_count(jobs);
    let mut collected: Vec<(usize, Result<T, CliError>)> = if workers <= 1 {
        (0..jobs).map(|i| (i, f(i))).collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let f = &f;
                    scope.spawn(move || {
                        (w..jobs).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker thread panicked"))
                .collect()
        })
    };
    collected.sort_by_key(|(i, _)| *i);
    collected.into_iter().map(|(_, r)| r).collect()
}

fn out_path(cfg: &StudyConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

/// Skeleton of every summary JSON: code version, command name, and the
/// fully resolved configuration the run used.
fn summary_base(cfg: &StudyConfig, command: &str) -> Result<serde_json::Value, CliError> {
    Ok(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": serde_json::to_value(cfg)
            .map_err(|e| CliError::Io(format!("serializing config: {e}")))?,
    }))
}

fn announce(path: &PathBuf) {
    println!("wrote {}", path.display());
}

fn slope_json(fit: &SlopeFit) -> serde_json::Value {
    json!({
        "slope": fit.slope,
        "stderr": fit.stderr,
        "ci95": [fit.slope - 2.0 * fit.stderr, fit.slope + 2.0 * fit.stderr],
    })
}

fn require_nonzero_alpha(cfg: &StudyConfig) -> Result<(), CliError> {
    if cfg.params.alpha.iter().any(|a| *a == 0.0) {
        return Err(CliError::Validation(
            "alpha = 0 has an empty advective part; the resolvent sweep and its bound \
             require alpha != 0"
                .into(),
        ));
    }
    Ok(())
}

/// Starting truncation for resolvent-style work: the configured override
/// when positive, otherwise the library's per-pair policy.
fn forced_n_hi(cfg: &StudyConfig) -> Option<Degree> {
    (cfg.truncation.n_hi > 0).then_some(cfg.truncation.n_hi)
}

// ---------------------------------------------------------------------------
// assemble
// ---------------------------------------------------------------------------

pub fn cmd_assemble(cfg: &StudyConfig) -> Result<(), CliError> {
    let m = cfg.assemble.m;
    let n_hi = cfg.assemble.n_hi;
    let alpha = cfg.assemble.alpha;
    if !alpha.is_finite() {
        return Err(CliError::Validation(format!("assemble.alpha = {alpha} must be finite")));
    }
    let space = ModeSpace::full(m, n_hi)?;
    let a = assemble_a(space);
    let lambda = assemble_lambda(space)?;
    let l = assemble_l(space, alpha)?;

    let files = [("A.txt", &a), ("Lambda.txt", &lambda), ("L.txt", &l)];
    for (name, op) in files {
        let path = out_path(cfg, name);
        crate::output::atomic_write(&path, op.to_text().as_bytes())?;
        announce(&path);
    }

    let mut header = summary_base(cfg, "assemble")?;
    header["operators"] = json!({
        "m": m,
        "n_lo": space.n_lo(),
        "n_hi": n_hi,
        "alpha": alpha,
        "dim": space.dim(),
        "space": "full",
        "files": {"A": "A.txt", "Lambda": "Lambda.txt", "L": "L.txt"},
    });
    let path = out_path(cfg, "assemble.json");
    write_json(&path, &header)?;
    announce(&path);
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep / psbound
// ---------------------------------------------------------------------------

fn run_sweeps(cfg: &StudyConfig) -> Result<Vec<SweepResult>, CliError> {
    require_nonzero_alpha(cfg)?;
    let spec = cfg.grid_spec();
    let pairs = cfg.pairs();
    run_indexed(pairs.len(), |i| {
        let (alpha, m) = pairs[i];
        Ok(sweep(alpha, m, &spec)?)
    })
}

fn sweep_record(s: &SweepResult, c_star: f64) -> serde_json::Value {
    json!({
        "alpha": s.alpha,
        "m": s.m,
        "psi": s.psi,
        "mu_peak": s.mu_peak,
        "C_star": c_star,
        "n_hi_used": s.n_hi_used,
        "converged": s.converged,
    })
}

pub fn cmd_sweep(cfg: &StudyConfig) -> Result<(), CliError> {
    let params = cfg.envelope_params()?;
    let sweeps = run_sweeps(cfg)?;

    let mut rows = Vec::new();
    for s in &sweeps {
        for (mu, norm) in s.mu_grid.iter().zip(&s.norms) {
            let g = envelope_g(s.alpha, s.m, *mu, &params);
            rows.push(vec![
                csv_float(s.alpha),
                s.m.to_string(),
                csv_float(*mu),
                csv_float(s.alpha * f64::from(s.m) * mu),
                csv_float(*norm),
                csv_float(g),
                csv_float(norm / g),
            ]);
        }
    }
    let csv = out_path(cfg, "sweep.csv");
    write_csv(
        &csv,
        "sweep",
        &["alpha", "m", "mu", "lambda", "resolvent_norm", "envelope_G", "ratio"],
        &rows,
    )?;
    announce(&csv);

    let mut summary = summary_base(cfg, "sweep")?;
    summary["results"] = sweeps
        .iter()
        .map(|s| sweep_record(s, fit_envelope_constant(s, &params)))
        .collect::<Vec<_>>()
        .into();
    let path = out_path(cfg, "sweep_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let chart = SvgChart {
            title: "resolvent norm along the imaginary axis".into(),
            x_label: "mu = lambda / (alpha m)".into(),
            y_label: "||(i lambda - L)^-1||".into(),
            log_x: false,
            log_y: true,
            series: sweeps
                .iter()
                .map(|s| SvgSeries {
                    label: format!("alpha={} m={}", s.alpha, s.m),
                    points: s.mu_grid.iter().cloned().zip(s.norms.iter().cloned()).collect(),
                })
                .collect(),
        };
        let path = out_path(cfg, "sweep.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

pub fn cmd_psbound(cfg: &StudyConfig) -> Result<(), CliError> {
    let params = cfg.envelope_params()?;
    let sweeps = run_sweeps(cfg)?;

    let rows: Vec<Vec<String>> = sweeps
        .iter()
        .map(|s| {
            vec![
                csv_float(s.alpha),
                s.m.to_string(),
                csv_float(s.psi),
                csv_float(s.mu_peak),
                csv_float(fit_envelope_constant(s, &params)),
                s.n_hi_used.to_string(),
                s.converged.to_string(),
            ]
        })
        .collect();
    let csv = out_path(cfg, "psbound.csv");
    write_csv(
        &csv,
        "psbound",
        &["alpha", "m", "psi", "mu_peak", "C_star", "n_hi_used", "converged"],
        &rows,
    )?;
    announce(&csv);

    let mut summary = summary_base(cfg, "psbound")?;
    summary["results"] = sweeps
        .iter()
        .map(|s| sweep_record(s, fit_envelope_constant(s, &params)))
        .collect::<Vec<_>>()
        .into();
    let path = out_path(cfg, "psbound_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let mut by_m: Vec<(Order, Vec<(f64, f64)>)> = Vec::new();
        for s in &sweeps {
            match by_m.iter_mut().find(|(m, _)| *m == s.m) {
                Some((_, pts)) => pts.push((s.alpha.abs(), s.psi)),
                None => by_m.push((s.m, vec![(s.alpha.abs(), s.psi)])),
            }
        }
        let chart = SvgChart {
            title: "pseudospectral bound".into(),
            x_label: "alpha".into(),
            y_label: "Psi".into(),
            log_x: true,
            log_y: true,
            series: by_m
                .into_iter()
                .map(|(m, points)| SvgSeries { label: format!("m={m}"), points })
                .collect(),
        };
        let path = out_path(cfg, "psbound.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// coercivity
// ---------------------------------------------------------------------------

/// Default truncation of the coercivity scan; the scan has no `alpha`, so
/// there is no advective length scale to size against and a fixed deep
/// truncation (stability under doubling is an acceptance check) is used.
const COERCIVITY_N_HI: Degree = 128;

pub fn cmd_coercivity(cfg: &StudyConfig) -> Result<(), CliError> {
    let params = cfg.envelope_params()?;
    let n_hi = forced_n_hi(cfg).unwrap_or(COERCIVITY_N_HI);
    let mu_list = &cfg.coercivity.mu;
    if mu_list.is_empty() || mu_list.iter().any(|mu| !mu.is_finite()) {
        return Err(CliError::Validation("coercivity.mu must be non-empty and finite".into()));
    }
    let ms = &cfg.params.m;
    let scans: Vec<(Order, Vec<CoercivityRecord>)> = run_indexed(ms.len(), |i| {
        let m = ms[i];
        Ok((m, coercivity_scan(m, mu_list, n_hi, &params)?))
    })?;

    let mut rows = Vec::new();
    for (m, records) in &scans {
        for r in records {
            rows.push(vec![
                m.to_string(),
                csv_float(r.mu),
                csv_float(r.s_min),
                csv_opt_float(r.ratio_high),
                csv_opt_float(r.c_combined),
                csv_opt_float(r.c_b3),
            ]);
        }
    }
    let csv = out_path(cfg, "coercivity.csv");
    write_csv(
        &csv,
        "coercivity",
        &["m", "mu", "s_min", "ratio_high", "c_combined", "c_b3"],
        &rows,
    )?;
    announce(&csv);

    let mut summary = summary_base(cfg, "coercivity")?;
    summary["n_hi"] = json!(n_hi);
    summary["results"] = scans
        .iter()
        .map(|(m, records)| {
            json!({
                "m": m,
                "records": records.iter().map(|r| json!({
                    "mu": r.mu,
                    "s_min": r.s_min,
                    "ratio_high": r.ratio_high,
                    "c_combined": r.c_combined,
                    "c_b3": r.c_b3,
                })).collect::<Vec<_>>(),
            })
        })
        .collect::<Vec<_>>()
        .into();
    let path = out_path(cfg, "coercivity_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let chart = SvgChart {
            title: format!("advection-pencil smallest singular value (n_hi={n_hi})"),
            x_label: "mu".into(),
            y_label: "s_min".into(),
            log_x: false,
            log_y: true,
            series: scans
                .iter()
                .map(|(m, records)| SvgSeries {
                    label: format!("m={m}"),
                    points: records.iter().map(|r| (r.mu, r.s_min)).collect(),
                })
                .collect(),
        };
        let path = out_path(cfg, "coercivity.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// semigroup
// ---------------------------------------------------------------------------

struct CurveJob {
    curve: PropagatorCurve,
    psi: Option<f64>,
    sigma: f64,
    achieved_prefactor: f64,
    capped: bool,
    t_range: (f64, f64),
}

/// Time grid policy: explicit `time.times` wins, then a configured
/// `time.sigma_guess > 0`, then a guess derived from the pseudospectral
/// bound of a fresh sweep (`max(10, psi/2)`; `alpha = 0` is purely
/// diffusive and uses the spectral-gap rate 10 directly).
fn curve_job(cfg: &StudyConfig, alpha: f64, m: Order) -> Result<CurveJob, CliError> {
    let (grid, psi) = if !cfg.time.times.is_empty() {
        (TimeGrid::explicit(cfg.time.times.clone())?, None)
    } else {
        let points = cfg.time.points;
        let floor = cfg.time.qq_floor;
        if cfg.time.sigma_guess > 0.0 {
            (TimeGrid::log_spaced(cfg.time.sigma_guess, points, floor)?, None)
        } else if alpha == 0.0 {
            (TimeGrid::log_spaced(10.0, points, floor)?, None)
        } else {
            let psi = sweep(alpha, m, &cfg.grid_spec())?.psi;
            (TimeGrid::log_spaced((0.5 * psi).max(10.0), points, floor)?, Some(psi))
        }
    };
    let n_hi = forced_n_hi(cfg).unwrap_or_else(|| curve_n_hi(alpha, m));
    let curve = propagator_curve(alpha, m, &grid, n_hi)?;
    let est = decay_rate(&curve, cfg.params.c_cap)?;
    Ok(CurveJob {
        curve,
        psi,
        sigma: est.sigma,
        achieved_prefactor: est.achieved_prefactor,
        capped: est.capped,
        t_range: est.t_range,
    })
}

pub fn cmd_semigroup(cfg: &StudyConfig) -> Result<(), CliError> {
    let pairs = cfg.pairs();
    let jobs = run_indexed(pairs.len(), |i| {
        let (alpha, m) = pairs[i];
        curve_job(cfg, alpha, m)
    })?;

    let mut rows = Vec::new();
    for job in &jobs {
        let c = &job.curve;
        for (k, t) in c.t_grid.iter().enumerate() {
            rows.push(vec![
                csv_float(c.alpha),
                c.m.to_string(),
                csv_float(*t),
                csv_float(c.qq_norms[k]),
                csv_opt_float(c.pq_norms.as_ref().map(|v| v[k])),
                csv_opt_float(c.pp_residuals.as_ref().map(|v| v[k])),
            ]);
        }
    }
    let csv = out_path(cfg, "curve.csv");
    write_csv(
        &csv,
        "curve",
        &["alpha", "m", "t", "qq_norm", "pq_norm", "pp_residual"],
        &rows,
    )?;
    announce(&csv);

    let mut summary = summary_base(cfg, "semigroup")?;
    summary["results"] = jobs
        .iter()
        .map(|job| {
            json!({
                "alpha": job.curve.alpha,
                "m": job.curve.m,
                "psi": job.psi,
                "sigma": job.sigma,
                "c_cap": cfg.params.c_cap,
                "achieved_prefactor": job.achieved_prefactor,
                "capped": job.capped,
                "t_min": job.t_range.0,
                "t_max": job.t_range.1,
                "n_hi_used": job.curve.n_hi_used,
                "converged": job.curve.converged,
                "pp_check": job.curve.pp_check,
            })
        })
        .collect::<Vec<_>>()
        .into();
    let path = out_path(cfg, "semigroup_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let chart = SvgChart {
            title: "propagator norm decay".into(),
            x_label: "t".into(),
            y_label: "||Q e^{tL} Q||".into(),
            log_x: false,
            log_y: true,
            series: jobs
                .iter()
                .map(|job| SvgSeries {
                    label: format!("alpha={} m={}", job.curve.alpha, job.curve.m),
                    points: job
                        .curve
                        .t_grid
                        .iter()
                        .cloned()
                        .zip(job.curve.qq_norms.iter().cloned())
                        .collect(),
                })
                .collect(),
        };
        let path = out_path(cfg, "semigroup.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// scaling
// ---------------------------------------------------------------------------

pub fn cmd_scaling(cfg: &StudyConfig) -> Result<(), CliError> {
    require_nonzero_alpha(cfg)?;
    let study = scaling_study_with_cap(&cfg.params.alpha, &cfg.params.m, cfg.params.c_cap)?;

    let mut rows = Vec::new();
    for (scan, points) in [("alpha", &study.alpha_scan), ("m", &study.m_scan)] {
        for p in points {
            rows.push(vec![
                scan.to_string(),
                csv_float(p.alpha),
                p.m.to_string(),
                csv_float(p.psi),
                csv_float(p.sigma),
                csv_float(p.ratio),
            ]);
        }
    }
    let csv = out_path(cfg, "scaling.csv");
    write_csv(&csv, "scaling", &["scan", "alpha", "m", "psi", "sigma", "ratio"], &rows)?;
    announce(&csv);

    let mut summary = summary_base(cfg, "scaling")?;
    summary["results"] = json!({
        "m_fixed": study.m_fixed,
        "alpha_fixed": study.alpha_fixed,
        "c_cap": study.c_cap,
        "psi_vs_alpha": slope_json(&study.psi_vs_alpha),
        "sigma_vs_alpha": slope_json(&study.sigma_vs_alpha),
        "psi_vs_m": slope_json(&study.psi_vs_m),
        "sigma_vs_m": slope_json(&study.sigma_vs_m),
    });
    let path = out_path(cfg, "scaling_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let chart = SvgChart {
            title: format!("rate scaling in alpha (m={})", study.m_fixed),
            x_label: "alpha".into(),
            y_label: "rate".into(),
            log_x: true,
            log_y: true,
            series: vec![
                SvgSeries {
                    label: "Psi".into(),
                    points: study.alpha_scan.iter().map(|p| (p.alpha.abs(), p.psi)).collect(),
                },
                SvgSeries {
                    label: "sigma".into(),
                    points: study.alpha_scan.iter().map(|p| (p.alpha.abs(), p.sigma)).collect(),
                },
            ],
        };
        let path = out_path(cfg, "scaling.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// transient
// ---------------------------------------------------------------------------

pub fn cmd_transient(cfg: &StudyConfig) -> Result<(), CliError> {
    let m = cfg.params.m[0];
    let study = transient_study(&cfg.params.alpha, m)?;

    let rows: Vec<Vec<String>> = study
        .points
        .iter()
        .map(|p| {
            vec![
                csv_float(p.alpha),
                m.to_string(),
                csv_float(p.amplitude),
                csv_float(p.t_peak),
                csv_float(p.psi),
            ]
        })
        .collect();
    let csv = out_path(cfg, "transient.csv");
    write_csv(&csv, "transient", &["alpha", "m", "amplitude", "t_peak", "psi"], &rows)?;
    announce(&csv);

    let mut summary = summary_base(cfg, "transient")?;
    summary["results"] = json!({
        "m": study.m,
        "amplitude_vs_alpha": slope_json(&study.amplitude_vs_alpha),
        "points": study.points.iter().map(|p| json!({
            "alpha": p.alpha,
            "amplitude": p.amplitude,
            "t_peak": p.t_peak,
            "psi": p.psi,
        })).collect::<Vec<_>>(),
    });
    let path = out_path(cfg, "transient_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let chart = SvgChart {
            title: format!("kernel-direction transient amplitude (m={m})"),
            x_label: "alpha".into(),
            y_label: "max_t ||P e^{tL} Q|| e^{2t}".into(),
            log_x: true,
            log_y: true,
            series: vec![SvgSeries {
                label: format!("m={m}"),
                points: study.points.iter().map(|p| (p.alpha.abs(), p.amplitude)).collect(),
            }],
        };
        let path = out_path(cfg, "transient.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// velocity
// ---------------------------------------------------------------------------

pub fn cmd_velocity(cfg: &StudyConfig) -> Result<(), CliError> {
    let n = cfg.velocity.jet_degree;
    let a = cfg.velocity.amplitude;
    let pts = cfg.velocity.theta_points;
    if pts == 0 {
        return Err(CliError::Validation("velocity.theta_points must be positive".into()));
    }
    if !a.is_finite() {
        return Err(CliError::Validation(format!("velocity.amplitude = {a} must be finite")));
    }
    // Uniform grid strictly inside (0, pi); the endpoints are coordinate
    // singularities of the zonal speed.
    let grid: Vec<f64> = (0..pts)
        .map(|k| std::f64::consts::PI * (k + 1) as f64 / (pts + 1) as f64)
        .collect();
    let profile = velocity_profile(n, a, &grid)?;

    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&profile)
        .map(|(theta, u)| vec![csv_float(*theta), csv_float(*u)])
        .collect();
    let csv = out_path(cfg, "velocity.csv");
    write_csv(&csv, "velocity", &["theta", "u_phi"], &rows)?;
    announce(&csv);

    let mut summary = summary_base(cfg, "velocity")?;
    summary["results"] = json!({
        "jet_degree": n,
        "amplitude": a,
        "theta_points": pts,
        "u_phi_max": profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "u_phi_min": profile.iter().cloned().fold(f64::INFINITY, f64::min),
    });
    let path = out_path(cfg, "velocity_summary.json");
    write_json(&path, &summary)?;
    announce(&path);

    if cfg.output.svg {
        let chart = SvgChart {
            title: format!("zonal speed of the {n}-jet base flow"),
            x_label: "theta".into(),
            y_label: "u_phi".into(),
            log_x: false,
            log_y: false,
            series: vec![SvgSeries {
                label: format!("n={n}"),
                points: grid.iter().cloned().zip(profile.iter().cloned()).collect(),
            }],
        };
        let path = out_path(cfg, "velocity.svg");
        chart.write(&path)?;
        announce(&path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_fanout_is_order_preserving() {
        let vals = run_indexed(17, |i| Ok(i * i)).unwrap();
        assert_eq!(vals, (0..17).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn worker_fanout_reports_lowest_index_error() {
        let err = run_indexed(8, |i| {
            if i >= 3 {
                Err(CliError::Numerical(format!("job {i}")))
            } else {
                Ok(i)
            }
        })
        .unwrap_err();
        assert_eq!(err.to_string(), "job 3");
    }

    #[test]
    fn alpha_zero_rejected_for_sweeps() {
        let mut cfg = StudyConfig::default();
        cfg.params.alpha = vec![0.0];
        assert!(matches!(require_nonzero_alpha(&cfg), Err(CliError::Validation(_))));
    }
}
