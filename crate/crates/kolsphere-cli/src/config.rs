//! Layered run configuration: built-in defaults, then an optional TOML file,
//! then command-line flag overrides. The fully resolved configuration is
//! echoed into every summary JSON so each output is reproducible from one
//! artifact.

use std::path::{Path, PathBuf};

use kolsphere::pseudospectrum::{EnvelopeParams, GridSpec};
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub output: OutputSection,
    pub params: ParamsSection,
    pub truncation: TruncationSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub coercivity: CoercivitySection,
    pub assemble: AssembleSection,
    pub velocity: VelocitySection,
}

/// Where results land and whether charts are rendered next to the CSVs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), svg: false }
    }
}

/// Shared physical parameters: which `(alpha, m)` pairs to run and the two
/// analysis knobs (`kappa` shifts the envelope regime boundaries, `c_cap`
/// caps decay-certificate prefactors). `seed` is echoed into outputs and
/// reserved for randomized diagnostics; every current command is
/// deterministic.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha: Vec<f64>,
    pub m: Vec<i32>,
    pub kappa: f64,
    pub c_cap: f64,
    pub seed: u64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            alpha: vec![100.0, 1000.0, 10000.0],
            m: vec![1, 2, 3],
            kappa: 1.0 / 16.0,
            c_cap: 10.0,
            seed: 0,
        }
    }
}

/// Spectral truncation policy. `n_hi = 0` delegates to the per-command
/// default (`~6 sqrt(|alpha m|)` for resolvent work, `~7 |alpha m|^{1/4}`
/// for propagator curves, 128 for coercivity scans); any positive value
/// forces that starting truncation everywhere.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub n_hi: u32,
    pub max_doublings: u32,
}

impl Default for TruncationSection {
    fn default() -> Self {
        TruncationSection { n_hi: 0, max_doublings: 5 }
    }
}

/// `mu`-grid of resolvent sweeps (`mu = lambda / (alpha m)` along the
/// imaginary axis) and the sweep's two convergence tolerances.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub base_points: usize,
    pub mu_base_max: f64,
    pub tail_points: usize,
    pub mu_tail_max: f64,
    pub peak_rel_tol: f64,
    pub truncation_rel_tol: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSection {
            base_points: g.base_points,
            mu_base_max: g.mu_base_max,
            tail_points: g.tail_points,
            mu_tail_max: g.mu_tail_max,
            peak_rel_tol: g.peak_rel_tol,
            truncation_rel_tol: g.truncation_rel_tol,
        }
    }
}

/// Time grid for propagator curves: log-spaced from the decay-rate guess
/// (`sigma_guess = 0` derives `max(10, psi/2)` from the sweep), or the
/// explicit `times` list when non-empty.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub points: usize,
    pub qq_floor: f64,
    pub sigma_guess: f64,
    pub times: Vec<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { points: 40, qq_floor: 1e-8, sigma_guess: 0.0, times: Vec::new() }
    }
}

/// `mu` values scanned by `coercivity`: the defaults cover the interior
/// (`|mu| < 1`, combined-form constants) and the injectivity ratio region
/// (`|mu| > 1`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CoercivitySection {
    pub mu: Vec<f64>,
}

impl Default for CoercivitySection {
    fn default() -> Self {
        CoercivitySection {
            mu: vec![-0.99, -0.9, -0.5, 0.0, 0.5, 0.9, 0.99, 1.05, 1.1, 1.5, 2.0],
        }
    }
}

/// Operator export: a single `(m, n_hi, alpha)` triple.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleSection {
    pub m: i32,
    pub n_hi: u32,
    pub alpha: f64,
}

impl Default for AssembleSection {
    fn default() -> Self {
        AssembleSection { m: 1, n_hi: 16, alpha: 0.0 }
    }
}

/// Zonal velocity profile of the `n`-jet base flow, sampled on a uniform
/// interior colatitude grid.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VelocitySection {
    pub jet_degree: u32,
    pub amplitude: f64,
    pub theta_points: usize,
}

impl Default for VelocitySection {
    fn default() -> Self {
        VelocitySection { jet_degree: 2, amplitude: 1.0, theta_points: 181 }
    }
}

impl StudyConfig {
    /// Defaults, overlaid by the TOML file when one is given. Unknown keys
    /// are rejected so typos cannot silently fall back to defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(StudyConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Io(format!("reading config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("config {}: {e}", p.display())))
            }
        }
    }

    /// Cross-field checks shared by all commands.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.params.alpha.is_empty() {
            return Err(CliError::Validation("params.alpha must be non-empty".into()));
        }
        if self.params.m.is_empty() {
            return Err(CliError::Validation("params.m must be non-empty".into()));
        }
        if self.params.m.contains(&0) {
            return Err(CliError::Validation(
                "params.m contains 0; the azimuthal wavenumber must be nonzero".into(),
            ));
        }
        if !self.params.alpha.iter().all(|a| a.is_finite()) {
            return Err(CliError::Validation("params.alpha must be finite".into()));
        }
        if !(self.params.c_cap > 1.0 && self.params.c_cap.is_finite()) {
            return Err(CliError::Validation(format!(
                "params.c_cap = {} must be a finite value > 1",
                self.params.c_cap
            )));
        }
        self.envelope_params()?;
        Ok(())
    }

    pub fn envelope_params(&self) -> Result<EnvelopeParams, CliError> {
        Ok(EnvelopeParams::new(self.params.kappa)?)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            base_points: self.grid.base_points,
            mu_base_max: self.grid.mu_base_max,
            tail_points: self.grid.tail_points,
            mu_tail_max: self.grid.mu_tail_max,
            peak_rel_tol: self.grid.peak_rel_tol,
            truncation_rel_tol: self.grid.truncation_rel_tol,
            n_hi: (self.truncation.n_hi > 0).then_some(self.truncation.n_hi),
            max_doublings: self.truncation.max_doublings,
        }
    }

    /// The `(alpha, m)` grid in listed order: alphas outer, ms inner.
    pub fn pairs(&self) -> Vec<(f64, i32)> {
        self.params
            .alpha
            .iter()
            .flat_map(|a| self.params.m.iter().map(move |m| (*a, *m)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_pair_order() {
        let cfg = StudyConfig::default();
        cfg.validate().unwrap();
        let pairs = cfg.pairs();
        assert_eq!(pairs[0], (100.0, 1));
        assert_eq!(pairs[1], (100.0, 2));
        assert_eq!(pairs.len(), 9);
        assert_eq!(cfg.grid_spec(), GridSpec::default());
    }

    #[test]
    fn toml_roundtrip_and_unknown_keys() {
        let cfg = StudyConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: StudyConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let err = toml::from_str::<StudyConfig>("[params]\nalpa = [1.0]\n");
        assert!(err.is_err());
    }

    #[test]
    fn override_n_hi_reaches_grid_spec() {
        let mut cfg = StudyConfig::default();
        cfg.truncation.n_hi = 96;
        assert_eq!(cfg.grid_spec().n_hi, Some(96));
    }

    #[test]
    fn rejects_bad_sections() {
        let mut cfg = StudyConfig::default();
        cfg.params.m = vec![1, 0];
        assert!(matches!(cfg.validate(), Err(CliError::Validation(_))));
        let mut cfg = StudyConfig::default();
        cfg.params.kappa = 0.9;
        assert!(matches!(cfg.validate(), Err(CliError::Validation(_))));
        let mut cfg = StudyConfig::default();
        cfg.params.c_cap = 1.0;
        assert!(matches!(cfg.validate(), Err(CliError::Validation(_))));
    }

}
