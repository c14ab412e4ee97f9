//! Flat JSON experiment configuration.
//!
//! Every experiment is described by one [`ExperimentConfig`]; the defaults
//! reproduce the reference twin experiment (500-point grid, 14 observation
//! locations, 53 filter steps in two slightly overlapping windows). Unknown
//! keys are rejected and every validation failure names the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decomp::{
    build_space_decomposition, build_time_decomposition, SpaceDecomposition, TimeDecomposition,
};
use crate::error::{Error, Result};
use crate::swe::GRAVITY;

/// One time window: `size` filter steps, of which the trailing `overlap`
/// steps are re-executed by the next window. The last window's overlap must
/// be zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Steps executed by this window.
    pub size: usize,
    /// Steps shared with the following window.
    #[serde(default)]
    pub overlap: usize,
}

/// Initial analysis-error covariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P0Mode {
    /// `P₀ = 0`: full confidence in the initial state.
    Zero,
    /// `P₀ = I`.
    Identity,
}

/// Complete description of one experiment run.
///
/// The schema is flat JSON; all keys are optional and default to the
/// reference experiment. The number of filter steps is derived from
/// `windows`; the optional `nt` key cross-checks it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Interior grid points — the filter state dimension.
    pub n: usize,
    /// Physical domain length.
    pub domain_length: f64,
    /// Nominal final time of the assimilation window (recorded in reports;
    /// the integration is step-driven with an adaptive stable time step).
    pub t_final: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Number of observation locations, spread uniformly over the domain.
    pub m_obs: usize,
    /// Model-error variance σ_m².
    pub sigma_model_sq: f64,
    /// Observation-error variance σ_0² (the filter's R = σ_0²·I).
    pub sigma_obs_sq: f64,
    /// Standard deviation of the synthetic observation noise.
    pub noise_scale: f64,
    /// Noise standard deviation for observation locations in the first half
    /// of the domain, used by the split-noise study.
    pub noise_scale_sub1: f64,
    /// Noise standard deviation for locations in the second half.
    pub noise_scale_sub2: f64,
    /// Seed for the observation-noise generator.
    pub seed: u64,
    /// Number of spatial subdomains (2 uses the dedicated overlapping
    /// recursion; more use the non-overlapping block-tridiagonal one).
    pub n_sub: usize,
    /// Spatial overlap width `s` (even; the two subdomains each take
    /// `(n + s) / 2` points).
    pub overlap_s: usize,
    /// Share of the overlap columns of the observation operator assigned to
    /// the first subdomain.
    pub alpha_split: f64,
    /// Time windows executed in order.
    pub windows: Vec<WindowSpec>,
    /// Optional explicit step count; must match the coverage of `windows`.
    pub nt: Option<usize>,
    /// Initial covariance mode.
    pub p0_mode: P0Mode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 500,
            domain_length: 1.0,
            t_final: 1.5,
            g: GRAVITY,
            m_obs: 14,
            sigma_model_sq: 0.5,
            sigma_obs_sq: 0.35,
            noise_scale: 1e-2,
            noise_scale_sub1: 1e-15,
            noise_scale_sub2: 2.0,
            seed: 42,
            n_sub: 2,
            overlap_s: 200,
            alpha_split: 0.5,
            windows: vec![
                WindowSpec { size: 26, overlap: 1 },
                WindowSpec { size: 28, overlap: 0 },
            ],
            nt: None,
            p0_mode: P0Mode::Zero,
        }
    }
}

fn check_nonneg(value: f64, key: &str) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "{key} must be finite and >= 0, got {value}"
        )));
    }
    Ok(())
}

fn check_positive(value: f64, key: &str) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "{key} must be finite and > 0, got {value}"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Reads and validates a configuration file. A missing file is an I/O
    /// error carrying the path; any other failure names the offending key.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("config file {}: {e}", path.display()),
            ))
        })?;
        let cfg = Self::from_json(&text)
            .map_err(|e| Error::InvalidConfig(format!("config file {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Parses and validates a configuration from a JSON string.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Number of filter steps: window coverage net of re-executed overlaps.
    pub fn steps(&self) -> usize {
        let total: usize = self.windows.iter().map(|w| w.size).sum();
        let shared: usize = self.windows.iter().map(|w| w.overlap).sum();
        total - shared
    }

    /// Checks every key; error messages name the key they reject.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidConfig(format!(
                "n must be at least 3, got {}",
                self.n
            )));
        }
        check_positive(self.domain_length, "domain_length")?;
        check_positive(self.t_final, "t_final")?;
        check_positive(self.g, "g")?;
        if self.m_obs == 0 || self.m_obs >= self.n {
            return Err(Error::InvalidConfig(format!(
                "m_obs must satisfy 1 <= m_obs < n so every location lies in \
                 the interior span, got m_obs = {}, n = {}",
                self.m_obs, self.n
            )));
        }
        check_nonneg(self.sigma_model_sq, "sigma_model_sq")?;
        check_nonneg(self.sigma_obs_sq, "sigma_obs_sq")?;
        check_nonneg(self.noise_scale, "noise_scale")?;
        check_nonneg(self.noise_scale_sub1, "noise_scale_sub1")?;
        check_nonneg(self.noise_scale_sub2, "noise_scale_sub2")?;
        if !self.alpha_split.is_finite() || !(0.0..=1.0).contains(&self.alpha_split) {
            return Err(Error::InvalidConfig(format!(
                "alpha_split must lie in [0, 1], got {}",
                self.alpha_split
            )));
        }
        if self.n_sub < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_sub must be at least 2, got {}",
                self.n_sub
            )));
        }
        if self.n_sub == 2 {
            if self.overlap_s % 2 != 0 || (self.n + self.overlap_s) % 2 != 0 {
                return Err(Error::InvalidConfig(format!(
                    "overlap_s must be even and n + overlap_s must split into \
                     two equal subdomains, got n = {}, overlap_s = {}",
                    self.n, self.overlap_s
                )));
            }
            if self.overlap_s >= self.n {
                return Err(Error::InvalidConfig(format!(
                    "overlap_s must stay below n, got overlap_s = {}, n = {}",
                    self.overlap_s, self.n
                )));
            }
        } else {
            if self.overlap_s != 0 {
                return Err(Error::InvalidConfig(format!(
                    "overlap_s must be 0 when n_sub > 2 (the multi-subdomain \
                     recursion is non-overlapping), got {}",
                    self.overlap_s
                )));
            }
            if self.n % self.n_sub != 0 {
                return Err(Error::InvalidConfig(format!(
                    "n must be divisible by n_sub, got n = {}, n_sub = {}",
                    self.n, self.n_sub
                )));
            }
        }
        if self.windows.is_empty() {
            return Err(Error::InvalidConfig("windows must not be empty".into()));
        }
        if let Some(last) = self.windows.last() {
            if last.overlap != 0 {
                return Err(Error::InvalidConfig(format!(
                    "windows: the last window's overlap must be 0, got {}",
                    last.overlap
                )));
            }
        }
        self.time_decomposition()
            .map_err(|e| Error::InvalidConfig(format!("windows: {e}")))?;
        if let Some(nt) = self.nt {
            if nt != self.steps() {
                return Err(Error::InvalidConfig(format!(
                    "nt = {nt} does not match the {} steps covered by windows",
                    self.steps()
                )));
            }
        }
        Ok(())
    }

    /// Window layout over the step sequence.
    pub fn time_decomposition(&self) -> Result<TimeDecomposition> {
        let sizes: Vec<usize> = self.windows.iter().map(|w| w.size).collect();
        let overlaps: Vec<usize> = self
            .windows
            .iter()
            .take(self.windows.len().saturating_sub(1))
            .map(|w| w.overlap)
            .collect();
        build_time_decomposition(self.steps(), &sizes, &overlaps)
    }

    /// Symmetric two-subdomain geometry for a given overlap width.
    pub fn space_decomposition_for(&self, s: usize) -> Result<SpaceDecomposition> {
        if (self.n + s) % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "overlap {s} does not split n = {} into two equal subdomains",
                self.n
            )));
        }
        build_space_decomposition(self.n, (self.n + s) / 2, s)
    }

    /// Symmetric two-subdomain geometry at the configured overlap.
    pub fn space_decomposition(&self) -> Result<SpaceDecomposition> {
        self.space_decomposition_for(self.overlap_s)
    }

    /// Equal subdomain sizes for the multi-subdomain recursion.
    pub fn subdomain_sizes(&self) -> Result<Vec<usize>> {
        if self.n % self.n_sub != 0 {
            return Err(Error::InvalidConfig(format!(
                "n must be divisible by n_sub, got n = {}, n_sub = {}",
                self.n, self.n_sub
            )));
        }
        Ok(vec![self.n / self.n_sub; self.n_sub])
    }
}
