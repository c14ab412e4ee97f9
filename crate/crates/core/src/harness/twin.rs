//! Twin-experiment assembly: one nonlinear reference integration plus the
//! synthetic observations and filtering problems built around it.
//!
//! The reference run provides both the truth trajectory (what the filters
//! are scored against) and the per-step linearizations (the transition
//! models the filters use). Operators are densified lazily per step, so a
//! long run never holds more than one step's matrices at a time.

use std::sync::Arc;

use crate::decomp::{
    partition_covariance, partition_model_matrix, partition_observation_matrix,
    SpaceDecomposition, TimeDecomposition,
};
use crate::ddkf::{DdkfProblem, MultiDdkfProblem};
use crate::error::{Error, Result};
use crate::kf::{kf_run, GlobalFilterState, LinearGaussianSystem, Seq};
use crate::matrixcore::{Matrix, Vector};
use crate::swe::{
    build_observation_operator, correlation_decay, gaussian_block, height_propagator,
    model_error_covariance, reference_run, synth_observations_scaled,
    uniform_observation_positions, SweCoefficients, SweGrid,
};

use super::config::{ExperimentConfig, P0Mode};

/// Everything one experiment shares across filter runs: the truth
/// trajectory, its linearizations, the observation operator and synthetic
/// observations, and the initial filter state.
#[derive(Clone, Debug)]
pub struct TwinSetup {
    /// The configuration the setup was built from.
    pub cfg: ExperimentConfig,
    /// Spatial grid.
    pub grid: SweGrid,
    /// Number of filter steps.
    pub nt: usize,
    /// Interior truth heights at time indices `0..=nt`.
    pub truth: Arc<Vec<Vector>>,
    /// Cumulative model time after each step (`times[0] = 0`).
    pub times: Vec<f64>,
    /// Per-step linearization coefficients, shared with the lazy operators.
    pub coeffs: Arc<Vec<SweCoefficients>>,
    /// Observation locations.
    pub positions: Vec<f64>,
    /// Observation operator (modes × n).
    pub h_op: Matrix,
    /// Synthetic observations consumed by steps `0..nt`.
    pub ys: Vec<Vector>,
    /// Observation-error covariance `σ_0²·I`.
    pub r: Matrix,
    /// Initial estimate (the true initial heights).
    pub x0: Vector,
    /// Initial covariance per the configured mode.
    pub p0: Matrix,
}

impl TwinSetup {
    /// Builds the twin experiment with one uniform observation-noise scale.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        Self::assemble(cfg, |_| cfg.noise_scale)
    }

    /// Builds the twin experiment with per-location noise: locations in the
    /// first half of the domain use `noise_scale_sub1`, the rest
    /// `noise_scale_sub2`.
    pub fn build_split_noise(cfg: &ExperimentConfig) -> Result<Self> {
        let mid = cfg.domain_length / 2.0;
        let (s1, s2) = (cfg.noise_scale_sub1, cfg.noise_scale_sub2);
        Self::assemble(cfg, move |pos| if pos <= mid { s1 } else { s2 })
    }

    fn assemble(cfg: &ExperimentConfig, scale_at: impl Fn(f64) -> f64) -> Result<Self> {
        cfg.validate()?;
        let grid = SweGrid::with_params(cfg.n, cfg.domain_length, cfg.g)?;
        let nt = cfg.steps();
        let traj = reference_run(&grid, nt)?;
        let truth: Vec<Vector> = (0..=nt).map(|k| traj.interior_h(k)).collect();
        let mut times = Vec::with_capacity(nt + 1);
        times.push(0.0);
        for co in &traj.coeffs {
            times.push(times.last().unwrap() + co.dt);
        }
        let positions = uniform_observation_positions(cfg.m_obs, cfg.domain_length)?;
        let h_op = build_observation_operator(&grid, &positions)?;
        let scales: Vec<f64> = positions.iter().map(|&p| scale_at(p)).collect();
        let ys = synth_observations_scaled(&truth, &h_op, &scales, cfg.seed)?;
        let r = Matrix::identity(cfg.m_obs, cfg.m_obs) * cfg.sigma_obs_sq;
        let x0 = truth[0].clone();
        let p0 = match cfg.p0_mode {
            P0Mode::Zero => Matrix::zeros(cfg.n, cfg.n),
            P0Mode::Identity => Matrix::identity(cfg.n, cfg.n),
        };
        Ok(TwinSetup {
            cfg: cfg.clone(),
            grid,
            nt,
            truth: Arc::new(truth),
            times,
            coeffs: Arc::new(traj.coeffs),
            positions,
            h_op,
            ys,
            r,
            x0,
            p0,
        })
    }

    /// Correlation decay per grid point for the model-error covariance; the
    /// correlation length is the domain length.
    pub fn rho(&self) -> f64 {
        correlation_decay(self.grid.dx, self.grid.length)
    }

    /// Model-error covariance compatible with the given two-subdomain
    /// geometry (zero across subdomains and on the overlap).
    pub fn model_q(&self, sd: &SpaceDecomposition) -> Matrix {
        model_error_covariance(sd, self.cfg.sigma_model_sq, self.rho())
    }

    /// Model-error covariance that is block-diagonal over equal contiguous
    /// subdomain blocks, for the multi-subdomain recursion.
    pub fn model_q_blocks(&self, sizes: &[usize]) -> Matrix {
        let n: usize = sizes.iter().sum();
        let mut q = Matrix::zeros(n, n);
        let mut o = 0usize;
        for &sz in sizes {
            let g = gaussian_block(sz, self.rho(), n / 2) * self.cfg.sigma_model_sq;
            q.view_mut((o, o), (sz, sz)).copy_from(&g);
            o += sz;
        }
        q
    }

    /// The `k`-th tangent-linear height step applied to `x`.
    pub fn propagate(&self, k: usize, x: &Vector) -> Result<Vector> {
        let (m, b) = height_propagator(&self.coeffs[k])?;
        Ok(m * x + b)
    }

    /// Full-domain filtering system over the twin's linearizations.
    pub fn kf_system(&self, q: &Matrix, dense_algebra: bool) -> LinearGaussianSystem {
        let coeffs_m = Arc::clone(&self.coeffs);
        let coeffs_b = Arc::clone(&self.coeffs);
        LinearGaussianSystem {
            n: self.cfg.n,
            m: self.cfg.m_obs,
            steps: self.nt,
            m_k: Seq::Lazy {
                len: self.nt,
                make: Arc::new(move |k| height_propagator(&coeffs_m[k]).expect("valid step").0),
            },
            b_k: Seq::Lazy {
                len: self.nt,
                make: Arc::new(move |k| height_propagator(&coeffs_b[k]).expect("valid step").1),
            },
            h_k: Seq::Constant(self.h_op.clone()),
            q_k: Seq::Constant(q.clone()),
            r_k: Seq::Constant(self.r.clone()),
            dense_algebra,
        }
    }

    /// Runs the full filter and returns its analysis states.
    pub fn run_full(&self, q: &Matrix, dense_algebra: bool) -> Result<Vec<GlobalFilterState>> {
        kf_run(&self.kf_system(q, dense_algebra), &self.x0, &self.p0, &self.ys)
    }

    /// Two-subdomain decomposed problem over the same operators.
    pub fn ddkf_problem(
        &self,
        sd: &SpaceDecomposition,
        td: TimeDecomposition,
        q: &Matrix,
        dense_algebra: bool,
    ) -> Result<DdkfProblem> {
        let (q1, q2) = partition_covariance(q, sd)?;
        let obs = partition_observation_matrix(&self.h_op, sd, self.cfg.alpha_split)?;
        let coeffs_m = Arc::clone(&self.coeffs);
        let coeffs_b = Arc::clone(&self.coeffs);
        let sd_blocks = sd.clone();
        Ok(DdkfProblem {
            sd: sd.clone(),
            td,
            blocks: Seq::Lazy {
                len: self.nt,
                make: Arc::new(move |k| {
                    let (m, _) = height_propagator(&coeffs_m[k]).expect("valid step");
                    partition_model_matrix(&m, &sd_blocks).expect("matching geometry")
                }),
            },
            b_k: Seq::Lazy {
                len: self.nt,
                make: Arc::new(move |k| height_propagator(&coeffs_b[k]).expect("valid step").1),
            },
            obs: Seq::Constant(obs),
            q1,
            q2,
            r_k: Seq::Constant(self.r.clone()),
            steps: self.nt,
            dense_algebra,
        })
    }

    /// Multi-subdomain decomposed problem over the same operators.
    pub fn multi_problem(&self, sizes: &[usize], q: &Matrix) -> Result<MultiDdkfProblem> {
        let n: usize = sizes.iter().sum();
        if n != self.cfg.n {
            return Err(Error::InvalidConfig(format!(
                "subdomain sizes cover {n} points, state has {}",
                self.cfg.n
            )));
        }
        let coeffs_m = Arc::clone(&self.coeffs);
        let coeffs_b = Arc::clone(&self.coeffs);
        Ok(MultiDdkfProblem {
            sizes: sizes.to_vec(),
            m_k: Seq::Lazy {
                len: self.nt,
                make: Arc::new(move |k| height_propagator(&coeffs_m[k]).expect("valid step").0),
            },
            b_k: Seq::Lazy {
                len: self.nt,
                make: Arc::new(move |k| height_propagator(&coeffs_b[k]).expect("valid step").1),
            },
            h_k: Seq::Constant(self.h_op.clone()),
            q: q.clone(),
            r_k: Seq::Constant(self.r.clone()),
            steps: self.nt,
        })
    }
}
