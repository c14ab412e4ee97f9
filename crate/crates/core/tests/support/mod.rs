//! Shared fixtures for the integration suites: an independent textbook
//! filter (plain dense algebra, explicit matrix inversion — deliberately
//! sharing no code with the library) and seeded random problem builders.
//
// Each integration-test target compiles its own copy of this module and
// uses a different subset of it.
#![allow(dead_code)]

use ddkf_core::decomp::{
    build_space_decomposition, partition_covariance, partition_model_matrix,
    partition_observation_matrix,
};
use ddkf_core::{
    DdkfProblem, LinearGaussianSystem, Matrix, MultiDdkfProblem, Seq, SpaceDecomposition,
    TimeDecomposition, Vector,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// A fully materialized linear-Gaussian filtering problem.
pub struct DenseSystem {
    pub n: usize,
    pub m_obs: usize,
    pub steps: usize,
    pub m: Vec<Matrix>,
    pub b: Vec<Vector>,
    pub h: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub x0: Vector,
    pub p0: Matrix,
    pub ys: Vec<Vector>,
}

impl DenseSystem {
    pub fn as_lgs(&self, dense_algebra: bool) -> LinearGaussianSystem {
        LinearGaussianSystem {
            n: self.n,
            m: self.m_obs,
            steps: self.steps,
            m_k: Seq::PerStep(self.m.clone()),
            b_k: Seq::PerStep(self.b.clone()),
            h_k: Seq::Constant(self.h.clone()),
            q_k: Seq::Constant(self.q.clone()),
            r_k: Seq::Constant(self.r.clone()),
            dense_algebra,
        }
    }

    pub fn as_dd(
        &self,
        sd: &SpaceDecomposition,
        td: TimeDecomposition,
        alpha: f64,
        dense_algebra: bool,
    ) -> DdkfProblem {
        let blocks: Vec<_> = self
            .m
            .iter()
            .map(|m| partition_model_matrix(m, sd).expect("partition model"))
            .collect();
        let obs = partition_observation_matrix(&self.h, sd, alpha).expect("partition obs");
        let (q1, q2) = partition_covariance(&self.q, sd).expect("partition covariance");
        DdkfProblem {
            sd: sd.clone(),
            td,
            blocks: Seq::PerStep(blocks),
            b_k: Seq::PerStep(self.b.clone()),
            obs: Seq::Constant(obs),
            q1,
            q2,
            r_k: Seq::Constant(self.r.clone()),
            steps: self.steps,
            dense_algebra,
        }
    }

    pub fn as_multi(&self, sizes: &[usize]) -> MultiDdkfProblem {
        MultiDdkfProblem {
            sizes: sizes.to_vec(),
            m_k: Seq::PerStep(self.m.clone()),
            b_k: Seq::PerStep(self.b.clone()),
            h_k: Seq::Constant(self.h.clone()),
            q: self.q.clone(),
            r_k: Seq::Constant(self.r.clone()),
            steps: self.steps,
        }
    }
}

/// Textbook filter: predict, innovate, invert the innovation covariance
/// outright, Joseph-free covariance update — exactly the recursion as
/// usually written down, with none of the library's kernels.
pub fn naive_kf(sys: &DenseSystem) -> Vec<(Vector, Matrix)> {
    let mut x = sys.x0.clone();
    let mut p = sys.p0.clone();
    let mut out = Vec::with_capacity(sys.steps);
    let eye = Matrix::identity(sys.n, sys.n);
    for k in 0..sys.steps {
        let m = &sys.m[k];
        let x_pred = m * &x + &sys.b[k];
        let p_pred = m * &p * m.transpose() + &sys.q;
        let s = &sys.h * &p_pred * sys.h.transpose() + &sys.r;
        let s_inv = s.try_inverse().expect("innovation covariance invertible");
        let gain = &p_pred * sys.h.transpose() * s_inv;
        x = &x_pred + &gain * (&sys.ys[k] - &sys.h * &x_pred);
        p = (&eye - &gain * &sys.h) * p_pred;
        out.push((x.clone(), p.clone()));
    }
    out
}

pub fn rand_matrix(rng: &mut StdRng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0) * scale)
}

pub fn rand_vector(rng: &mut StdRng, rows: usize, scale: f64) -> Vector {
    Vector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0) * scale)
}

/// Random symmetric positive-definite matrix with unit-order diagonal.
pub fn rand_spd(rng: &mut StdRng, n: usize, jitter: f64) -> Matrix {
    let a = rand_matrix(rng, n, n, 1.0);
    let mut s = a.transpose() * &a / n as f64;
    for i in 0..n {
        s[(i, i)] += jitter;
    }
    s
}

/// Random model matrix scaled to max-row-sum norm 0.95, so trajectories and
/// covariances stay bounded over any horizon.
pub fn rand_stable(rng: &mut StdRng, n: usize) -> Matrix {
    let a = rand_matrix(rng, n, n, 1.0);
    let norm = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    a * (0.95 / norm)
}

/// Random banded stable model matrix (`|i−j| ≤ bandwidth` nonzero).
pub fn rand_banded_stable(rng: &mut StdRng, n: usize, bandwidth: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i.saturating_sub(bandwidth)..=(i + bandwidth).min(n - 1) {
            a[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let norm = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    a * (0.95 / norm)
}

/// Model-error covariance compatible with a two-subdomain decomposition:
/// independent SPD blocks on each exclusive region, zeros on the overlap and
/// everywhere across regions.
pub fn rand_decomposable_q(rng: &mut StdRng, sd: &SpaceDecomposition, scale: f64) -> Matrix {
    let n = sd.n;
    let l1 = sd.i1.len() - sd.s;
    let l2 = n - sd.i1.len();
    let mut q = Matrix::zeros(n, n);
    let g1 = rand_spd(rng, l1, 0.1) * scale;
    let g2 = rand_spd(rng, l2, 0.1) * scale;
    q.view_mut((0, 0), (l1, l1)).copy_from(&g1);
    q.view_mut((n - l2, n - l2), (l2, l2)).copy_from(&g2);
    q
}

/// Block-diagonal SPD covariance for an ordered partition.
pub fn rand_blockdiag_q(rng: &mut StdRng, sizes: &[usize], scale: f64) -> Matrix {
    let n: usize = sizes.iter().sum();
    let mut q = Matrix::zeros(n, n);
    let mut o = 0usize;
    for &sz in sizes {
        let g = rand_spd(rng, sz, 0.1) * scale;
        q.view_mut((o, o), (sz, sz)).copy_from(&g);
        o += sz;
    }
    q
}

/// Seeded random system whose model-error covariance respects the
/// two-subdomain decomposition with overlap `s` (dense model, dense
/// observation operator, dense initial covariance).
pub fn decomposable_system(
    seed: u64,
    n: usize,
    s: usize,
    m_obs: usize,
    steps: usize,
) -> (DenseSystem, SpaceDecomposition) {
    let mut rng = StdRng::seed_from_u64(seed);
    let sd = build_space_decomposition(n, (n + s) / 2, s).expect("decomposition");
    let q = rand_decomposable_q(&mut rng, &sd, 0.3);
    let sys = DenseSystem {
        n,
        m_obs,
        steps,
        m: (0..steps).map(|_| rand_stable(&mut rng, n)).collect(),
        b: (0..steps).map(|_| rand_vector(&mut rng, n, 0.5)).collect(),
        h: rand_matrix(&mut rng, m_obs, n, 1.0),
        q,
        r: rand_spd(&mut rng, m_obs, 1.0),
        x0: rand_vector(&mut rng, n, 1.0),
        p0: rand_spd(&mut rng, n, 0.5),
        ys: (0..steps).map(|_| rand_vector(&mut rng, m_obs, 1.0)).collect(),
    };
    (sys, sd)
}

/// Seeded random system whose model is block-tridiagonal and whose
/// model-error covariance is block-diagonal for the given partition.
pub fn banded_system(seed: u64, sizes: &[usize], m_obs: usize, steps: usize) -> DenseSystem {
    let mut rng = StdRng::seed_from_u64(seed);
    let n: usize = sizes.iter().sum();
    let bandwidth = sizes.iter().copied().min().expect("nonempty sizes") - 1;
    DenseSystem {
        n,
        m_obs,
        steps,
        m: (0..steps)
            .map(|_| rand_banded_stable(&mut rng, n, bandwidth))
            .collect(),
        b: (0..steps).map(|_| rand_vector(&mut rng, n, 0.5)).collect(),
        h: rand_matrix(&mut rng, m_obs, n, 1.0),
        q: rand_blockdiag_q(&mut rng, sizes, 0.3),
        r: rand_spd(&mut rng, m_obs, 1.0),
        x0: rand_vector(&mut rng, n, 1.0),
        p0: rand_spd(&mut rng, n, 0.5),
        ys: (0..steps).map(|_| rand_vector(&mut rng, m_obs, 1.0)).collect(),
    }
}

/// Merged full-domain estimate from a multi-subdomain state (concatenation
/// — the partition does not overlap).
pub fn stack_multi(x_hat: &[Vector]) -> Vector {
    let n: usize = x_hat.iter().map(|x| x.nrows()).sum();
    let mut full = Vector::zeros(n);
    let mut o = 0usize;
    for x in x_hat {
        full.rows_mut(o, x.nrows()).copy_from(x);
        o += x.nrows();
    }
    full
}
