//! The decomposed filter: Kalman filtering with state, model, observation
//! operator, and covariances partitioned across overlapping subdomains and
//! across time windows.
//!
//! Each subdomain runs its own predict/correct recursion; coupling terms
//! built from the partitioned model and tracked cross-covariance blocks make
//! the local results equal — to round-off — to the restriction of the full
//! filter onto each subdomain, at every phase of every step. That equality
//! is the correctness contract this module is tested against.

use std::collections::BTreeMap;

use crate::decomp::{
    BlockModel, ObservationSplit, SpaceDecomposition, TimeDecomposition,
};
use crate::error::{Error, Result};
use crate::kf::Seq;
use crate::matrixcore::{
    max_abs, mul_ab_skip, mul_abt_skip, restrict_block, restrict_cols, restrict_vec, spd_solve,
    symmetrize, IndexSet, Matrix, Vector,
};

/// Filter state held per subdomain: local estimates, local covariances, and
/// the cross-covariance blocks between subdomains, at time index `k`.
///
/// For the two-subdomain recursion the vectors have two entries and
/// `p_cross` holds the `(0,1)` and `(1,0)` blocks; the multi-subdomain
/// recursion keeps every ordered pair. The diagonal blocks are kept
/// symmetric and the cross blocks mutually transposed — the invariants the
/// gain formulas rely on.
#[derive(Clone, Debug)]
pub struct LocalFilterState {
    /// Local analysis estimates x̂ per subdomain.
    pub x_hat: Vec<Vector>,
    /// Local analysis covariances P per subdomain.
    pub p: Vec<Matrix>,
    /// Cross-covariance blocks, keyed by ordered subdomain pair.
    pub p_cross: BTreeMap<(usize, usize), Matrix>,
    /// Time index.
    pub k: usize,
}

impl LocalFilterState {
    /// The cross block for an ordered pair (panics if the pair is not
    /// tracked — states built by this module always carry all pairs).
    pub fn cross(&self, i: usize, j: usize) -> &Matrix {
        self.p_cross
            .get(&(i, j))
            .unwrap_or_else(|| panic!("cross-covariance block ({i},{j}) not tracked"))
    }
}

/// A filtering problem partitioned onto two overlapping subdomains and a
/// sequence of (possibly overlapping) time windows.
#[derive(Clone, Debug)]
pub struct DdkfProblem {
    /// Subdomain geometry.
    pub sd: SpaceDecomposition,
    /// Window layout over the step sequence.
    pub td: TimeDecomposition,
    /// Per-step partitioned model matrices.
    pub blocks: Seq<BlockModel>,
    /// Per-step full-domain forcing vectors (length n); restricted locally.
    pub b_k: Seq<Vector>,
    /// Per-step split observation operators.
    pub obs: Seq<ObservationSplit>,
    /// Local model-error covariance on the first subdomain (n1×n1).
    pub q1: Matrix,
    /// Local model-error covariance on the second subdomain (n2×n2).
    pub q2: Matrix,
    /// Per-step observation-error covariances (m×m).
    pub r_k: Seq<Matrix>,
    /// Number of filter steps.
    pub steps: usize,
    /// Use plain dense products for the *local* covariance propagation (the
    /// coupling blocks act on the interface footprint only and always go
    /// through the zero-skipping kernels). Results agree to round-off; see
    /// `LinearGaussianSystem::dense_algebra`.
    pub dense_algebra: bool,
}

impl DdkfProblem {
    /// Checks window layout, sequence lengths, and step-0 operator shapes.
    pub fn validate(&self) -> Result<()> {
        if self.td.steps != self.steps {
            return Err(Error::InvalidConfig(format!(
                "window layout covers {} steps, problem has {}",
                self.td.steps, self.steps
            )));
        }
        let (n1, n2) = (self.sd.n1, self.sd.n2);
        if self.q1.shape() != (n1, n1) || self.q2.shape() != (n2, n2) {
            return Err(Error::DimensionMismatch(format!(
                "local model-error covariances are {}x{} and {}x{}, want {n1}x{n1} and {n2}x{n2}",
                self.q1.nrows(),
                self.q1.ncols(),
                self.q2.nrows(),
                self.q2.ncols()
            )));
        }
        let bm = self.blocks.at(0);
        for (what, got, want) in [
            ("local model block 1", bm.m1.shape(), (n1, n1)),
            ("coupling block 1->2", bm.m12.shape(), (n1, n2)),
            ("coupling block 2->1", bm.m21.shape(), (n2, n1)),
            ("local model block 2", bm.m2.shape(), (n2, n2)),
        ] {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{what}: got {}x{}, want {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        let os = self.obs.at(0);
        let m = os.h1.nrows();
        if os.h2.nrows() != m || os.h1.ncols() != n1 || os.h2.ncols() != n2 {
            return Err(Error::DimensionMismatch(format!(
                "split observation operator: {}x{} and {}x{}, want m x {n1} and m x {n2}",
                os.h1.nrows(),
                os.h1.ncols(),
                os.h2.nrows(),
                os.h2.ncols()
            )));
        }
        if self.r_k.at(0).shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "observation-error covariance is {}x{}, want {m}x{m}",
                self.r_k.at(0).nrows(),
                self.r_k.at(0).ncols()
            )));
        }
        if self.b_k.at(0).nrows() != self.sd.n {
            return Err(Error::DimensionMismatch(format!(
                "forcing vector has length {}, want {}",
                self.b_k.at(0).nrows(),
                self.sd.n
            )));
        }
        Ok(())
    }
}

/// Restricts a full-domain initial state onto the two subdomains, including
/// the cross-covariance blocks. The covariance is symmetrized first so the
/// local blocks start with the invariants the recursion maintains.
pub fn split_initial_state(
    x0: &Vector,
    p0: &Matrix,
    sd: &SpaceDecomposition,
) -> Result<LocalFilterState> {
    if x0.nrows() != sd.n || p0.shape() != (sd.n, sd.n) {
        return Err(Error::DimensionMismatch(format!(
            "initial state: x0 has length {}, P0 is {}x{}, decomposition has n = {}",
            x0.nrows(),
            p0.nrows(),
            p0.ncols(),
            sd.n
        )));
    }
    let p0s = symmetrize(p0);
    let mut p_cross = BTreeMap::new();
    p_cross.insert((0, 1), restrict_block(&p0s, &sd.i1, &sd.i2)?);
    p_cross.insert((1, 0), restrict_block(&p0s, &sd.i2, &sd.i1)?);
    Ok(LocalFilterState {
        x_hat: vec![restrict_vec(x0, &sd.i1)?, restrict_vec(x0, &sd.i2)?],
        p: vec![
            restrict_block(&p0s, &sd.i1, &sd.i1)?,
            restrict_block(&p0s, &sd.i2, &sd.i2)?,
        ],
        p_cross,
        k: 0,
    })
}

/// The coupling terms each subdomain adds to its forcing: the partitioned
/// model applied to the *other* subdomain's current analysis estimate.
pub fn coupling_vectors(state: &LocalFilterState, bm: &BlockModel) -> (Vector, Vector) {
    (&bm.m12 * &state.x_hat[1], &bm.m21 * &state.x_hat[0])
}

/// Predictor phase on both subdomains.
///
/// Estimates get the local model plus the coupling forcing; the covariance
/// blocks get the block form of `M·P·Mᵀ + Q` — each output block combines
/// the local and coupling contributions of both input blocks, which is
/// where the cross-covariance terms that keep the decomposition exact come
/// from. Diagonal blocks are symmetrized and the cross pair is averaged to
/// stay mutually transposed, mirroring the full filter's symmetrization.
/// The returned state carries the forecast; its `k` still names the
/// originating analysis index (the corrector advances it).
pub fn ddkf_predict(state: &LocalFilterState, prob: &DdkfProblem) -> Result<LocalFilterState> {
    if state.k >= prob.steps {
        return Err(Error::InvalidConfig(format!(
            "predict at step {} but problem has {} steps",
            state.k, prob.steps
        )));
    }
    let sd = &prob.sd;
    let bm = prob.blocks.at(state.k);
    let b = prob.b_k.at(state.k);
    let (x1, x2) = (&state.x_hat[0], &state.x_hat[1]);
    let (p1, p2) = (&state.p[0], &state.p[1]);
    let (p12, p21) = (state.cross(0, 1), state.cross(1, 0));

    let (c1, c2) = coupling_vectors(state, &bm);
    let x1p = &bm.m1 * x1 + restrict_vec(&b, &sd.i1)? + c1;
    let x2p = &bm.m2 * x2 + restrict_vec(&b, &sd.i2)? + c2;

    // Row halves of (M·P) in block form; the coupling blocks touch only the
    // interface footprint, so they stay on the zero-skipping kernels in both
    // arithmetic modes.
    let (u1, v1, u2, v2) = if prob.dense_algebra {
        (
            &bm.m1 * p1 + mul_ab_skip(&bm.m12, p21),
            &bm.m1 * p12 + mul_ab_skip(&bm.m12, p2),
            &bm.m2 * p21 + mul_ab_skip(&bm.m21, p1),
            &bm.m2 * p2 + mul_ab_skip(&bm.m21, p12),
        )
    } else {
        (
            mul_ab_skip(&bm.m1, p1) + mul_ab_skip(&bm.m12, p21),
            mul_ab_skip(&bm.m1, p12) + mul_ab_skip(&bm.m12, p2),
            mul_ab_skip(&bm.m2, p21) + mul_ab_skip(&bm.m21, p1),
            mul_ab_skip(&bm.m2, p2) + mul_ab_skip(&bm.m21, p12),
        )
    };
    // Column halves: each block of (M·P)·Mᵀ, plus model error on the
    // diagonal (the cross block takes none — the decomposition requires the
    // model error to be uncorrelated across subdomains).
    let (p1n, p12n, p21n, p2n) = if prob.dense_algebra {
        (
            &u1 * bm.m1.transpose() + mul_abt_skip(&v1, &bm.m12) + &prob.q1,
            &v1 * bm.m2.transpose() + mul_abt_skip(&u1, &bm.m21),
            &u2 * bm.m1.transpose() + mul_abt_skip(&v2, &bm.m12),
            &v2 * bm.m2.transpose() + mul_abt_skip(&u2, &bm.m21) + &prob.q2,
        )
    } else {
        (
            mul_abt_skip(&u1, &bm.m1) + mul_abt_skip(&v1, &bm.m12) + &prob.q1,
            mul_abt_skip(&v1, &bm.m2) + mul_abt_skip(&u1, &bm.m21),
            mul_abt_skip(&u2, &bm.m1) + mul_abt_skip(&v2, &bm.m12),
            mul_abt_skip(&v2, &bm.m2) + mul_abt_skip(&u2, &bm.m21) + &prob.q2,
        )
    };

    let cross_avg = (&p12n + p21n.transpose()) * 0.5;
    let mut p_cross = BTreeMap::new();
    p_cross.insert((1, 0), cross_avg.transpose());
    p_cross.insert((0, 1), cross_avg);
    Ok(LocalFilterState {
        x_hat: vec![x1p, x2p],
        p: vec![symmetrize(&p1n), symmetrize(&p2n)],
        p_cross,
        k: state.k,
    })
}

/// Gains and innovation covariance for the two-subdomain corrector.
#[derive(Clone, Debug)]
pub struct LocalGains {
    /// Local gain matrices K per subdomain (nᵢ×m).
    pub k: Vec<Matrix>,
    /// Innovation covariance F (m×m, symmetric positive definite), combining
    /// both local covariances, the cross blocks, and the observation error.
    pub f: Matrix,
    /// Innovation-space covariance rows `wᵢ = H¹·P(1,i) + H²·P(2,i)` (m×nᵢ),
    /// shared between the gain solve and the covariance corrections.
    pub w: Vec<Matrix>,
}

/// Gain phase on a predicted state.
///
/// `F = H¹P₁H¹ᵀ + H²P₂H²ᵀ + H²P₂,₁H¹ᵀ + H¹P₁,₂H²ᵀ + R`; each local gain is
/// `Kᵢ = (PᵢHⁱᵀ + Pᵢ,ⱼHʲᵀ)·F⁻¹`, realized as a symmetric solve against the
/// shared rows `wᵢ` (valid because the diagonal blocks are symmetric and the
/// cross blocks mutually transposed). A non-positive-definite `F` fails
/// loudly rather than degrading silently.
pub fn ddkf_gains(
    pred: &LocalFilterState,
    os: &ObservationSplit,
    r: &Matrix,
) -> Result<LocalGains> {
    let w1 = mul_ab_skip(&os.h1, &pred.p[0]) + mul_ab_skip(&os.h2, pred.cross(1, 0));
    let w2 = mul_ab_skip(&os.h1, pred.cross(0, 1)) + mul_ab_skip(&os.h2, &pred.p[1]);
    let f = symmetrize(&(mul_abt_skip(&w1, &os.h1) + mul_abt_skip(&w2, &os.h2) + r));
    let k1 = spd_solve(&f.transpose(), &w1)?.transpose();
    let k2 = spd_solve(&f.transpose(), &w2)?.transpose();
    Ok(LocalGains { k: vec![k1, k2], f, w: vec![w1, w2] })
}

/// Corrector phase on both subdomains.
///
/// The innovation is shared — `d = y − H¹x₁ − H²x₂` on the *predicted*
/// estimates — and every covariance block (diagonal and cross) is corrected
/// with the pre-update rows `wᵢ`: `P(i,j) ← P(i,j) − Kᵢ·wⱼ`. `k_next` is the
/// time index of the produced analysis state.
pub fn ddkf_correct(
    pred: &LocalFilterState,
    gains: &LocalGains,
    os: &ObservationSplit,
    y: &Vector,
    k_next: usize,
) -> Result<LocalFilterState> {
    if y.nrows() != os.h1.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, operator has {} rows",
            y.nrows(),
            os.h1.nrows()
        )));
    }
    let d = y - &os.h1 * &pred.x_hat[0] - &os.h2 * &pred.x_hat[1];
    let x1 = &pred.x_hat[0] + &gains.k[0] * &d;
    let x2 = &pred.x_hat[1] + &gains.k[1] * &d;
    let p1 = symmetrize(&(&pred.p[0] - &gains.k[0] * &gains.w[0]));
    let p2 = symmetrize(&(&pred.p[1] - &gains.k[1] * &gains.w[1]));
    let p12 = pred.cross(0, 1) - &gains.k[0] * &gains.w[1];
    let p21 = pred.cross(1, 0) - &gains.k[1] * &gains.w[0];
    let cross_avg = (p12 + p21.transpose()) * 0.5;
    let mut p_cross = BTreeMap::new();
    p_cross.insert((1, 0), cross_avg.transpose());
    p_cross.insert((0, 1), cross_avg);
    Ok(LocalFilterState { x_hat: vec![x1, x2], p: vec![p1, p2], p_cross, k: k_next })
}

/// One full decomposed step from an analysis state, consuming observation
/// `y` at step `state.k`.
pub fn ddkf_step(
    state: &LocalFilterState,
    prob: &DdkfProblem,
    y: &Vector,
) -> Result<LocalFilterState> {
    let pred = ddkf_predict(state, prob)?;
    let os = prob.obs.at(state.k);
    let r = prob.r_k.at(state.k);
    let gains = ddkf_gains(&pred, &os, &r)?;
    ddkf_correct(&pred, &gains, &os, y, state.k + 1)
}

/// Runs the decomposed filter across all time windows, invoking `visit`
/// with `(window, analysis state)` after every step.
///
/// Each window starts from the analysis state its predecessor produced at
/// the window's offset — the state *during* the previous window, not at its
/// end — so overlapping windows re-execute the shared steps. An overlap
/// equal to the predecessor's size restarts from the predecessor's own
/// starting state. Re-executed steps consume the same operators and
/// observations and therefore reproduce the same states.
pub fn run_windows_visit(
    prob: &DdkfProblem,
    x0: &Vector,
    p0: &Matrix,
    ys: &[Vector],
    mut visit: impl FnMut(usize, &LocalFilterState),
) -> Result<()> {
    prob.validate()?;
    if ys.len() != prob.steps {
        return Err(Error::DimensionMismatch(format!(
            "need one observation per step: got {}, want {}",
            ys.len(),
            prob.steps
        )));
    }
    let td = &prob.td;
    let mut cur = split_initial_state(x0, p0, &prob.sd)?;
    for w in 0..td.l {
        debug_assert_eq!(cur.k, td.offsets[w]);
        let target = if w + 1 < td.l { Some(td.offsets[w + 1]) } else { None };
        let mut next_start = if target == Some(cur.k) { Some(cur.clone()) } else { None };
        for k in td.window_steps(w) {
            cur = ddkf_step(&cur, prob, &ys[k])?;
            visit(w, &cur);
            if target == Some(cur.k) {
                next_start = Some(cur.clone());
            }
        }
        if let Some(ns) = next_start {
            cur = ns;
        } else if target.is_some() {
            return Err(Error::InvalidConfig(format!(
                "window {} never reaches the start of window {} (offset {})",
                w,
                w + 1,
                td.offsets[w + 1]
            )));
        }
    }
    Ok(())
}

/// Runs the decomposed filter and collects `(window, analysis state)` for
/// every executed step. Prefer [`run_windows_visit`] for large states.
pub fn run_windows(
    prob: &DdkfProblem,
    x0: &Vector,
    p0: &Matrix,
    ys: &[Vector],
) -> Result<Vec<(usize, LocalFilterState)>> {
    let mut out = Vec::new();
    run_windows_visit(prob, x0, p0, ys, |w, s| out.push((w, s.clone())))?;
    Ok(out)
}

/// Merges two local estimates into one full-domain vector: each subdomain
/// keeps its exclusive part and the overlap takes the arithmetic mean of
/// the two local values.
pub fn merge_overlap(x1: &Vector, x2: &Vector, sd: &SpaceDecomposition) -> Result<Vector> {
    if x1.nrows() != sd.n1 || x2.nrows() != sd.n2 {
        return Err(Error::DimensionMismatch(format!(
            "local estimates have lengths {} and {}, want {} and {}",
            x1.nrows(),
            x2.nrows(),
            sd.n1,
            sd.n2
        )));
    }
    let mut out = Vector::zeros(sd.n);
    for (local, global) in sd.i1_only.range0().enumerate().map(|(l, g)| (l, g)) {
        out[global] = x1[local];
    }
    let a = sd.i1_only.len();
    for (l, g) in sd.i12.range0().enumerate() {
        out[g] = 0.5 * (x1[a + l] + x2[l]);
    }
    let b = sd.i12.len();
    for (l, g) in sd.i2_only.range0().enumerate() {
        out[g] = x2[b + l];
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Multiple non-overlapping subdomains
// ---------------------------------------------------------------------------

/// A filtering problem partitioned onto `sizes.len()` contiguous,
/// non-overlapping subdomains, for models that couple only adjacent
/// subdomains (block-tridiagonal transition matrices).
///
/// Operators are stored on the full domain and restricted per step; a model
/// that couples non-adjacent subdomains is rejected when the step runs.
#[derive(Clone, Debug)]
pub struct MultiDdkfProblem {
    /// Subdomain sizes; they partition `{1..n}` in order.
    pub sizes: Vec<usize>,
    /// Per-step full model matrices (must be block-tridiagonal w.r.t.
    /// `sizes`).
    pub m_k: Seq<Matrix>,
    /// Per-step full forcing vectors.
    pub b_k: Seq<Vector>,
    /// Per-step full observation operators.
    pub h_k: Seq<Matrix>,
    /// Full model-error covariance (must be block-diagonal w.r.t. `sizes`).
    pub q: Matrix,
    /// Per-step observation-error covariances.
    pub r_k: Seq<Matrix>,
    /// Number of filter steps.
    pub steps: usize,
}

fn subdomain_sets(sizes: &[usize]) -> Result<Vec<IndexSet>> {
    let mut sets = Vec::with_capacity(sizes.len());
    let mut first = 1usize;
    for (i, &sz) in sizes.iter().enumerate() {
        if sz == 0 {
            return Err(Error::InvalidConfig(format!("subdomain {i} has size 0")));
        }
        sets.push(IndexSet::contiguous(first, first + sz - 1)?);
        first += sz;
    }
    Ok(sets)
}

impl MultiDdkfProblem {
    /// Full state dimension.
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Checks subdomain layout, the block-diagonal structure of the
    /// model-error covariance, and step-0 operator shapes.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::InvalidConfig(
                "need at least two subdomains".into(),
            ));
        }
        let sets = subdomain_sets(&self.sizes)?;
        let n = self.n();
        if self.q.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "model-error covariance is {}x{}, subdomains cover n = {n}",
                self.q.nrows(),
                self.q.ncols()
            )));
        }
        for i in 0..sets.len() {
            for j in 0..sets.len() {
                if i != j {
                    let blk = restrict_block(&self.q, &sets[i], &sets[j])?;
                    if max_abs(&blk) != 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "model-error covariance couples subdomains {i} and {j}; \
                             the decomposed recursion would not match the full filter"
                        )));
                    }
                }
            }
        }
        if self.m_k.at(0).shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "model matrix is {}x{}, subdomains cover n = {n}",
                self.m_k.at(0).nrows(),
                self.m_k.at(0).ncols()
            )));
        }
        if self.h_k.at(0).ncols() != n || self.b_k.at(0).nrows() != n {
            return Err(Error::DimensionMismatch(
                "observation operator / forcing do not match the subdomain layout".into(),
            ));
        }
        Ok(())
    }
}

/// Restricts a full-domain initial state onto every subdomain and every
/// ordered cross pair.
pub fn split_initial_multi(
    x0: &Vector,
    p0: &Matrix,
    sizes: &[usize],
) -> Result<LocalFilterState> {
    let sets = subdomain_sets(sizes)?;
    let n: usize = sizes.iter().sum();
    if x0.nrows() != n || p0.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "initial state: x0 has length {}, P0 is {}x{}, subdomains cover n = {n}",
            x0.nrows(),
            p0.nrows(),
            p0.ncols()
        )));
    }
    let p0s = symmetrize(p0);
    let mut x_hat = Vec::with_capacity(sets.len());
    let mut p = Vec::with_capacity(sets.len());
    let mut p_cross = BTreeMap::new();
    for (i, si) in sets.iter().enumerate() {
        x_hat.push(restrict_vec(x0, si)?);
        p.push(restrict_block(&p0s, si, si)?);
        for (j, sj) in sets.iter().enumerate() {
            if i != j {
                p_cross.insert((i, j), restrict_block(&p0s, si, sj)?);
            }
        }
    }
    Ok(LocalFilterState { x_hat, p, p_cross, k: 0 })
}

fn pair_block<'a>(state: &'a LocalFilterState, a: usize, c: usize) -> &'a Matrix {
    if a == c {
        &state.p[a]
    } else {
        state.cross(a, c)
    }
}

/// One decomposed step over multiple non-overlapping subdomains.
///
/// Every subdomain couples only to its neighbors through the off-diagonal
/// model blocks; covariance blocks propagate through sums over both
/// neighborhoods, gains solve against the shared innovation covariance
/// `F = Σᵢ Σⱼ Hⱼ·P(j,i)·Hᵢᵀ + R`, and all ordered cross pairs are corrected
/// with the shared rows `wᵢ = Σⱼ Hⱼ·P(j,i)`. The model must be
/// block-tridiagonal; anything else is rejected.
pub fn multi_ddkf_step(
    state: &LocalFilterState,
    prob: &MultiDdkfProblem,
    y: &Vector,
) -> Result<LocalFilterState> {
    if state.k >= prob.steps {
        return Err(Error::InvalidConfig(format!(
            "step {} out of range (problem has {} steps)",
            state.k, prob.steps
        )));
    }
    let sets = subdomain_sets(&prob.sizes)?;
    let ns = sets.len();
    let m_full = prob.m_k.at(state.k);
    let b_full = prob.b_k.at(state.k);
    let h_full = prob.h_k.at(state.k);

    for i in 0..ns {
        for j in 0..ns {
            if i.abs_diff(j) >= 2 {
                let blk = restrict_block(&m_full, &sets[i], &sets[j])?;
                if max_abs(&blk) != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "model couples non-adjacent subdomains {i} and {j}; this \
                         recursion handles block-tridiagonal models only"
                    )));
                }
            }
        }
    }

    let neighbors = |i: usize| -> Vec<usize> {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(ns - 1);
        (lo..=hi).collect()
    };
    let m_block = |i: usize, a: usize| restrict_block(&m_full, &sets[i], &sets[a]);

    // Predicted estimates: local model plus neighbor coupling plus forcing.
    let mut x_pred = Vec::with_capacity(ns);
    for i in 0..ns {
        let mut xi = restrict_vec(&b_full, &sets[i])?;
        for a in neighbors(i) {
            xi += m_block(i, a)? * &state.x_hat[a];
        }
        x_pred.push(xi);
    }

    // Predicted covariance blocks over every ordered pair: sums over both
    // neighborhoods reproduce the full filter's M·P·Mᵀ blockwise.
    let mut p_pred = Vec::with_capacity(ns);
    let mut cross_pred: BTreeMap<(usize, usize), Matrix> = BTreeMap::new();
    for i in 0..ns {
        for h in 0..ns {
            let mut acc = Matrix::zeros(sets[i].len(), sets[h].len());
            for a in neighbors(i) {
                let mia = m_block(i, a)?;
                for c in neighbors(h) {
                    let mhc = m_block(h, c)?;
                    acc += &mia * pair_block(state, a, c) * mhc.transpose();
                }
            }
            if i == h {
                acc += restrict_block(&prob.q, &sets[i], &sets[i])?;
                p_pred.push(symmetrize(&acc));
            } else {
                cross_pred.insert((i, h), acc);
            }
        }
    }
    for i in 0..ns {
        for h in (i + 1)..ns {
            let avg = (cross_pred.get(&(i, h)).unwrap()
                + cross_pred.get(&(h, i)).unwrap().transpose())
                * 0.5;
            cross_pred.insert((h, i), avg.transpose());
            cross_pred.insert((i, h), avg);
        }
    }
    let pred = LocalFilterState { x_hat: x_pred, p: p_pred, p_cross: cross_pred, k: state.k };

    // Shared innovation machinery.
    let h_loc: Vec<Matrix> = sets
        .iter()
        .map(|s| restrict_cols(&h_full, s))
        .collect::<Result<_>>()?;
    let m_obs = h_full.nrows();
    if y.nrows() != m_obs {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, operator has {m_obs} rows",
            y.nrows()
        )));
    }
    let mut w = Vec::with_capacity(ns);
    for i in 0..ns {
        let mut wi = Matrix::zeros(m_obs, sets[i].len());
        for j in 0..ns {
            wi += mul_ab_skip(&h_loc[j], pair_block(&pred, j, i));
        }
        w.push(wi);
    }
    let r = prob.r_k.at(state.k);
    let mut f = r.clone().into_owned();
    for i in 0..ns {
        f += mul_abt_skip(&w[i], &h_loc[i]);
    }
    let f = symmetrize(&f);
    let mut gains = Vec::with_capacity(ns);
    for wi in &w {
        gains.push(spd_solve(&f.transpose(), wi)?.transpose());
    }

    let mut d = y.clone();
    for j in 0..ns {
        d -= &h_loc[j] * &pred.x_hat[j];
    }

    let mut x_hat = Vec::with_capacity(ns);
    let mut p = Vec::with_capacity(ns);
    let mut p_cross = BTreeMap::new();
    for i in 0..ns {
        x_hat.push(&pred.x_hat[i] + &gains[i] * &d);
        p.push(symmetrize(&(&pred.p[i] - &gains[i] * &w[i])));
        for h in 0..ns {
            if i != h {
                p_cross.insert((i, h), pred.cross(i, h) - &gains[i] * &w[h]);
            }
        }
    }
    for i in 0..ns {
        for h in (i + 1)..ns {
            let avg =
                (p_cross.get(&(i, h)).unwrap() + p_cross.get(&(h, i)).unwrap().transpose()) * 0.5;
            p_cross.insert((h, i), avg.transpose());
            p_cross.insert((i, h), avg);
        }
    }
    Ok(LocalFilterState { x_hat, p, p_cross, k: state.k + 1 })
}

/// Runs the multi-subdomain filter over all steps and collects the analysis
/// states.
pub fn multi_ddkf_run(
    prob: &MultiDdkfProblem,
    x0: &Vector,
    p0: &Matrix,
    ys: &[Vector],
) -> Result<Vec<LocalFilterState>> {
    prob.validate()?;
    if ys.len() != prob.steps {
        return Err(Error::DimensionMismatch(format!(
            "need one observation per step: got {}, want {}",
            ys.len(),
            prob.steps
        )));
    }
    let mut cur = split_initial_multi(x0, p0, &prob.sizes)?;
    let mut out = Vec::with_capacity(prob.steps);
    for y in ys {
        cur = multi_ddkf_step(&cur, prob, y)?;
        out.push(cur.clone());
    }
    Ok(out)
}
