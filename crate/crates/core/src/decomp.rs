//! Decomposition bookkeeping: overlapping index sets over the state vector,
//! time windows over the step sequence, and the partitioning of model,
//! observation, and model-error operators into subdomain blocks.
//!
//! Conventions: state indices are 1-based in the index sets (matching the
//! algebraic notation) and 0-based everywhere a Rust container is indexed;
//! `IndexSet::range0` converts. Filter steps are 0-based.

use crate::error::{Error, Result};
use crate::matrixcore::{restrict_block, IndexSet, Matrix};

/// Two overlapping subdomains of `{1..n}`.
///
/// `i1 = {1..n1}` and `i2 = {n1-s+1..n}` share the `s`-point overlap
/// `i12 = {n1-s+1..n1}`; `i1_only` and `i2_only` are the non-shared parts.
/// The second subdomain has `n2 = n - n1 + s` points.
#[derive(Clone, Debug)]
pub struct SpaceDecomposition {
    /// Full state dimension.
    pub n: usize,
    /// Size of the first subdomain.
    pub n1: usize,
    /// Size of the second subdomain.
    pub n2: usize,
    /// Overlap width (even, `0 <= s < n1`).
    pub s: usize,
    /// First subdomain `{1..n1}`.
    pub i1: IndexSet,
    /// Second subdomain `{n1-s+1..n}`.
    pub i2: IndexSet,
    /// Overlap `{n1-s+1..n1}` (empty when `s = 0`).
    pub i12: IndexSet,
    /// First subdomain minus the overlap, `{1..n1-s}`.
    pub i1_only: IndexSet,
    /// Second subdomain minus the overlap, `{n1+1..n}`.
    pub i2_only: IndexSet,
}

/// Builds the two-subdomain geometry.
///
/// Requires `2 <= n`, `1 <= n1 < n`, `s` even, and `s < n1` (an overlap
/// swallowing a whole subdomain degenerates the decomposition and is
/// rejected). The same bound `s < n2` follows automatically from `n1 < n`.
pub fn build_space_decomposition(n: usize, n1: usize, s: usize) -> Result<SpaceDecomposition> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
    }
    if n1 == 0 || n1 >= n {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= n1 < n, got n1 = {n1}, n = {n}"
        )));
    }
    if s % 2 != 0 {
        return Err(Error::InvalidConfig(format!("overlap must be even, got {s}")));
    }
    if s >= n1 {
        return Err(Error::InvalidConfig(format!(
            "overlap {s} must stay below the subdomain size {n1}"
        )));
    }
    Ok(SpaceDecomposition {
        n,
        n1,
        n2: n - n1 + s,
        s,
        i1: IndexSet::contiguous(1, n1)?,
        i2: IndexSet::contiguous(n1 - s + 1, n)?,
        i12: IndexSet::contiguous(n1 - s + 1, n1)?,
        i1_only: IndexSet::contiguous(1, n1 - s)?,
        i2_only: IndexSet::contiguous(n1 + 1, n)?,
    })
}

/// Overlapping windows over the step sequence `1..=steps`.
///
/// Window `w` (0-based) executes the `sizes[w]` steps starting after global
/// step `offsets[w]`; consecutive windows re-execute `overlaps[w]` shared
/// steps. Offsets satisfy `offsets[w+1] = offsets[w] + sizes[w] -
/// overlaps[w]` and the last window closes the sequence exactly.
#[derive(Clone, Debug)]
pub struct TimeDecomposition {
    /// Total number of filter steps.
    pub steps: usize,
    /// Number of windows.
    pub l: usize,
    /// Steps executed per window.
    pub sizes: Vec<usize>,
    /// Shared steps between window `w` and `w+1` (length `l - 1`).
    pub overlaps: Vec<usize>,
    /// Global step count already covered when each window starts.
    pub offsets: Vec<usize>,
}

impl TimeDecomposition {
    /// 0-based global step indices executed by window `w`.
    pub fn window_steps(&self, w: usize) -> std::ops::Range<usize> {
        self.offsets[w]..self.offsets[w] + self.sizes[w]
    }

    /// A single window covering every step.
    pub fn single_window(steps: usize) -> Result<Self> {
        build_time_decomposition(steps, &[steps], &[])
    }
}

/// Builds the window layout and checks it tiles the step sequence.
///
/// Each overlap may not exceed either adjacent window (`overlaps[w] <=
/// min(sizes[w], sizes[w+1])`), and the offsets plus the final window must
/// land exactly on `steps`. An overlap equal to the earlier window's size is
/// legal: the next window then restarts from the same point as its
/// predecessor.
pub fn build_time_decomposition(
    steps: usize,
    sizes: &[usize],
    overlaps: &[usize],
) -> Result<TimeDecomposition> {
    if steps == 0 || sizes.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one step and one window".into(),
        ));
    }
    if overlaps.len() + 1 != sizes.len() {
        return Err(Error::InvalidConfig(format!(
            "{} windows need {} overlaps, got {}",
            sizes.len(),
            sizes.len() - 1,
            overlaps.len()
        )));
    }
    if let Some(w) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidConfig(format!("window {w} has zero steps")));
    }
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut off = 0usize;
    for w in 0..sizes.len() {
        offsets.push(off);
        if w + 1 < sizes.len() {
            let ov = overlaps[w];
            if ov > sizes[w] || ov > sizes[w + 1] {
                return Err(Error::InvalidConfig(format!(
                    "overlap {ov} between windows {w} and {} exceeds a window size",
                    w + 1
                )));
            }
            off += sizes[w] - ov;
        }
    }
    let end = offsets[sizes.len() - 1] + sizes[sizes.len() - 1];
    if end != steps {
        return Err(Error::InvalidConfig(format!(
            "windows cover {end} steps, sequence has {steps}"
        )));
    }
    Ok(TimeDecomposition {
        steps,
        l: sizes.len(),
        sizes: sizes.to_vec(),
        overlaps: overlaps.to_vec(),
        offsets,
    })
}

/// The model matrix partitioned onto two overlapping subdomains.
///
/// `m1` (n1×n1) and `m2` (n2×n2) evolve each subdomain; `m12` (n1×n2) and
/// `m21` (n2×n1) carry the dependence on the *non-shared* part of the other
/// subdomain (their columns over the overlap are zero, since those state
/// values already live in the local vector). For every full-domain `x` with
/// consistent overlap values,
/// `m1·x|i1 + m12·x|i2 = (M·x)|i1` and `m21·x|i1 + m2·x|i2 = (M·x)|i2`.
#[derive(Clone, Debug)]
pub struct BlockModel {
    /// Local dynamics on the first subdomain.
    pub m1: Matrix,
    /// Dependence of the first subdomain on the second (overlap columns zero).
    pub m12: Matrix,
    /// Dependence of the second subdomain on the first (overlap columns zero).
    pub m21: Matrix,
    /// Local dynamics on the second subdomain.
    pub m2: Matrix,
}

fn place(dst: &mut Matrix, r0: usize, c0: usize, src: &Matrix) {
    dst.view_mut((r0, c0), src.shape()).copy_from(src);
}

/// Partitions an n×n model matrix per the subdomain geometry.
///
/// Internally the matrix is tiled over (i1_only, i12, i2_only); the four
/// outputs reassemble those tiles so that overlap columns appear in the
/// local blocks and never in the coupling blocks.
pub fn partition_model_matrix(m: &Matrix, sd: &SpaceDecomposition) -> Result<BlockModel> {
    if m.shape() != (sd.n, sd.n) {
        return Err(Error::DimensionMismatch(format!(
            "model matrix is {}x{}, decomposition has n = {}",
            m.nrows(),
            m.ncols(),
            sd.n
        )));
    }
    let (a, b, c) = (&sd.i1_only, &sd.i12, &sd.i2_only);
    let (na, nb, nc) = (a.len(), b.len(), c.len());

    let mut m1 = Matrix::zeros(sd.n1, sd.n1);
    place(&mut m1, 0, 0, &restrict_block(m, a, a)?);
    place(&mut m1, 0, na, &restrict_block(m, a, b)?);
    place(&mut m1, na, 0, &restrict_block(m, b, a)?);
    place(&mut m1, na, na, &restrict_block(m, b, b)?);

    let mut m12 = Matrix::zeros(sd.n1, sd.n2);
    place(&mut m12, 0, nb, &restrict_block(m, a, c)?);
    place(&mut m12, na, nb, &restrict_block(m, b, c)?);

    let mut m21 = Matrix::zeros(sd.n2, sd.n1);
    place(&mut m21, 0, 0, &restrict_block(m, b, a)?);
    place(&mut m21, nb, 0, &restrict_block(m, c, a)?);

    let mut m2 = Matrix::zeros(sd.n2, sd.n2);
    place(&mut m2, 0, 0, &restrict_block(m, b, b)?);
    place(&mut m2, 0, nb, &restrict_block(m, b, c)?);
    place(&mut m2, nb, 0, &restrict_block(m, c, b)?);
    place(&mut m2, nb, nb, &restrict_block(m, c, c)?);
    let _ = nc;

    Ok(BlockModel { m1, m12, m21, m2 })
}

/// The observation operator split across the two subdomains.
///
/// Overlap columns are shared: `h1` keeps them scaled by `alpha`, `h2` by
/// `1 - alpha`, so `h1·x|i1 + h2·x|i2 = H·x` for consistent `x`.
#[derive(Clone, Debug)]
pub struct ObservationSplit {
    /// m×n1 operator applied to the first local state.
    pub h1: Matrix,
    /// m×n2 operator applied to the second local state.
    pub h2: Matrix,
    /// Share of the overlap columns kept by `h1`.
    pub alpha: f64,
}

/// Splits an observation operator; `alpha` weights the overlap columns
/// (`0.5` shares them evenly).
pub fn partition_observation_matrix(
    h: &Matrix,
    sd: &SpaceDecomposition,
    alpha: f64,
) -> Result<ObservationSplit> {
    if h.ncols() != sd.n {
        return Err(Error::DimensionMismatch(format!(
            "observation operator has {} columns, decomposition has n = {}",
            h.ncols(),
            sd.n
        )));
    }
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!(
            "overlap weight {alpha} outside [0, 1]"
        )));
    }
    let m = h.nrows();
    let rows = IndexSet::contiguous(1, m)?;
    let h_a = restrict_block(h, &rows, &sd.i1_only)?;
    let h_b = restrict_block(h, &rows, &sd.i12)?;
    let h_c = restrict_block(h, &rows, &sd.i2_only)?;

    let na = sd.i1_only.len();
    let nb = sd.i12.len();
    let mut h1 = Matrix::zeros(m, sd.n1);
    place(&mut h1, 0, 0, &h_a);
    place(&mut h1, 0, na, &(&h_b * alpha));
    let mut h2 = Matrix::zeros(m, sd.n2);
    place(&mut h2, 0, 0, &(&h_b * (1.0 - alpha)));
    place(&mut h2, 0, nb, &h_c);
    Ok(ObservationSplit { h1, h2, alpha })
}

/// Restricts a model-error covariance to the two subdomains.
///
/// Exactness of the decomposed filter requires the covariance to vanish on
/// the cross block `i1 × i2` — including the overlap diagonal corner, which
/// would otherwise be double-counted by the local recursions. Any nonzero
/// entry there is rejected rather than silently dropped.
pub fn partition_covariance(q: &Matrix, sd: &SpaceDecomposition) -> Result<(Matrix, Matrix)> {
    if q.shape() != (sd.n, sd.n) {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, decomposition has n = {}",
            q.nrows(),
            q.ncols(),
            sd.n
        )));
    }
    let cross = restrict_block(q, &sd.i1, &sd.i2)?;
    let worst = crate::matrixcore::max_abs(&cross);
    if worst != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "model-error covariance couples the subdomains (max |entry| {worst:e} \
             on the cross block); the decomposed recursion would not match the \
             full filter"
        )));
    }
    Ok((
        restrict_block(q, &sd.i1, &sd.i1)?,
        restrict_block(q, &sd.i2, &sd.i2)?,
    ))
}
