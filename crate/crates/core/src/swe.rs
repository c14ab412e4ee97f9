//! One-dimensional shallow-water testbed on the unit interval: a nonlinear
//! reference integration, its per-step linearization (the tridiagonal
//! operators the filters consume), structured model-error covariances, and
//! synthetic observations.
//!
//! The state carries water height `h` and momentum `hv` on a grid of `n`
//! interior points plus one boundary point per side. Each step linearizes
//! around the current state: height evolves through a tridiagonal operator
//! applied to the interior heights, momentum through its own tridiagonal
//! pair driven by the updated heights. Boundary contributions continue the
//! stencils using the boundary values of the linearization state.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomp::SpaceDecomposition;
use crate::error::{Error, Result};
use crate::matrixcore::{Matrix, Vector};

/// Gravitational acceleration used by the testbed.
pub const GRAVITY: f64 = 9.81;

/// Courant safety factor applied to the stable time step.
const TIMESTEP_SAFETY: f64 = 0.8;

/// Uniform grid on an interval of length `length`: `n` interior points plus
/// one boundary point on each side, spacing `length/n`, nodes at
/// `x_i = i·Δx` for `i = 0..n+1`. The grid also carries the gravitational
/// acceleration so every stencil evaluation shares one parameter set.
#[derive(Clone, Debug)]
pub struct SweGrid {
    /// Number of interior points (the filter state dimension).
    pub n: usize,
    /// Total number of grid points, `n + 2`.
    pub nx: usize,
    /// Grid spacing.
    pub dx: f64,
    /// Physical domain length.
    pub length: f64,
    /// Gravitational acceleration.
    pub gravity: f64,
}

impl SweGrid {
    /// Unit-interval grid under standard gravity.
    pub fn new(n: usize) -> Result<Self> {
        SweGrid::with_params(n, 1.0, GRAVITY)
    }

    /// Builds the grid; needs at least three interior points for the
    /// tridiagonal stencils to have an interior, and positive finite
    /// length and gravity.
    pub fn with_params(n: usize, length: f64, gravity: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 3 interior points, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if !(gravity.is_finite() && gravity > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gravity must be positive, got {gravity}"
            )));
        }
        Ok(SweGrid { n, nx: n + 2, dx: length / n as f64, length, gravity })
    }

    /// Coordinate of grid point `i` (0-based over all `nx` points).
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
}

/// Height and momentum over the full grid (`nx` values each).
#[derive(Clone, Debug)]
pub struct SweState {
    /// Water height.
    pub h: Vector,
    /// Momentum (height times velocity).
    pub hv: Vector,
}

impl SweState {
    /// Interior heights (the filter state).
    pub fn interior_h(&self) -> Vector {
        self.h.rows(1, self.h.nrows() - 2).into_owned()
    }

    /// Interior momentum.
    pub fn interior_hv(&self) -> Vector {
        self.hv.rows(1, self.hv.nrows() - 2).into_owned()
    }
}

/// Still water with a sinusoidal height profile spanning one wavelength:
/// `h = 2 + sin(2πx/L)`, `hv = 0`.
pub fn initial_condition(grid: &SweGrid) -> SweState {
    let h = DVector::from_fn(grid.nx, |i, _| {
        2.0 + (2.0 * std::f64::consts::PI * grid.x(i) / grid.length).sin()
    });
    SweState { h, hv: Vector::zeros(grid.nx) }
}

/// Enforces the wall boundary conditions in place: height mirrors the
/// adjacent interior value, momentum mirrors with opposite sign.
pub fn boundary_fill(state: &mut SweState) {
    let last = state.h.nrows() - 1;
    state.h[0] = state.h[1];
    state.h[last] = state.h[last - 1];
    state.hv[0] = -state.hv[1];
    state.hv[last] = -state.hv[last - 1];
}

/// Largest stable time step: `0.8·Δx / max(|v| + sqrt(g·h))`. Fails on
/// non-positive or non-finite heights.
pub fn stable_timestep(grid: &SweGrid, state: &SweState) -> Result<f64> {
    let mut speed: f64 = 0.0;
    for i in 0..state.h.nrows() {
        let h = state.h[i];
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::Instability(format!(
                "height {h} at grid point {i} has no wave speed"
            )));
        }
        let v = state.hv[i] / h;
        if !v.is_finite() {
            return Err(Error::Instability(format!(
                "velocity not finite at grid point {i}"
            )));
        }
        speed = speed.max(v.abs() + (grid.gravity * h).sqrt());
    }
    Ok(TIMESTEP_SAFETY * grid.dx / speed)
}

/// Stencil coefficients of one linearization, evaluated at every grid point,
/// plus the boundary values of the state they were linearized around —
/// everything needed to densify the step's operators.
///
/// The step is a second-order three-point scheme around the frozen velocity
/// `v = hv/h` and squared signal speed `c = v² + g·h/2`: each field is
/// advected (first-order antisymmetric term `α·v`), stabilised by the
/// curvature correction (`2α²·c`), and momentum additionally feels the
/// height gradient through the pressure weight `α·(g·h/2)`. Row `i` of a
/// propagator reads `(advect + diffuse)_{i−1}` on the left neighbour,
/// `1 − 4α²·c_i` on the diagonal, and `(−advect + diffuse)_{i+1}` on the
/// right neighbour, so constant fields at rest are preserved exactly.
#[derive(Clone, Debug)]
pub struct SweCoefficients {
    /// Antisymmetric advection weight `α·v` per grid point.
    pub advect: Vector,
    /// Symmetric curvature weight `2α²·(v² + g·h/2)` per grid point.
    pub diffuse: Vector,
    /// Height-to-momentum pressure weight `α·(g·h/2)` per grid point.
    pub couple: Vector,
    /// Propagator diagonal `1 − 4α²·(v² + g·h/2)` per grid point.
    pub diag: Vector,
    /// Boundary heights `(h_0, h_last)` of the linearization state.
    pub h_bound: (f64, f64),
    /// Boundary momentum `(hv_0, hv_last)` of the linearization state.
    pub hv_bound: (f64, f64),
    /// Time step the coefficients were built for.
    pub dt: f64,
}

/// Evaluates the stencil coefficients around `state` for time step `dt`,
/// with `α = Δt/(2Δx)`, `v = hv/h` and `c = v² + g·h/2`:
///
/// - `advect = α·v`
/// - `diffuse = 2α²·c`
/// - `couple = α·(g·h/2)`
/// - `diag = 1 − 4α²·c`
pub fn coefficients(grid: &SweGrid, state: &SweState, dt: f64) -> SweCoefficients {
    let a = dt / (2.0 * grid.dx);
    let nx = grid.nx;
    let mut advect = Vector::zeros(nx);
    let mut diffuse = Vector::zeros(nx);
    let mut couple = Vector::zeros(nx);
    let mut diag = Vector::zeros(nx);
    for i in 0..nx {
        let h = state.h[i];
        let v = state.hv[i] / h;
        let cele = v * v + 0.5 * grid.gravity * h;
        advect[i] = a * v;
        diffuse[i] = 2.0 * a * a * cele;
        couple[i] = a * 0.5 * grid.gravity * h;
        diag[i] = 1.0 - 4.0 * a * a * cele;
    }
    let last = nx - 1;
    SweCoefficients {
        advect,
        diffuse,
        couple,
        diag,
        h_bound: (state.h[0], state.h[last]),
        hv_bound: (state.hv[0], state.hv[last]),
        dt,
    }
}

/// One step's linear operators on the interior points.
///
/// Heights evolve as `h' = m1·h + b1`; momentum as
/// `hv' = m2·hv − m21·h + b2`, driven by the *current* (pre-update)
/// heights. The `b` vectors close the stencils at the walls using the
/// linearization state's boundary values, with the same sign pattern at
/// both ends.
#[derive(Clone, Debug)]
pub struct SweOperators {
    /// Height propagation (n×n, tridiagonal).
    pub m1: Matrix,
    /// Height-to-momentum coupling (n×n, tridiagonal, zero diagonal).
    pub m21: Matrix,
    /// Momentum propagation (n×n, tridiagonal).
    pub m2: Matrix,
    /// Height forcing from the boundary stencil continuation.
    pub b1: Vector,
    /// Momentum forcing from the boundary stencil continuation.
    pub b2: Vector,
}

/// The height half of one linearized step alone: the tridiagonal propagator
/// and boundary continuation with `h' = m·h + b` on the interior heights.
/// Heights evolve independently of momentum in this linearization, so this
/// pair is the complete transition model for a filter whose state is the
/// height field — without densifying the momentum operators.
pub fn height_propagator(co: &SweCoefficients) -> Result<(Matrix, Vector)> {
    let nx = co.advect.nrows();
    if nx < 5 || [&co.diffuse, &co.couple, &co.diag].iter().any(|v| v.nrows() != nx) {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vectors must share one length >= 5, got {nx}"
        )));
    }
    let n = nx - 2;
    let mut m = Matrix::zeros(n, n);
    for l in 0..n {
        let g = l + 1;
        m[(l, l)] = co.diag[g];
        if l > 0 {
            m[(l, l - 1)] = co.advect[g - 1] + co.diffuse[g - 1];
        }
        if l + 1 < n {
            m[(l, l + 1)] = -co.advect[g + 1] + co.diffuse[g + 1];
        }
    }
    let mut b = Vector::zeros(n);
    let last = nx - 1;
    b[0] = (co.advect[0] + co.diffuse[0]) * co.h_bound.0;
    b[n - 1] = (-co.advect[last] + co.diffuse[last]) * co.h_bound.1;
    Ok((m, b))
}

/// Densifies one step's operators from its coefficients. Both propagators
/// share the advection–curvature stencil
/// `((advect + diffuse)_{i−1}, diag_i, (−advect + diffuse)_{i+1})` in grid
/// indexing; the coupling holds `(−couple_{i−1}, 0, +couple_{i+1})` and is
/// applied with a minus sign, which makes it the discrete pressure
/// gradient. The first and last rows push their out-of-range terms into
/// `b1`/`b2`.
pub fn assemble_operators(co: &SweCoefficients) -> Result<SweOperators> {
    let (m1, b1) = height_propagator(co)?;
    let n = m1.nrows();
    let nx = n + 2;
    let mut m21 = Matrix::zeros(n, n);
    for l in 0..n {
        let g = l + 1;
        if l > 0 {
            m21[(l, l - 1)] = -co.couple[g - 1];
        }
        if l + 1 < n {
            m21[(l, l + 1)] = co.couple[g + 1];
        }
    }
    let m2 = m1.clone();
    let mut b2 = Vector::zeros(n);
    let last = nx - 1;
    let w_left = co.advect[0] + co.diffuse[0];
    let w_right = -co.advect[last] + co.diffuse[last];
    // b2 folds in the boundary terms of both momentum stencils; the height
    // coupling enters with the sign of −m21·h continued across the wall.
    b2[0] = w_left * co.hv_bound.0 + co.couple[0] * co.h_bound.0;
    b2[n - 1] = w_right * co.hv_bound.1 - co.couple[last] * co.h_bound.1;
    Ok(SweOperators { m1, m21, m2, b1, b2 })
}

/// Advances the state by one step: enforce boundaries, pick the stable time
/// step, linearize, and apply the operators. Returns the new state together
/// with the coefficients used, so a reference run can hand the exact same
/// linearization to the filters. Non-finite results fail loudly.
pub fn swe_step(grid: &SweGrid, state: &SweState) -> Result<(SweState, SweCoefficients)> {
    let mut cur = state.clone();
    boundary_fill(&mut cur);
    let dt = stable_timestep(grid, &cur)?;
    let co = coefficients(grid, &cur, dt);
    let ops = assemble_operators(&co)?;

    let h_cur = cur.interior_h();
    let h_new = &ops.m1 * &h_cur + &ops.b1;
    let hv_new = &ops.m2 * cur.interior_hv() - &ops.m21 * &h_cur + &ops.b2;
    if h_new.iter().chain(hv_new.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Instability(
            "integration produced a non-finite value".into(),
        ));
    }

    let mut next = SweState { h: Vector::zeros(grid.nx), hv: Vector::zeros(grid.nx) };
    next.h.rows_mut(1, grid.n).copy_from(&h_new);
    next.hv.rows_mut(1, grid.n).copy_from(&hv_new);
    boundary_fill(&mut next);
    Ok((next, co))
}

/// A reference integration: `steps + 1` states and the `steps`
/// linearizations that carried each transition.
#[derive(Clone, Debug)]
pub struct SweTrajectory {
    /// States at time indices `0..=steps` (boundary-filled).
    pub states: Vec<SweState>,
    /// Coefficients used by step `k` (taking state `k` to `k + 1`).
    pub coeffs: Vec<SweCoefficients>,
}

impl SweTrajectory {
    /// Interior heights at time index `k`.
    pub fn interior_h(&self, k: usize) -> Vector {
        self.states[k].interior_h()
    }
}

/// Integrates the nonlinear testbed from the sinusoidal initial condition.
pub fn reference_run(grid: &SweGrid, steps: usize) -> Result<SweTrajectory> {
    let mut state = initial_condition(grid);
    boundary_fill(&mut state);
    let mut states = Vec::with_capacity(steps + 1);
    let mut coeffs = Vec::with_capacity(steps);
    states.push(state.clone());
    for _ in 0..steps {
        let (next, co) = swe_step(grid, &state)?;
        states.push(next.clone());
        coeffs.push(co);
        state = next;
    }
    Ok(SweTrajectory { states, coeffs })
}

// ---------------------------------------------------------------------------
// Model-error covariance
// ---------------------------------------------------------------------------

/// Correlation decay per grid-point distance: `exp(−Δx²/(2·L²))`, so two
/// points `d` apart correlate with `decay^(d²)`.
pub fn correlation_decay(dx: f64, corr_len: f64) -> f64 {
    (-dx * dx / (2.0 * corr_len * corr_len)).exp()
}

/// Gaussian correlation block: entry `(i,j)` is `rho^((i−j)²)` for
/// `|i−j| < cutoff` and zero beyond.
pub fn gaussian_block(size: usize, rho: f64, cutoff: usize) -> Matrix {
    Matrix::from_fn(size, size, |i, j| {
        let d = i.abs_diff(j);
        if d < cutoff {
            rho.powi((d * d) as i32)
        } else {
            0.0
        }
    })
}

/// Full-domain Gaussian correlation structure compatible with the
/// decomposition: correlated within each subdomain's exclusive part and
/// exactly zero on the overlap and across subdomains — the structure the
/// decomposed recursion requires (cross-domain model-error correlations
/// would couple the local predictions and break equality with the full
/// filter). The distance cutoff is half the state dimension.
pub fn gaussian_correlation(sd: &SpaceDecomposition, rho: f64) -> Matrix {
    let mut c = Matrix::zeros(sd.n, sd.n);
    let cutoff = sd.n / 2;
    for (blk_first, blk_len) in [
        (sd.i1_only.first(), sd.i1_only.len()),
        (sd.i2_only.first(), sd.i2_only.len()),
    ] {
        let g = gaussian_block(blk_len, rho, cutoff);
        let o = blk_first - 1;
        c.view_mut((o, o), (blk_len, blk_len)).copy_from(&g);
    }
    c
}

/// Model-error covariance: the Gaussian correlation structure scaled by the
/// model-error variance.
pub fn model_error_covariance(sd: &SpaceDecomposition, sigma_m2: f64, rho: f64) -> Matrix {
    gaussian_correlation(sd, rho) * sigma_m2
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

/// `m` observation locations spread uniformly across the domain:
/// `j·L/(m+1)` for `j = 1..=m`, which keeps them strictly inside `(0, L)`.
pub fn uniform_observation_positions(m: usize, domain_length: f64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidConfig(
            "need at least one observation position".into(),
        ));
    }
    if !(domain_length.is_finite() && domain_length > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "domain length must be positive, got {domain_length}"
        )));
    }
    Ok((1..=m)
        .map(|j| j as f64 * domain_length / (m + 1) as f64)
        .collect())
}

/// Piecewise-linear observation operator over the interior grid: row `j`
/// interpolates the field at `positions[j]` from the two bracketing interior
/// nodes with weights `(1−θ, θ)`, where `θ` is the fractional offset;
/// positions landing on a node get a single 1. Every row is non-negative
/// and sums to 1. Positions must lie within the interior span
/// `[Δx, n·Δx]`.
pub fn build_observation_operator(grid: &SweGrid, positions: &[f64]) -> Result<Matrix> {
    if positions.is_empty() {
        return Err(Error::InvalidConfig("no observation positions given".into()));
    }
    // Snap tolerance in grid units: positions this close to a node count as
    // exact hits, so intended node observations survive float round-off.
    const SNAP: f64 = 1e-9;
    let n = grid.n;
    let mut h = Matrix::zeros(positions.len(), n);
    for (row, &pos) in positions.iter().enumerate() {
        let t = pos / grid.dx; // interior nodes sit at t = 1..=n
        if !t.is_finite() || t < 1.0 - SNAP || t > n as f64 + SNAP {
            return Err(Error::IndexOutOfRange(format!(
                "observation position {pos} outside the interior span [{}, {}]",
                grid.dx,
                n as f64 * grid.dx
            )));
        }
        let t = t.clamp(1.0, n as f64);
        let lo = (t.floor() as usize).clamp(1, n);
        let theta = t - lo as f64;
        if theta <= SNAP {
            h[(row, lo - 1)] = 1.0;
        } else if theta >= 1.0 - SNAP {
            h[(row, lo)] = 1.0;
        } else {
            h[(row, lo - 1)] = 1.0 - theta;
            h[(row, lo)] = theta;
        }
    }
    Ok(h)
}

/// Synthetic observations with one noise scale per observation row:
/// `y_k = H·truth[k+1] + diag(scales)·ξ`, `ξ ~ N(0, I)`, drawn from a
/// seeded generator so runs are reproducible. `truth` holds the state at
/// time indices `0..=steps`; the observation consumed by step `k` measures
/// the state at `k + 1`.
pub fn synth_observations_scaled(
    truth: &[Vector],
    h_op: &Matrix,
    scales: &[f64],
    seed: u64,
) -> Result<Vec<Vector>> {
    if truth.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two trajectory states to observe a step".into(),
        ));
    }
    if scales.len() != h_op.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} noise scales for {} observation rows",
            scales.len(),
            h_op.nrows()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ys = Vec::with_capacity(truth.len() - 1);
    for state in &truth[1..] {
        if state.nrows() != h_op.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "trajectory state has length {}, operator has {} columns",
                state.nrows(),
                h_op.ncols()
            )));
        }
        let mut y = h_op * state;
        for (row, &sc) in scales.iter().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            y[row] += sc * noise;
        }
        ys.push(y);
    }
    Ok(ys)
}

/// Synthetic observations with a single noise scale for every row.
pub fn synth_observations(
    truth: &[Vector],
    h_op: &Matrix,
    noise_scale: f64,
    seed: u64,
) -> Result<Vec<Vector>> {
    synth_observations_scaled(truth, h_op, &vec![noise_scale; h_op.nrows()], seed)
}
