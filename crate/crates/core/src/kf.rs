//! Classical linear-Gaussian Kalman filter on the full (undecomposed) state:
//! both a usable filter and the reference that the decomposed filter must
//! reproduce to round-off.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrixcore::{mul_ab_skip, mul_abt_skip, spd_solve, symmetrize, Matrix, Vector};

/// A per-step sequence of operators.
///
/// Large systems assemble their transition matrices on demand (`Lazy`), so a
/// long run never holds more than one densified operator at a time; small or
/// time-invariant systems use `PerStep`/`Constant`.
#[derive(Clone)]
pub enum Seq<T: Clone> {
    /// The same value at every step.
    Constant(T),
    /// One stored value per step.
    PerStep(Vec<T>),
    /// Values produced on demand; `len` is the number of steps covered.
    Lazy {
        len: usize,
        make: Arc<dyn Fn(usize) -> T + Send + Sync>,
    },
}

impl<T: Clone> Seq<T> {
    /// The value used by step `k`.
    pub fn at(&self, k: usize) -> Cow<'_, T> {
        match self {
            Seq::Constant(v) => Cow::Borrowed(v),
            Seq::PerStep(v) => Cow::Borrowed(&v[k]),
            Seq::Lazy { make, .. } => Cow::Owned(make(k)),
        }
    }

    /// Number of steps the sequence covers; `None` means "any".
    pub fn known_len(&self) -> Option<usize> {
        match self {
            Seq::Constant(_) => None,
            Seq::PerStep(v) => Some(v.len()),
            Seq::Lazy { len, .. } => Some(*len),
        }
    }

    fn check_len(&self, steps: usize, what: &str) -> Result<()> {
        match self.known_len() {
            Some(l) if l != steps => Err(Error::DimensionMismatch(format!(
                "{what}: sequence covers {l} steps, system has {steps}"
            ))),
            _ => Ok(()),
        }
    }
}

impl<T: Clone> fmt::Debug for Seq<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seq::Constant(_) => write!(f, "Seq::Constant"),
            Seq::PerStep(v) => write!(f, "Seq::PerStep(len={})", v.len()),
            Seq::Lazy { len, .. } => write!(f, "Seq::Lazy(len={len})"),
        }
    }
}

/// A discrete linear-Gaussian state-space model over a fixed number of steps.
///
/// Step `k` (for `k = 0..steps`) propagates the state at index `k` to index
/// `k+1` with `M_k`, `b_k`, `Q_k` and assimilates the observation `ys[k]`
/// (taken at the new time) through `H_k`, `R_k`.
#[derive(Clone, Debug)]
pub struct LinearGaussianSystem {
    /// State dimension.
    pub n: usize,
    /// Observation dimension.
    pub m: usize,
    /// Number of filter steps (state indices run 0..=steps).
    pub steps: usize,
    /// Transition matrices (n×n).
    pub m_k: Seq<Matrix>,
    /// Deterministic forcing vectors (n).
    pub b_k: Seq<Vector>,
    /// Observation operators (m×n).
    pub h_k: Seq<Matrix>,
    /// Model-error covariances (n×n, symmetric PSD).
    pub q_k: Seq<Matrix>,
    /// Observation-error covariances (m×m, symmetric PD).
    pub r_k: Seq<Matrix>,
    /// When set, covariance propagation uses plain dense products instead of
    /// the zero-skipping kernels. The results agree to round-off; the dense
    /// path exists so timing studies measure general dense-arithmetic cost
    /// rather than the structure of one particular model.
    pub dense_algebra: bool,
}

impl LinearGaussianSystem {
    /// Checks sequence lengths and step-0 operator shapes.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.steps == 0 {
            return Err(Error::InvalidConfig(
                "system needs n ≥ 1, m ≥ 1, steps ≥ 1".into(),
            ));
        }
        self.m_k.check_len(self.steps, "M_k")?;
        self.b_k.check_len(self.steps, "b_k")?;
        self.h_k.check_len(self.steps, "H_k")?;
        self.q_k.check_len(self.steps, "Q_k")?;
        self.r_k.check_len(self.steps, "R_k")?;
        let shapes = [
            ("M_0", self.m_k.at(0).shape(), (self.n, self.n)),
            ("H_0", self.h_k.at(0).shape(), (self.m, self.n)),
            ("Q_0", self.q_k.at(0).shape(), (self.n, self.n)),
            ("R_0", self.r_k.at(0).shape(), (self.m, self.m)),
        ];
        for (what, got, want) in shapes {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{what}: got {}x{}, want {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        if self.b_k.at(0).nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "b_0: got length {}, want {}",
                self.b_k.at(0).nrows(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Filter state on the full domain: analysis estimate and covariance at time
/// index `k`.
#[derive(Clone, Debug)]
pub struct GlobalFilterState {
    /// Analysis estimate x̂_k.
    pub x_hat: Vector,
    /// Analysis error covariance P_k (kept symmetric).
    pub p: Matrix,
    /// Time index.
    pub k: usize,
}

/// Predictor phase: `x_pred = M_k·x̂_k + b_k`, `P_pred = M_k·P_k·M_kᵀ + Q_k`
/// (symmetrized). Prediction is deterministic — model error enters only
/// through `Q_k`.
pub fn kf_predict(
    state: &GlobalFilterState,
    sys: &LinearGaussianSystem,
) -> Result<(Vector, Matrix)> {
    if state.k >= sys.steps {
        return Err(Error::InvalidConfig(format!(
            "predict at step {} but system has {} steps",
            state.k, sys.steps
        )));
    }
    let m = sys.m_k.at(state.k);
    let b = sys.b_k.at(state.k);
    let q = sys.q_k.at(state.k);
    if state.x_hat.nrows() != sys.n || state.p.shape() != (sys.n, sys.n) {
        return Err(Error::DimensionMismatch(format!(
            "state has x of length {} and P of shape {}x{}, system n = {}",
            state.x_hat.nrows(),
            state.p.nrows(),
            state.p.ncols(),
            sys.n
        )));
    }
    let x_pred = &*m * &state.x_hat + &*b;
    let mpmt = if sys.dense_algebra {
        let mp = &*m * &state.p;
        &mp * &m.transpose()
    } else {
        let mp = mul_ab_skip(&m, &state.p);
        mul_abt_skip(&mp, &m)
    };
    let p_pred = symmetrize(&(mpmt + &*q));
    Ok((x_pred, p_pred))
}

/// Gain phase: `S = H·P_pred·Hᵀ + R` (symmetrized, must be positive
/// definite); `K = P_pred·Hᵀ·S⁻¹`, realized by a symmetric solve on `Sᵀ`
/// applied to `(P_pred·Hᵀ)ᵀ` — never an explicit inverse.
pub fn kf_gain(p_pred: &Matrix, h: &Matrix, r: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = h.shape();
    if p_pred.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "gain: H is {m}x{n}, P is {}x{}, R is {}x{}",
            p_pred.nrows(),
            p_pred.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let pht = mul_abt_skip(p_pred, h);
    let s = symmetrize(&(h * &pht + r));
    let k_t = spd_solve(&s.transpose(), &pht.transpose())?;
    Ok((k_t.transpose(), s))
}

/// Corrector phase: `P ← (I − K·H)·P_pred` (symmetrized) and
/// `x̂ ← x_pred + K·(y − H·x_pred)`; the innovation uses the PREDICTED state.
/// `k_next` is the time index of the produced analysis state.
pub fn kf_correct(
    x_pred: &Vector,
    p_pred: &Matrix,
    gain: &Matrix,
    h: &Matrix,
    y: &Vector,
    k_next: usize,
) -> Result<GlobalFilterState> {
    let (m, n) = h.shape();
    if x_pred.nrows() != n || p_pred.shape() != (n, n) || gain.shape() != (n, m) || y.nrows() != m
    {
        return Err(Error::DimensionMismatch(format!(
            "correct: H is {m}x{n}, x is {}, P is {}x{}, K is {}x{}, y is {}",
            x_pred.nrows(),
            p_pred.nrows(),
            p_pred.ncols(),
            gain.nrows(),
            gain.ncols(),
            y.nrows()
        )));
    }
    // (I − K·H)·P evaluated as P − K·(H·P): a rank-m update, never forming
    // the n×n factor.
    let hp = mul_ab_skip(h, p_pred);
    let p_new = symmetrize(&(p_pred - gain * &hp));
    let innovation = y - h * x_pred;
    let x_hat = x_pred + gain * &innovation;
    Ok(GlobalFilterState { x_hat, p: p_new, k: k_next })
}

/// One full predict/gain/correct step from the given analysis state,
/// consuming the observation `y`.
pub fn kf_step(
    state: &GlobalFilterState,
    sys: &LinearGaussianSystem,
    y: &Vector,
) -> Result<GlobalFilterState> {
    let (x_pred, p_pred) = kf_predict(state, sys)?;
    let h = sys.h_k.at(state.k);
    let r = sys.r_k.at(state.k);
    let (gain, _s) = kf_gain(&p_pred, &h, &r)?;
    kf_correct(&x_pred, &p_pred, &gain, &h, y, state.k + 1)
}

/// Runs the whole filter, invoking `visit` on every analysis state in order
/// (indices 1..=steps). Streaming keeps memory flat for long runs; use
/// [`kf_run`] to collect the states instead.
pub fn kf_run_visit(
    sys: &LinearGaussianSystem,
    x0: &Vector,
    p0: &Matrix,
    ys: &[Vector],
    mut visit: impl FnMut(&GlobalFilterState),
) -> Result<()> {
    sys.validate()?;
    if ys.len() != sys.steps {
        return Err(Error::DimensionMismatch(format!(
            "need one observation per step: got {}, want {}",
            ys.len(),
            sys.steps
        )));
    }
    if x0.nrows() != sys.n || p0.shape() != (sys.n, sys.n) {
        return Err(Error::DimensionMismatch(format!(
            "initial state: x0 has length {}, P0 is {}x{}, system n = {}",
            x0.nrows(),
            p0.nrows(),
            p0.ncols(),
            sys.n
        )));
    }
    let mut state = GlobalFilterState { x_hat: x0.clone(), p: symmetrize(p0), k: 0 };
    for y in ys {
        state = kf_step(&state, sys, y)?;
        visit(&state);
    }
    Ok(())
}

/// Runs the whole filter and returns the analysis states x̂_1..x̂_steps.
pub fn kf_run(
    sys: &LinearGaussianSystem,
    x0: &Vector,
    p0: &Matrix,
    ys: &[Vector],
) -> Result<Vec<GlobalFilterState>> {
    let mut out = Vec::with_capacity(sys.steps);
    kf_run_visit(sys, x0, p0, ys, |s| out.push(s.clone()))?;
    Ok(out)
}
