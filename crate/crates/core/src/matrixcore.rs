//! Dense matrix/vector primitives shared by the filters: contiguous 1-based
//! index sets, restriction/extension operators, a guarded symmetric
//! positive-definite solve, and structure-aware multiplication kernels.
//!
//! Storage is dense throughout (nalgebra, column-major). The public contract
//! speaks 1-based index positions; conversions to 0-based storage happen
//! here and nowhere else.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense real matrix used everywhere in the library.
pub type Matrix = DMatrix<f64>;
/// Dense real column vector used everywhere in the library.
pub type Vector = DVector<f64>;

/// A contiguous, strictly increasing set of 1-based positions.
///
/// Subdomain index sets are always contiguous runs, so the set is stored as
/// its first position plus a length; the empty set is representable (and
/// arises for a zero-width overlap).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    first: usize,
    len: usize,
}

impl IndexSet {
    /// Builds the set `{first, …, last}` (inclusive, 1-based). `last ==
    /// first − 1` yields the empty set anchored at `first`.
    pub fn contiguous(first: usize, last: usize) -> Result<Self> {
        if first < 1 {
            return Err(Error::IndexOutOfRange(format!(
                "index sets are 1-based; got first = {first}"
            )));
        }
        if last + 1 < first {
            return Err(Error::IndexOutOfRange(format!(
                "descending index range {first}..={last}"
            )));
        }
        Ok(Self { first, len: last + 1 - first })
    }

    /// Number of positions in the set.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Whether the set is empty.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// First (smallest) position; meaningful only for non-empty sets, but
    /// stable for empty ones (the anchor given at construction).
    pub fn first(&self) -> usize {
        self.first
    }

    /// Last (largest) position of a non-empty set.
    pub fn last(&self) -> Option<usize> {
        (self.len > 0).then(|| self.first + self.len - 1)
    }

    /// Iterates the 1-based positions in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.first..self.first + self.len
    }

    /// Whether the 1-based position `i` belongs to the set.
    pub fn contains(&self, i: usize) -> bool {
        i >= self.first && i < self.first + self.len
    }

    /// The equivalent 0-based half-open range (storage coordinates).
    pub fn range0(&self) -> std::ops::Range<usize> {
        self.first - 1..self.first - 1 + self.len
    }
}

fn check_span(kind: &str, set: &IndexSet, extent: usize) -> Result<()> {
    if let Some(last) = set.last() {
        if last > extent {
            return Err(Error::IndexOutOfRange(format!(
                "{kind} set {}..={} exceeds extent {extent}",
                set.first(),
                last
            )));
        }
    }
    Ok(())
}

/// Returns the columns of `b` listed in `j`, order preserved.
pub fn restrict_cols(b: &Matrix, j: &IndexSet) -> Result<Matrix> {
    check_span("column", j, b.ncols())?;
    Ok(b.columns_range(j.range0()).into_owned())
}

/// Returns the sub-matrix `b[jr × jc]`.
pub fn restrict_block(b: &Matrix, jr: &IndexSet, jc: &IndexSet) -> Result<Matrix> {
    check_span("row", jr, b.nrows())?;
    check_span("column", jc, b.ncols())?;
    Ok(b
        .view((jr.range0().start, jc.range0().start), (jr.len(), jc.len()))
        .into_owned())
}

/// Returns the entries of `w` at the positions in `j`.
pub fn restrict_vec(w: &Vector, j: &IndexSet) -> Result<Vector> {
    check_span("row", j, w.nrows())?;
    Ok(w.rows_range(j.range0()).into_owned())
}

/// Embeds `w` into a length-`r` vector of zeros, occupying 1-based positions
/// `first .. first + w.len() − 1`.
pub fn extend(w: &Vector, first: usize, r: usize) -> Result<Vector> {
    if first < 1 {
        return Err(Error::IndexOutOfRange(format!(
            "extension start is 1-based; got {first}"
        )));
    }
    if first + w.nrows() - 1 > r {
        return Err(Error::IndexOutOfRange(format!(
            "extension span {first}..={} exceeds target length {r}",
            first + w.nrows() - 1
        )));
    }
    let mut out = Vector::zeros(r);
    out.rows_mut(first - 1, w.nrows()).copy_from(w);
    Ok(out)
}

/// Largest absolute entry (0 for an empty matrix); the norm used by the
/// tolerance gates in this module.
pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Exact symmetric part `(A + Aᵀ)/2`, computed once per entry pair so the
/// result is bitwise symmetric.
pub fn symmetrize(a: &Matrix) -> Matrix {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols(), "symmetrize requires a square matrix");
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = a[(i, i)];
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Relative asymmetry gate used by [`spd_solve`].
const SYMMETRY_RTOL: f64 = 1e-10;
/// Relative residual gate used by [`spd_solve`].
const RESIDUAL_RTOL: f64 = 1e-10;

/// Solves `A·X = B` for symmetric positive-definite `A` via Cholesky
/// factorization (never an explicit inverse).
///
/// `A` must be symmetric within `1e-10·max|A|`; it is symmetrized exactly
/// before factorization to absorb round-off drift. The solution is verified
/// against the residual bound `max|A·X − B| ≤ 1e-10·max|A|·max|X|` and an
/// error is returned if the bound fails.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "spd_solve needs a square matrix; got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "spd_solve: A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let scale = max_abs(a);
    let mut asym = 0.0f64;
    for i in 0..a.nrows() {
        for j in i + 1..a.ncols() {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric(format!(
            "asymmetry {asym:.3e} exceeds {:.3e}",
            SYMMETRY_RTOL * scale
        )));
    }
    let sym = symmetrize(a);
    let chol = Cholesky::new(sym.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite(format!(
            "Cholesky factorization failed for a {0}x{0} matrix",
            a.nrows()
        ))
    })?;
    let x = chol.solve(b);
    let residual = max_abs(&(&sym * &x - b));
    let bound = RESIDUAL_RTOL * max_abs(&sym) * max_abs(&x);
    if residual > bound && residual != 0.0 {
        return Err(Error::SolveResidual(format!(
            "residual {residual:.3e} exceeds bound {bound:.3e}"
        )));
    }
    Ok(x)
}

/// Row-compressed view of a matrix's nonzeros: for each row, the column
/// indices and values in ascending column order. Built with one sequential
/// (column-major) pass over the input.
struct RowNonzeros {
    starts: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl RowNonzeros {
    fn build(b: &Matrix) -> Self {
        let (r, q) = b.shape();
        let b_s = b.as_slice();
        let mut counts = vec![0usize; r];
        for k in 0..q {
            for (j, &v) in b_s[k * r..(k + 1) * r].iter().enumerate() {
                if v != 0.0 {
                    counts[j] += 1;
                }
            }
        }
        let mut starts = Vec::with_capacity(r + 1);
        let mut total = 0usize;
        starts.push(0);
        for c in &counts {
            total += c;
            starts.push(total);
        }
        let mut cursor = starts.clone();
        let mut cols = vec![0u32; total];
        let mut vals = vec![0.0f64; total];
        for k in 0..q {
            for (j, &v) in b_s[k * r..(k + 1) * r].iter().enumerate() {
                if v != 0.0 {
                    cols[cursor[j]] = k as u32;
                    vals[cursor[j]] = v;
                    cursor[j] += 1;
                }
            }
        }
        RowNonzeros { starts, cols, vals }
    }

    fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.starts[j]..self.starts[j + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&k, &v)| (k as usize, v))
    }
}

/// Computes `A·Bᵀ`, skipping zero entries of `B`.
///
/// The kernel walks columns of the output and accumulates scaled columns of
/// `A` (selected through a row-compressed view of `B` built in one
/// sequential pass), so every array access is cache-friendly for
/// column-major storage and the product costs `O(nnz(B)·rows(A))` — the
/// workhorse for products against tridiagonal model blocks, interpolation
/// operators, and the near-empty coupling blocks. Zero terms are skipped
/// outright, so non-finite entries of `A` never reach the output through
/// them. For a fully dense `B` it degrades to a plain triple loop.
pub fn mul_abt_skip(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = a.shape();
    let (r, qb) = b.shape();
    assert_eq!(q, qb, "mul_abt_skip: inner dimensions {q} vs {qb}");
    let a_s = a.as_slice();
    let nnz = RowNonzeros::build(b);
    let mut out = vec![0.0f64; p * r];
    for j in 0..r {
        let out_col = &mut out[j * p..(j + 1) * p];
        for (k, w) in nnz.row(j) {
            let a_col = &a_s[k * p..(k + 1) * p];
            for (o, &av) in out_col.iter_mut().zip(a_col) {
                *o += w * av;
            }
        }
    }
    Matrix::from_vec(p, r, out)
}

/// Computes `A·B`, skipping zero entries of `A`.
///
/// The mirror of [`mul_abt_skip`]: columns of the output accumulate scaled
/// columns of `A` picked through a column-compressed view of `A`'s nonzeros,
/// at cost `O(nnz(A)·cols(B))`; zero entries of `B` skip their column pass
/// entirely.
pub fn mul_ab_skip(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = a.shape();
    let (qb, r) = b.shape();
    assert_eq!(q, qb, "mul_ab_skip: inner dimensions {q} vs {qb}");
    let a_s = a.as_slice();
    let b_s = b.as_slice();
    // Column-compressed nonzeros of `a`, one sequential pass.
    let mut starts = Vec::with_capacity(q + 1);
    let mut rows: Vec<u32> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    starts.push(0usize);
    for k in 0..q {
        for (i, &v) in a_s[k * p..(k + 1) * p].iter().enumerate() {
            if v != 0.0 {
                rows.push(i as u32);
                vals.push(v);
            }
        }
        starts.push(rows.len());
    }
    let mut out = vec![0.0f64; p * r];
    for j in 0..r {
        let out_col = &mut out[j * p..(j + 1) * p];
        let b_col = &b_s[j * q..(j + 1) * q];
        for (k, &w) in b_col.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for t in starts[k]..starts[k + 1] {
                out_col[rows[t] as usize] += vals[t] * w;
            }
        }
    }
    Matrix::from_vec(p, r, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn index_set_basics() {
        let s = IndexSet::contiguous(3, 6).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.first(), 3);
        assert_eq!(s.last(), Some(6));
        assert!(s.contains(3) && s.contains(6) && !s.contains(2) && !s.contains(7));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        assert_eq!(s.range0(), 2..6);

        let empty = IndexSet::contiguous(5, 4).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.last(), None);

        assert!(IndexSet::contiguous(0, 3).is_err());
        assert!(IndexSet::contiguous(5, 2).is_err());
    }

    #[test]
    fn restrict_cols_selects_listed_columns() {
        let b = mat(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let j = IndexSet::contiguous(1, 2).unwrap();
        let r = restrict_cols(&b, &j).unwrap();
        assert_eq!(r, mat(2, 2, &[1.0, 2.0, 4.0, 5.0]));

        let eye = Matrix::identity(3, 3);
        let j23 = IndexSet::contiguous(2, 3).unwrap();
        let r = restrict_cols(&eye, &j23).unwrap();
        assert_eq!(r, mat(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]));

        let too_far = IndexSet::contiguous(3, 4).unwrap();
        assert!(restrict_cols(&b, &too_far).is_err());
    }

    #[test]
    fn restrict_block_selects_sub_matrix() {
        #[rustfmt::skip]
        let b = mat(4, 4, &[
            11.0, 12.0, 13.0, 14.0,
            21.0, 22.0, 23.0, 24.0,
            31.0, 32.0, 33.0, 34.0,
            41.0, 42.0, 43.0, 44.0,
        ]);
        let j12 = IndexSet::contiguous(1, 2).unwrap();
        let j34 = IndexSet::contiguous(3, 4).unwrap();
        assert_eq!(
            restrict_block(&b, &j12, &j12).unwrap(),
            mat(2, 2, &[11.0, 12.0, 21.0, 22.0])
        );
        assert_eq!(
            restrict_block(&b, &j34, &j12).unwrap(),
            mat(2, 2, &[31.0, 32.0, 41.0, 42.0])
        );
    }

    #[test]
    fn restrict_blocks_tile_back_without_overlap() {
        // Four blocks of a 6x6 with distinct entries reassemble bitwise.
        let b = Matrix::from_fn(6, 6, |i, j| (10 * (i + 1) + (j + 1)) as f64);
        let i1 = IndexSet::contiguous(1, 3).unwrap();
        let i2 = IndexSet::contiguous(4, 6).unwrap();
        let b11 = restrict_block(&b, &i1, &i1).unwrap();
        let b12 = restrict_block(&b, &i1, &i2).unwrap();
        let b21 = restrict_block(&b, &i2, &i1).unwrap();
        let b22 = restrict_block(&b, &i2, &i2).unwrap();
        let mut tiled = Matrix::zeros(6, 6);
        tiled.view_mut((0, 0), (3, 3)).copy_from(&b11);
        tiled.view_mut((0, 3), (3, 3)).copy_from(&b12);
        tiled.view_mut((3, 0), (3, 3)).copy_from(&b21);
        tiled.view_mut((3, 3), (3, 3)).copy_from(&b22);
        assert_eq!(tiled, b);
    }

    #[test]
    fn extend_zero_pads_around_span() {
        let w = Vector::from_vec(vec![5.0, 7.0]);
        let e = extend(&w, 2, 4).unwrap();
        assert_eq!(e, Vector::from_vec(vec![0.0, 5.0, 7.0, 0.0]));

        let one = Vector::from_vec(vec![1.0]);
        assert_eq!(extend(&one, 1, 1).unwrap(), one);

        assert!(extend(&w, 4, 4).is_err());
        assert!(extend(&w, 0, 4).is_err());
    }

    #[test]
    fn extend_then_restrict_is_identity() {
        // Deterministic pseudo-random spans.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state
        };
        for _ in 0..100 {
            let r = 1 + (next() % 40) as usize;
            let len = 1 + (next() % r as u64) as usize;
            let first = 1 + (next() % (r - len + 1) as u64) as usize;
            let w = Vector::from_fn(len, |i, _| (next() % 1000) as f64 / 7.0 + i as f64);
            let e = extend(&w, first, r).unwrap();
            let back =
                restrict_vec(&e, &IndexSet::contiguous(first, first + len - 1).unwrap()).unwrap();
            assert_eq!(back, w);
        }
    }

    #[test]
    fn spd_solve_identity_and_scalar() {
        let a = Matrix::identity(2, 2);
        let b = mat(2, 1, &[3.0, 4.0]);
        assert_eq!(spd_solve(&a, &b).unwrap(), b);

        let a = mat(1, 1, &[4.0]);
        let b = mat(1, 1, &[2.0]);
        assert_eq!(spd_solve(&a, &b).unwrap(), mat(1, 1, &[0.5]));
    }

    #[test]
    fn spd_solve_multiply_back_residual() {
        // Random-ish SPD 5x5 built as GᵀG + I; verify A·X ≈ B directly.
        let g = Matrix::from_fn(5, 5, |i, j| ((3 * i + 7 * j + 1) % 11) as f64 / 11.0);
        let a = &g.transpose() * &g + Matrix::identity(5, 5);
        let b = Matrix::from_fn(5, 3, |i, j| (i as f64 - 2.0) * (j as f64 + 1.0));
        let x = spd_solve(&a, &b).unwrap();
        let resid = max_abs(&(&a * &x - &b));
        assert!(resid <= 1e-10 * max_abs(&a) * max_abs(&x).max(1.0), "residual {resid}");
    }

    #[test]
    fn spd_solve_inverse_property_up_to_dim_50() {
        for n in [2usize, 7, 20, 50] {
            let g = Matrix::from_fn(n, n, |i, j| ((5 * i + 3 * j + 2) % 13) as f64 / 13.0);
            let a = &g.transpose() * &g + Matrix::identity(n, n);
            let x = spd_solve(&a, &Matrix::identity(n, n)).unwrap();
            let dev = max_abs(&(&a * &x - Matrix::identity(n, n)));
            assert!(dev <= 1e-9, "A·A⁻¹ deviation {dev} at n={n}");
        }
    }

    #[test]
    fn spd_solve_rejects_bad_inputs() {
        let asym = mat(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            spd_solve(&asym, &Matrix::identity(2, 2)),
            Err(Error::NotSymmetric(_))
        ));

        let neg = mat(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            spd_solve(&neg, &Matrix::identity(2, 2)),
            Err(Error::NotPositiveDefinite(_))
        ));

        let rect = mat(2, 3, &[1.0; 6]);
        assert!(spd_solve(&rect, &Matrix::identity(2, 2)).is_err());
    }

    #[test]
    fn symmetrize_produces_bitwise_symmetry() {
        let a = mat(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = symmetrize(&a);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s[(i, j)], s[(j, i)]);
            }
        }
        assert_eq!(s[(0, 1)], 3.0); // (2 + 4)/2
        assert_eq!(symmetrize(&s), s);
    }

    #[test]
    fn skip_kernels_match_plain_products() {
        let a = Matrix::from_fn(5, 4, |i, j| (i * 4 + j) as f64 * 0.37 - 2.0);
        let mut b = Matrix::from_fn(6, 4, |i, j| ((i + 2 * j) % 5) as f64 - 1.0);
        // Sprinkle structural zeros.
        b[(0, 1)] = 0.0;
        b[(3, 2)] = 0.0;
        b[(5, 0)] = 0.0;
        let fast = mul_abt_skip(&a, &b);
        let slow = &a * b.transpose();
        assert!(max_abs(&(fast - slow)) <= 1e-13);

        let c = Matrix::from_fn(4, 3, |i, j| if (i + j) % 3 == 0 { 0.0 } else { 1.5 * i as f64 - j as f64 });
        let d = Matrix::from_fn(3, 5, |i, j| (2 * i + j) as f64 * 0.11);
        let fast = mul_ab_skip(&c, &d);
        let slow = &c * &d;
        assert!(max_abs(&(fast - slow)) <= 1e-13);
    }
}
