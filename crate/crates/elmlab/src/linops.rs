//! Dense real linear algebra: matrix products, thin SVD, Moore-Penrose
//! pseudoinverse, and minimum-norm least squares.
//!
//! Matrices are row-major `f64` throughout. Factorizations are delegated to
//! [`faer`]; this module owns the types, the validation, and the truncation
//! policy that defines the pseudoinverse.

use faer::{Accum, MatRef, Par};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense real matrix, row-major storage.
///
/// Invariants: `data.len() == rows * cols`, every entry finite. Constructors
/// enforce both; deserialization goes through the same validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDenseMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Unvalidated mirror of [`DenseMatrix`] used as the deserialization gate.
#[derive(Deserialize)]
struct RawDenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawDenseMatrix> for DenseMatrix {
    type Error = Error;

    fn try_from(raw: RawDenseMatrix) -> Result<Self> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParam {
                op: "DenseMatrix::new",
                name: "shape",
                reason: format!("{rows}x{cols}: both dimensions must be positive"),
            });
        }
        if data.len() != rows * cols {
            return Err(Error::BadLength {
                op: "DenseMatrix::new",
                rows,
                cols,
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: "DenseMatrix::new",
                index,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols]).expect("zero matrix is always valid")
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` at every position.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at (row, col). Panics on out-of-range indices.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of range");
        self.data[row * self.cols + col]
    }

    /// Row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable row-major view, for in-place assembly inside the crate.
    /// Callers keep the finiteness invariant themselves.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One row as a slice.
    pub fn row(&self, row: usize) -> &[f64] {
        assert!(row < self.rows, "row out of range");
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// One column, copied out.
    pub fn col_vec(&self, col: usize) -> Vec<f64> {
        assert!(col < self.cols, "column out of range");
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Borrowed faer view; zero-copy because both sides are row-major slices.
    pub(crate) fn as_faer(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    /// Copies a faer matrix into row-major storage.
    pub(crate) fn from_faer(m: MatRef<'_, f64>) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { rows, cols, data }
    }
}

/// Thin singular value decomposition `A = U . diag(s) . Vt`.
///
/// `u` is m x r, `v_t` is r x n, with r = min(m, n). Singular values are
/// non-negative and sorted non-increasing; `u` has orthonormal columns and
/// `v_t` orthonormal rows (within 1e-10, see tests).
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: DenseMatrix,
}

impl SvdResult {
    /// Number of singular values above `cutoff_ratio * sigma_max`.
    pub fn rank(&self, cutoff_ratio: f64) -> usize {
        let sigma_max = self.singular_values.first().copied().unwrap_or(0.0);
        let cutoff = cutoff_ratio * sigma_max;
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }
}

/// Truncation policy for the pseudoinverse: singular values at or below
/// `rcond * sigma_max` are treated as zero.
///
/// `rcond` of `None` selects the default cutoff `max(rows, cols) * f64::EPSILON`,
/// resolved against the shape of the matrix being inverted. An explicit value
/// must lie in (0, 1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PinvOptions {
    rcond: Option<f64>,
}

impl PinvOptions {
    /// Default policy: cutoff ratio `max(rows, cols) * f64::EPSILON`.
    pub fn auto() -> Self {
        Self { rcond: None }
    }

    /// Explicit cutoff ratio in (0, 1).
    pub fn new(rcond: f64) -> Result<Self> {
        if !(rcond > 0.0 && rcond < 1.0) {
            return Err(Error::InvalidParam {
                op: "PinvOptions::new",
                name: "rcond",
                reason: format!("{rcond} is outside (0, 1)"),
            });
        }
        Ok(Self { rcond: Some(rcond) })
    }

    pub fn rcond(&self) -> Option<f64> {
        self.rcond
    }

    /// Cutoff ratio resolved for a matrix of the given shape.
    pub fn cutoff_ratio(&self, rows: usize, cols: usize) -> f64 {
        self.rcond
            .unwrap_or_else(|| rows.max(cols) as f64 * f64::EPSILON)
    }
}

/// Matrix product `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    let mut out = DenseMatrix::zeros(a.rows(), b.cols());
    let dst = faer::MatMut::from_row_major_slice_mut(&mut out.data, out.rows, out.cols);
    faer::linalg::matmul::matmul(dst, Accum::Replace, a.as_faer(), b.as_faer(), 1.0, Par::Seq);
    Ok(out)
}

/// Thin SVD of `a`.
pub fn svd_thin(a: &DenseMatrix) -> Result<SvdResult> {
    let svd = a
        .as_faer()
        .thin_svd()
        .map_err(|e| Error::DecompositionFailed {
            op: "svd_thin",
            detail: format!("{e:?}"),
        })?;
    let r = a.rows().min(a.cols());
    let singular_values: Vec<f64> = (0..r).map(|i| svd.S()[i]).collect();
    debug_assert!(
        singular_values.windows(2).all(|w| w[0] >= w[1]),
        "singular values not sorted"
    );
    Ok(SvdResult {
        u: DenseMatrix::from_faer(svd.U()),
        singular_values,
        v_t: DenseMatrix::from_faer(svd.V().transpose()),
    })
}

/// Moore-Penrose pseudoinverse via truncated SVD.
///
/// Returns `V . diag(1/s_i if s_i > cutoff else 0) . Ut` with the cutoff
/// taken from `opts` relative to the largest singular value.
pub fn pinv(a: &DenseMatrix, opts: PinvOptions) -> Result<DenseMatrix> {
    let svd = svd_thin(a)?;
    let cutoff =
        opts.cutoff_ratio(a.rows(), a.cols()) * svd.singular_values.first().copied().unwrap_or(0.0);
    let r = svd.singular_values.len();
    // V . diag(f): scale the columns of V (rows of v_t), then multiply by Ut.
    let mut scaled_v = svd.v_t.transpose();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let f = if s > cutoff { 1.0 / s } else { 0.0 };
        for row in 0..scaled_v.rows() {
            scaled_v.data[row * r + i] *= f;
        }
    }
    matmul(&scaled_v, &svd.u.transpose())
}

/// Minimum-norm least-squares solution of `h * beta = t`, plus the numerical
/// rank of `h` under the same cutoff.
pub fn lstsq_detailed(
    h: &DenseMatrix,
    t: &DenseMatrix,
    opts: PinvOptions,
) -> Result<(DenseMatrix, usize)> {
    if h.rows() != t.rows() {
        return Err(Error::DimensionMismatch {
            op: "solve_least_squares",
            left_rows: h.rows(),
            left_cols: h.cols(),
            right_rows: t.rows(),
            right_cols: t.cols(),
        });
    }
    let svd = svd_thin(h)?;
    let cutoff =
        opts.cutoff_ratio(h.rows(), h.cols()) * svd.singular_values.first().copied().unwrap_or(0.0);
    // beta = V . diag(f) . Ut . t, built right-to-left so the big GEMM is r x k.
    let mut uty = matmul(&svd.u.transpose(), t)?;
    let k = uty.cols();
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let f = if s > cutoff {
            rank += 1;
            1.0 / s
        } else {
            0.0
        };
        for j in 0..k {
            uty.data[i * k + j] *= f;
        }
    }
    let beta = matmul(&svd.v_t.transpose(), &uty)?;
    Ok((beta, rank))
}

/// Minimum-norm least-squares solution of `h * beta = t`.
pub fn solve_least_squares(
    h: &DenseMatrix,
    t: &DenseMatrix,
    opts: PinvOptions,
) -> Result<DenseMatrix> {
    lstsq_detailed(h, t, opts).map(|(beta, _)| beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    /// Random matrix with exact rank `rank`, built as a sum of outer products.
    fn random_rank_deficient(
        rng: &mut impl Rng,
        rows: usize,
        cols: usize,
        rank: usize,
    ) -> DenseMatrix {
        let mut data = vec![0.0; rows * cols];
        for _ in 0..rank {
            let u: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for i in 0..rows {
                for j in 0..cols {
                    data[i * cols + j] += u[i] * v[j];
                }
            }
        }
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constructor_rejects_bad_length() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0]),
            Err(Error::BadLength { .. })
        ));
    }

    #[test]
    fn constructor_rejects_non_finite() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn serde_round_trip_is_lossless_and_validated() {
        let m = DenseMatrix::new(2, 3, vec![0.1, -2.0, 3.5e-17, 4.0, 5.0, -6.25]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: DenseMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        // Tampered payload must fail validation, not produce a broken matrix.
        let bad = json.replace("\"rows\":2", "\"rows\":3");
        assert!(serde_json::from_str::<DenseMatrix>(&bad).is_err());
    }

    #[test]
    fn matmul_identity_returns_operand() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 3);
        let prod = matmul(&DenseMatrix::identity(3), &a).unwrap();
        assert_eq!(prod, a);
    }

    #[test]
    fn matmul_zero_annihilates() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 4, 3);
        let z = DenseMatrix::zeros(3, 2);
        let prod = matmul(&a, &z).unwrap();
        assert!(prod.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 3);
        let b = random_matrix(&mut rng, 3, 2);
        let oracle =
            DenseMatrix::from_fn(4, 2, |i, k| (0..3).map(|j| a.get(i, j) * b.get(j, k)).sum())
                .unwrap();
        let prod = matmul(&a, &b).unwrap();
        assert!(max_abs_diff(&prod, &oracle) < 1e-12);
    }

    #[test]
    fn matmul_rejects_mismatched_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("dimension mismatch"));
    }

    #[test]
    fn svd_diagonal_matrix() {
        let a = DenseMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let svd = svd_thin(&a).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_zero_matrix() {
        let svd = svd_thin(&DenseMatrix::zeros(2, 2)).unwrap();
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_reconstruction_and_orthonormality() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 5, 3);
        let svd = svd_thin(&a).unwrap();

        let mut us = svd.u.clone();
        let (us_rows, us_cols) = (us.rows(), us.cols());
        for i in 0..us_rows {
            for j in 0..us_cols {
                us.data[i * us_cols + j] *= svd.singular_values[j];
            }
        }
        let recon = matmul(&us, &svd.v_t).unwrap();
        let mut diff = recon.clone();
        for (d, v) in diff.data.iter_mut().zip(a.as_slice()) {
            *d -= v;
        }
        assert!(diff.frobenius_norm() / a.frobenius_norm() < 1e-10);

        let utu = matmul(&svd.u.transpose(), &svd.u).unwrap();
        assert!(max_abs_diff(&utu, &DenseMatrix::identity(3)) < 1e-10);
        let vvt = matmul(&svd.v_t, &svd.v_t.transpose()).unwrap();
        assert!(max_abs_diff(&vvt, &DenseMatrix::identity(3)) < 1e-10);
    }

    #[test]
    fn svd_rank_revealing_on_constructed_rank() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for &(rows, cols, rank) in &[(6usize, 4usize, 2usize), (5, 5, 3), (4, 7, 1)] {
            let a = random_rank_deficient(&mut rng, rows, cols, rank);
            let svd = svd_thin(&a).unwrap();
            let cutoff_ratio = PinvOptions::auto().cutoff_ratio(rows, cols);
            assert_eq!(svd.rank(cutoff_ratio), rank, "shape {rows}x{cols}");
        }
    }

    #[test]
    fn pinv_identity_is_identity() {
        let p = pinv(&DenseMatrix::identity(4), PinvOptions::auto()).unwrap();
        assert!(max_abs_diff(&p, &DenseMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn pinv_rank_deficient_diagonal() {
        let a = DenseMatrix::new(2, 2, vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        let p = pinv(&a, PinvOptions::auto()).unwrap();
        let expected = DenseMatrix::new(2, 2, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&p, &expected) < 1e-12);
    }

    #[test]
    fn pinv_zero_matrix_is_zero() {
        let p = pinv(&DenseMatrix::zeros(3, 2), PinvOptions::auto()).unwrap();
        assert_eq!(p.rows(), 2);
        assert_eq!(p.cols(), 3);
        assert!(p.as_slice().iter().all(|&v| v == 0.0));
    }

    /// The four Moore-Penrose conditions, as relative residuals.
    fn penrose_residuals(a: &DenseMatrix, p: &DenseMatrix) -> [f64; 4] {
        let ap = matmul(a, p).unwrap();
        let pa = matmul(p, a).unwrap();
        let apa = matmul(&ap, a).unwrap();
        let pap = matmul(&pa, p).unwrap();

        let sub = |x: &DenseMatrix, y: &DenseMatrix| {
            let mut d = x.clone();
            for (dv, yv) in d.data.iter_mut().zip(y.as_slice()) {
                *dv -= yv;
            }
            d.frobenius_norm()
        };
        let a_norm = a.frobenius_norm().max(1e-300);
        let p_norm = p.frobenius_norm().max(1e-300);
        [
            sub(&apa, a) / a_norm,
            sub(&pap, p) / p_norm,
            sub(&ap, &ap.transpose()) / ap.frobenius_norm().max(1e-300),
            sub(&pa, &pa.transpose()) / pa.frobenius_norm().max(1e-300),
        ]
    }

    #[test]
    fn moore_penrose_conditions_hold_on_random_and_rank_deficient_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for case in 0..100 {
            let rows = rng.gen_range(1..=50);
            let cols = rng.gen_range(1..=50);
            let a = if case % 3 == 0 {
                let max_rank = rows.min(cols);
                let rank = rng.gen_range(1..=max_rank.max(1));
                random_rank_deficient(&mut rng, rows, cols, rank)
            } else {
                random_matrix(&mut rng, rows, cols)
            };
            let p = pinv(&a, PinvOptions::auto()).unwrap();
            let res = penrose_residuals(&a, &p);
            for (i, r) in res.iter().enumerate() {
                assert!(
                    r < &1e-8,
                    "condition {i} residual {r:.2e} on case {case} ({rows}x{cols})"
                );
            }
        }
    }

    #[test]
    fn lstsq_recovers_exact_solution_of_consistent_square_system() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        // Diagonally dominant, hence comfortably invertible.
        let mut h = random_matrix(&mut rng, 4, 4);
        for i in 0..4 {
            h.data[i * 4 + i] += 5.0;
        }
        let beta0 = random_matrix(&mut rng, 4, 1);
        let t = matmul(&h, &beta0).unwrap();
        let beta = solve_least_squares(&h, &t, PinvOptions::auto()).unwrap();
        assert!(max_abs_diff(&beta, &beta0) < 1e-9);
    }

    #[test]
    fn lstsq_zero_column_yields_zero_coefficient() {
        // Second column is zero: the minimum-norm solution puts zero weight on it.
        let h = DenseMatrix::new(3, 2, vec![1.0, 0.0, 2.0, 0.0, -1.0, 0.0]).unwrap();
        let t = DenseMatrix::column(&[2.0, 4.0, -2.0]).unwrap();
        let beta = solve_least_squares(&h, &t, PinvOptions::auto()).unwrap();
        assert!((beta.get(0, 0) - 2.0).abs() < 1e-10);
        assert!(beta.get(1, 0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_matches_normal_equations_on_well_conditioned_tall_system() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let h = random_matrix(&mut rng, 10, 3);
        let t = random_matrix(&mut rng, 10, 1);
        let beta = solve_least_squares(&h, &t, PinvOptions::auto()).unwrap();

        // Normal-equations oracle: (HtH)^-1 Ht t via pinv of the 3x3 Gram matrix.
        let ht = h.transpose();
        let gram = matmul(&ht, &h).unwrap();
        let gram_inv = pinv(&gram, PinvOptions::auto()).unwrap();
        let oracle = matmul(&gram_inv, &matmul(&ht, &t).unwrap()).unwrap();
        assert!(max_abs_diff(&beta, &oracle) < 1e-8);
    }

    #[test]
    fn lstsq_agrees_with_pinv_times_t() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let h = random_matrix(&mut rng, 8, 5);
        let t = random_matrix(&mut rng, 8, 2);
        let beta = solve_least_squares(&h, &t, PinvOptions::auto()).unwrap();
        let via_pinv = matmul(&pinv(&h, PinvOptions::auto()).unwrap(), &t).unwrap();
        assert!(max_abs_diff(&beta, &via_pinv) < 1e-9);
    }

    #[test]
    fn lstsq_residual_is_locally_optimal() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let h = random_matrix(&mut rng, 10, 4);
        let t = random_matrix(&mut rng, 10, 1);
        let beta = solve_least_squares(&h, &t, PinvOptions::auto()).unwrap();

        let residual_norm = |b: &DenseMatrix| {
            let pred = matmul(&h, b).unwrap();
            pred.as_slice()
                .iter()
                .zip(t.as_slice())
                .map(|(p, y)| (p - y) * (p - y))
                .sum::<f64>()
                .sqrt()
        };
        let base = residual_norm(&beta);
        for _ in 0..100 {
            let mut perturbed = beta.clone();
            for v in perturbed.data.iter_mut() {
                *v += rng.gen_range(-1e-3..1e-3);
            }
            assert!(residual_norm(&perturbed) >= base - 1e-9);
        }
    }

    #[test]
    fn lstsq_reports_rank() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let h = random_rank_deficient(&mut rng, 8, 6, 3);
        let t = random_matrix(&mut rng, 8, 1);
        let (_, rank) = lstsq_detailed(&h, &t, PinvOptions::auto()).unwrap();
        assert_eq!(rank, 3);
    }

    #[test]
    fn pinv_options_validation() {
        assert!(PinvOptions::new(1e-9).is_ok());
        assert!(PinvOptions::new(0.0).is_err());
        assert!(PinvOptions::new(1.0).is_err());
        assert!(PinvOptions::new(-1e-3).is_err());
        // Default cutoff follows the larger dimension.
        let auto = PinvOptions::auto();
        assert_eq!(auto.cutoff_ratio(800, 400), 800.0 * f64::EPSILON);
        assert_eq!(auto.cutoff_ratio(400, 1600), 1600.0 * f64::EPSILON);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Product shapes always chain: (m x k) . (k x n) -> (m x n).
        #[test]
        fn matmul_shape_contract(m in 1usize..8, k in 1usize..8, n in 1usize..8, seed in 0u64..1000) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, m, k);
            let b = random_matrix(&mut rng, k, n);
            let prod = matmul(&a, &b).unwrap();
            prop_assert_eq!(prod.rows(), m);
            prop_assert_eq!(prod.cols(), n);
        }

        /// SVD reconstruction holds across random shapes.
        #[test]
        fn svd_reconstructs(m in 1usize..12, n in 1usize..12, seed in 0u64..1000) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, m, n);
            let svd = svd_thin(&a).unwrap();
            let mut us = svd.u.clone();
            let (us_rows, us_cols) = (us.rows(), us.cols());
            for i in 0..us_rows {
                for j in 0..us_cols {
                    us.data[i * us_cols + j] *= svd.singular_values[j];
                }
            }
            let recon = matmul(&us, &svd.v_t).unwrap();
            let mut err = 0.0f64;
            for (x, y) in recon.as_slice().iter().zip(a.as_slice()) {
                err = err.max((x - y).abs());
            }
            let scale = a.frobenius_norm().max(1.0);
            prop_assert!(err / scale < 1e-10);
        }

        /// Penrose conditions hold on arbitrary (possibly rank-deficient) inputs.
        #[test]
        fn pinv_satisfies_penrose(m in 1usize..10, n in 1usize..10, rank_seed in 0u64..1000) {
            let mut rng = ChaCha12Rng::seed_from_u64(rank_seed);
            let rank = rng.gen_range(1..=m.min(n));
            let a = random_rank_deficient(&mut rng, m, n, rank);
            let p = pinv(&a, PinvOptions::auto()).unwrap();
            let res = penrose_residuals(&a, &p);
            for r in res {
                prop_assert!(r < 1e-8);
            }
        }
    }
}
