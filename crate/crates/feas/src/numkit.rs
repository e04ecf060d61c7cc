//! Dense vector/matrix kernel with an incrementally updatable orthogonal
//! factorization.
//!
//! `OrthoFactorization` maintains a thin QR factorization of a set of columns
//! and supports column append, column removal, and rank-one update, each in
//! O(d^2) arithmetic via Givens rotations. Factorizations are rebuilt from
//! scratch every [`REBUILD_INTERVAL`] updates to bound rounding drift.

use thiserror::Error;

/// Relative rank threshold: a column whose orthogonal residual falls below
/// `RANK_TOL_FACTOR * (largest column norm)` counts as dependent.
pub const RANK_TOL_FACTOR: f64 = 1e-8;

/// Updates applied before a factorization is regenerated from its stored
/// columns.
pub const REBUILD_INTERVAL: u32 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rank-deficient at column {0}")]
    RankDeficient(usize),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(a: &[f64], alpha: f64) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Dense column-major matrix of finite 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(NumError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self, NumError> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(NumError::DimensionMismatch {
                    expected: rows,
                    got: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Matrix::new(rows, columns.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            axpy(x[j], self.col(j), &mut y);
        }
        y
    }

    /// `self^T x`
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let y = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&y);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Thin QR factorization of an ordered set of columns, maintained
/// incrementally.
///
/// `q` has orthonormal columns spanning the column space, `r` is upper
/// triangular with `q * r` reconstructing the stored columns. The original
/// columns are kept exactly as given so the factorization can be regenerated
/// from scratch to bound drift.
#[derive(Debug, Clone)]
pub struct OrthoFactorization {
    ambient: usize,
    cols: Vec<Vec<f64>>,
    q: Matrix,
    r: Matrix,
    updates: u32,
}

impl OrthoFactorization {
    pub fn empty(ambient: usize) -> Self {
        OrthoFactorization {
            ambient,
            cols: Vec::new(),
            q: Matrix::zeros(ambient, 0),
            r: Matrix::zeros(0, 0),
            updates: 0,
        }
    }

    pub fn factorize(m: &Matrix) -> Result<Self, NumError> {
        let mut f = OrthoFactorization::empty(m.rows());
        for j in 0..m.cols() {
            f = f.append_column(m.col(j)).map_err(|e| match e {
                NumError::RankDeficient(_) => NumError::RankDeficient(j),
                other => other,
            })?;
        }
        f.updates = 0;
        Ok(f)
    }

    pub fn from_columns(ambient: usize, cols: &[Vec<f64>]) -> Result<Self, NumError> {
        Self::factorize(&Matrix::from_columns(ambient, cols)?)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    pub fn q_factor(&self) -> &Matrix {
        &self.q
    }

    pub fn r_factor(&self) -> &Matrix {
        &self.r
    }

    /// `q * r`, which should match the stored columns.
    pub fn reconstruct(&self) -> Matrix {
        self.q.matmul(&self.r)
    }

    /// Rank threshold scaled by the largest column norm among the stored
    /// columns and an optional candidate.
    fn rank_threshold(&self, candidate: Option<&[f64]>) -> f64 {
        let mut m: f64 = candidate.map(|c| norm(c)).unwrap_or(0.0);
        for c in &self.cols {
            m = m.max(norm(c));
        }
        RANK_TOL_FACTOR * m.max(f64::MIN_POSITIVE)
    }

    fn bump(mut self) -> Result<Self, NumError> {
        self.updates += 1;
        if self.updates >= REBUILD_INTERVAL {
            let cols = std::mem::take(&mut self.cols);
            return Self::from_columns(self.ambient, &cols);
        }
        Ok(self)
    }

    /// Appends a column, extending `q` by the normalized orthogonal residual.
    ///
    /// Fails with `RankDeficient` when the column lies in the current span at
    /// the rank threshold; the caller interprets that as the dependent case
    /// of the least-squares split.
    pub fn append_column(&self, a: &[f64]) -> Result<Self, NumError> {
        if a.len() != self.ambient {
            return Err(NumError::DimensionMismatch {
                expected: self.ambient,
                got: a.len(),
            });
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(NumError::NonFinite);
        }
        let k = self.num_cols();
        if k == self.ambient {
            return Err(NumError::RankDeficient(k));
        }
        // Orthogonalize with one reorthogonalization pass.
        let mut y = self.q.mul_transpose_vec(a);
        let mut resid = a.to_vec();
        for j in 0..k {
            axpy(-y[j], self.q.col(j), &mut resid);
        }
        let y2 = self.q.mul_transpose_vec(&resid);
        for j in 0..k {
            axpy(-y2[j], self.q.col(j), &mut resid);
            y[j] += y2[j];
        }
        let rho = norm(&resid);
        if rho <= self.rank_threshold(Some(a)) {
            return Err(NumError::RankDeficient(k));
        }

        let mut q = Matrix::zeros(self.ambient, k + 1);
        for j in 0..k {
            q.col_mut(j).copy_from_slice(self.q.col(j));
        }
        for (i, v) in resid.iter().enumerate() {
            q.set(i, k, v / rho);
        }
        let mut r = Matrix::zeros(k + 1, k + 1);
        for j in 0..k {
            for i in 0..=j {
                r.set(i, j, self.r.entry(i, j));
            }
        }
        for i in 0..k {
            r.set(i, k, y[i]);
        }
        r.set(k, k, rho);

        let mut cols = self.cols.clone();
        cols.push(a.to_vec());
        OrthoFactorization {
            ambient: self.ambient,
            cols,
            q,
            r,
            updates: self.updates,
        }
        .bump()
    }

    /// Removes the column at `idx`, re-triangularizing with Givens rotations.
    pub fn remove_column(&self, idx: usize) -> Result<Self, NumError> {
        let k = self.num_cols();
        if idx >= k {
            return Err(NumError::IndexOutOfRange { index: idx, len: k });
        }
        let mut cols = self.cols.clone();
        cols.remove(idx);
        if k == 1 {
            let mut f = OrthoFactorization::empty(self.ambient);
            f.updates = self.updates;
            return f.bump();
        }
        // Deleting column idx of R leaves an upper-Hessenberg k x (k-1)
        // block in columns >= idx; chase the subdiagonal away.
        let mut q = self.q.clone();
        let mut r = Matrix::zeros(k, k - 1);
        for (jn, j) in (0..k).filter(|&j| j != idx).enumerate() {
            for i in 0..k.min(j + 1) {
                r.set(i, jn, self.r.entry(i, j));
            }
        }
        for j in idx..k - 1 {
            let (c, s) = givens(r.entry(j, j), r.entry(j + 1, j));
            apply_givens_rows(&mut r, j, j + 1, c, s);
            apply_givens_cols(&mut q, j, j + 1, c, s);
        }
        // Last row of R and last column of Q are now structurally zero.
        let mut q2 = Matrix::zeros(self.ambient, k - 1);
        for j in 0..k - 1 {
            q2.col_mut(j).copy_from_slice(q.col(j));
        }
        let mut r2 = Matrix::zeros(k - 1, k - 1);
        for j in 0..k - 1 {
            for i in 0..=j {
                r2.set(i, j, r.entry(i, j));
            }
        }
        OrthoFactorization {
            ambient: self.ambient,
            cols,
            q: q2,
            r: r2,
            updates: self.updates,
        }
        .bump()
    }

    /// Factorization of `scale * (A + w v^T)` where `A` is the current column
    /// matrix.
    pub fn rank_one_update(&self, w: &[f64], v: &[f64], scale: f64) -> Result<Self, NumError> {
        let k = self.num_cols();
        if w.len() != self.ambient {
            return Err(NumError::DimensionMismatch {
                expected: self.ambient,
                got: w.len(),
            });
        }
        if v.len() != k {
            return Err(NumError::DimensionMismatch {
                expected: k,
                got: v.len(),
            });
        }
        if !scale.is_finite() || w.iter().chain(v).any(|x| !x.is_finite()) {
            return Err(NumError::NonFinite);
        }
        let mut cols = self.cols.clone();
        for (j, c) in cols.iter_mut().enumerate() {
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = scale * (*ci + w[i] * v[j]);
            }
        }
        if k == 0 {
            let mut f = OrthoFactorization::empty(self.ambient);
            f.updates = self.updates;
            return f.bump();
        }

        // Split w into its in-span coordinates and orthogonal residual.
        let mut u = self.q.mul_transpose_vec(w);
        let mut resid = w.to_vec();
        for j in 0..k {
            axpy(-u[j], self.q.col(j), &mut resid);
        }
        let u2 = self.q.mul_transpose_vec(&resid);
        for j in 0..k {
            axpy(-u2[j], self.q.col(j), &mut resid);
            u[j] += u2[j];
        }
        let rho = norm(&resid);
        let extend = rho > 1e-13 * norm(w).max(1.0) && k < self.ambient;

        let rows = if extend { k + 1 } else { k };
        let mut q = Matrix::zeros(self.ambient, rows);
        for j in 0..k {
            q.col_mut(j).copy_from_slice(self.q.col(j));
        }
        let mut r = Matrix::zeros(rows, k);
        for j in 0..k {
            for i in 0..=j {
                r.set(i, j, self.r.entry(i, j));
            }
        }
        let mut uh = u.clone();
        if extend {
            for (i, x) in resid.iter().enumerate() {
                q.set(i, k, x / rho);
            }
            uh.push(rho);
        }

        // Rotate uh onto e1, turning R upper Hessenberg.
        for i in (1..uh.len()).rev() {
            let (c, s) = givens(uh[i - 1], uh[i]);
            let (a, b) = (uh[i - 1], uh[i]);
            uh[i - 1] = c * a + s * b;
            uh[i] = 0.0;
            apply_givens_rows(&mut r, i - 1, i, c, s);
            apply_givens_cols(&mut q, i - 1, i, c, s);
        }
        // R += (uh[0] e1) v^T keeps the Hessenberg profile.
        for j in 0..k {
            r.set(0, j, r.entry(0, j) + uh[0] * v[j]);
        }
        // Chase the subdiagonal back out.
        for j in 0..k.min(rows - 1) {
            let (c, s) = givens(r.entry(j, j), r.entry(j + 1, j));
            apply_givens_rows(&mut r, j, j + 1, c, s);
            apply_givens_cols(&mut q, j, j + 1, c, s);
        }

        let mut q2 = Matrix::zeros(self.ambient, k);
        for j in 0..k {
            q2.col_mut(j).copy_from_slice(q.col(j));
        }
        let mut r2 = Matrix::zeros(k, k);
        for j in 0..k {
            for i in 0..=j.min(k - 1) {
                r2.set(i, j, scale * r.entry(i, j));
            }
        }
        let out = OrthoFactorization {
            ambient: self.ambient,
            cols,
            q: q2,
            r: r2,
            updates: self.updates,
        };
        let tol = out.rank_threshold(None);
        for j in 0..k {
            if out.r.entry(j, j).abs() <= tol {
                return Err(NumError::RankDeficient(j));
            }
        }
        out.bump()
    }

    /// Least-squares split `b = residual + sum coeff_j * col_j` with the
    /// residual orthogonal to every stored column.
    pub fn least_squares(&self, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NumError> {
        if b.len() != self.ambient {
            return Err(NumError::DimensionMismatch {
                expected: self.ambient,
                got: b.len(),
            });
        }
        let k = self.num_cols();
        let y = self.q.mul_transpose_vec(b);
        let mut resid = b.to_vec();
        for j in 0..k {
            axpy(-y[j], self.q.col(j), &mut resid);
        }
        // One reorthogonalization pass tightens the orthogonality of the
        // residual without affecting the coefficients materially.
        let y2 = self.q.mul_transpose_vec(&resid);
        for j in 0..k {
            axpy(-y2[j], self.q.col(j), &mut resid);
        }
        let coeffs = self.solve_upper(&y)?;
        Ok((coeffs, resid))
    }

    /// Back substitution `R x = rhs`.
    pub(crate) fn solve_upper(&self, rhs: &[f64]) -> Result<Vec<f64>, NumError> {
        let k = self.num_cols();
        debug_assert_eq!(rhs.len(), k);
        let mut x = rhs.to_vec();
        for i in (0..k).rev() {
            for j in i + 1..k {
                x[i] -= self.r.entry(i, j) * x[j];
            }
            let d = self.r.entry(i, i);
            if d.abs() <= f64::MIN_POSITIVE {
                return Err(NumError::RankDeficient(i));
            }
            x[i] /= d;
        }
        Ok(x)
    }

    /// Forward substitution `R^T x = rhs`.
    pub(crate) fn solve_upper_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>, NumError> {
        let k = self.num_cols();
        debug_assert_eq!(rhs.len(), k);
        let mut x = rhs.to_vec();
        for i in 0..k {
            for j in 0..i {
                x[i] -= self.r.entry(j, i) * x[j];
            }
            let d = self.r.entry(i, i);
            if d.abs() <= f64::MIN_POSITIVE {
                return Err(NumError::RankDeficient(i));
            }
            x[i] /= d;
        }
        Ok(x)
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    let h = a.hypot(b);
    if h <= f64::MIN_POSITIVE {
        (1.0, 0.0)
    } else {
        (a / h, b / h)
    }
}

/// Rows `i`, `j` of `m` <- G * rows, with G = [[c, s], [-s, c]].
fn apply_givens_rows(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    for col in 0..m.cols() {
        let a = m.entry(i, col);
        let b = m.entry(j, col);
        m.set(i, col, c * a + s * b);
        m.set(j, col, -s * a + c * b);
    }
}

/// Columns `i`, `j` of `m` <- cols * G^T, preserving `m_old * R = m_new * (G R)`.
fn apply_givens_cols(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    for row in 0..m.rows() {
        let a = m.entry(row, i);
        let b = m.entry(row, j);
        m.set(row, i, c * a + s * b);
        m.set(row, j, -s * a + c * b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    fn random_cols(rng: &mut impl Rng, dim: usize, k: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    fn assert_matches_scratch(f: &OrthoFactorization, tol: f64) {
        // Reconstruction is the oracle: q*r must reproduce the stored
        // columns, q must be orthonormal, r upper triangular.
        let rec = f.reconstruct();
        let target = Matrix::from_columns(f.ambient_dim(), f.columns()).unwrap();
        assert!(
            rec.max_abs_diff(&target) <= tol,
            "reconstruction error {} > {}",
            rec.max_abs_diff(&target),
            tol
        );
        for i in 0..f.num_cols() {
            for j in 0..f.num_cols() {
                let d = dot(f.q_factor().col(i), f.q_factor().col(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() <= 1e-10, "q not orthonormal: {}", d);
            }
        }
        for j in 0..f.num_cols() {
            for i in j + 1..f.num_cols() {
                assert!(f.r_factor().entry(i, j).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn factorize_single_column() {
        let m = Matrix::from_columns(2, &[vec![3.0, 4.0]]).unwrap();
        let f = OrthoFactorization::factorize(&m).unwrap();
        assert!((f.q_factor().entry(0, 0) - 0.6).abs() < 1e-15);
        assert!((f.q_factor().entry(1, 0) - 0.8).abs() < 1e-15);
        assert!((f.r_factor().entry(0, 0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn factorize_identity() {
        let f = OrthoFactorization::factorize(&Matrix::identity(2)).unwrap();
        assert_eq!(f.q_factor().max_abs_diff(&Matrix::identity(2)), 0.0);
        assert_eq!(f.r_factor().max_abs_diff(&Matrix::identity(2)), 0.0);
    }

    #[test]
    fn factorize_reconstructs_random() {
        let cols = random_cols(&mut rng(42), 5, 3);
        let f = OrthoFactorization::from_columns(5, &cols).unwrap();
        assert_matches_scratch(&f, 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            Matrix::new(1, 1, vec![f64::NAN]).unwrap_err(),
            NumError::NonFinite
        );
    }

    #[test]
    fn append_basis_vector() {
        let f = OrthoFactorization::from_columns(3, &[vec![1.0, 0.0, 0.0]]).unwrap();
        let f = f.append_column(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.num_cols(), 2);
        assert!((f.q_factor().entry(1, 1) - 1.0).abs() < 1e-15);
        assert!((f.r_factor().entry(1, 1) - 1.0).abs() < 1e-15);
        assert!(f.r_factor().entry(0, 1).abs() < 1e-15);
    }

    #[test]
    fn append_dependent_column_fails() {
        let f = OrthoFactorization::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]])
            .unwrap();
        let err = f.append_column(&[0.5, -0.25, 0.0]).unwrap_err();
        assert!(matches!(err, NumError::RankDeficient(_)));
    }

    #[test]
    fn append_sequence_matches_scratch() {
        let mut r = rng(7);
        let dim = 8;
        let mut f = OrthoFactorization::empty(dim);
        let mut held = Vec::new();
        for _ in 0..50 {
            if held.len() == dim {
                let idx = r.gen_range(0..held.len());
                held.remove(idx);
                f = f.remove_column(idx).unwrap();
            }
            let c: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
            f = f.append_column(&c).unwrap();
            held.push(c);
            assert_matches_scratch(&f, 1e-10);
            let scratch = OrthoFactorization::from_columns(dim, &held).unwrap();
            assert!(f.reconstruct().max_abs_diff(&scratch.reconstruct()) <= 1e-10);
        }
    }

    #[test]
    fn remove_only_column() {
        let f = OrthoFactorization::from_columns(3, &[vec![0.0, 0.0, 2.0]]).unwrap();
        let f = f.remove_column(0).unwrap();
        assert_eq!(f.num_cols(), 0);
        assert_eq!(f.ambient_dim(), 3);
    }

    #[test]
    fn append_remove_round_trip() {
        let cols = random_cols(&mut rng(3), 6, 4);
        let f = OrthoFactorization::from_columns(6, &cols).unwrap();
        let g = f
            .append_column(&[0.1, 0.2, -0.3, 0.4, 0.5, -0.6])
            .unwrap()
            .remove_column(4)
            .unwrap();
        let rec0 = f.reconstruct();
        let rec1 = g.reconstruct();
        assert!(rec0.max_abs_diff(&rec1) <= 1e-10);
    }

    #[test]
    fn remove_middle_column_matches_scratch() {
        let cols = random_cols(&mut rng(3), 6, 4);
        let f = OrthoFactorization::from_columns(6, &cols).unwrap();
        let g = f.remove_column(2).unwrap();
        assert_matches_scratch(&g, 1e-10);
        assert_eq!(g.num_cols(), 3);
        assert_eq!(g.columns()[2], cols[3]);
    }

    #[test]
    fn remove_out_of_range() {
        let f = OrthoFactorization::from_columns(2, &[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            f.remove_column(1).unwrap_err(),
            NumError::IndexOutOfRange { .. }
        ));
    }

    #[test]
    fn rank_one_zero_w_scales() {
        let cols = random_cols(&mut rng(9), 4, 3);
        let f = OrthoFactorization::from_columns(4, &cols).unwrap();
        let g = f.rank_one_update(&[0.0; 4], &[0.0; 3], 2.0).unwrap();
        let mut want = f.reconstruct();
        for j in 0..want.cols() {
            for i in 0..want.rows() {
                let v = want.entry(i, j) * 2.0;
                want.set(i, j, v);
            }
        }
        assert!(g.reconstruct().max_abs_diff(&want) <= 1e-12);
    }

    #[test]
    fn rank_one_e1_on_identity() {
        let f = OrthoFactorization::factorize(&Matrix::identity(2)).unwrap();
        let g = f
            .rank_one_update(&[1.0, 0.0], &[1.0, 0.0], 1.0)
            .unwrap();
        let want = Matrix::from_columns(2, &[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(g.reconstruct().max_abs_diff(&want) <= 1e-12);
        assert_matches_scratch(&g, 1e-12);
    }

    #[test]
    fn rank_one_random_matches_scratch() {
        let mut r = rng(11);
        let dim = 7;
        let cols = random_cols(&mut r, dim, 4);
        let f = OrthoFactorization::from_columns(dim, &cols).unwrap();
        let w: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let g = f.rank_one_update(&w, &v, 0.7).unwrap();
        assert_matches_scratch(&g, 1e-10);
        let mut want_cols = cols.clone();
        for (j, c) in want_cols.iter_mut().enumerate() {
            for i in 0..dim {
                c[i] = 0.7 * (c[i] + w[i] * v[j]);
            }
        }
        let scratch = OrthoFactorization::from_columns(dim, &want_cols).unwrap();
        assert!(g.reconstruct().max_abs_diff(&scratch.reconstruct()) <= 1e-10);
    }

    #[test]
    fn least_squares_orthonormal_columns() {
        let f = OrthoFactorization::from_columns(
            3,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        let (c, resid) = f.least_squares(&[1.0, 2.0, 3.0]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14 && (c[1] - 2.0).abs() < 1e-14);
        assert!(resid[0].abs() < 1e-14 && resid[1].abs() < 1e-14);
        assert!((resid[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_in_span() {
        let cols = random_cols(&mut rng(2), 5, 3);
        let f = OrthoFactorization::from_columns(5, &cols).unwrap();
        let mut b = vec![0.0; 5];
        axpy(0.3, &cols[0], &mut b);
        axpy(-1.1, &cols[2], &mut b);
        let (_, resid) = f.least_squares(&b).unwrap();
        assert!(norm(&resid) <= 1e-10);
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        let mut r = rng(5);
        let dim = 6;
        let cols = random_cols(&mut r, dim, 3);
        let f = OrthoFactorization::from_columns(dim, &cols).unwrap();
        let b: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (c, resid) = f.least_squares(&b).unwrap();
        // Normal-equation oracle via 3x3 Gaussian elimination.
        let k = 3;
        let mut g = vec![vec![0.0; k + 1]; k];
        for i in 0..k {
            for j in 0..k {
                g[i][j] = dot(&cols[i], &cols[j]);
            }
            g[i][k] = dot(&cols[i], &b);
        }
        for p in 0..k {
            let piv = g[p][p];
            for i in p + 1..k {
                let m = g[i][p] / piv;
                for j in p..=k {
                    g[i][j] -= m * g[p][j];
                }
            }
        }
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i][k];
            for j in i + 1..k {
                s -= g[i][j] * x[j];
            }
            x[i] = s / g[i][i];
        }
        for i in 0..k {
            assert!((c[i] - x[i]).abs() <= 1e-9, "{} vs {}", c[i], x[i]);
        }
        for col in &cols {
            assert!(dot(&resid, col).abs() <= 1e-10 * norm(&resid).max(1e-30) * norm(col));
        }
        // b = residual + sum c_j col_j
        let mut back = resid.clone();
        for (j, col) in cols.iter().enumerate() {
            axpy(c[j], col, &mut back);
        }
        assert!(norm(&sub(&back, &b)) <= 1e-10);
    }

    #[test]
    fn long_mixed_update_sequence_matches_scratch() {
        // Random appends/removals/rank-one updates; every intermediate
        // factorization must match a from-scratch factorization.
        let mut r = rng(123);
        for &dim in &[5, 12, 20] {
            let mut held: Vec<Vec<f64>> = Vec::new();
            let mut f = OrthoFactorization::empty(dim);
            for _ in 0..100 {
                let action = r.gen_range(0..3);
                if action == 0 || held.is_empty() {
                    if held.len() == dim {
                        continue;
                    }
                    let c: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
                    f = f.append_column(&c).unwrap();
                    held.push(c);
                } else if action == 1 {
                    let idx = r.gen_range(0..held.len());
                    f = f.remove_column(idx).unwrap();
                    held.remove(idx);
                } else {
                    let w: Vec<f64> = (0..dim).map(|_| r.gen_range(-0.5..0.5)).collect();
                    let v: Vec<f64> = (0..held.len()).map(|_| r.gen_range(-0.5..0.5)).collect();
                    let scale = if r.gen_bool(0.5) { 1.0 } else { 1.25 };
                    match f.rank_one_update(&w, &v, scale) {
                        Ok(g) => {
                            f = g;
                            for (j, c) in held.iter_mut().enumerate() {
                                for i in 0..dim {
                                    c[i] = scale * (c[i] + w[i] * v[j]);
                                }
                            }
                        }
                        Err(NumError::RankDeficient(_)) => continue,
                        Err(e) => panic!("{e}"),
                    }
                }
                let target = Matrix::from_columns(dim, &held).unwrap();
                assert!(f.reconstruct().max_abs_diff(&target) <= 1e-9);
            }
        }
    }
}
