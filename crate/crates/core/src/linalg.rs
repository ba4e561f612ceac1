//! Dense linear algebra helpers on top of `nalgebra`.
//!
//! Eigen-decompositions follow the rows-as-eigenvectors convention used
//! throughout the crate: `S = Pᵀ D P` where row `i` of `P` is the unit
//! eigenvector for the `i`-th eigenvalue, eigenvalues sorted descending.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{PlqError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest absolute entry.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn asymmetry(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Fails with `NonSymmetric` when `m` is not square-symmetric within
/// `1e-12` relative to its scale.
pub fn check_symmetric(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(PlqError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = asymmetry(m);
    if asym > 1e-12 * (1.0 + max_abs(m)) {
        return Err(PlqError::NonSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Symmetric eigen-decomposition with descending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vector,
    /// Row `i` is the eigenvector of `values[i]`.
    pub rows: Mat,
}

impl Eigh {
    pub fn reconstruct(&self) -> Mat {
        let d = Mat::from_diagonal(&self.values);
        self.rows.transpose() * d * &self.rows
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn eigh(s: &Mat) -> Result<Eigh> {
    check_symmetric(s)?;
    let n = s.nrows();
    if n == 0 {
        return Ok(Eigh {
            values: Vector::zeros(0),
            rows: Mat::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(s));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = Vector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut rows = Mat::zeros(n, n);
    for (r, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        // Sign normalization: first entry of largest magnitude is positive.
        let mut pivot = 0;
        for j in 0..n {
            if col[j].abs() > col[pivot].abs() + 1e-12 {
                pivot = j;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[(r, j)] = sign * col[j];
        }
    }
    Ok(Eigh { values, rows })
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm_sym(m: &Mat) -> Result<f64> {
    let e = eigh(m)?;
    Ok(e.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

fn rank_tol(sigma_max: f64) -> f64 {
    1e-10 * sigma_max.max(1.0)
}

/// Orthonormal basis (as columns) of `{x : a x = 0}`.
pub fn null_space(a: &Mat) -> Mat {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return Mat::identity(n, n);
    }
    let k = a.nrows().max(n);
    let mut padded = Mat::zeros(k, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = rank_tol(smax);
    let cols: Vec<Vector> = (0..vt.nrows())
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Mat::zeros(n, 0)
    } else {
        Mat::from_columns(&cols)
    }
}

pub fn rank(a: &Mat) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let svd = SVD::new(a.clone(), false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = rank_tol(smax);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Least-norm least-squares solution of `a x = b` and the residual norm
/// `‖a x − b‖∞`.
pub fn solve_min_norm(a: &Mat, b: &Vector) -> (Vector, f64) {
    let n = a.ncols();
    if a.nrows() == 0 {
        return (Vector::zeros(n), 0.0);
    }
    if n == 0 {
        return (Vector::zeros(0), max_abs_vec(b));
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let x = svd
        .solve(b, rank_tol(smax))
        .unwrap_or_else(|_| Vector::zeros(n));
    let r = a * &x - b;
    (x, max_abs_vec(&r))
}

/// Rows of `a` selected by `idx`.
pub fn select_rows(a: &Mat, idx: &[usize]) -> Mat {
    let mut out = Mat::zeros(idx.len(), a.ncols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from(&a.row(i));
    }
    out
}

pub fn select_entries(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Principal submatrix `m[rows, cols]`.
pub fn submatrix(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn quad_form(q: &Mat, v: &Vector) -> f64 {
    (q * v).dot(v)
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<Mat> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(PlqError::DimensionMismatch(format!(
                "row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
