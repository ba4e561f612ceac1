//! Copositivity on a cone when `Q` has exactly one negative eigenvalue.
//!
//! With `Q = PᵀDP` (rows of `P` are eigenvectors, `σ_n < 0` last) and
//! `y = P v̂`, the homogeneous program `min vᵀQv` over `C` is unbounded
//! below iff one of the convex programs
//! `min ½Σ_{i<n} σ_i y_i² − ½|σ_n|` over `{v̂ ∈ C, y_n = ±1}` is feasible
//! with a negative optimum. Both programs are solved as QPs in `v̂` with the
//! semidefinite Hessian `Pᵀ diag(σ_1, …, σ_{n−1}, 0) P`.

use super::{copositive_tol, normalize_inf, CopositivityVerdict, Method};
use crate::error::{PlqError, Result};
use crate::geometry::{qp_convex_solve, ConeHRep, Sense, Status};
use crate::linalg::{check_symmetric, eigh, max_abs, quad_form, Mat, Vector};
use crate::settings::Settings;

fn negative_count(q: &Mat, settings: &Settings) -> Result<(usize, crate::linalg::Eigh)> {
    let e = eigh(q)?;
    let tol = settings.tol * (1.0 + max_abs(q));
    let neg = e.values.iter().filter(|&&s| s < -tol).count();
    Ok((neg, e))
}

/// Whether the preconditions of [`copositive_one_neg_eig`] hold.
pub fn one_negative_eigenvalue(q: &Mat, settings: &Settings) -> Result<bool> {
    Ok(negative_count(q, settings)?.0 == 1)
}

pub fn copositive_one_neg_eig(q: &Mat, c: &ConeHRep, settings: &Settings) -> Result<CopositivityVerdict> {
    check_symmetric(q)?;
    let n = c.dim();
    if q.nrows() != n {
        return Err(PlqError::DimensionMismatch(format!(
            "matrix is {}x{}, cone dimension is {n}",
            q.nrows(),
            q.ncols()
        )));
    }
    if c.nrows() > settings.max_cone_rows {
        return Err(PlqError::TooManyConstraints {
            count: c.nrows(),
            limit: settings.max_cone_rows,
        });
    }
    let (neg, e) = negative_count(q, settings)?;
    if neg != 1 {
        return Err(PlqError::WrongInertia { negative: neg });
    }
    let sigma_n = e.values[n - 1];
    let p_n = e.rows.row(n - 1).transpose();
    let mut q_plus = Mat::zeros(n, n);
    for i in 0..n - 1 {
        let p = e.rows.row(i).transpose();
        q_plus += &p * p.transpose() * e.values[i].max(0.0);
    }
    let tol = copositive_tol(q);
    let mut best: Option<f64> = None;
    // The y_n = +1 program is examined first, so its witness wins ties.
    for s in [1.0, -1.0] {
        let mut p = c.to_polyhedron();
        p.push_row(&p_n, Sense::Eq, s);
        let r = qp_convex_solve(&q_plus, &Vector::zeros(n), &p)?;
        match r.status {
            Status::Infeasible => continue,
            Status::Unbounded => {
                return Err(PlqError::Numerical(
                    "convex program bounded below reported unbounded".into(),
                ))
            }
            Status::Optimal => {}
        }
        let v_hat = r.point.expect("optimal QP has a point");
        let value = r.value.expect("optimal QP has a value") - 0.5 * sigma_n.abs();
        if value < 0.0 {
            let w = normalize_inf(&v_hat);
            let qv = quad_form(q, &w);
            if qv < -tol {
                return Ok(CopositivityVerdict::refuted(Method::OneNegEig, q, &w));
            }
            best = Some(best.map_or(qv, |b: f64| b.min(qv)));
        }
    }
    Ok(CopositivityVerdict::copositive(
        Method::OneNegEig,
        Some(best.map_or(0.0, |b| b.min(0.0))),
    ))
}
