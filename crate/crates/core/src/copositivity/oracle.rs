//! Exact minimization of `xᵀQx` over a polytope by enumerating flats.
//!
//! A global minimizer lies in the relative interior of some face `F`, and
//! there it is a local minimizer on `aff F`, which is one of the flats
//! visited by [`for_each_flat`]. On each flat the candidate is the unique
//! stationary point when the reduced Hessian is positive definite.
//! Semidefinite singular flats are skipped: their minimizers extend to the
//! relative boundary, which is a lower face.

use super::{copositive_tol, normalize_inf, CopositivityStatus, CopositivityVerdict, Method};
use crate::error::{PlqError, Result};
use crate::geometry::{for_each_flat, lp_range, ConeHRep, Polyhedron};
use crate::linalg::{check_symmetric, eigh, max_abs, max_abs_vec, quad_form, symmetrize, Mat, Vector};
use crate::settings::Settings;

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeMin {
    pub value: f64,
    pub argmin: Vector,
}

/// Best candidate overall and best candidate with `‖x‖∞ = 1`.
struct Search {
    best: Option<PolytopeMin>,
    sphere: Option<PolytopeMin>,
}

fn offer(slot: &mut Option<PolytopeMin>, value: f64, x: &Vector) {
    if slot.as_ref().is_none_or(|b| value < b.value) {
        *slot = Some(PolytopeMin {
            value,
            argmin: x.clone(),
        });
    }
}

fn search(q: &Mat, p: &Polyhedron) -> Result<Search> {
    let mut out = Search {
        best: None,
        sphere: None,
    };
    let tol = p.default_tol();
    let pd_tol = 1e-10 * (1.0 + max_abs(q));
    for_each_flat(p, |flat| {
        let z = &flat.null;
        let x0 = &flat.point;
        let k = z.ncols();
        let candidate = if k == 0 {
            Some(x0.clone())
        } else {
            let h = symmetrize(&(z.transpose() * q * z));
            let g = z.transpose() * (q * x0);
            let e = eigh(&h)?;
            if e.min_value() > pd_tol {
                // H y = −g through H = PᵀDP.
                let py = &e.rows * g;
                let y = e.rows.transpose() * Vector::from_iterator(k, (0..k).map(|i| -py[i] / e.values[i]));
                let x = x0 + z * y;
                p.is_member(&x, tol).then_some(x)
            } else {
                None
            }
        };
        if let Some(x) = candidate {
            let v = quad_form(q, &x);
            offer(&mut out.best, v, &x);
            if max_abs_vec(&x) >= 1.0 - 1e-9 {
                offer(&mut out.sphere, v, &x);
            }
        }
        Ok(())
    })?;
    Ok(out)
}

fn check_q(q: &Mat, n: usize) -> Result<()> {
    check_symmetric(q)?;
    if q.nrows() != n {
        return Err(PlqError::DimensionMismatch(format!(
            "matrix is {}x{}, set dimension is {n}",
            q.nrows(),
            q.ncols()
        )));
    }
    Ok(())
}

/// Global minimum of `xᵀQx` over a bounded polyhedron.
pub fn min_quadratic_over_polytope(q: &Mat, p: &Polyhedron, settings: &Settings) -> Result<PolytopeMin> {
    check_q(q, p.dim())?;
    if p.nrows() > settings.max_oracle_rows {
        return Err(PlqError::TooManyConstraints {
            count: p.nrows(),
            limit: settings.max_oracle_rows,
        });
    }
    for i in 0..p.dim() {
        let mut e = Vector::zeros(p.dim());
        e[i] = 1.0;
        match lp_range(&e, p)? {
            (Some(_), Some(_)) => {}
            _ => return Err(PlqError::UnboundedSet),
        }
    }
    search(q, p)?.best.ok_or(PlqError::EmptyPolyhedron)
}

fn cone_guard(q: &Mat, c: &ConeHRep, settings: &Settings) -> Result<()> {
    check_q(q, c.dim())?;
    if c.nrows() > settings.max_cone_rows {
        return Err(PlqError::TooManyConstraints {
            count: c.nrows(),
            limit: settings.max_cone_rows,
        });
    }
    Ok(())
}

/// Copositivity from the minimum of `vᵀQv` over `C ∩ [−1,1]ⁿ`; the slice
/// suffices because the form is homogeneous of degree two.
pub fn copositive_on_cone(q: &Mat, c: &ConeHRep, settings: &Settings) -> Result<CopositivityVerdict> {
    cone_guard(q, c, settings)?;
    let s = search(q, &c.box_slice())?;
    let best = s.best.expect("the origin lies in every cone slice");
    if best.value < -copositive_tol(q) {
        return Ok(CopositivityVerdict::refuted(Method::Oracle, q, &best.argmin));
    }
    Ok(CopositivityVerdict::copositive(Method::Oracle, Some(best.value)))
}

/// Strictness from the minimum over `C ∩ {‖v‖∞ = 1}`, the union of the box
/// facets cut by the cone. An empty union (`C = {0}`) is vacuously strict.
pub fn strictly_copositive_on_cone(
    q: &Mat,
    c: &ConeHRep,
    settings: &Settings,
) -> Result<CopositivityVerdict> {
    cone_guard(q, c, settings)?;
    let s = search(q, &c.box_slice())?;
    let best = s.best.expect("the origin lies in every cone slice");
    let tol = copositive_tol(q);
    if best.value < -tol {
        return Ok(CopositivityVerdict::refuted(Method::Oracle, q, &best.argmin));
    }
    Ok(match s.sphere {
        None => CopositivityVerdict {
            status: CopositivityStatus::StrictlyCopositive,
            witness: None,
            method: Method::Oracle,
            min_value: None,
        },
        Some(m) if m.value > tol => CopositivityVerdict {
            status: CopositivityStatus::StrictlyCopositive,
            witness: None,
            method: Method::Oracle,
            min_value: Some(m.value),
        },
        Some(m) => CopositivityVerdict {
            status: CopositivityStatus::Copositive,
            witness: Some(normalize_inf(&m.argmin)),
            method: Method::Oracle,
            min_value: Some(m.value),
        },
    })
}
