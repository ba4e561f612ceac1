//! Enumeration of strict local minima and of d-stationary values.
//!
//! Both walk the flats of each restricted piece `X ∩ P_i` (see
//! [`for_each_flat`]). A strict local minimizer lies in the relative
//! interior of a face on which the reduced Hessian is positive definite,
//! so it is the unique stationary point of that face's flat. KKT points on
//! a flat form a polyhedron in `(x, μ)` on which the piece value is
//! constant; one relative-interior representative per flat is tested for
//! d-stationarity of the whole program.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{plq_strong_min, qp_strong_min, Level, OptimalityCertificate};
use super::kkt::qp_stationary;
use crate::calculus::{PlqFunction, Quadratic};
use crate::error::{PlqError, Result};
use crate::geometry::{for_each_flat, lp_solve, Flat, Polyhedron, Sense, Status};
use crate::linalg::{eigh, max_abs, max_abs_vec, Vector};
use crate::settings::Settings;

/// Points closer than this in ∞-norm are the same minimizer.
pub const POINT_DEDUP_TOL: f64 = 1e-7;
/// Relative tolerance for merging stationary values.
pub const VALUE_DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictMinimum {
    #[serde(with = "crate::serde_util::vector")]
    pub x: Vector,
    pub value: f64,
    pub certificate: OptimalityCertificate,
}

/// A polyhedral family of KKT points of one piece. `representative` is a
/// relative-interior point that is d-stationary for the whole program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryFamily {
    pub piece: usize,
    /// Rows of `X ∩ P_i` held at equality on the family.
    pub tight_rows: Vec<usize>,
    #[serde(with = "crate::serde_util::vector")]
    pub representative: Vector,
    pub value: f64,
}

fn restricted_pieces(f: &PlqFunction, x_set: &Polyhedron, settings: &Settings) -> Result<Vec<(usize, Polyhedron)>> {
    if x_set.dim() != f.dim() {
        return Err(PlqError::DimensionMismatch(format!(
            "set dimension {}, function dimension {}",
            x_set.dim(),
            f.dim()
        )));
    }
    let pieces = f.intersect_domain(x_set)?;
    for (_, p) in &pieces {
        if p.nrows() > settings.max_enumeration_rows {
            return Err(PlqError::TooManyConstraints {
                count: p.nrows(),
                limit: settings.max_enumeration_rows,
            });
        }
    }
    Ok(pieces)
}

fn lex(a: &Vector, b: &Vector) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// The unique stationary point of `q` on the flat, when the reduced
/// Hessian is positive definite.
fn flat_minimizer(q: &Quadratic, flat: &Flat) -> Result<Option<Vector>> {
    let z = &flat.null;
    let k = z.ncols();
    if k == 0 {
        return Ok(Some(flat.point.clone()));
    }
    let h = z.transpose() * q.q() * z;
    let e = eigh(&((&h + h.transpose()) * 0.5))?;
    if e.min_value() <= 1e-10 * (1.0 + max_abs(q.q())) {
        return Ok(None);
    }
    let g = z.transpose() * q.gradient(&flat.point);
    let pg = &e.rows * g;
    let y = e.rows.transpose() * Vector::from_iterator(k, (0..k).map(|i| -pg[i] / e.values[i]));
    Ok(Some(&flat.point + z * y))
}

fn piece_strict_candidates(q: &Quadratic, p: &Polyhedron, settings: &Settings) -> Result<Vec<Vector>> {
    let mut out = Vec::new();
    let tol = p.default_tol();
    for_each_flat(p, |flat| {
        if let Some(x) = flat_minimizer(q, flat)? {
            if p.is_member(&x, tol) && qp_strong_min(q, p, &x, settings)?.level == Level::StrongLocalMin {
                out.push(x);
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// All strict local minimizers of `f` on `X`, each certified by
/// [`plq_strong_min`], sorted by value and then lexicographically.
pub fn enumerate_strict_minima(f: &PlqFunction, x_set: &Polyhedron, settings: &Settings) -> Result<Vec<StrictMinimum>> {
    let pieces = restricted_pieces(f, x_set, settings)?;
    let per_piece: Vec<Vec<Vector>> = pieces
        .par_iter()
        .map(|(i, p)| piece_strict_candidates(&f.pieces()[*i].q, p, settings))
        .collect::<Result<_>>()?;
    let mut points: Vec<Vector> = Vec::new();
    for x in per_piece.into_iter().flatten() {
        if !points.iter().any(|y| max_abs_vec(&(y - &x)) <= POINT_DEDUP_TOL) {
            points.push(x);
        }
    }
    let certified: Vec<Option<StrictMinimum>> = points
        .par_iter()
        .map(|x| {
            let c = plq_strong_min(f, x_set, x, settings)?;
            if c.level != Level::StrongLocalMin {
                return Ok(None);
            }
            Ok(Some(StrictMinimum {
                value: f.eval(x)?,
                x: x.clone(),
                certificate: c,
            }))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<StrictMinimum> = certified.into_iter().flatten().collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex(&a.x, &b.x)));
    Ok(out)
}

/// Rows of `p` that are constant (and tight) on the flat: the flat's own
/// rows plus `≤` rows whose normals lie in their span.
fn tight_on_flat(p: &Polyhedron, flat: &Flat) -> Vec<usize> {
    let tol = p.default_tol();
    (0..p.nrows())
        .filter(|&i| {
            if flat.rows.contains(&i) {
                return true;
            }
            let a = p.a().row(i).transpose();
            let an = max_abs_vec(&a);
            let in_span = an == 0.0 || max_abs_vec(&(flat.null.transpose() * &a)) <= 1e-9 * an;
            in_span && (p.row_value(i, &flat.point) - p.b()[i]).abs() <= tol
        })
        .collect()
}

/// KKT points of `q` on `p` with the rows `tight` at equality, as an LP in
/// `(x, μ, t)`: `Qx + c + A_tightᵀμ = 0`, `μ ≥ 0` on `≤` rows, and every
/// other `≤` row has normalized slack at least `t ∈ [0, 1]`. Returns the
/// point maximizing `t` and the point the simplex reaches for `min t`.
fn kkt_family(q: &Quadratic, p: &Polyhedron, tight: &[usize]) -> Result<Option<(Vector, Vector)>> {
    let n = p.dim();
    let k = tight.len();
    let nv = n + k + 1;
    let t_col = n + k;
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for i in 0..p.nrows() {
        let mut r = vec![0.0; nv];
        for j in 0..n {
            r[j] = p.a()[(i, j)];
        }
        if tight.contains(&i) || p.sense(i) == Sense::Eq {
            rows.push((r, Sense::Eq, p.b()[i]));
        } else {
            let s = max_abs_vec(&p.a().row(i).transpose()).max(f64::MIN_POSITIVE);
            r.iter_mut().for_each(|v| *v /= s);
            r[t_col] = 1.0;
            rows.push((r, Sense::Le, p.b()[i] / s));
        }
    }
    for l in 0..n {
        let mut r = vec![0.0; nv];
        for j in 0..n {
            r[j] = q.q()[(l, j)];
        }
        for (m, &i) in tight.iter().enumerate() {
            r[n + m] = p.a()[(i, l)];
        }
        rows.push((r, Sense::Eq, -q.c()[l]));
    }
    for (m, &i) in tight.iter().enumerate() {
        if p.sense(i) == Sense::Le {
            let mut r = vec![0.0; nv];
            r[n + m] = -1.0;
            rows.push((r, Sense::Le, 0.0));
        }
    }
    let mut lo = vec![0.0; nv];
    lo[t_col] = -1.0;
    rows.push((lo, Sense::Le, 0.0));
    let mut hi = vec![0.0; nv];
    hi[t_col] = 1.0;
    rows.push((hi, Sense::Le, 1.0));
    let lp = Polyhedron::from_rows(&rows, nv)?;
    let mut cost = Vector::zeros(nv);
    cost[t_col] = -1.0;
    let top = lp_solve(&cost, &lp)?;
    if top.status != Status::Optimal {
        return Ok(None);
    }
    let bottom = lp_solve(&(-cost), &lp)?;
    let (Some(a), Some(b)) = (top.point, bottom.point) else {
        return Err(PlqError::Numerical("KKT family LP lost its optimum".into()));
    };
    Ok(Some((a.rows(0, n).into_owned(), b.rows(0, n).into_owned())))
}

/// d-stationarity of `f` on `X`: every active piece is stationary for its
/// restricted QP.
fn d_stationary(f: &PlqFunction, x_set: &Polyhedron, x: &Vector) -> Result<bool> {
    if !x_set.is_member(x, x_set.default_tol()) {
        return Ok(false);
    }
    let active = f.active_pieces(x);
    if active.is_empty() {
        return Ok(false);
    }
    for j in active {
        let piece = &f.pieces()[j];
        let p = x_set.intersect(&piece.domain)?;
        if !qp_stationary(&piece.q, &p, x)?.is_stationary() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn piece_families(f: &PlqFunction, x_set: &Polyhedron, i: usize, p: &Polyhedron) -> Result<Vec<StationaryFamily>> {
    let q = &f.pieces()[i].q;
    let mut out = Vec::new();
    for_each_flat(p, |flat| {
        let tight = tight_on_flat(p, flat);
        let Some((rep, other)) = kkt_family(q, p, &tight)? else {
            return Ok(());
        };
        let value = q.eval(&rep);
        let drift = (q.eval(&other) - value).abs();
        if drift > 1e-6 * (1.0 + value.abs()) {
            return Err(PlqError::Numerical(format!(
                "piece {i} value varies by {drift:.3e} along a KKT family"
            )));
        }
        if d_stationary(f, x_set, &rep)? {
            out.push(StationaryFamily {
                piece: i,
                tight_rows: tight,
                representative: rep,
                value,
            });
        }
        Ok(())
    })?;
    Ok(out)
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_DEDUP_TOL * 1f64.max(a.abs()).max(b.abs())
}

/// d-stationary KKT families of every restricted piece, sorted by value and
/// then by representative.
pub fn stationary_families(f: &PlqFunction, x_set: &Polyhedron, settings: &Settings) -> Result<Vec<StationaryFamily>> {
    let pieces = restricted_pieces(f, x_set, settings)?;
    let per_piece: Vec<Vec<StationaryFamily>> = pieces
        .par_iter()
        .map(|(i, p)| piece_families(f, x_set, *i, p))
        .collect::<Result<_>>()?;
    let mut out: Vec<StationaryFamily> = per_piece.into_iter().flatten().collect();
    out.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| lex(&a.representative, &b.representative))
            .then_with(|| a.piece.cmp(&b.piece))
    });
    Ok(out)
}

/// The finitely many d-stationary values of `f` on `X`, ascending.
pub fn enumerate_stationary_values(f: &PlqFunction, x_set: &Polyhedron, settings: &Settings) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = Vec::new();
    for fam in stationary_families(f, x_set, settings)? {
        if !values.last().is_some_and(|&v| same_value(v, fam.value)) {
            values.push(fam.value);
        }
    }
    Ok(values)
}
