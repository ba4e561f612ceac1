//! First-order conditions for `min q(x)` over a polyhedron and the
//! critical cone built from them.

use serde::{Deserialize, Serialize};

use crate::calculus::Quadratic;
use crate::error::{PlqError, Result};
use crate::geometry::{lp_solve, tangent_cone, ConeHRep, Polyhedron, Sense, Status};
use crate::linalg::{max_abs, max_abs_vec, Mat, Vector};

/// Relative tolerance on the ℓ1 stationarity residual.
pub const STATIONARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktPoint {
    #[serde(with = "crate::serde_util::vector")]
    pub x: Vector,
    /// One multiplier per row of the polyhedron, zero off the active set.
    /// Entries for `≤` rows are nonnegative; equality rows are free.
    #[serde(with = "crate::serde_util::vector")]
    pub multipliers: Vector,
    pub active: Vec<usize>,
    pub support: Vec<usize>,
    /// `‖∇q(x̄) + Aᵀλ‖∞`.
    pub stationarity_residual: f64,
    /// `max_i |λ_i (A_i x̄ − b_i)|`.
    pub complementarity_residual: f64,
}

/// A tangent direction of first-order decrease, `v ∈ T(x̄;P) ∩ [−1,1]ⁿ`
/// minimizing `∇q(x̄)ᵀv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descent {
    #[serde(with = "crate::serde_util::vector")]
    pub direction: Vector,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    Stationary(KktPoint),
    NotStationary(Descent),
}

impl Stationarity {
    pub fn kkt(&self) -> Option<&KktPoint> {
        match self {
            Stationarity::Stationary(k) => Some(k),
            Stationarity::NotStationary(_) => None,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.kkt().is_some()
    }
}

pub(crate) fn check_feasible(p: &Polyhedron, x: &Vector) -> Result<Vec<usize>> {
    if x.len() != p.dim() {
        return Err(PlqError::DimensionMismatch(format!(
            "point has length {}, polyhedron dimension is {}",
            x.len(),
            p.dim()
        )));
    }
    let (inside, active) = p.contains(x, p.default_tol());
    if !inside {
        return Err(PlqError::PointNotFeasible);
    }
    Ok(active)
}

/// `min ‖g + A_actᵀλ‖₁` over multipliers that are nonnegative on active `≤`
/// rows, as an LP in `(λ, r)` with `−r ≤ g + A_actᵀλ ≤ r`. Returns the full
/// multiplier vector and the optimal residual.
fn multiplier_lp(p: &Polyhedron, active: &[usize], g: &Vector) -> Result<(Vector, f64)> {
    let n = g.len();
    let k = active.len();
    let mut rows = Vec::with_capacity(k + 2 * n);
    for (j, &i) in active.iter().enumerate() {
        if p.sense(i) == Sense::Le {
            let mut r = vec![0.0; k + n];
            r[j] = -1.0;
            rows.push((r, Sense::Le, 0.0));
        }
    }
    for l in 0..n {
        let mut up = vec![0.0; k + n];
        let mut down = vec![0.0; k + n];
        for (j, &i) in active.iter().enumerate() {
            up[j] = p.a()[(i, l)];
            down[j] = -p.a()[(i, l)];
        }
        up[k + l] = -1.0;
        down[k + l] = -1.0;
        rows.push((up, Sense::Le, -g[l]));
        rows.push((down, Sense::Le, g[l]));
    }
    let lp = Polyhedron::from_rows(&rows, k + n)?;
    let cost = Vector::from_iterator(k + n, (0..k + n).map(|j| if j < k { 0.0 } else { 1.0 }));
    let r = lp_solve(&cost, &lp)?;
    if r.status != Status::Optimal {
        return Err(PlqError::Numerical(format!(
            "multiplier LP ended with status {:?}",
            r.status
        )));
    }
    let z = r.point.expect("optimal LP has a point");
    let mut lambda = Vector::zeros(p.nrows());
    for (j, &i) in active.iter().enumerate() {
        lambda[i] = if p.sense(i) == Sense::Le { z[j].max(0.0) } else { z[j] };
    }
    Ok((lambda, r.value.expect("optimal LP has a value")))
}

/// KKT test at `x̄ ∈ P`. The multiplier LP and the descent LP
/// `min ∇q(x̄)ᵀv` over `T(x̄;P) ∩ [−1,1]ⁿ` are dual, so failure of the first
/// always produces a descent direction from the second.
pub fn qp_stationary(q: &Quadratic, p: &Polyhedron, x: &Vector) -> Result<Stationarity> {
    let active = check_feasible(p, x)?;
    let g = q.gradient(x);
    let gn = max_abs_vec(&g);
    let (lambda, l1) = multiplier_lp(p, &active, &g)?;
    if l1 <= STATIONARITY_TOL * (1.0 + gn) {
        let residual = &g + p.a().transpose() * &lambda;
        let lam_tol = 1e-10 * (1.0 + gn);
        let support = active.iter().copied().filter(|&i| lambda[i].abs() > lam_tol).collect();
        let complementarity = (0..p.nrows())
            .map(|i| (lambda[i] * (p.row_value(i, x) - p.b()[i])).abs())
            .fold(0.0, f64::max);
        return Ok(Stationarity::Stationary(KktPoint {
            x: x.clone(),
            multipliers: lambda,
            active,
            support,
            stationarity_residual: max_abs_vec(&residual),
            complementarity_residual: complementarity,
        }));
    }
    let t = tangent_cone(p, x)?;
    let r = lp_solve(&g, &t.box_slice())?;
    match (r.status, r.point, r.value) {
        (Status::Optimal, Some(v), Some(slope)) if slope < 0.0 => {
            Ok(Stationarity::NotStationary(Descent { direction: v, slope }))
        }
        _ => Err(PlqError::Numerical(format!(
            "multiplier residual {l1:.3e} but no tangent descent direction"
        ))),
    }
}

/// Whether the gradient is numerically zero at the scale of the data, in
/// which case the `∇q(x̄)^⊥` row is omitted.
fn gradient_negligible(q: &Quadratic, x: &Vector, g: &Vector) -> bool {
    max_abs_vec(g) <= 1e-9 * (1.0 + max_abs_vec(q.c()) + max_abs(q.q()) * max_abs_vec(x))
}

/// `C(x̄;q;P) = T(x̄;P) ∩ ∇q(x̄)^⊥`. The gradient row is appended last,
/// scaled to unit ∞-norm.
pub fn critical_cone(q: &Quadratic, p: &Polyhedron, x: &Vector) -> Result<ConeHRep> {
    check_feasible(p, x)?;
    let mut c = tangent_cone(p, x)?;
    let g = q.gradient(x);
    if !gradient_negligible(q, x, &g) {
        c.push_row(&(&g / max_abs_vec(&g)), Sense::Eq);
    }
    Ok(c)
}

/// The multiplier form of the critical cone at a KKT point: active rows in
/// `supp(λ)` become equalities, the other active `≤` rows stay `A_i v ≤ 0`.
pub fn critical_cone_from_multipliers(p: &Polyhedron, kkt: &KktPoint) -> Result<ConeHRep> {
    let n = p.dim();
    let mut a = Mat::zeros(kkt.active.len(), n);
    let mut sense = Vec::with_capacity(kkt.active.len());
    for (r, &i) in kkt.active.iter().enumerate() {
        a.set_row(r, &p.a().row(i));
        sense.push(if kkt.support.contains(&i) { Sense::Eq } else { p.sense(i) });
    }
    ConeHRep::new(a, sense)
}
