//! Polyhedral primitives: membership, tangent cones, `dist₁`, affine hulls,
//! face enumeration, and the LP/QP solvers behind them.

mod lp;
mod polyhedron;
mod qp;

use std::collections::{BTreeSet, VecDeque};

pub use lp::{feasible_point, lp_range, lp_solve, LpResult, Status};
pub use polyhedron::{ConeHRep, Polyhedron, Sense};
pub use qp::{qp_convex_solve, QpResult, QP_FALLBACK_ROWS};

use crate::error::{PlqError, Result};
use crate::linalg::{max_abs_vec, null_space, select_rows, solve_min_norm, Mat, Vector};

/// Default row guard for [`faces`].
pub const FACES_MAX_ROWS: usize = 25;

/// `T(x̄;P)`: active `≤` rows as `A_i v ≤ 0` and every equality row.
pub fn tangent_cone(p: &Polyhedron, x: &Vector) -> Result<ConeHRep> {
    tangent_cone_tol(p, x, p.default_tol())
}

pub fn tangent_cone_tol(p: &Polyhedron, x: &Vector, tol: f64) -> Result<ConeHRep> {
    check_dim(p, x)?;
    let (inside, active) = p.contains(x, tol);
    if !inside {
        return Err(PlqError::PointNotInSet);
    }
    let rows: Vec<usize> = active;
    let a = select_rows(p.a(), &rows);
    let sense = rows.iter().map(|&i| p.sense(i)).collect();
    ConeHRep::new(a, sense)
}

fn check_dim(p: &Polyhedron, x: &Vector) -> Result<()> {
    if x.len() != p.dim() {
        return Err(PlqError::DimensionMismatch(format!(
            "point has length {}, polyhedron dimension is {}",
            x.len(),
            p.dim()
        )));
    }
    Ok(())
}

/// `min ‖s − x‖₁` over `s ∈ P`, solved as an LP in `(s, t)` with
/// `−t ≤ s − x ≤ t`. Returns the value and a nearest point.
pub fn dist1(x: &Vector, p: &Polyhedron) -> Result<(f64, Vector)> {
    check_dim(p, x)?;
    let n = p.dim();
    if p.is_member(x, p.default_tol()) {
        return Ok((0.0, x.clone()));
    }
    let m = p.nrows();
    let mut a = Mat::zeros(m + 2 * n, 2 * n);
    let mut b = Vector::zeros(m + 2 * n);
    let mut sense = Vec::with_capacity(m + 2 * n);
    a.view_mut((0, 0), (m, n)).copy_from(p.a());
    b.rows_mut(0, m).copy_from(p.b());
    sense.extend_from_slice(p.senses());
    for j in 0..n {
        // s_j − t_j ≤ x_j and −s_j − t_j ≤ −x_j
        a[(m + 2 * j, j)] = 1.0;
        a[(m + 2 * j, n + j)] = -1.0;
        b[m + 2 * j] = x[j];
        a[(m + 2 * j + 1, j)] = -1.0;
        a[(m + 2 * j + 1, n + j)] = -1.0;
        b[m + 2 * j + 1] = -x[j];
        sense.push(Sense::Le);
        sense.push(Sense::Le);
    }
    let lifted = Polyhedron::new(a, b, sense)?;
    let mut c = Vector::zeros(2 * n);
    for j in 0..n {
        c[n + j] = 1.0;
    }
    let r = lp_solve(&c, &lifted)?;
    if r.status != Status::Optimal {
        return Err(PlqError::EmptyPolyhedron);
    }
    let z = r.point.expect("optimal");
    let s = z.rows(0, n).into_owned();
    let value = (&s - x).iter().map(|v| v.abs()).sum();
    Ok((value, s))
}

/// Affine pieces `(a_k, α_k)` with `dist₁(x;P) = max(0, max_k a_kᵀx + α_k)`
/// for nonempty `P`.
///
/// By LP duality `dist₁(x;P) = max {μᵀ(Ax − b) : μ ≥ 0, ‖Aᵀμ‖∞ ≤ 1}` (with
/// equalities split into two `≤` rows). The dual region is pointed and its
/// recession directions cannot increase the objective on nonempty `P`, so the
/// maximum sits at one of finitely many vertices; each vertex contributes one
/// affine term. Vertices are found by solving `A_{S,J}ᵀ μ_S = s_J` for
/// equal-size row/column supports and sign vectors.
pub fn dist1_affine_terms(p: &Polyhedron) -> Result<Vec<(Vector, f64)>> {
    let sp = p.split_equalities();
    let m = sp.nrows();
    let n = sp.dim();
    let a = sp.a();
    let mut terms: Vec<(Vector, f64)> = Vec::new();
    let k_max = m.min(n);
    let cols_all: Vec<usize> = (0..n).collect();
    let rows_all: Vec<usize> = (0..m).collect();
    for k in 1..=k_max {
        for cols in combinations(&cols_all, k) {
            for rows in combinations(&rows_all, k) {
                let sub = Mat::from_fn(k, k, |i, j| a[(rows[j], cols[i])]);
                if crate::linalg::rank(&sub) < k {
                    continue;
                }
                for signs in 0u32..(1u32 << k) {
                    let rhs = Vector::from_iterator(
                        k,
                        (0..k).map(|i| if signs >> i & 1 == 1 { -1.0 } else { 1.0 }),
                    );
                    let (mu_s, _) = solve_min_norm(&sub, &rhs);
                    if mu_s.iter().any(|&v| v < -1e-12) {
                        continue;
                    }
                    let mut mu = Vector::zeros(m);
                    for (i, &r) in rows.iter().enumerate() {
                        mu[r] = mu_s[i].max(0.0);
                    }
                    let atm = a.transpose() * &mu;
                    if max_abs_vec(&atm) > 1.0 + 1e-9 {
                        continue;
                    }
                    let coef = atm;
                    let alpha = -mu.dot(sp.b());
                    let dup = terms.iter().any(|(c, al)| {
                        max_abs_vec(&(c - &coef)) <= 1e-10 && (al - alpha).abs() <= 1e-10
                    });
                    if !dup {
                        terms.push((coef, alpha));
                    }
                }
            }
        }
    }
    Ok(terms)
}

/// All `k`-subsets of `items` in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = items.len();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Indices of rows held at equality on all of `P` (equality rows included),
/// or `None` when `P` is empty.
///
/// Repeatedly maximizes `Σ t_i` subject to `A_i x + t_i ≤ b_i`, `0 ≤ t_i ≤ 1`
/// over the candidate rows; any row with positive slack is discarded, and the
/// loop stops when the optimum is zero.
pub fn implicit_equalities(p: &Polyhedron) -> Result<Option<Vec<usize>>> {
    let n = p.dim();
    let m = p.nrows();
    let mut cand: Vec<usize> = (0..m).filter(|&i| p.sense(i) == Sense::Le).collect();
    let norms: Vec<f64> = (0..m)
        .map(|i| p.a().row(i).iter().fold(0.0_f64, |s, v| s.max(v.abs())))
        .collect();
    if feasible_point(p)?.is_none() {
        return Ok(None);
    }
    // Zero rows `0 ≤ b_i`: implicit equality exactly when b_i = 0.
    let mut implicit: Vec<usize> = Vec::new();
    cand.retain(|&i| {
        if norms[i] == 0.0 {
            if p.b()[i].abs() <= p.default_tol() {
                implicit.push(i);
            }
            false
        } else {
            true
        }
    });
    while !cand.is_empty() {
        let k = cand.len();
        let mut a = Mat::zeros(m + 2 * k, n + k);
        let mut b = Vector::zeros(m + 2 * k);
        let mut sense = Vec::with_capacity(m + 2 * k);
        for i in 0..m {
            let s = if norms[i] > 0.0 { norms[i] } else { 1.0 };
            for j in 0..n {
                a[(i, j)] = p.a()[(i, j)] / s;
            }
            b[i] = p.b()[i] / s;
            sense.push(p.sense(i));
        }
        for (t, &i) in cand.iter().enumerate() {
            a[(i, n + t)] = 1.0;
            a[(m + 2 * t, n + t)] = 1.0;
            b[m + 2 * t] = 1.0;
            a[(m + 2 * t + 1, n + t)] = -1.0;
            sense.push(Sense::Le);
            sense.push(Sense::Le);
        }
        let lifted = Polyhedron::new(a, b, sense)?;
        let mut c = Vector::zeros(n + k);
        for t in 0..k {
            c[n + t] = -1.0;
        }
        let r = lp_solve(&c, &lifted)?;
        let z = match (r.status, r.point) {
            (Status::Optimal, Some(z)) => z,
            _ => return Err(PlqError::Numerical("slack LP failed".into())),
        };
        let before = cand.len();
        let kept: Vec<usize> = cand
            .iter()
            .enumerate()
            .filter(|(t, _)| z[n + t] <= 1e-9)
            .map(|(_, &i)| i)
            .collect();
        if kept.len() == before {
            break;
        }
        cand = kept;
    }
    implicit.extend(cand);
    implicit.extend((0..m).filter(|&i| p.sense(i) == Sense::Eq));
    implicit.sort_unstable();
    implicit.dedup();
    Ok(Some(implicit))
}

/// Largest `t ≤ 1` with `A_i x + t‖A_i‖∞ ≤ b_i` on every `≤` row (equality
/// rows kept as they are). Positive exactly when the `≤` rows have a common
/// strictly interior point; `None` when even the relaxed system is empty.
pub fn interior_radius(p: &Polyhedron) -> Result<Option<f64>> {
    let n = p.dim();
    let m = p.nrows();
    let mut a = Mat::zeros(m + 1, n + 1);
    let mut b = Vector::zeros(m + 1);
    let mut sense = Vec::with_capacity(m + 1);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = p.a()[(i, j)];
        }
        if p.sense(i) == Sense::Le {
            a[(i, n)] = p.a().row(i).iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        }
        b[i] = p.b()[i];
        sense.push(p.sense(i));
    }
    a[(m, n)] = 1.0;
    b[m] = 1.0;
    sense.push(Sense::Le);
    let lifted = Polyhedron::new(a, b, sense)?;
    let mut c = Vector::zeros(n + 1);
    c[n] = -1.0;
    let r = lp_solve(&c, &lifted)?;
    Ok(match r.status {
        Status::Optimal => r.point.map(|z| z[n]),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineHull {
    pub point: Vector,
    /// Orthonormal basis of the direction space, as columns.
    pub directions: Mat,
    /// Rows of `P` that are equalities on all of `P`.
    pub equalities: Vec<usize>,
}

impl AffineHull {
    pub fn directions_list(&self) -> Vec<Vector> {
        (0..self.directions.ncols())
            .map(|j| self.directions.column(j).into_owned())
            .collect()
    }
}

pub fn affine_hull(p: &Polyhedron) -> Result<AffineHull> {
    let eqs = implicit_equalities(p)?.ok_or(PlqError::EmptyPolyhedron)?;
    let point = feasible_point(p)?.ok_or(PlqError::EmptyPolyhedron)?;
    let directions = null_space(&select_rows(p.a(), &eqs));
    Ok(AffineHull {
        point,
        directions,
        equalities: eqs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Canonical (inclusion-maximal) set of rows tight on the face.
    pub active: Vec<usize>,
    pub polyhedron: Polyhedron,
}

/// All nonempty faces, each reported once under its canonical active set,
/// sorted by `(|active|, active)`.
pub fn faces(p: &Polyhedron) -> Result<Vec<Face>> {
    faces_with_limit(p, FACES_MAX_ROWS)
}

pub fn faces_with_limit(p: &Polyhedron, limit: usize) -> Result<Vec<Face>> {
    if p.nrows() > limit {
        return Err(PlqError::TooManyConstraints {
            count: p.nrows(),
            limit,
        });
    }
    let Some(root) = implicit_equalities(p)? else {
        return Ok(Vec::new());
    };
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(root.clone());
    queue.push_back(root);
    while let Some(set) = queue.pop_front() {
        for j in 0..p.nrows() {
            if p.sense(j) == Sense::Eq || set.binary_search(&j).is_ok() {
                continue;
            }
            let mut rows = set.clone();
            rows.push(j);
            let tight = p.tighten(&rows);
            if let Some(can) = implicit_equalities(&tight)? {
                if seen.insert(can.clone()) {
                    queue.push_back(can);
                }
            }
        }
    }
    let mut out: Vec<Face> = seen
        .into_iter()
        .map(|active| Face {
            polyhedron: p.tighten(&active),
            active,
        })
        .collect();
    out.sort_by(|a, b| a.active.len().cmp(&b.active.len()).then(a.active.cmp(&b.active)));
    Ok(out)
}

/// A flat `{A_eq x = b_eq, A_W x = b_W}` meeting the polyhedron.
#[derive(Debug, Clone)]
pub struct Flat {
    /// Equality rows followed by the chosen `≤` rows, in increasing order.
    pub rows: Vec<usize>,
    /// Orthonormal basis (columns) of the flat's direction space.
    pub null: Mat,
    /// A point of the polyhedron on the flat.
    pub point: Vector,
}

/// Visits every flat spanned by the equality rows plus a linearly
/// independent set of `≤` rows whose flat meets `P`. Sets are grown one row
/// at a time in increasing index order; a set whose flat misses `P` is not
/// extended, and a row that does not cut the current flat is skipped. Every
/// face of `P` has its affine hull among the visited flats.
pub fn for_each_flat(p: &Polyhedron, mut visit: impl FnMut(&Flat) -> Result<()>) -> Result<()> {
    let Some(start) = feasible_point(p)? else {
        return Ok(());
    };
    let eq_rows: Vec<usize> = (0..p.nrows()).filter(|&i| p.sense(i) == Sense::Eq).collect();
    let le_rows: Vec<usize> = (0..p.nrows()).filter(|&i| p.sense(i) == Sense::Le).collect();
    let mut stack: Vec<(Vec<usize>, Vector)> = vec![(Vec::new(), start)];
    while let Some((chosen, point)) = stack.pop() {
        let mut rows = eq_rows.clone();
        rows.extend(chosen.iter().map(|&k| le_rows[k]));
        let null = null_space(&select_rows(p.a(), &rows));
        let flat = Flat { rows, null, point };
        visit(&flat)?;
        if flat.null.ncols() == 0 {
            continue;
        }
        let first = chosen.last().map_or(0, |&l| l + 1);
        // Reverse push so lower indices are explored first.
        for pos in (first..le_rows.len()).rev() {
            let row = p.a().row(le_rows[pos]).transpose();
            let rn = max_abs_vec(&row);
            if rn == 0.0 || max_abs_vec(&(flat.null.transpose() * &row)) <= 1e-9 * rn {
                continue;
            }
            let mut next = chosen.clone();
            next.push(pos);
            let tight: Vec<usize> = next.iter().map(|&k| le_rows[k]).collect();
            if let Some(x) = feasible_point(&p.tighten(&tight))? {
                stack.push((next, x));
            }
        }
    }
    Ok(())
}
