//! Convex QP `min ½xᵀQx + cᵀx` over a polyhedron.
//!
//! Primal active-set iterations start from an LP feasible point. The
//! working set is kept linearly independent; multipliers come from the
//! least-squares solution of `∇q + A_Wᵀλ = 0`. If the iteration budget runs
//! out (degenerate cycling), small problems fall back to enumerating
//! working sets and checking KKT conditions directly.

use super::lp::{lp_solve, Status};
use super::polyhedron::{Polyhedron, Sense};
use crate::error::{PlqError, Result};
use crate::linalg::{
    eigh, max_abs, max_abs_vec, null_space, rank, select_rows, solve_min_norm, Mat, Vector,
};

#[derive(Debug, Clone, PartialEq)]
pub struct QpResult {
    pub status: Status,
    pub point: Option<Vector>,
    pub value: Option<f64>,
    pub active_set: Vec<usize>,
    /// One multiplier per row of the polyhedron (zero off the working set).
    pub multipliers: Option<Vector>,
}

impl QpResult {
    fn bare(status: Status) -> Self {
        Self {
            status,
            point: None,
            value: None,
            active_set: Vec::new(),
            multipliers: None,
        }
    }
}

/// Largest number of rows for which the exhaustive fallback runs.
pub const QP_FALLBACK_ROWS: usize = 20;

fn objective(q: &Mat, c: &Vector, x: &Vector) -> f64 {
    0.5 * (q * x).dot(x) + c.dot(x)
}

pub fn qp_convex_solve(q: &Mat, c: &Vector, p: &Polyhedron) -> Result<QpResult> {
    let n = p.dim();
    if q.nrows() != n || q.ncols() != n || c.len() != n {
        return Err(PlqError::DimensionMismatch(format!(
            "QP data has sizes Q {}x{}, c {}, polyhedron dimension {n}",
            q.nrows(),
            q.ncols(),
            c.len()
        )));
    }
    let e = eigh(q)?;
    let min_eig = e.min_value();
    if n > 0 && min_eig < -1e-9 * (1.0 + max_abs(q)) {
        return Err(PlqError::NotPsd {
            min_eigenvalue: min_eig,
        });
    }
    let start = lp_solve(&Vector::zeros(n), p)?;
    if start.status != Status::Optimal {
        return Ok(QpResult::bare(Status::Infeasible));
    }
    let x0 = start.point.expect("optimal LP has a point");
    match active_set(q, c, p, x0)? {
        Some(r) => Ok(r),
        None if p.nrows() <= QP_FALLBACK_ROWS => enumerate_working_sets(q, c, p),
        None => Err(PlqError::Numerical(
            "active-set iteration limit reached".into(),
        )),
    }
}

struct Scales {
    tol: f64,
    grad: f64,
}

fn finish(q: &Mat, c: &Vector, p: &Polyhedron, x: Vector, work: &[usize], lam: &Vector) -> QpResult {
    let mut mult = Vector::zeros(p.nrows());
    for (k, &i) in work.iter().enumerate() {
        mult[i] = lam[k];
    }
    let (_, active) = p.contains(&x, p.default_tol());
    QpResult {
        status: Status::Optimal,
        value: Some(objective(q, c, &x)),
        point: Some(x),
        active_set: active,
        multipliers: Some(mult),
    }
}

/// Returns `None` when the iteration budget is exhausted.
fn active_set(q: &Mat, c: &Vector, p: &Polyhedron, mut x: Vector) -> Result<Option<QpResult>> {
    let n = p.dim();
    let m = p.nrows();
    let a = p.a();
    let sc = Scales {
        tol: p.default_tol(),
        grad: 1.0 + max_abs_vec(c) + max_abs(q) * (1.0 + max_abs_vec(&x)),
    };

    let mut work: Vec<usize> = Vec::new();
    let try_add = |work: &mut Vec<usize>, i: usize| {
        let mut cand = work.clone();
        cand.push(i);
        if rank(&select_rows(a, &cand)) == cand.len() {
            *work = cand;
            true
        } else {
            false
        }
    };
    let (_, active0) = p.contains(&x, sc.tol);
    for &i in active0.iter().filter(|&&i| p.sense(i) == Sense::Eq) {
        try_add(&mut work, i);
    }
    for &i in active0.iter().filter(|&&i| p.sense(i) == Sense::Le) {
        try_add(&mut work, i);
    }

    let budget = 200 + 50 * (m + n);
    for _ in 0..budget {
        let g = q * &x + c;
        let aw = select_rows(a, &work);
        let z = null_space(&aw);
        let mut step: Option<(Vector, bool)> = None;
        if z.ncols() > 0 {
            let h = z.transpose() * q * &z;
            let gz = z.transpose() * &g;
            let (y, resid) = solve_min_norm(&h, &(-&gz));
            if resid <= 1e-9 * sc.grad * (1.0 + max_abs_vec(&y)) {
                let d = &z * y;
                if max_abs_vec(&d) > 1e-12 * (1.0 + max_abs_vec(&x)) {
                    step = Some((d, false));
                }
            } else {
                // −gz has a component in null(H): zero-curvature descent ray.
                let nh = null_space(&h);
                let proj = &nh * (nh.transpose() * (-&gz));
                let d = &z * proj;
                step = Some((d, true));
            }
        }
        match step {
            None => {
                let (lam, _) = solve_min_norm(&aw.transpose(), &(-&g));
                let lam_tol = 1e-10 * sc.grad;
                let worst = work
                    .iter()
                    .enumerate()
                    .filter(|(_, &i)| p.sense(i) == Sense::Le)
                    .map(|(k, &i)| (k, i, lam[k]))
                    .filter(|t| t.2 < -lam_tol)
                    .min_by(|u, v| u.2.partial_cmp(&v.2).unwrap().then(u.1.cmp(&v.1)));
                match worst {
                    None => {
                        let mut lam = lam;
                        for (k, &i) in work.iter().enumerate() {
                            if p.sense(i) == Sense::Le {
                                lam[k] = lam[k].max(0.0);
                            }
                        }
                        return Ok(Some(finish(q, c, p, x, &work, &lam)));
                    }
                    Some((k, _, _)) => {
                        work.remove(k);
                    }
                }
            }
            Some((d, is_ray)) => {
                let mut alpha = if is_ray { f64::INFINITY } else { 1.0 };
                let mut block: Option<usize> = None;
                for i in 0..m {
                    if work.contains(&i) || p.sense(i) == Sense::Eq {
                        continue;
                    }
                    let ad = a.row(i).transpose().dot(&d);
                    let scale = a.row(i).iter().fold(0.0_f64, |s, v| s.max(v.abs())) * max_abs_vec(&d);
                    if ad > 1e-12 * scale {
                        let slack = (p.b()[i] - a.row(i).transpose().dot(&x)).max(0.0);
                        let t = slack / ad;
                        if t < alpha || (t == alpha && block.is_some_and(|b| i < b)) {
                            alpha = t;
                            block = Some(i);
                        }
                    }
                }
                if alpha.is_infinite() {
                    return Ok(Some(QpResult::bare(Status::Unbounded)));
                }
                x += d * alpha;
                if let Some(i) = block {
                    // A blocking row has A_i d > 0 while d ∈ null(A_W), so it
                    // is independent of the working set.
                    try_add(&mut work, i);
                }
            }
        }
    }
    Ok(None)
}

/// Exhaustive KKT search over working sets of `≤` rows (all equality rows
/// always included). Convexity makes the first KKT point global.
fn enumerate_working_sets(q: &Mat, c: &Vector, p: &Polyhedron) -> Result<QpResult> {
    let n = p.dim();
    let m = p.nrows();
    let a = p.a();
    let eqs: Vec<usize> = (0..m).filter(|&i| p.sense(i) == Sense::Eq).collect();
    let les: Vec<usize> = (0..m).filter(|&i| p.sense(i) == Sense::Le).collect();
    let grad_scale = 1.0 + max_abs_vec(c) + max_abs(q);
    for mask in 0u64..(1u64 << les.len()) {
        let mut w = eqs.clone();
        w.extend(les.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i));
        let aw = select_rows(a, &w);
        if rank(&aw) < mask.count_ones() as usize + rank(&select_rows(a, &eqs)) {
            continue;
        }
        // Minimizers of q on the flat: A_W x = b_W, Zᵀ(Qx + c) = 0.
        let z = null_space(&aw);
        let mut flat = p.tighten(&w);
        let zq = z.transpose() * q;
        let zc = z.transpose() * c;
        for r in 0..z.ncols() {
            flat.push_row(&zq.row(r).transpose(), Sense::Eq, -zc[r]);
        }
        let lp = lp_solve(&Vector::zeros(n), &flat)?;
        if lp.status != Status::Optimal {
            continue;
        }
        let x = lp.point.expect("optimal");
        let g = q * &x + c;
        let (lam, resid) = solve_min_norm(&aw.transpose(), &(-&g));
        if resid > 1e-8 * grad_scale {
            continue;
        }
        let ok = w
            .iter()
            .enumerate()
            .all(|(k, &i)| p.sense(i) == Sense::Eq || lam[k] >= -1e-9 * grad_scale);
        if ok {
            return Ok(finish(q, c, p, x, &w, &lam));
        }
    }
    Ok(QpResult::bare(Status::Unbounded))
}
