//! Dense two-phase primal simplex with Bland's rule.
//!
//! Free variables are split as `x = x⁺ − x⁻`, `≤` rows get a slack, and
//! rows without an obvious starting basic column get an artificial. Rows
//! are scaled to unit max-coefficient before pivoting; results are always
//! reported in terms of the caller's unscaled polyhedron.

use serde::{Deserialize, Serialize};

use super::polyhedron::{Polyhedron, Sense};
use crate::error::{PlqError, Result};
use crate::linalg::{max_abs_vec, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: Status,
    pub point: Option<Vector>,
    pub value: Option<f64>,
    pub active_set: Vec<usize>,
    /// Recession direction along which the objective decreases without
    /// bound, when `status == Unbounded`.
    pub ray: Option<Vector>,
}

impl LpResult {
    fn infeasible() -> Self {
        Self {
            status: Status::Infeasible,
            point: None,
            value: None,
            active_set: Vec::new(),
            ray: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

const PIVOT_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reset the objective row to `cost` and price out the basis.
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for r in 0..self.rows.len() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (v, rv) in self.obj.iter_mut().zip(self.rows[r].iter()) {
                    *v -= cb * rv;
                }
            }
        }
    }

    /// Bland-rule iterations. Returns `Ok(None)` at optimality or
    /// `Ok(Some(col))` when column `col` proves unboundedness.
    fn run(&mut self, allowed: &[bool], cost_eps: f64) -> Result<Option<usize>> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.ncols).find(|&j| allowed[j] && self.obj[j] < -cost_eps);
            let Some(j) = entering else {
                return Ok(None);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                            if ratio < bratio && !tie
                                || tie && self.basis[r] < self.basis[br]
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(Some(j)),
                Some((r, _)) => self.pivot(r, j),
            }
        }
        Err(PlqError::Numerical("simplex pivot limit reached".into()))
    }
}

/// Minimize `cᵀx` over `P`.
pub fn lp_solve(c: &Vector, p: &Polyhedron) -> Result<LpResult> {
    let n = p.dim();
    if c.len() != n {
        return Err(PlqError::DimensionMismatch(format!(
            "objective has length {}, polyhedron dimension is {n}",
            c.len()
        )));
    }
    let tol = p.default_tol();

    // Scaled rows in the form `a x (+ s) = r`, plus which rows carry a slack.
    let mut kept: Vec<(Vec<f64>, f64, Sense)> = Vec::new();
    for i in 0..p.nrows() {
        let row: Vec<f64> = p.a().row(i).iter().copied().collect();
        let scale = row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let rhs = p.b()[i];
        if scale == 0.0 {
            let ok = match p.sense(i) {
                Sense::Le => rhs >= -tol,
                Sense::Eq => rhs.abs() <= tol,
            };
            if !ok {
                return Ok(LpResult::infeasible());
            }
            continue;
        }
        kept.push((row.iter().map(|v| v / scale).collect(), rhs / scale, p.sense(i)));
    }
    let m = kept.len();
    let n_slack = kept.iter().filter(|k| k.2 == Sense::Le).count();
    let n_struct = 2 * n + n_slack;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = vec![usize::MAX; m];
    let mut needs_art = Vec::new();
    let mut slack = 2 * n;
    for (r, (row, rhs, sense)) in kept.iter().enumerate() {
        let mut t = vec![0.0; n_struct];
        for j in 0..n {
            t[j] = row[j];
            t[n + j] = -row[j];
        }
        let mut rhs = *rhs;
        let slack_col = if *sense == Sense::Le {
            t[slack] = 1.0;
            slack += 1;
            Some(slack - 1)
        } else {
            None
        };
        if rhs < 0.0 {
            for v in t.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
        }
        match slack_col {
            Some(s) if t[s] > 0.0 => basis[r] = s,
            _ => needs_art.push(r),
        }
        t.push(rhs);
        rows.push(t);
    }
    let n_art = needs_art.len();
    let ncols = n_struct + n_art;
    for row in rows.iter_mut() {
        let rhs = row.pop().expect("rhs present");
        row.resize(ncols, 0.0);
        row.push(rhs);
    }
    for (k, &r) in needs_art.iter().enumerate() {
        rows[r][n_struct + k] = 1.0;
        basis[r] = n_struct + k;
    }
    let mut tab = Tableau {
        rows,
        obj: Vec::new(),
        basis,
        ncols,
    };

    if n_art > 0 {
        let mut cost = vec![0.0; ncols];
        for v in cost.iter_mut().skip(n_struct) {
            *v = 1.0;
        }
        tab.set_objective(&cost);
        let allowed = vec![true; ncols];
        tab.run(&allowed, 1e-11)?;
        let infeas = -tab.obj[ncols];
        let rscale = tab.rows.iter().fold(0.0_f64, |acc, r| acc.max(r[ncols].abs()));
        if infeas > 1e-9 * (1.0 + rscale) {
            return Ok(LpResult::infeasible());
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are redundant and stay inert.
        for r in 0..m {
            if tab.basis[r] >= n_struct {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..n_struct {
                    let a = tab.rows[r][j].abs();
                    if a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                        best = Some((j, a));
                    }
                }
                if let Some((j, _)) = best {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    tab.set_objective(&cost);
    let mut allowed = vec![true; ncols];
    for a in allowed.iter_mut().skip(n_struct) {
        *a = false;
    }
    let cost_eps = 1e-11 * (1.0 + max_abs_vec(c));
    let unbounded_col = tab.run(&allowed, cost_eps)?;

    let mut z = vec![0.0; ncols];
    for r in 0..m {
        z[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let x = Vector::from_iterator(n, (0..n).map(|j| z[j] - z[n + j]));

    if let Some(j) = unbounded_col {
        let mut dz = vec![0.0; ncols];
        dz[j] = 1.0;
        for r in 0..m {
            dz[tab.basis[r]] = -tab.rows[r][j];
        }
        let ray = Vector::from_iterator(n, (0..n).map(|k| dz[k] - dz[n + k]));
        return Ok(LpResult {
            status: Status::Unbounded,
            point: Some(x),
            value: None,
            active_set: Vec::new(),
            ray: Some(ray),
        });
    }

    let (_, active) = p.contains(&x, tol);
    Ok(LpResult {
        status: Status::Optimal,
        value: Some(c.dot(&x)),
        point: Some(x),
        active_set: active,
        ray: None,
    })
}

/// Any point of `P`, or `None` when `P` is empty.
pub fn feasible_point(p: &Polyhedron) -> Result<Option<Vector>> {
    let r = lp_solve(&Vector::zeros(p.dim()), p)?;
    Ok(r.point.filter(|_| r.status == Status::Optimal))
}

/// `min cᵀx` and `max cᵀx` over `P`; `None` components are unbounded.
/// Errors with `EmptyPolyhedron` when `P` is empty.
pub fn lp_range(c: &Vector, p: &Polyhedron) -> Result<(Option<f64>, Option<f64>)> {
    let lo = lp_solve(c, p)?;
    if lo.status == Status::Infeasible {
        return Err(PlqError::EmptyPolyhedron);
    }
    let hi = lp_solve(&(-c), p)?;
    Ok((lo.value, hi.value.map(|v| -v)))
}
