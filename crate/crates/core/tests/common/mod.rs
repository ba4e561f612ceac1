//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

use plq_core::calculus::{PaMap, Piece, PlqFunction, Quadratic};
use plq_core::copositivity::absvalue_classify;
use plq_core::geometry::{lp_range, ConeHRep, Polyhedron, Sense};
use plq_core::linalg::{max_abs_vec, select_entries, select_rows, solve_min_norm, Mat, Vector};
use plq_core::statmodels::CompositeStructure;
use rand::Rng;

pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.gen_range(lo..hi)))
}

pub fn symmetric<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Mat {
    let mut q = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(lo..hi);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    q
}

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian-like matrix.
pub fn orthogonal<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let a = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

/// `Pᵀ diag(σ) P` with a random orthogonal `P`.
pub fn with_spectrum<R: Rng>(rng: &mut R, sigma: &[f64]) -> Mat {
    let n = sigma.len();
    let p = orthogonal(rng, n);
    let q = p.transpose() * Mat::from_diagonal(&Vector::from_vec(sigma.to_vec())) * &p;
    (&q + q.transpose()) * 0.5
}

pub fn random_cone<R: Rng>(rng: &mut R, n: usize, rows: usize) -> ConeHRep {
    let r: Vec<(Vec<f64>, Sense)> = (0..rows)
        .map(|_| {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (a, Sense::Le)
        })
        .collect();
    ConeHRep::from_rows(&r, n).unwrap()
}

fn le_row(a: &Vector, b: f64) -> (Vec<f64>, Sense, f64) {
    (a.iter().copied().collect(), Sense::Le, b)
}

/// A continuous PLQ function on `ℝⁿ`: space is split by one or two random
/// hyperplanes `h_k(x) = a_kᵀx − β_k = 0` into sign cells (thin cells are
/// dropped), and the cell on the positive side of cut `k` adds
/// `h_k(x)·m_k(x)` for an affine `m_k`. Each added term vanishes on its cut,
/// so neighbouring pieces agree on shared facets.
pub fn random_plq<R: Rng>(rng: &mut R, n: usize, max_pieces: usize) -> PlqFunction {
    loop {
        let cuts = if max_pieces <= 1 { 0 } else { rng.gen_range(1..=2usize.min(max_pieces - 1)) };
        let base = Quadratic::new(symmetric(rng, n, -2.0, 2.0), uniform_vec(rng, n, -2.0, 2.0), 0.0).unwrap();
        let mut hs = Vec::new();
        let mut ms = Vec::new();
        for _ in 0..cuts {
            hs.push((uniform_vec(rng, n, -2.0, 2.0), rng.gen_range(-0.5..0.5)));
            ms.push((uniform_vec(rng, n, -1.0, 1.0), rng.gen_range(-1.0..1.0)));
        }
        let mut pieces = Vec::new();
        for mask in 0u32..(1 << cuts) {
            let mut rows = Vec::new();
            let mut q = base.clone();
            for k in 0..cuts {
                let (a, beta) = &hs[k];
                let positive = mask >> k & 1 == 1;
                if positive {
                    // a·x ≥ β
                    rows.push(le_row(&(-a), -beta));
                    q = q.add(&product(a, -beta, &ms[k].0, ms[k].1));
                } else {
                    rows.push(le_row(a, *beta));
                }
            }
            let p = Polyhedron::from_rows(&rows, n).unwrap();
            if plq_core::geometry::interior_radius(&p).unwrap().is_some_and(|t| t > 1e-6) {
                pieces.push(Piece { domain: p, q });
            }
        }
        if !pieces.is_empty() && pieces.len() <= max_pieces {
            return PlqFunction::new(pieces).unwrap();
        }
    }
}

/// `(aᵀx + α)(gᵀx + γ)` as a quadratic.
pub fn product(a: &Vector, alpha: f64, g: &Vector, gamma: f64) -> Quadratic {
    let outer = a * g.transpose();
    let q = &outer + outer.transpose();
    Quadratic::new(q, a * gamma + g * alpha, alpha * gamma).unwrap()
}

/// A bounded random polyhedron `X` inside `[−1,1]ⁿ`, containing 0 in its
/// interior, with `extra` random cuts.
pub fn random_box_cut<R: Rng>(rng: &mut R, n: usize, extra: usize) -> Polyhedron {
    let mut rows = Vec::new();
    for _ in 0..extra {
        let a = uniform_vec(rng, n, -1.0, 1.0);
        rows.push(le_row(&a, rng.gen_range(0.2..1.0)));
    }
    Polyhedron::from_rows(&rows, n)
        .unwrap()
        .intersect(&Polyhedron::boxed(&vec![-1.0; n], &vec![1.0; n]))
        .unwrap()
}

/// Allocation-free evaluator for brute-force oracles: `None` outside the
/// domain or outside `X`. The first containing piece wins.
pub struct FastEval {
    n: usize,
    pieces: Vec<(Vec<(Vec<f64>, Sense, f64)>, Mat, Vector, f64)>,
    x_rows: Vec<(Vec<f64>, Sense, f64)>,
}

fn rows_of(p: &Polyhedron) -> Vec<(Vec<f64>, Sense, f64)> {
    (0..p.nrows())
        .map(|i| (p.a().row(i).iter().copied().collect(), p.sense(i), p.b()[i]))
        .collect()
}

fn inside(rows: &[(Vec<f64>, Sense, f64)], x: &[f64], tol: f64) -> bool {
    rows.iter().all(|(a, s, b)| {
        let r: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - b;
        match s {
            Sense::Le => r <= tol,
            Sense::Eq => r.abs() <= tol,
        }
    })
}

impl FastEval {
    pub fn new(f: &PlqFunction, x_set: &Polyhedron) -> Self {
        Self {
            n: f.dim(),
            pieces: f
                .pieces()
                .iter()
                .map(|p| (rows_of(&p.domain), p.q.q().clone(), p.q.c().clone(), p.q.alpha()))
                .collect(),
            x_rows: rows_of(x_set),
        }
    }

    pub fn in_set(&self, x: &[f64]) -> bool {
        inside(&self.x_rows, x, 1e-12)
    }

    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        if !self.in_set(x) {
            return None;
        }
        for (rows, q, c, alpha) in &self.pieces {
            if inside(rows, x, 1e-12) {
                let mut v = *alpha;
                for i in 0..self.n {
                    let mut qi = 0.0;
                    for j in 0..self.n {
                        qi += q[(i, j)] * x[j];
                    }
                    v += x[i] * (0.5 * qi + c[i]);
                }
                return Some(v);
            }
        }
        None
    }
}

/// Visits the grid `x̄ + h·k`, `k ∈ ℤⁿ`, inside the Euclidean ball of radius
/// `r`, stopping early when `visit` returns false. Returns false on an early
/// stop.
pub fn grid_ball(center: &[f64], h: f64, r: f64, mut visit: impl FnMut(&[f64]) -> bool) -> bool {
    let n = center.len();
    let m = (r / h).floor() as i64;
    let mut k = vec![-m; n];
    let mut x = vec![0.0; n];
    loop {
        let d2: f64 = k.iter().map(|&ki| (ki as f64 * h).powi(2)).sum();
        if d2 <= r * r {
            for i in 0..n {
                x[i] = center[i] + k[i] as f64 * h;
            }
            if !visit(&x) {
                return false;
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return true;
            }
            k[i] += 1;
            if k[i] <= m {
                break;
            }
            k[i] = -m;
            i += 1;
        }
    }
}

/// Random box `X = [l, u]` with `l_i ∈ [−1, −0.2]`, `u_i ∈ [0.2, 1]`.
pub fn random_box<R: Rng>(rng: &mut R, n: usize) -> Polyhedron {
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..-0.2)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    Polyhedron::boxed(&lo, &hi)
}

/// Points on the facets of each piece and on pairwise facet intersections.
pub fn kink_points<R: Rng>(rng: &mut R, f: &PlqFunction, per_piece: usize) -> Vec<Vector> {
    let n = f.dim();
    let mut out = Vec::new();
    for p in f.pieces() {
        let m = p.domain.nrows();
        for _ in 0..per_piece {
            if m == 0 {
                break;
            }
            let x0 = uniform_vec(rng, n, -1.5, 1.5);
            let k = if m >= 2 && n >= 2 && rng.gen_bool(0.3) { 2 } else { 1 };
            let mut rows: Vec<usize> = (0..m).collect();
            rows.sort_by_key(|_| rng.gen::<u32>());
            rows.truncate(k);
            let a = select_rows(p.domain.a(), &rows);
            let b = select_entries(p.domain.b(), &rows);
            let (dx, _) = solve_min_norm(&a, &(b - &a * &x0));
            let x = x0 + dx;
            if f.eval(&x).is_ok() {
                out.push(x);
            }
        }
    }
    out
}

/// A singleton structure `F(z) = Az + q`, `Φ(w) = Bw` at a point where the
/// first-order condition holds by construction.
pub fn singleton_structure<R: Rng>(rng: &mut R) -> (CompositeStructure, Vector) {
    let n = rng.gen_range(2..=4usize);
    let m = rng.gen_range(n..=n + 1);
    let mut a = symmetric(rng, m, -1.0, 1.0);
    if rng.gen_bool(0.4) {
        a += Mat::identity(m, m) * rng.gen_range(0.5..2.0);
    }
    let bk = Mat::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut w = Vector::zeros(n);
    let mut alpha = Vector::zeros(n);
    let mut target = Vector::zeros(n);
    for i in 0..n {
        if i > 0 && rng.gen_bool(0.3) {
            w[i] = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            alpha[i] = rng.gen_range(0.0..1.0);
            continue;
        }
        match rng.gen_range(0..4) {
            0 => {}
            1 => {
                alpha[i] = rng.gen_range(0.3..1.0);
                target[i] = alpha[i] * rng.gen_range(-0.9..0.9);
            }
            _ => {
                alpha[i] = rng.gen_range(0.3..1.0);
                target[i] = if rng.gen_bool(0.5) { alpha[i] } else { -alpha[i] };
            }
        }
    }
    // Bᵀg = target − α∘sign(w̄), so ℓ(v) = targetᵀv + Σ_{w̄ᵢ=0} αᵢ|vᵢ| ≥ 0.
    let rhs = Vector::from_fn(n, |i, _| target[i] - alpha[i] * if w[i] == 0.0 { 0.0 } else { w[i].signum() });
    let g = bk.transpose().pseudo_inverse(1e-12).expect("pseudo-inverse") * rhs;
    let q = &g - &a * (&bk * &w);
    let cs = CompositeStructure::new(
        PaMap::affine(a, q).expect("affine F"),
        PaMap::affine(bk, Vector::zeros(m)).expect("affine Φ"),
        alpha,
    )
    .expect("valid structure");
    (cs, w)
}

/// A random `(Q, b, α)` with a mix of the four index kinds. Half of the
/// instances get a semidefinite free block `RᵀR`, and half of those a cross
/// block `K R` so the null-eigenvector condition holds exactly.
pub fn absvalue_instance<R: Rng>(rng: &mut R) -> (Mat, Vector, Vector) {
    let n = rng.gen_range(1..=6);
    let mut b = Vector::zeros(n);
    let mut alpha = Vector::zeros(n);
    for i in 0..n {
        match rng.gen_range(0..4) {
            0 => {
                alpha[i] = rng.gen_range(0.5..2.0);
                b[i] = alpha[i] * rng.gen_range(-0.9..0.9);
            }
            1 => {
                alpha[i] = rng.gen_range(0.5..2.0);
                b[i] = -alpha[i];
            }
            2 => {
                alpha[i] = rng.gen_range(0.5..2.0);
                b[i] = alpha[i];
            }
            _ => {}
        }
    }
    let mut q = symmetric(rng, n, -2.0, 2.0);
    let cls = absvalue_classify(&b, &alpha).unwrap();
    let f = &cls.free_idx;
    if !f.is_empty() && rng.gen_bool(0.5) {
        let r = rng.gen_range(1..=f.len());
        let rm = Mat::from_fn(r, f.len(), |_, _| rng.gen_range(-1.0..1.0));
        let qff = rm.transpose() * &rm;
        for (a, &i) in f.iter().enumerate() {
            for (c, &j) in f.iter().enumerate() {
                q[(i, j)] = qff[(a, c)];
            }
        }
        if rng.gen_bool(0.5) {
            let others: Vec<usize> = (0..n).filter(|i| !f.contains(i)).collect();
            let k = Mat::from_fn(others.len(), r, |_, _| rng.gen_range(-1.0..1.0));
            let cross = &k * &rm;
            for (a, &i) in others.iter().enumerate() {
                for (c, &j) in f.iter().enumerate() {
                    q[(i, j)] = cross[(a, c)];
                    q[(j, i)] = cross[(a, c)];
                }
            }
        }
    }
    (q, b, alpha)
}

/// Largest value of `row·v` over the normalized slice of `k`.
pub fn cone_row_max(k: &ConeHRep, row: &Vector) -> std::result::Result<f64, String> {
    let (_, hi) = lp_range(row, &k.box_slice()).map_err(|e| e.to_string())?;
    hi.ok_or_else(|| "unbounded box slice".to_string())
}

/// `k1 ⊆ k2` checked row by row on the box slice of `k1`.
pub fn cone_contained(k1: &ConeHRep, k2: &ConeHRep, tol: f64) -> std::result::Result<bool, String> {
    for r in 0..k2.nrows() {
        let row = k2.a().row(r).transpose();
        let scale = max_abs_vec(&row).max(1e-300);
        let row = row / scale;
        if cone_row_max(k1, &row)? > tol {
            return Ok(false);
        }
        if k2.senses()[r] == Sense::Eq && cone_row_max(k1, &(-&row))? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
