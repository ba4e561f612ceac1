//! Sparsity penalties on a coefficient vector.

use serde::{Deserialize, Serialize};

use super::Alternative;
use crate::error::{PlqError, Result};
use crate::geometry::combinations;
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sparsity {
    /// `Σ min(1, |w_i|/τ)`.
    CappedL1 { tau: f64 },
    /// `‖w‖₁ − Σ_{k≤K} |w_[k]|`, zero exactly on `K`-sparse vectors.
    ExactPk { k: usize },
    /// Named surrogates without built-in formulas; evaluating them is an
    /// error until a formula is registered.
    Scad,
    Mcp,
}

/// Indices sorted by decreasing `|w_i|`, ties by index.
fn by_magnitude(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&i, &j| w[j].abs().total_cmp(&w[i].abs()).then(i.cmp(&j)));
    idx
}

/// `|t|′(dt)`.
fn abs_dir(t: f64, dt: f64) -> f64 {
    if t == 0.0 {
        dt.abs()
    } else {
        t.signum() * dt
    }
}

impl Sparsity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Sparsity::CappedL1 { tau } if !(tau.is_finite() && tau > 0.0) => {
                Err(PlqError::InvalidParameter(format!("capped ℓ1 needs τ > 0, got {tau}")))
            }
            Sparsity::Scad | Sparsity::Mcp => Err(PlqError::InvalidParameter(format!(
                "{self:?} has no registered formula"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, w: &[f64]) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Sparsity::CappedL1 { tau } => w.iter().map(|t| (t.abs() / tau).min(1.0)).sum(),
            Sparsity::ExactPk { k } => {
                let idx = by_magnitude(w);
                idx[k.min(w.len())..].iter().map(|&i| w[i].abs()).sum()
            }
            Sparsity::Scad | Sparsity::Mcp => unreachable!("rejected by validate"),
        })
    }

    /// One-sided directional derivative at `w` along `dw`.
    pub fn dir1(&self, w: &[f64], dw: &[f64]) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            Sparsity::CappedL1 { tau } => w
                .iter()
                .zip(dw)
                .map(|(&t, &d)| {
                    let a = t.abs() / tau;
                    let da = abs_dir(t, d) / tau;
                    if a < 1.0 {
                        da
                    } else if a > 1.0 {
                        0.0
                    } else {
                        da.min(0.0)
                    }
                })
                .sum(),
            Sparsity::ExactPk { k } => {
                let l1: f64 = w.iter().zip(dw).map(|(&t, &d)| abs_dir(t, d)).sum();
                let (above, tied, need) = top_k_split(w, k);
                let mut d_tied: Vec<f64> = tied.iter().map(|&i| abs_dir(w[i], dw[i])).collect();
                d_tied.sort_by(|a, b| b.total_cmp(a));
                let top: f64 = above.iter().map(|&i| abs_dir(w[i], dw[i])).sum::<f64>()
                    + d_tied[..need].iter().sum::<f64>();
                l1 - top
            }
            Sparsity::Scad | Sparsity::Mcp => unreachable!("rejected by validate"),
        })
    }

    /// Branches of the directional derivative of `γ·P(θ_coords)` in a
    /// `p`-dimensional parameter space. Each returned group is one choice
    /// point; within a branch the derivative is linear and valid on the cone
    /// `{δ : row·δ ≤ 0}`.
    pub(crate) fn branches(&self, theta: &Vector, coords: &[usize], gamma: f64) -> Result<Vec<Vec<Alternative>>> {
        self.validate()?;
        let p = theta.len();
        let unit = |i: usize, s: f64| {
            let mut v = Vector::zeros(p);
            v[coords[i]] = s;
            v
        };
        let w: Vec<f64> = coords.iter().map(|&i| theta[i]).collect();
        let mut groups = Vec::new();
        match *self {
            Sparsity::CappedL1 { tau } => {
                for (i, &t) in w.iter().enumerate() {
                    let c = gamma / tau;
                    let a = t.abs() / tau;
                    let g = if t == 0.0 {
                        vec![
                            Alternative::new(unit(i, c), vec![unit(i, -1.0)]),
                            Alternative::new(unit(i, -c), vec![unit(i, 1.0)]),
                        ]
                    } else if a < 1.0 {
                        vec![Alternative::new(unit(i, c * t.signum()), vec![])]
                    } else if a > 1.0 {
                        continue;
                    } else {
                        // At the cap: inward moves pay, outward moves are free.
                        let s = t.signum();
                        vec![
                            Alternative::new(unit(i, c * s), vec![unit(i, s)]),
                            Alternative::new(Vector::zeros(p), vec![unit(i, -s)]),
                        ]
                    };
                    groups.push(g);
                }
            }
            Sparsity::ExactPk { k } => {
                let (above, tied, need) = top_k_split(&w, k);
                // Sign choices for zero coordinates, then a choice of which
                // tied coordinates fill the top-K.
                let zeros: Vec<usize> = (0..w.len()).filter(|&i| w[i] == 0.0).collect();
                let mut alts = Vec::new();
                for mask in 0..(1usize << zeros.len()) {
                    let mut sign: Vec<f64> = w.iter().map(|t| t.signum()).collect();
                    let mut rows = Vec::new();
                    for (b, &i) in zeros.iter().enumerate() {
                        let s = if mask >> b & 1 == 1 { -1.0 } else { 1.0 };
                        sign[i] = s;
                        rows.push(unit(i, -s));
                    }
                    let d = |i: usize| unit(i, sign[i]);
                    let l1 = (0..w.len()).fold(Vector::zeros(p), |acc, i| acc + d(i));
                    let above_sum = above.iter().fold(Vector::zeros(p), |acc, &i| acc + d(i));
                    for chosen in combinations(&tied, need) {
                        let mut r = rows.clone();
                        for &i in &chosen {
                            for &j in tied.iter().filter(|j| !chosen.contains(j)) {
                                r.push(d(j) - d(i));
                            }
                        }
                        let top = chosen.iter().fold(above_sum.clone(), |acc, &i| acc + d(i));
                        alts.push(Alternative::new((&l1 - top) * gamma, r));
                    }
                }
                groups.push(alts);
            }
            Sparsity::Scad | Sparsity::Mcp => unreachable!("rejected by validate"),
        }
        Ok(groups)
    }
}

/// Coordinates strictly above the `K`-th largest magnitude, those tied with
/// it, and how many of the tied ones the top-`K` needs.
fn top_k_split(w: &[f64], k: usize) -> (Vec<usize>, Vec<usize>, usize) {
    let k = k.min(w.len());
    if k == 0 {
        return (Vec::new(), Vec::new(), 0);
    }
    let idx = by_magnitude(w);
    let thr = w[idx[k - 1]].abs();
    let above: Vec<usize> = idx.iter().copied().filter(|&i| w[i].abs() > thr).collect();
    let tied: Vec<usize> = idx.iter().copied().filter(|&i| w[i].abs() == thr).collect();
    let need = k - above.len();
    (above, tied, need)
}
