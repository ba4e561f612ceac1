//! Elementary representation `f = min_i [q_i + φ̂_i]` of a PLQ function,
//! where each `φ̂_i` is a max of signed sums of squared affine / squared PCA
//! functions and vanishes exactly on `P_i`.
//!
//! Construction: `φ̂_i = dist₁(·;P_i) · max_j g_ji` with
//! `g_ji = ‖∇q_j − ∇q_i‖₁ + (3L_i/2)·dist₁(·;P_i)` and `L_i = max_j ‖Q_j − Q_i‖₂`.
//! Both factors are written as maxima of PCA functions `ℓ₊`:
//! `dist₁` through [`dist1_affine_terms`], the 1-norm through sign vectors.
//! Products then use, for `a = ℓ₊` and `b = ℓ′₊`,
//! `ab = ½ max{(ℓ+ℓ′)₊² − ℓ₊² − ℓ′₊², −ℓ₊², −ℓ′₊²}`,
//! with the `½` absorbed by scaling every affine by `1/√2`.
//! The identity `min_i [q_i + φ̂_i] = f` needs segments between points of
//! `dom f` to stay in `dom f`, which holds when the domain is convex.

use serde::{Deserialize, Serialize};

use super::plq::PlqFunction;
use super::quadratic::Quadratic;
use crate::error::{PlqError, Result};
use crate::geometry::dist1_affine_terms;
use crate::linalg::{max_abs_vec, spectral_norm_sym, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    SquaredAffine,
    SquaredPca,
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingBlock {
    pub kind: BlockKind,
    #[serde(with = "crate::serde_util::vector")]
    pub a: Vector,
    pub alpha: f64,
}

impl BuildingBlock {
    pub fn new(kind: BlockKind, a: Vector, alpha: f64) -> Self {
        Self { kind, a, alpha }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        let t = self.a.dot(x) + self.alpha;
        match self.kind {
            BlockKind::SquaredAffine => t * t,
            BlockKind::SquaredPca => t.max(0.0).powi(2),
            BlockKind::Affine => t,
        }
    }
}

/// `Σ plus − Σ minus`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignedSum {
    pub plus: Vec<BuildingBlock>,
    pub minus: Vec<BuildingBlock>,
}

impl SignedSum {
    pub fn eval(&self, x: &Vector) -> f64 {
        let p: f64 = self.plus.iter().map(|b| b.eval(x)).sum();
        let m: f64 = self.minus.iter().map(|b| b.eval(x)).sum();
        p - m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationPiece {
    pub base: Quadratic,
    /// The inner family whose pointwise max is `φ̂_i`.
    pub families: Vec<SignedSum>,
    pub lipschitz: f64,
}

impl RepresentationPiece {
    pub fn phi_hat(&self, x: &Vector) -> f64 {
        self.families
            .iter()
            .map(|f| f.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryRepresentation {
    pub pieces: Vec<RepresentationPiece>,
}

impl ElementaryRepresentation {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.base.eval(x) + p.phi_hat(x))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
struct Aff {
    a: Vector,
    alpha: f64,
}

impl Aff {
    fn is_zero(&self) -> bool {
        max_abs_vec(&self.a) == 0.0 && self.alpha == 0.0
    }
}

fn push_unique(v: &mut Vec<Aff>, f: Aff) {
    let dup = v
        .iter()
        .any(|g| max_abs_vec(&(&g.a - &f.a)) <= 1e-12 && (g.alpha - f.alpha).abs() <= 1e-12);
    if !dup {
        v.push(f);
    }
}

fn pca_sq(f: &Aff) -> BuildingBlock {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    BuildingBlock::new(BlockKind::SquaredPca, &f.a * s, f.alpha * s)
}

pub fn elementary_representation(
    f: &PlqFunction,
    max_pieces: usize,
    max_rows: usize,
) -> Result<ElementaryRepresentation> {
    if f.len() > max_pieces {
        return Err(PlqError::TooManyPieces {
            count: f.len(),
            limit: max_pieces,
        });
    }
    for p in f.pieces() {
        if p.domain.nrows() > max_rows {
            return Err(PlqError::TooManyConstraints {
                count: p.domain.nrows(),
                limit: max_rows,
            });
        }
    }
    if !f.validate()?.continuous {
        return Err(PlqError::InvalidParameter(
            "elementary representation needs a continuous function".into(),
        ));
    }
    let n = f.dim();
    let mut out = Vec::with_capacity(f.len());
    for (i, pi) in f.pieces().iter().enumerate() {
        let mut lipschitz = 0.0_f64;
        for pj in f.pieces() {
            lipschitz = lipschitz.max(spectral_norm_sym(&(pj.q.q() - pi.q.q()))?);
        }
        let dist_terms: Vec<Aff> = dist1_affine_terms(&pi.domain)?
            .into_iter()
            .map(|(a, alpha)| Aff { a, alpha })
            .collect();
        // g-family: sᵀ(ΔQx + Δc) + (3L/2)·ℓ_k, with ℓ_0 = 0.
        let mut g_terms: Vec<Aff> = Vec::new();
        let mut dist_with_zero = vec![Aff {
            a: Vector::zeros(n),
            alpha: 0.0,
        }];
        dist_with_zero.extend(dist_terms.iter().cloned());
        for (j, pj) in f.pieces().iter().enumerate() {
            let dq = pj.q.q() - pi.q.q();
            let dc = pj.q.c() - pi.q.c();
            let live: Vec<usize> = (0..n)
                .filter(|&r| j != i && (dq.row(r).iter().any(|v| *v != 0.0) || dc[r] != 0.0))
                .collect();
            for signs in 0u64..(1u64 << live.len()) {
                let mut a = Vector::zeros(n);
                let mut alpha = 0.0;
                for (k, &r) in live.iter().enumerate() {
                    let s = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                    a += dq.row(r).transpose() * s;
                    alpha += s * dc[r];
                }
                for l in &dist_with_zero {
                    push_unique(
                        &mut g_terms,
                        Aff {
                            a: &a + &l.a * (1.5 * lipschitz),
                            alpha: alpha + 1.5 * lipschitz * l.alpha,
                        },
                    );
                }
            }
        }
        g_terms.retain(|g| !g.is_zero());

        let mut families = Vec::new();
        for l in &dist_terms {
            families.push(SignedSum {
                plus: Vec::new(),
                minus: vec![pca_sq(l)],
            });
        }
        for g in &g_terms {
            families.push(SignedSum {
                plus: Vec::new(),
                minus: vec![pca_sq(g)],
            });
        }
        for l in &dist_terms {
            for g in &g_terms {
                let sum = Aff {
                    a: &l.a + &g.a,
                    alpha: l.alpha + g.alpha,
                };
                families.push(SignedSum {
                    plus: vec![pca_sq(&sum)],
                    minus: vec![pca_sq(l), pca_sq(g)],
                });
            }
        }
        if families.is_empty() {
            families.push(SignedSum::default());
        }
        out.push(RepresentationPiece {
            base: pi.q.clone(),
            families,
            lipschitz,
        });
    }
    Ok(ElementaryRepresentation { pieces: out })
}
