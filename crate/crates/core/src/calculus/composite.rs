//! Vector-valued piecewise affine maps and the second directional
//! derivative of `f ∘ Φ` when `∇f` and `Φ` are both PA.

use serde::{Deserialize, Serialize};

use super::plq::{PairViolation, ValidationReport, CONE_TOL};
use crate::error::{PlqError, Result};
use crate::geometry::{affine_hull, tangent_cone, Polyhedron};
use crate::linalg::{max_abs, max_abs_vec, Mat, Vector};

/// `Φ(w) = B w + q` on `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPiece {
    pub domain: Polyhedron,
    #[serde(with = "crate::serde_util::matrix")]
    pub b: Mat,
    #[serde(with = "crate::serde_util::vector")]
    pub q: Vector,
}

impl MapPiece {
    pub fn eval(&self, w: &Vector) -> Vector {
        &self.b * w + &self.q
    }
}

/// Piecewise affine map `ℝⁿ → ℝᵐ` given on an explicit polyhedral
/// subdivision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaMap {
    in_dim: usize,
    out_dim: usize,
    pieces: Vec<MapPiece>,
}

impl PaMap {
    pub fn new(pieces: Vec<MapPiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(PlqError::InvalidParameter(
                "a PA map needs at least one piece".into(),
            ));
        };
        let (out_dim, in_dim) = first.b.shape();
        for (k, p) in pieces.iter().enumerate() {
            if p.b.shape() != (out_dim, in_dim) || p.q.len() != out_dim || p.domain.dim() != in_dim {
                return Err(PlqError::DimensionMismatch(format!(
                    "map piece {k} does not match {out_dim}x{in_dim}"
                )));
            }
        }
        Ok(Self {
            in_dim,
            out_dim,
            pieces,
        })
    }

    /// Single affine piece on the whole space.
    pub fn affine(b: Mat, q: Vector) -> Result<Self> {
        let n = b.ncols();
        Self::new(vec![MapPiece {
            domain: Polyhedron::whole_space(n),
            b,
            q,
        }])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }
    pub fn pieces(&self) -> &[MapPiece] {
        &self.pieces
    }

    pub fn active_pieces(&self, w: &Vector) -> Vec<usize> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.domain.is_member(w, p.domain.default_tol()))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn eval(&self, w: &Vector) -> Result<Vector> {
        if w.len() != self.in_dim {
            return Err(PlqError::DimensionMismatch(format!(
                "map input has length {}, expected {}",
                w.len(),
                self.in_dim
            )));
        }
        let active = self.active_pieces(w);
        let Some(&first) = active.first() else {
            return Err(PlqError::PointNotInDomain);
        };
        let v = self.pieces[first].eval(w);
        for &i in &active[1..] {
            let spread = max_abs_vec(&(self.pieces[i].eval(w) - &v));
            if spread > 1e-9 * (1.0 + max_abs_vec(&v)) {
                return Err(PlqError::InconsistentPieces { spread });
            }
        }
        Ok(v)
    }

    /// Continuity across the subdivision: on `aff(P_i ∩ P_j)` the two affine
    /// pieces must coincide, so both the offset at a hull point and the slope
    /// along its directions vanish.
    pub fn validate(&self) -> Result<ValidationReport> {
        let mut violations = Vec::new();
        for i in 0..self.pieces.len() {
            for j in (i + 1)..self.pieces.len() {
                let (pi, pj) = (&self.pieces[i], &self.pieces[j]);
                let r = pi.domain.intersect(&pj.domain)?;
                let hull = match affine_hull(&r) {
                    Ok(h) => h,
                    Err(PlqError::EmptyPolyhedron) => continue,
                    Err(e) => return Err(e),
                };
                let db = &pi.b - &pj.b;
                let offset = max_abs_vec(&(pi.eval(&hull.point) - pj.eval(&hull.point)));
                let mag = offset.max(max_abs(&(&db * &hull.directions)));
                let scale = max_abs(&pi.b).max(max_abs(&pj.b)) * (1.0 + max_abs_vec(&hull.point))
                    + max_abs_vec(&pi.q).max(max_abs_vec(&pj.q));
                if mag > 1e-9 * (1.0 + scale) {
                    violations.push(PairViolation {
                        pieces: (i, j),
                        magnitude: mag,
                    });
                }
            }
        }
        Ok(ValidationReport {
            continuous: violations.is_empty(),
            violations,
        })
    }

    /// Active pieces at `w̄` whose tangent cone contains `v`.
    pub fn directional_pieces(&self, w: &Vector, v: &Vector) -> Result<Vec<usize>> {
        let active = self.active_pieces(w);
        if active.is_empty() {
            return Err(PlqError::PointNotInDomain);
        }
        let mut out = Vec::new();
        for i in active {
            if tangent_cone(&self.pieces[i].domain, w)?.contains(v, CONE_TOL) {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// `Φ′(w̄;v) = B_k v` for a piece with `v ∈ T(w̄;P_k)`.
    pub fn dir1(&self, w: &Vector, v: &Vector) -> Result<Vector> {
        let pieces = self.directional_pieces(w, v)?;
        let Some(&k) = pieces.first() else {
            return Err(PlqError::PointNotInDomain);
        };
        Ok(&self.pieces[k].b * v)
    }
}

impl<'de> Deserialize<'de> for PaMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            pieces: Vec<MapPiece>,
        }
        PaMap::new(Repr::deserialize(d)?.pieces).map_err(serde::de::Error::custom)
    }
}

/// `φ⁽²⁾(w̄;v) = Φ′(w̄;v)ᵀ F′(Φ(w̄); Φ′(w̄;v))` for `φ = f ∘ Φ` with `F = ∇f`;
/// the term `F(Φ(w̄))ᵀΦ⁽²⁾` vanishes because `Φ` is PA.
pub fn composite_dir2(f_grad: &PaMap, phi: &PaMap, w: &Vector, v: &Vector) -> Result<f64> {
    if f_grad.in_dim() != phi.out_dim() || f_grad.out_dim() != phi.out_dim() {
        return Err(PlqError::DimensionMismatch(format!(
            "gradient map is {}→{}, inner map output is {}",
            f_grad.in_dim(),
            f_grad.out_dim(),
            phi.out_dim()
        )));
    }
    let z = phi.eval(w)?;
    let u = phi.dir1(w, v)?;
    let fu = f_grad.dir1(&z, &u)?;
    Ok(u.dot(&fu))
}
