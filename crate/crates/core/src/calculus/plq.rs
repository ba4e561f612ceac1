use serde::{Deserialize, Serialize};

use super::quadratic::Quadratic;
use crate::error::{PlqError, Result};
use crate::geometry::{affine_hull, tangent_cone, ConeHRep, Polyhedron};
use crate::linalg::{max_abs, max_abs_vec, Vector};

/// Tolerance for tangent-cone membership of a direction.
pub const CONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub domain: Polyhedron,
    pub q: Quadratic,
}

/// Continuous function equal to `q_i` on each polyhedron `P_i`; the domain
/// is the union of the `P_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlqFunction {
    dim: usize,
    pieces: Vec<Piece>,
}

/// Real value or `+∞` (direction leaves the domain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PlusInfinity => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub pieces: (usize, usize),
    /// Largest restricted coefficient of the difference.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub continuous: bool,
    pub violations: Vec<PairViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub max_residual: f64,
    /// `max |residual| / (1 + |f(x)|)`.
    pub max_scaled_residual: f64,
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs()))
}

impl PlqFunction {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(PlqError::InvalidParameter(
                "a PLQ function needs at least one piece".into(),
            ));
        };
        let dim = first.q.dim();
        for (k, p) in pieces.iter().enumerate() {
            if p.q.dim() != dim || p.domain.dim() != dim {
                return Err(PlqError::DimensionMismatch(format!(
                    "piece {k} has quadratic dimension {} and domain dimension {}, expected {dim}",
                    p.q.dim(),
                    p.domain.dim()
                )));
            }
        }
        Ok(Self { dim, pieces })
    }

    /// Single quadratic piece on `P`.
    pub fn single(domain: Polyhedron, q: Quadratic) -> Result<Self> {
        Self::new(vec![Piece { domain, q }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
    pub fn len(&self) -> usize {
        self.pieces.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(PlqError::DimensionMismatch(format!(
                "point has length {}, function dimension is {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Pieces whose polyhedron contains `x` (borderline points included).
    pub fn active_pieces(&self, x: &Vector) -> Vec<usize> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.domain.is_member(x, p.domain.default_tol()))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn in_domain(&self, x: &Vector) -> bool {
        !self.active_pieces(x).is_empty()
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        self.check_point(x)?;
        let active = self.active_pieces(x);
        let Some(&first) = active.first() else {
            return Err(PlqError::OutsideDomain);
        };
        let v = self.pieces[first].q.eval(x);
        let mut spread = 0.0_f64;
        for &i in &active[1..] {
            spread = spread.max((self.pieces[i].q.eval(x) - v).abs());
        }
        if spread > 1e-9 * (1.0 + v.abs()) {
            return Err(PlqError::InconsistentPieces { spread });
        }
        Ok(v)
    }

    /// Restrict every piece to `X`, dropping pieces whose intersection with
    /// `X` is empty. Piece indices in the result refer to the returned list.
    pub fn intersect_domain(&self, x: &Polyhedron) -> Result<Vec<(usize, Polyhedron)>> {
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let d = p.domain.intersect(x)?;
            if crate::geometry::feasible_point(&d)?.is_some() {
                out.push((i, d));
            }
        }
        Ok(out)
    }

    /// Exact coefficient test of `q_i − q_j` on `aff(P_i ∩ P_j)`.
    pub fn validate(&self) -> Result<ValidationReport> {
        let violations = self.pair_violations(|pi, pj, x0, z| {
            let d = pi.q.sub(&pj.q).restrict(x0, z);
            let scale = pi.q.restrict(x0, z).scale().max(pj.q.restrict(x0, z).scale());
            let mag = max_abs(d.q()).max(max_abs_vec(d.c())).max(d.alpha().abs());
            (mag, 1e-9 * (1.0 + scale))
        })?;
        Ok(ValidationReport {
            continuous: violations.is_empty(),
            violations,
        })
    }

    /// `C¹` iff `∇q_i − ∇q_j` vanishes on `aff(P_i ∩ P_j)` for all overlapping
    /// pairs; the gradient is then the PA map with the same pieces.
    pub fn gradient_pa_check(&self) -> Result<GradientCheck> {
        let violations = self.pair_violations(|pi, pj, x0, z| {
            let dq = pi.q.q() - pj.q.q();
            let slope = &dq * z;
            let offset = pi.q.gradient(x0) - pj.q.gradient(x0);
            let mag = max_abs(&slope).max(max_abs_vec(&offset));
            let scale = pi.q.scale().max(pj.q.scale()) * (1.0 + max_abs_vec(x0));
            (mag, 1e-9 * (1.0 + scale))
        })?;
        let is_c1 = violations.is_empty();
        let gradient = if is_c1 {
            Some(super::composite::PaMap::new(
                self.pieces
                    .iter()
                    .map(|p| super::composite::MapPiece {
                        domain: p.domain.clone(),
                        b: p.q.q().clone(),
                        q: p.q.c().clone(),
                    })
                    .collect(),
            )?)
        } else {
            None
        };
        Ok(GradientCheck {
            is_c1,
            gradient,
            violations,
        })
    }

    fn pair_violations<F>(&self, test: F) -> Result<Vec<PairViolation>>
    where
        F: Fn(&Piece, &Piece, &Vector, &crate::linalg::Mat) -> (f64, f64),
    {
        let mut out = Vec::new();
        for i in 0..self.pieces.len() {
            for j in (i + 1)..self.pieces.len() {
                let r = self.pieces[i].domain.intersect(&self.pieces[j].domain)?;
                let hull = match affine_hull(&r) {
                    Ok(h) => h,
                    Err(PlqError::EmptyPolyhedron) => continue,
                    Err(e) => return Err(e),
                };
                let (mag, tol) = test(&self.pieces[i], &self.pieces[j], &hull.point, &hull.directions);
                if mag > tol {
                    out.push(PairViolation {
                        pieces: (i, j),
                        magnitude: mag,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Active pieces whose tangent cone at `x̄` contains `v`.
    pub fn directional_pieces(&self, x: &Vector, v: &Vector) -> Result<Vec<usize>> {
        self.check_point(x)?;
        self.check_point(v)?;
        let active = self.active_pieces(x);
        if active.is_empty() {
            return Err(PlqError::PointNotInDomain);
        }
        let mut out = Vec::new();
        for i in active {
            let cone = self.piece_tangent_cone(i, x)?;
            if cone.contains(v, CONE_TOL) {
                out.push(i);
            }
        }
        Ok(out)
    }

    pub fn piece_tangent_cone(&self, i: usize, x: &Vector) -> Result<ConeHRep> {
        let d = &self.pieces[i].domain;
        crate::geometry::tangent_cone_tol(d, x, d.default_tol())
    }

    fn directional<F: Fn(&Piece) -> f64>(&self, x: &Vector, v: &Vector, value: F) -> Result<Extended> {
        let pieces = self.directional_pieces(x, v)?;
        let Some(&first) = pieces.first() else {
            return Ok(Extended::PlusInfinity);
        };
        let a = value(&self.pieces[first]);
        for &i in &pieces[1..] {
            let b = value(&self.pieces[i]);
            if !agree(a, b) {
                return Err(PlqError::InconsistentPieces {
                    spread: (a - b).abs(),
                });
            }
        }
        Ok(Extended::Finite(a))
    }

    /// `f′(x̄;v) = ∇q_i(x̄)ᵀv` on any piece with `v ∈ T(x̄;P_i)`.
    pub fn dir1(&self, x: &Vector, v: &Vector) -> Result<Extended> {
        self.directional(x, v, |p| p.q.gradient(x).dot(v))
    }

    /// `f⁽²⁾(x̄;v) = vᵀQ_i v`, with the convention
    /// `½f⁽²⁾ = lim [f(x̄+τv) − f(x̄) − τf′(x̄;v)]/τ²`.
    pub fn dir2(&self, x: &Vector, v: &Vector) -> Result<Extended> {
        self.directional(x, v, |p| (p.q.q() * v).dot(v))
    }

    /// Residual of `f(x) = f(x̄) + f′(x̄;x−x̄) + ½f⁽²⁾(x̄;x−x̄)` over samples in
    /// `x̄ + T(x̄;P_i)` for active pieces `i`.
    pub fn expansion_exactness_check(&self, x: &Vector, samples: &[Vector]) -> Result<ExpansionReport> {
        let fx = self.eval(x).map_err(|e| match e {
            PlqError::OutsideDomain => PlqError::PointNotInDomain,
            e => e,
        })?;
        let mut rep = ExpansionReport {
            max_residual: 0.0,
            max_scaled_residual: 0.0,
        };
        for s in samples {
            let d = s - x;
            let pieces = self.directional_pieces(x, &d)?;
            if pieces.is_empty() {
                return Err(PlqError::SampleOutsideCone);
            }
            let f1 = self.dir1(x, &d)?.finite().ok_or(PlqError::SampleOutsideCone)?;
            let f2 = self.dir2(x, &d)?.finite().ok_or(PlqError::SampleOutsideCone)?;
            let fs = self.eval(s)?;
            let r = (fs - fx - f1 - 0.5 * f2).abs();
            rep.max_residual = rep.max_residual.max(r);
            rep.max_scaled_residual = rep.max_scaled_residual.max(r / (1.0 + fs.abs()));
        }
        Ok(rep)
    }

    pub fn tangent_cone_of_piece(&self, i: usize, x: &Vector) -> Result<ConeHRep> {
        tangent_cone(&self.pieces[i].domain, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub is_c1: bool,
    pub gradient: Option<super::composite::PaMap>,
    pub violations: Vec<PairViolation>,
}

impl<'de> Deserialize<'de> for PlqFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            pieces: Vec<Piece>,
        }
        let r = Repr::deserialize(d)?;
        PlqFunction::new(r.pieces).map_err(serde::de::Error::custom)
    }
}
