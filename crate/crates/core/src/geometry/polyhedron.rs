use serde::{Deserialize, Serialize};

use crate::error::{PlqError, Result};
use crate::linalg::{max_abs_vec, Mat, Vector};

/// Row sense. The crate fixes the `A x ≤ b` convention; `≥` data is
/// normalized by a sign flip at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Eq,
}

/// `{x ∈ ℝⁿ : A_i x ≤ b_i (Le rows), A_i x = b_i (Eq rows)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    a: Mat,
    b: Vector,
    sense: Vec<Sense>,
}

impl Polyhedron {
    pub fn new(a: Mat, b: Vector, sense: Vec<Sense>) -> Result<Self> {
        if a.nrows() != b.len() || a.nrows() != sense.len() {
            return Err(PlqError::DimensionMismatch(format!(
                "polyhedron has {} rows, {} right-hand sides, {} senses",
                a.nrows(),
                b.len(),
                sense.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(PlqError::InvalidParameter(
                "polyhedron entries must be finite".into(),
            ));
        }
        Ok(Self { a, b, sense })
    }

    /// All `≤` rows.
    pub fn from_le(a: Mat, b: Vector) -> Result<Self> {
        let m = a.nrows();
        Self::new(a, b, vec![Sense::Le; m])
    }

    pub fn from_rows(rows: &[(Vec<f64>, Sense, f64)], dim: usize) -> Result<Self> {
        let mut a = Mat::zeros(rows.len(), dim);
        let mut b = Vector::zeros(rows.len());
        let mut sense = Vec::with_capacity(rows.len());
        for (i, (row, s, rhs)) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(PlqError::DimensionMismatch(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = *v;
            }
            b[i] = *rhs;
            sense.push(*s);
        }
        Self::new(a, b, sense)
    }

    pub fn whole_space(dim: usize) -> Self {
        Self {
            a: Mat::zeros(0, dim),
            b: Vector::zeros(0),
            sense: Vec::new(),
        }
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`, rows ordered `x_1 ≤ hi_1, −x_1 ≤ −lo_1, …`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        let mut a = Mat::zeros(2 * n, n);
        let mut b = Vector::zeros(2 * n);
        for i in 0..n {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = hi[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -lo[i];
        }
        Self {
            a,
            b,
            sense: vec![Sense::Le; 2 * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }
    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }
    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn senses(&self) -> &[Sense] {
        &self.sense
    }
    pub fn sense(&self, i: usize) -> Sense {
        self.sense[i]
    }

    pub fn row_value(&self, i: usize, x: &Vector) -> f64 {
        self.a.row(i).transpose().dot(x)
    }

    /// Default membership tolerance `1e-9·(1 + ‖b‖∞)`.
    pub fn default_tol(&self) -> f64 {
        1e-9 * (1.0 + max_abs_vec(&self.b))
    }

    /// Stack the rows of `self` and `other`.
    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron> {
        if self.dim() != other.dim() {
            return Err(PlqError::DimensionMismatch(format!(
                "cannot intersect polyhedra of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let m1 = self.nrows();
        let m = m1 + other.nrows();
        let mut a = Mat::zeros(m, self.dim());
        a.view_mut((0, 0), (m1, self.dim())).copy_from(&self.a);
        a.view_mut((m1, 0), (other.nrows(), self.dim()))
            .copy_from(&other.a);
        let b = Vector::from_iterator(m, self.b.iter().chain(other.b.iter()).copied());
        let mut sense = self.sense.clone();
        sense.extend_from_slice(&other.sense);
        Ok(Polyhedron { a, b, sense })
    }

    pub fn push_row(&mut self, row: &Vector, sense: Sense, rhs: f64) {
        let m = self.nrows();
        let n = self.dim();
        let mut a = Mat::zeros(m + 1, n);
        a.view_mut((0, 0), (m, n)).copy_from(&self.a);
        a.row_mut(m).copy_from(&row.transpose());
        self.a = a;
        self.b = Vector::from_iterator(m + 1, self.b.iter().copied().chain([rhs]));
        self.sense.push(sense);
    }

    /// Same rows with those in `rows` turned into equalities.
    pub fn tighten(&self, rows: &[usize]) -> Polyhedron {
        let mut out = self.clone();
        for &i in rows {
            out.sense[i] = Sense::Eq;
        }
        out
    }

    /// Membership with tolerance, plus the active rows (`≤` rows within
    /// `tol` of equality, and every satisfied equality row).
    pub fn contains(&self, x: &Vector, tol: f64) -> (bool, Vec<usize>) {
        let mut inside = true;
        let mut active = Vec::new();
        for i in 0..self.nrows() {
            let r = self.row_value(i, x) - self.b[i];
            match self.sense[i] {
                Sense::Le => {
                    if r > tol {
                        inside = false;
                    } else if r.abs() <= tol {
                        active.push(i);
                    }
                }
                Sense::Eq => {
                    if r.abs() > tol {
                        inside = false;
                    } else {
                        active.push(i);
                    }
                }
            }
        }
        (inside, active)
    }

    pub fn is_member(&self, x: &Vector, tol: f64) -> bool {
        (0..self.nrows()).all(|i| {
            let r = self.row_value(i, x) - self.b[i];
            match self.sense[i] {
                Sense::Le => r <= tol,
                Sense::Eq => r.abs() <= tol,
            }
        })
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn violation(&self, x: &Vector) -> f64 {
        (0..self.nrows()).fold(0.0_f64, |acc, i| {
            let r = self.row_value(i, x) - self.b[i];
            acc.max(match self.sense[i] {
                Sense::Le => r.max(0.0),
                Sense::Eq => r.abs(),
            })
        })
    }

    /// Rewrite equality rows as two opposite `≤` rows.
    pub fn split_equalities(&self) -> Polyhedron {
        let mut rows = Vec::new();
        for i in 0..self.nrows() {
            let r: Vec<f64> = self.a.row(i).iter().copied().collect();
            rows.push((r.clone(), Sense::Le, self.b[i]));
            if self.sense[i] == Sense::Eq {
                rows.push((r.iter().map(|v| -v).collect(), Sense::Le, -self.b[i]));
            }
        }
        Polyhedron::from_rows(&rows, self.dim()).expect("consistent rows")
    }
}

/// Polyhedral cone `{v : A_i v ≤ 0, A_j v = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeHRep {
    a: Mat,
    sense: Vec<Sense>,
}

impl ConeHRep {
    pub fn new(a: Mat, sense: Vec<Sense>) -> Result<Self> {
        if a.nrows() != sense.len() {
            return Err(PlqError::DimensionMismatch(format!(
                "cone has {} rows and {} senses",
                a.nrows(),
                sense.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(PlqError::InvalidParameter(
                "cone entries must be finite".into(),
            ));
        }
        Ok(Self { a, sense })
    }

    pub fn whole_space(dim: usize) -> Self {
        Self {
            a: Mat::zeros(0, dim),
            sense: Vec::new(),
        }
    }

    /// `ℝⁿ₊` as `−v_i ≤ 0`.
    pub fn nonnegative_orthant(dim: usize) -> Self {
        Self {
            a: -Mat::identity(dim, dim),
            sense: vec![Sense::Le; dim],
        }
    }

    pub fn from_rows(rows: &[(Vec<f64>, Sense)], dim: usize) -> Result<Self> {
        let mut a = Mat::zeros(rows.len(), dim);
        let mut sense = Vec::with_capacity(rows.len());
        for (i, (r, s)) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(PlqError::DimensionMismatch(format!(
                    "cone row {i} has length {}, expected {dim}",
                    r.len()
                )));
            }
            for (j, v) in r.iter().enumerate() {
                a[(i, j)] = *v;
            }
            sense.push(*s);
        }
        Self::new(a, sense)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }
    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }
    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn senses(&self) -> &[Sense] {
        &self.sense
    }

    pub fn push_row(&mut self, row: &Vector, sense: Sense) {
        let mut p = self.to_polyhedron();
        p.push_row(row, sense, 0.0);
        self.a = p.a;
        self.sense = p.sense;
    }

    pub fn intersect(&self, other: &ConeHRep) -> Result<ConeHRep> {
        let p = self.to_polyhedron().intersect(&other.to_polyhedron())?;
        Ok(ConeHRep {
            a: p.a,
            sense: p.sense,
        })
    }

    /// Membership with the row tolerance `tol·‖A_i‖∞·‖v‖∞`, which keeps the
    /// test invariant under positive scaling of `v`.
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        let vn = max_abs_vec(v);
        (0..self.nrows()).all(|i| {
            let row = self.a.row(i);
            let scale = tol * row.iter().fold(0.0_f64, |s, x| s.max(x.abs())) * vn;
            let r = row.transpose().dot(v);
            match self.sense[i] {
                Sense::Le => r <= scale,
                Sense::Eq => r.abs() <= scale,
            }
        })
    }

    pub fn to_polyhedron(&self) -> Polyhedron {
        Polyhedron {
            a: self.a.clone(),
            b: Vector::zeros(self.nrows()),
            sense: self.sense.clone(),
        }
    }

    /// The cone sliced by the box `[−1, 1]ⁿ`; the box rows are appended
    /// after the cone rows.
    pub fn box_slice(&self) -> Polyhedron {
        let n = self.dim();
        self.to_polyhedron()
            .intersect(&Polyhedron::boxed(&vec![-1.0; n], &vec![1.0; n]))
            .expect("same dimension")
    }
}

mod repr {
    use super::*;
    use crate::linalg::{from_rows, to_rows};

    #[derive(Serialize, Deserialize)]
    pub(super) struct PolyhedronRepr {
        pub dim: usize,
        pub a: Vec<Vec<f64>>,
        pub b: Vec<f64>,
        #[serde(default)]
        pub sense: Option<Vec<Sense>>,
    }

    #[derive(Serialize, Deserialize)]
    pub(super) struct ConeRepr {
        pub dim: usize,
        pub a: Vec<Vec<f64>>,
        #[serde(default)]
        pub sense: Option<Vec<Sense>>,
    }

    impl Serialize for Polyhedron {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            PolyhedronRepr {
                dim: self.dim(),
                a: to_rows(&self.a),
                b: self.b.iter().copied().collect(),
                sense: Some(self.sense.clone()),
            }
            .serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for Polyhedron {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            let r = PolyhedronRepr::deserialize(d)?;
            let a = from_rows(&r.a, r.dim).map_err(serde::de::Error::custom)?;
            let m = a.nrows();
            let sense = r.sense.unwrap_or_else(|| vec![Sense::Le; m]);
            Polyhedron::new(a, Vector::from_vec(r.b), sense).map_err(serde::de::Error::custom)
        }
    }

    impl Serialize for ConeHRep {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            ConeRepr {
                dim: self.dim(),
                a: to_rows(&self.a),
                sense: Some(self.sense.clone()),
            }
            .serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for ConeHRep {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            let r = ConeRepr::deserialize(d)?;
            let a = from_rows(&r.a, r.dim).map_err(serde::de::Error::custom)?;
            let m = a.nrows();
            let sense = r.sense.unwrap_or_else(|| vec![Sense::Le; m]);
            ConeHRep::new(a, sense).map_err(serde::de::Error::custom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Polyhedron {
        Polyhedron::boxed(&[0.0, 0.0], &[1.0, 1.0])
    }

    #[test]
    fn contains_boundary_point() {
        let p = unit_box();
        let (inside, active) = p.contains(&Vector::from_vec(vec![0.0, 0.5]), 1e-9);
        assert!(inside);
        // row 1 is −x₁ ≤ 0
        assert_eq!(active, vec![1]);
    }

    #[test]
    fn contains_rejects_outside() {
        let (inside, _) = unit_box().contains(&Vector::from_vec(vec![2.0, 0.0]), 1e-9);
        assert!(!inside);
    }

    #[test]
    fn contains_absorbs_tolerance() {
        let (inside, active) =
            unit_box().contains(&Vector::from_vec(vec![1.0 + 1e-12, 1.0]), 1e-9);
        assert!(inside);
        assert_eq!(active, vec![0, 2]);
    }

    #[test]
    fn contains_is_monotone_in_tolerance() {
        let p = unit_box();
        let x = Vector::from_vec(vec![1.0 + 1e-6, 0.5]);
        assert!(!p.is_member(&x, 1e-9));
        assert!(p.is_member(&x, 1e-5));
    }

    #[test]
    fn json_roundtrip() {
        let p = unit_box().tighten(&[0]);
        let s = serde_json::to_string(&p).unwrap();
        let q: Polyhedron = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
