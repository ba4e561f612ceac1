//! The piecewise quadratic `f(x) = ½[max(‖x‖², 1) − xᵀQx]`, whose exterior
//! piece is not convex. Closed forms for its derivatives illustrate how
//! `f⁽²⁾`-based second-order conditions can mislead outside the PLQ class.

use serde::{Deserialize, Serialize};

use crate::error::{PlqError, Result};
use crate::linalg::{check_symmetric, max_abs, max_abs_vec, quad_form, Mat, Vector};

/// Tolerance for deciding `‖x‖ = 1`.
const SPHERE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallExample {
    #[serde(with = "crate::serde_util::matrix")]
    q: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Inside,
    Sphere,
    Outside,
}

impl BallExample {
    pub fn new(q: Mat) -> Result<Self> {
        check_symmetric(&q)?;
        Ok(Self { q })
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn region(x: &Vector) -> Region {
        let r = x.norm_squared() - 1.0;
        if r.abs() <= SPHERE_TOL {
            Region::Sphere
        } else if r > 0.0 {
            Region::Outside
        } else {
            Region::Inside
        }
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(PlqError::DimensionMismatch(format!(
                "point has length {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        Ok(0.5 * (x.norm_squared().max(1.0) - quad_form(&self.q, x)))
    }

    pub fn dir1(&self, x: &Vector, d: &Vector) -> Result<f64> {
        self.check(x)?;
        self.check(d)?;
        let xqd = (&self.q * d).dot(x);
        Ok(match Self::region(x) {
            Region::Outside => x.dot(d) - xqd,
            Region::Inside => -xqd,
            Region::Sphere => x.dot(d).max(0.0) - xqd,
        })
    }

    pub fn dir2(&self, x: &Vector, d: &Vector) -> Result<f64> {
        self.check(x)?;
        self.check(d)?;
        let dqd = quad_form(&self.q, d);
        let outer = match Self::region(x) {
            Region::Outside => true,
            Region::Inside => false,
            Region::Sphere => x.dot(d) >= 0.0,
        };
        Ok(if outer { d.norm_squared() - dqd } else { -dqd })
    }

    /// `λ̄` when `x̄` is a unit eigenvector of `Q` with eigenvalue `λ̄ ∈ [0,1]`.
    pub fn stationary_eigenvalue(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        if Self::region(x) != Region::Sphere {
            return Err(PlqError::NotUnitEigenvector);
        }
        let qx = &self.q * x;
        let lambda = qx.dot(x);
        let tol = 1e-9 * (1.0 + max_abs(&self.q));
        if max_abs_vec(&(qx - x * lambda)) > tol || lambda < -tol || lambda > 1.0 + tol {
            return Err(PlqError::NotUnitEigenvector);
        }
        Ok(lambda)
    }

    /// On the unit sphere, `x̄` is d-stationary iff it is an eigenvector of
    /// `Q` with eigenvalue in `[0,1]`.
    pub fn is_stationary(&self, x: &Vector) -> Result<bool> {
        match self.stationary_eigenvalue(x) {
            Ok(_) => Ok(true),
            Err(PlqError::NotUnitEigenvector) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Second subderivative `d²f(x̄|0)(d) = max{λ‖d‖² − dᵀQd : λx̄ = Qx̄, λ ∈ [0,1]}`;
    /// the feasible `λ` is the single eigenvalue of `x̄`.
    pub fn d2_sub(&self, x: &Vector, d: &Vector) -> Result<f64> {
        self.check(d)?;
        let lambda = self.stationary_eigenvalue(x)?;
        Ok(lambda * d.norm_squared() - quad_form(&self.q, d))
    }

    /// Points `x(ε) = (√(2ε/(1 + Q₁₁/Q₂₂)), −√(1−ε))` for the planar case with
    /// diagonal `Q`, along which `f` drops below `f((0,−1))`.
    pub fn descent_curve(&self, eps: f64) -> Result<Vector> {
        if self.dim() != 2 || self.q[(0, 1)] != 0.0 {
            return Err(PlqError::InvalidParameter(
                "descent curve needs a diagonal 2x2 Q".into(),
            ));
        }
        if !(0.0..=1.0).contains(&eps) || self.q[(1, 1)] <= 0.0 {
            return Err(PlqError::InvalidParameter(
                "descent curve needs ε ∈ [0,1] and Q₂₂ > 0".into(),
            ));
        }
        let ratio = self.q[(0, 0)] / self.q[(1, 1)];
        Ok(Vector::from_vec(vec![
            (2.0 * eps / (1.0 + ratio)).sqrt(),
            -(1.0 - eps).sqrt(),
        ]))
    }
}
