//! The difference-of-max affine regression model
//! `m(x;Θ) = max_i (aⁱᵀx + αᵢ) − max_i (bⁱᵀx + βᵢ)`.

use serde::{Deserialize, Serialize};

use crate::calculus::{AffineFn, MaxAffine};
use crate::error::{PlqError, Result};
use crate::linalg::Vector;

/// Shape of the model. The parameter vector `Θ` is laid out as
/// `[a¹, α₁, …, a^{k1}, α_{k1}, b¹, β₁, …, b^{k2}, β_{k2}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaModel {
    pub dim: usize,
    pub k1: usize,
    pub k2: usize,
}

/// A PA function written as `plus − minus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceOfMax {
    pub plus: MaxAffine,
    pub minus: MaxAffine,
}

impl DifferenceOfMax {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.plus.eval(x) - self.minus.eval(x)
    }
}

impl PaModel {
    pub fn new(dim: usize, k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 {
            return Err(PlqError::InvalidParameter(
                "both max families need at least one affine term".into(),
            ));
        }
        Ok(Self { dim, k1, k2 })
    }

    pub fn n_params(&self) -> usize {
        (self.k1 + self.k2) * (self.dim + 1)
    }

    /// Positions of the slope coefficients (everything but intercepts).
    pub fn slope_indices(&self) -> Vec<usize> {
        (0..self.k1 + self.k2)
            .flat_map(|r| (0..self.dim).map(move |j| r * (self.dim + 1) + j))
            .collect()
    }

    fn check(&self, theta: &Vector, x: &Vector) -> Result<()> {
        if theta.len() != self.n_params() || x.len() != self.dim {
            return Err(PlqError::DimensionMismatch(format!(
                "model needs Θ of length {} and x of length {}, got {} and {}",
                self.n_params(),
                self.dim,
                theta.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// `∂(term r)/∂Θ` at `x`; terms `0..k1` are the first family, the rest
    /// the second. Each term is linear in `Θ`.
    pub fn term_form(&self, r: usize, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.n_params());
        let base = r * (self.dim + 1);
        g.rows_mut(base, self.dim).copy_from(x);
        g[base + self.dim] = 1.0;
        g
    }

    /// Values of the two families' affine terms at `x`.
    pub(crate) fn term_values(&self, theta: &Vector, x: &Vector) -> (Vec<f64>, Vec<f64>) {
        let v = |r: usize| {
            let base = r * (self.dim + 1);
            theta.rows(base, self.dim).dot(x) + theta[base + self.dim]
        };
        (
            (0..self.k1).map(v).collect(),
            (self.k1..self.k1 + self.k2).map(v).collect(),
        )
    }

    pub fn eval(&self, theta: &Vector, x: &Vector) -> Result<f64> {
        self.check(theta, x)?;
        let (a, b) = self.term_values(theta, x);
        Ok(max(&a) - max(&b))
    }

    /// `Θ ↦ m(x;Θ)` for fixed `x`, as a difference of max-linear functions
    /// on `ℝ^{(k1+k2)(d+1)}`.
    pub fn as_pa_in_theta(&self, x: &Vector) -> Result<DifferenceOfMax> {
        if x.len() != self.dim {
            return Err(PlqError::DimensionMismatch(format!(
                "x has length {}, model dimension is {}",
                x.len(),
                self.dim
            )));
        }
        let fam = |rs: std::ops::Range<usize>| MaxAffine {
            terms: rs.map(|r| AffineFn::new(self.term_form(r, x), 0.0)).collect(),
        };
        Ok(DifferenceOfMax {
            plus: fam(0..self.k1),
            minus: fam(self.k1..self.k1 + self.k2),
        })
    }

    /// `x ↦ m(x;Θ)` for fixed `Θ`.
    pub fn as_pa_in_x(&self, theta: &Vector) -> Result<DifferenceOfMax> {
        self.check(theta, &Vector::zeros(self.dim))?;
        let term = |r: usize| {
            let base = r * (self.dim + 1);
            AffineFn::new(theta.rows(base, self.dim).into_owned(), theta[base + self.dim])
        };
        Ok(DifferenceOfMax {
            plus: MaxAffine {
                terms: (0..self.k1).map(term).collect(),
            },
            minus: MaxAffine {
                terms: (self.k1..self.k1 + self.k2).map(term).collect(),
            },
        })
    }
}

pub(crate) fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
