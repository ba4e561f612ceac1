use serde::{Deserialize, Serialize};

use crate::error::{PlqError, Result};
use crate::linalg::{check_symmetric, eigh, max_abs, max_abs_vec, symmetrize, Mat, Vector};

/// `q(x) = ½xᵀQx + cᵀx + α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    q: Mat,
    c: Vector,
    alpha: f64,
}

impl Quadratic {
    pub fn new(q: Mat, c: Vector, alpha: f64) -> Result<Self> {
        check_symmetric(&q)?;
        if q.nrows() != c.len() {
            return Err(PlqError::DimensionMismatch(format!(
                "Q is {}x{} but c has length {}",
                q.nrows(),
                q.ncols(),
                c.len()
            )));
        }
        if q.iter().chain(c.iter()).any(|v| !v.is_finite()) || !alpha.is_finite() {
            return Err(PlqError::InvalidParameter(
                "quadratic coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            q: symmetrize(&q),
            c,
            alpha,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            q: Mat::zeros(n, n),
            c: Vector::zeros(n),
            alpha: 0.0,
        }
    }

    pub fn affine(c: Vector, alpha: f64) -> Self {
        let n = c.len();
        Self {
            q: Mat::zeros(n, n),
            c,
            alpha,
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
    pub fn q(&self) -> &Mat {
        &self.q
    }
    pub fn c(&self) -> &Vector {
        &self.c
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        0.5 * (&self.q * x).dot(x) + self.c.dot(x) + self.alpha
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.q * x + &self.c
    }

    pub fn is_affine(&self) -> bool {
        max_abs(&self.q) == 0.0
    }

    /// Largest coefficient magnitude, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        max_abs(&self.q)
            .max(max_abs_vec(&self.c))
            .max(self.alpha.abs())
    }

    pub fn sub(&self, other: &Quadratic) -> Quadratic {
        Quadratic {
            q: &self.q - &other.q,
            c: &self.c - &other.c,
            alpha: self.alpha - other.alpha,
        }
    }

    pub fn scaled(&self, s: f64) -> Quadratic {
        Quadratic {
            q: &self.q * s,
            c: &self.c * s,
            alpha: self.alpha * s,
        }
    }

    pub fn add(&self, other: &Quadratic) -> Quadratic {
        Quadratic {
            q: &self.q + &other.q,
            c: &self.c + &other.c,
            alpha: self.alpha + other.alpha,
        }
    }

    /// Restriction to `x = x₀ + Z y`.
    pub fn restrict(&self, x0: &Vector, z: &Mat) -> Quadratic {
        Quadratic {
            q: symmetrize(&(z.transpose() * &self.q * z)),
            c: z.transpose() * self.gradient(x0),
            alpha: self.eval(x0),
        }
    }

    /// Eigen-split into weighted squares of linear forms plus an affine part.
    pub fn split(&self) -> Result<QuadraticSplit> {
        let e = eigh(&self.q)?;
        let cutoff = 1e-12 * (1.0 + max_abs(&self.q));
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for i in 0..e.values.len() {
            let d = e.values[i];
            let row = e.rows.row(i).transpose();
            if d > cutoff {
                positive.push((0.5 * d, row));
            } else if d < -cutoff {
                negative.push((0.5 * d.abs(), row));
            }
        }
        Ok(QuadraticSplit {
            positive,
            negative,
            linear: self.c.clone(),
            constant: self.alpha,
        })
    }
}

/// `q(x) = Σ w(pᵀx)² over positive − Σ w(pᵀx)² over negative + cᵀx + α`;
/// each weight is half the absolute eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSplit {
    pub positive: Vec<(f64, Vector)>,
    pub negative: Vec<(f64, Vector)>,
    pub linear: Vector,
    pub constant: f64,
}

impl QuadraticSplit {
    pub fn eval(&self, x: &Vector) -> f64 {
        let pos: f64 = self.positive.iter().map(|(w, p)| w * p.dot(x).powi(2)).sum();
        let neg: f64 = self.negative.iter().map(|(w, p)| w * p.dot(x).powi(2)).sum();
        pos - neg + self.linear.dot(x) + self.constant
    }
}

pub fn quadratic_split(q: &Quadratic) -> Result<QuadraticSplit> {
    q.split()
}

mod repr {
    use super::*;
    use crate::linalg::{from_rows, to_rows};

    #[derive(Serialize, Deserialize)]
    struct QuadraticRepr {
        q: Vec<Vec<f64>>,
        c: Vec<f64>,
        #[serde(default)]
        alpha: f64,
    }

    impl Serialize for Quadratic {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            QuadraticRepr {
                q: to_rows(&self.q),
                c: self.c.iter().copied().collect(),
                alpha: self.alpha,
            }
            .serialize(s)
        }
    }

    impl<'de> Deserialize<'de> for Quadratic {
        fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            let r = QuadraticRepr::deserialize(d)?;
            let n = r.c.len();
            let q = if r.q.is_empty() {
                Mat::zeros(n, n)
            } else {
                from_rows(&r.q, n).map_err(serde::de::Error::custom)?
            };
            Quadratic::new(q, Vector::from_vec(r.c), r.alpha).map_err(serde::de::Error::custom)
        }
    }
}
