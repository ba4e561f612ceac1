//! Univariate PLQ losses. Closed forms are evaluated directly; `to_plq`
//! gives the same function as a validated piecewise object.

use serde::{Deserialize, Serialize};

use super::TIE_TOL;
use crate::calculus::{PaMap, Piece, PlqFunction, Quadratic};
use crate::error::{PlqError, Result};
use crate::geometry::{Polyhedron, Sense};
use crate::linalg::{Mat, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    /// `t²` on `|t| ≤ K`, `K² + 2K(|t| − K)` outside.
    Huber { k: f64 },
    /// `max(|t| − ε, 0)`.
    Margin { epsilon: f64 },
    /// `max(1 − t, 0) − max(s − t, 0)` with `s ≤ 0`.
    TruncatedHinge { s: f64 },
}

/// One-sided derivative of `max_r (v_r)` moving along slopes `d_r`.
pub(crate) fn max_dir(values: &[f64], slopes: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * (1.0 + top.abs());
    values
        .iter()
        .zip(slopes)
        .filter(|(v, _)| **v >= top - tol)
        .map(|(_, d)| *d)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn interval(lo: Option<f64>, hi: Option<f64>) -> Polyhedron {
    let mut rows = Vec::new();
    if let Some(l) = lo {
        rows.push((vec![-1.0], Sense::Le, -l));
    }
    if let Some(h) = hi {
        rows.push((vec![1.0], Sense::Le, h));
    }
    Polyhedron::from_rows(&rows, 1).expect("one-dimensional rows")
}

/// `½·q t² + c t + α` as a 1-D quadratic.
fn quad1(q: f64, c: f64, alpha: f64) -> Quadratic {
    Quadratic::new(Mat::from_element(1, 1, q), Vector::from_element(1, c), alpha)
        .expect("scalar data is symmetric")
}

impl Loss {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Loss::Huber { k } => k.is_finite() && k > 0.0,
            Loss::Margin { epsilon } => epsilon.is_finite() && epsilon > 0.0,
            Loss::TruncatedHinge { s } => s.is_finite() && s <= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(PlqError::InvalidParameter(format!("{self:?}")))
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Loss::TruncatedHinge { .. })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        match *self {
            Loss::Huber { k } => {
                if t.abs() <= k {
                    t * t
                } else {
                    k * k + 2.0 * k * (t.abs() - k)
                }
            }
            Loss::Margin { epsilon } => (t.abs() - epsilon).max(0.0),
            Loss::TruncatedHinge { s } => {
                if t >= 1.0 {
                    0.0
                } else if t >= s {
                    1.0 - t
                } else {
                    1.0 - s
                }
            }
        }
    }

    /// Huber derivative by cases: `2t` inside, `2K·sign(t)` outside.
    pub fn huber_derivative(k: f64, t: f64) -> f64 {
        if t.abs() <= k {
            2.0 * t
        } else {
            2.0 * k * t.signum()
        }
    }

    /// The same derivative as a difference of two maxima.
    pub fn huber_derivative_maxform(k: f64, t: f64) -> f64 {
        2.0 * ((-k - t).max(0.0) - (-t).max(-k))
    }

    /// One-sided derivative `ℓ′(t; dt)`.
    pub(crate) fn dir1(&self, t: f64, dt: f64) -> f64 {
        match *self {
            Loss::Huber { k } => Self::huber_derivative(k, t) * dt,
            Loss::Margin { epsilon } => {
                max_dir(&[t - epsilon, -t - epsilon, 0.0], &[dt, -dt, 0.0])
            }
            Loss::TruncatedHinge { s } => {
                max_dir(&[1.0 - t, 0.0], &[-dt, 0.0]) - max_dir(&[s - t, 0.0], &[-dt, 0.0])
            }
        }
    }

    /// Active slopes of a convex max-affine loss at `t`, for the directional
    /// branch enumeration. `None` for smooth or nonconvex losses.
    pub(crate) fn active_slopes(&self, t: f64) -> Option<Vec<f64>> {
        match *self {
            Loss::Margin { epsilon } => {
                let vals = [t - epsilon, -t - epsilon, 0.0];
                let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tol = TIE_TOL * (1.0 + top.abs());
                Some(
                    vals.iter()
                        .zip([1.0, -1.0, 0.0])
                        .filter(|(v, _)| **v >= top - tol)
                        .map(|(_, s)| s)
                        .collect(),
                )
            }
            _ => None,
        }
    }

    pub fn to_plq(&self) -> Result<PlqFunction> {
        self.validate()?;
        let pieces = match *self {
            Loss::Huber { k } => vec![
                (interval(None, Some(-k)), quad1(0.0, -2.0 * k, -k * k)),
                (interval(Some(-k), Some(k)), quad1(2.0, 0.0, 0.0)),
                (interval(Some(k), None), quad1(0.0, 2.0 * k, -k * k)),
            ],
            Loss::Margin { epsilon } => vec![
                (interval(None, Some(-epsilon)), quad1(0.0, -1.0, -epsilon)),
                (interval(Some(-epsilon), Some(epsilon)), quad1(0.0, 0.0, 0.0)),
                (interval(Some(epsilon), None), quad1(0.0, 1.0, -epsilon)),
            ],
            Loss::TruncatedHinge { s } => vec![
                (interval(None, Some(s)), quad1(0.0, 0.0, 1.0 - s)),
                (interval(Some(s), Some(1.0)), quad1(0.0, -1.0, 1.0)),
                (interval(Some(1.0), None), quad1(0.0, 0.0, 0.0)),
            ],
        };
        PlqFunction::new(
            pieces
                .into_iter()
                .map(|(domain, q)| Piece { domain, q })
                .collect(),
        )
    }

    /// `ℓ′` as a PA map, available for Huber only.
    pub fn gradient_map(&self) -> Result<PaMap> {
        match self {
            Loss::Huber { .. } => self.to_plq()?.gradient_pa_check()?.gradient.ok_or_else(|| {
                PlqError::Numerical("Huber loss failed the C¹ check".into())
            }),
            _ => Err(PlqError::SecondOrderUnavailable(format!(
                "{self:?} is not continuously differentiable"
            ))),
        }
    }
}
