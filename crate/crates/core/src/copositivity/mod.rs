//! Copositivity of symmetric matrices on polyhedral cones.
//!
//! Three deciders share one verdict type: a brute-force oracle over the
//! box slice of the cone, the two-QP test for matrices with exactly one
//! negative eigenvalue, and the Schur-complement reduction for the sign
//! cones produced by a single absolute-value constraint.

mod absvalue;
mod one_neg_eig;
mod oracle;

use serde::{Deserialize, Serialize};

pub use absvalue::{absvalue_analysis, absvalue_classify, absvalue_copositivity, AbsValueReport, SignClassification};
pub use one_neg_eig::{copositive_one_neg_eig, one_negative_eigenvalue};
pub use oracle::{
    copositive_on_cone, min_quadratic_over_polytope, strictly_copositive_on_cone, PolytopeMin,
};

use crate::error::Result;
use crate::geometry::ConeHRep;
use crate::linalg::{max_abs, max_abs_vec, quad_form, Mat, Vector};
use crate::settings::Settings;

/// Relative dead-band for copositivity decisions: copositive when
/// `min ≥ −COPOSITIVE_TOL·(1+‖Q‖∞)`, strict when `min ≥ +COPOSITIVE_TOL·(1+‖Q‖∞)`.
pub const COPOSITIVE_TOL: f64 = 1e-8;

pub fn copositive_tol(q: &Mat) -> f64 {
    COPOSITIVE_TOL * (1.0 + max_abs(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopositivityStatus {
    Copositive,
    StrictlyCopositive,
    NotCopositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    OneNegEig,
    AbsValueSchur,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopositivityVerdict {
    pub status: CopositivityStatus,
    /// For `NotCopositive`, a cone vector with negative form value. A
    /// `Copositive` answer to a strictness query carries the nonzero vector
    /// on which the form vanishes.
    #[serde(with = "crate::serde_util::opt_vector", default)]
    pub witness: Option<Vector>,
    pub method: Method,
    /// Minimum of the form over the normalized slice that was searched;
    /// absent when that slice is empty.
    pub min_value: Option<f64>,
}

impl CopositivityVerdict {
    pub fn is_copositive(&self) -> bool {
        self.status != CopositivityStatus::NotCopositive
    }

    pub fn is_strict(&self) -> bool {
        self.status == CopositivityStatus::StrictlyCopositive
    }

    fn copositive(method: Method, min_value: Option<f64>) -> Self {
        Self {
            status: CopositivityStatus::Copositive,
            witness: None,
            method,
            min_value,
        }
    }

    /// `NotCopositive` with the witness scaled to unit ∞-norm.
    fn refuted(method: Method, q: &Mat, witness: &Vector) -> Self {
        let w = normalize_inf(witness);
        Self {
            status: CopositivityStatus::NotCopositive,
            min_value: Some(quad_form(q, &w)),
            witness: Some(w),
            method,
        }
    }
}

pub(crate) fn normalize_inf(v: &Vector) -> Vector {
    let s = max_abs_vec(v);
    if s > 0.0 {
        v / s
    } else {
        v.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Auto,
    Oracle,
    OneNegEig,
}

/// Copositivity on a cone with an explicit method, or `Auto`, which uses
/// the two-QP test whenever `Q` has exactly one negative eigenvalue.
pub fn copositive_with(
    q: &Mat,
    c: &ConeHRep,
    choice: MethodChoice,
    settings: &Settings,
) -> Result<CopositivityVerdict> {
    match choice {
        MethodChoice::Oracle => copositive_on_cone(q, c, settings),
        MethodChoice::OneNegEig => copositive_one_neg_eig(q, c, settings),
        MethodChoice::Auto => {
            if one_negative_eigenvalue(q, settings)? {
                copositive_one_neg_eig(q, c, settings)
            } else {
                copositive_on_cone(q, c, settings)
            }
        }
    }
}
