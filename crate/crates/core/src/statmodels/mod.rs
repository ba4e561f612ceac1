//! Statistical estimation front end: PLQ losses, sparsity penalties, the
//! difference-of-max PA model, empirical composite objectives, and the
//! second-order conditions for `f ∘ Φ + Σ αᵢ|wᵢ|`.

mod conditions;
mod losses;
mod model;
mod objective;
mod sparsity;

pub use conditions::{
    absvalue_data, composite_conditions, CompositeReport, CompositeStructure, Condition, ConditionRefutation,
};
pub use losses::Loss;
pub use model::{DifferenceOfMax, PaModel};
pub use objective::{CompositeObjective, ConvexPaVerdict, Dataset, Fit, Link, MAX_DIRECTIONAL_CONES};
pub use sparsity::Sparsity;

use crate::linalg::Vector;

/// Relative tolerance for treating two max terms as tied.
pub const TIE_TOL: f64 = 1e-10;

/// One linear branch of a directional derivative: slope `grad`, valid on
/// `{δ : rowᵀδ ≤ 0 for every row}`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Alternative {
    pub grad: Vector,
    pub rows: Vec<Vector>,
}

impl Alternative {
    pub fn new(grad: Vector, rows: Vec<Vector>) -> Self {
        Self { grad, rows }
    }
}

/// Pairwise summation with a fixed split, independent of scheduling.
pub(crate) fn tree_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    tree_sum(a) + tree_sum(b)
}
