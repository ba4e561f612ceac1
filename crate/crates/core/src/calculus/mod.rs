//! Quadratic, piecewise affine, and PLQ function models with their
//! directional derivatives and algebraic representations.

pub mod ball;
pub mod composite;
pub mod pa;
pub mod plq;
pub mod quadratic;
pub mod representation;

pub use ball::BallExample;
pub use composite::{composite_dir2, MapPiece, PaMap};
pub use pa::{pa_maxmin_to_piecewise, pa_to_dc, AffineFn, MaxAffine, MaxMin, PaFunction};
pub use plq::{Extended, GradientCheck, Piece, PlqFunction, ValidationReport};
pub use quadratic::{quadratic_split, Quadratic, QuadraticSplit};
pub use representation::{
    elementary_representation, BlockKind, BuildingBlock, ElementaryRepresentation, SignedSum,
};
