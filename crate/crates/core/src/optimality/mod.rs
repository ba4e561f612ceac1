//! First- and second-order optimality for QPs and PLQ programs, and the
//! enumeration of strict local minima and stationary values.

mod certificate;
mod enumerate;
mod kkt;

pub use certificate::{
    plq_local_min, plq_strong_min, qp_local_min, qp_strong_min, Level, OptimalityCertificate, PieceEvidence, Query,
    Refutation, RefutationKind,
};
pub use enumerate::{
    enumerate_stationary_values, enumerate_strict_minima, stationary_families, StationaryFamily, StrictMinimum,
    POINT_DEDUP_TOL, VALUE_DEDUP_TOL,
};
pub use kkt::{critical_cone, critical_cone_from_multipliers, qp_stationary, Descent, KktPoint, Stationarity, STATIONARITY_TOL};
