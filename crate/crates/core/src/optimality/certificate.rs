//! Second-order certificates. For a QP, local minimality is equivalent to
//! stationarity plus copositivity of `Q` on the critical cone, and strict
//! local minimality to strict copositivity. A PLQ program inherits both
//! tests piece by piece over the active pieces.

use serde::{Deserialize, Serialize};

use super::kkt::{check_feasible, critical_cone, qp_stationary, Descent, KktPoint, Stationarity};
use crate::calculus::{PlqFunction, Quadratic};
use crate::copositivity::{
    copositive_with, strictly_copositive_on_cone, CopositivityStatus, CopositivityVerdict, MethodChoice,
};
use crate::error::{PlqError, Result};
use crate::geometry::{ConeHRep, Polyhedron};
use crate::linalg::{Mat, Vector};
use crate::settings::Settings;

/// Ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    NotStationary,
    Stationary,
    LocalMin,
    StrongLocalMin,
}

/// Which copositivity question the stored verdict answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Query {
    Copositive,
    StrictlyCopositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationKind {
    /// First-order decrease along a tangent direction.
    Descent,
    /// `vᵀQv < 0` on the critical cone.
    NegativeCurvature,
    /// `vᵀQv = 0` for a nonzero critical direction, so the minimum is not strict.
    FlatDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub piece: usize,
    pub kind: RefutationKind,
    #[serde(with = "crate::serde_util::vector")]
    pub direction: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceEvidence {
    pub piece: usize,
    pub level: Level,
    pub kkt: Option<KktPoint>,
    pub descent: Option<Descent>,
    pub critical_cone: Option<ConeHRep>,
    #[serde(with = "crate::serde_util::matrix")]
    pub hessian: Mat,
    pub query: Option<Query>,
    pub verdict: Option<CopositivityVerdict>,
}

impl PieceEvidence {
    fn refutation(&self) -> Option<Refutation> {
        let (kind, direction) = if let Some(d) = &self.descent {
            (RefutationKind::Descent, d.direction.clone())
        } else {
            let v = self.verdict.as_ref()?;
            let kind = match v.status {
                CopositivityStatus::NotCopositive => RefutationKind::NegativeCurvature,
                CopositivityStatus::Copositive if self.query == Some(Query::StrictlyCopositive) => {
                    RefutationKind::FlatDirection
                }
                _ => return None,
            };
            (kind, v.witness.clone()?)
        };
        Some(Refutation {
            piece: self.piece,
            kind,
            direction,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCertificate {
    pub level: Level,
    #[serde(with = "crate::serde_util::vector")]
    pub x: Vector,
    pub evidence: Vec<PieceEvidence>,
    pub refutation: Option<Refutation>,
    pub notes: Vec<String>,
}

const STRICT_NOTE: &str = "strict, isolated and strong local minimality coincide for piecewise linear-quadratic programs";

impl OptimalityCertificate {
    fn from_evidence(x: &Vector, evidence: Vec<PieceEvidence>, query: Query) -> Self {
        let level = evidence.iter().map(|e| e.level).min().unwrap_or(Level::NotStationary);
        let refutation = evidence
            .iter()
            .filter(|e| e.level == level)
            .find_map(PieceEvidence::refutation);
        let mut notes = Vec::new();
        if query == Query::StrictlyCopositive {
            notes.push(STRICT_NOTE.to_string());
        }
        Self {
            level,
            x: x.clone(),
            evidence,
            refutation,
            notes,
        }
    }

    /// Re-run every stored copositivity check on its stored cone and
    /// report whether all verdicts are reproduced.
    pub fn recheck(&self, settings: &Settings) -> Result<bool> {
        for e in &self.evidence {
            let (Some(cone), Some(query), Some(verdict)) = (&e.critical_cone, e.query, &e.verdict) else {
                continue;
            };
            let again = run_query(&e.hessian, cone, query, settings)?;
            if again.status != verdict.status {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn run_query(q: &Mat, cone: &ConeHRep, query: Query, settings: &Settings) -> Result<CopositivityVerdict> {
    match query {
        Query::Copositive => copositive_with(q, cone, MethodChoice::Auto, settings),
        Query::StrictlyCopositive => strictly_copositive_on_cone(q, cone, settings),
    }
}

fn piece_evidence(
    piece: usize,
    q: &Quadratic,
    p: &Polyhedron,
    x: &Vector,
    query: Query,
    settings: &Settings,
) -> Result<PieceEvidence> {
    let mut e = PieceEvidence {
        piece,
        level: Level::NotStationary,
        kkt: None,
        descent: None,
        critical_cone: None,
        hessian: q.q().clone(),
        query: None,
        verdict: None,
    };
    match qp_stationary(q, p, x)? {
        Stationarity::NotStationary(d) => {
            e.descent = Some(d);
            return Ok(e);
        }
        Stationarity::Stationary(k) => e.kkt = Some(k),
    }
    let cone = critical_cone(q, p, x)?;
    let verdict = run_query(q.q(), &cone, query, settings)?;
    e.level = match verdict.status {
        CopositivityStatus::NotCopositive => Level::Stationary,
        CopositivityStatus::Copositive => Level::LocalMin,
        CopositivityStatus::StrictlyCopositive => Level::StrongLocalMin,
    };
    e.critical_cone = Some(cone);
    e.query = Some(query);
    e.verdict = Some(verdict);
    Ok(e)
}

fn qp_certificate(q: &Quadratic, p: &Polyhedron, x: &Vector, query: Query, settings: &Settings) -> Result<OptimalityCertificate> {
    let e = piece_evidence(0, q, p, x, query, settings)?;
    Ok(OptimalityCertificate::from_evidence(x, vec![e], query))
}

/// `LocalMin` exactly when `x̄` is a local minimizer of `q` on `P`.
pub fn qp_local_min(q: &Quadratic, p: &Polyhedron, x: &Vector, settings: &Settings) -> Result<OptimalityCertificate> {
    qp_certificate(q, p, x, Query::Copositive, settings)
}

/// `StrongLocalMin` exactly when `x̄` is a strict local minimizer of `q` on
/// `P`; `LocalMin` when it is a non-strict one.
pub fn qp_strong_min(q: &Quadratic, p: &Polyhedron, x: &Vector, settings: &Settings) -> Result<OptimalityCertificate> {
    qp_certificate(q, p, x, Query::StrictlyCopositive, settings)
}

fn plq_certificate(
    f: &PlqFunction,
    x_set: &Polyhedron,
    x: &Vector,
    query: Query,
    settings: &Settings,
) -> Result<OptimalityCertificate> {
    if x.len() != f.dim() || x_set.dim() != f.dim() {
        return Err(PlqError::DimensionMismatch(format!(
            "point has length {}, function dimension {}, set dimension {}",
            x.len(),
            f.dim(),
            x_set.dim()
        )));
    }
    check_feasible(x_set, x)?;
    let active = f.active_pieces(x);
    if active.is_empty() {
        return Err(PlqError::PointNotFeasible);
    }
    let mut evidence = Vec::with_capacity(active.len());
    for i in active {
        let piece = &f.pieces()[i];
        let p = x_set.intersect(&piece.domain)?;
        evidence.push(piece_evidence(i, &piece.q, &p, x, query, settings)?);
    }
    Ok(OptimalityCertificate::from_evidence(x, evidence, query))
}

/// Local minimality of `f` on `X` at `x̄`: every active piece `i` must pass
/// the QP test on `X ∩ P_i`. Pieces on the membership borderline count as
/// active.
pub fn plq_local_min(f: &PlqFunction, x_set: &Polyhedron, x: &Vector, settings: &Settings) -> Result<OptimalityCertificate> {
    plq_certificate(f, x_set, x, Query::Copositive, settings)
}

pub fn plq_strong_min(f: &PlqFunction, x_set: &Polyhedron, x: &Vector, settings: &Settings) -> Result<OptimalityCertificate> {
    plq_certificate(f, x_set, x, Query::StrictlyCopositive, settings)
}
