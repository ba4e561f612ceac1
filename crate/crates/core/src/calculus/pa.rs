//! Scalar piecewise affine functions in max-min form, conversion to a
//! piecewise polyhedral form, and the difference-of-max-affine split.

use serde::{Deserialize, Serialize};

use super::plq::{Piece, PlqFunction};
use super::quadratic::Quadratic;
use crate::error::{PlqError, Result};
use crate::geometry::{interior_radius, Polyhedron, Sense};
use crate::linalg::{max_abs_vec, Vector};

/// Default bound on the total number of affine terms `Σ_i J_i`.
pub const MAXMIN_TERM_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFn {
    #[serde(with = "crate::serde_util::vector")]
    pub a: Vector,
    #[serde(default)]
    pub alpha: f64,
}

impl AffineFn {
    pub fn new(a: Vector, alpha: f64) -> Self {
        Self { a, alpha }
    }

    pub fn constant(n: usize, alpha: f64) -> Self {
        Self {
            a: Vector::zeros(n),
            alpha,
        }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        self.a.dot(x) + self.alpha
    }

    pub fn add(&self, o: &AffineFn) -> AffineFn {
        AffineFn::new(&self.a + &o.a, self.alpha + o.alpha)
    }

    pub fn sub(&self, o: &AffineFn) -> AffineFn {
        AffineFn::new(&self.a - &o.a, self.alpha - o.alpha)
    }

    fn same(&self, o: &AffineFn) -> bool {
        max_abs_vec(&(&self.a - &o.a)) <= 1e-12 && (self.alpha - o.alpha).abs() <= 1e-12
    }
}

/// `g(x) = max_i min_j f_ij(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxMin {
    dim: usize,
    terms: Vec<Vec<AffineFn>>,
}

impl MaxMin {
    pub fn new(terms: Vec<Vec<AffineFn>>) -> Result<Self> {
        let dim = terms
            .first()
            .and_then(|t| t.first())
            .map(|f| f.a.len())
            .ok_or_else(|| PlqError::InvalidParameter("max-min form needs at least one term".into()))?;
        for (i, row) in terms.iter().enumerate() {
            if row.is_empty() {
                return Err(PlqError::InvalidParameter(format!(
                    "inner family {i} is empty"
                )));
            }
            if row.iter().any(|f| f.a.len() != dim) {
                return Err(PlqError::DimensionMismatch(format!(
                    "inner family {i} has an affine of the wrong dimension"
                )));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn terms(&self) -> &[Vec<AffineFn>] {
        &self.terms
    }
    pub fn term_count(&self) -> usize {
        self.terms.iter().map(|t| t.len()).sum()
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        self.terms
            .iter()
            .map(|row| row.iter().map(|f| f.eval(x)).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn guard(&self, limit: usize) -> Result<()> {
        let count = self.term_count();
        if count > limit {
            return Err(PlqError::TooManyPieces { count, limit });
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for MaxMin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            terms: Vec<Vec<AffineFn>>,
        }
        MaxMin::new(Repr::deserialize(d)?.terms).map_err(serde::de::Error::custom)
    }
}

/// `max_k a_kᵀx + α_k` (a single term is an affine function).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffine {
    pub terms: Vec<AffineFn>,
}

impl MaxAffine {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.terms
            .iter()
            .map(|f| f.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise sum, expanded over all term pairs.
    pub fn add(&self, o: &MaxAffine) -> MaxAffine {
        let mut terms: Vec<AffineFn> = Vec::with_capacity(self.terms.len() * o.terms.len());
        for f in &self.terms {
            for g in &o.terms {
                push_unique(&mut terms, f.add(g));
            }
        }
        MaxAffine { terms }
    }

    pub fn shift(&self, h: &AffineFn) -> MaxAffine {
        MaxAffine {
            terms: self.terms.iter().map(|f| f.add(h)).collect(),
        }
    }
}

fn push_unique(v: &mut Vec<AffineFn>, f: AffineFn) {
    if !v.iter().any(|g| g.same(&f)) {
        v.push(f);
    }
}

/// A scalar PA function in either representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PaFunction {
    MaxMin(MaxMin),
    Piecewise(PlqFunction),
}

impl PaFunction {
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        match self {
            PaFunction::MaxMin(g) => Ok(g.eval(x)),
            PaFunction::Piecewise(f) => f.eval(x),
        }
    }
}

fn le_row(f: &AffineFn) -> (Vec<f64>, Sense, f64) {
    // f(x) ≤ 0  ⇔  aᵀx ≤ −α
    (f.a.iter().copied().collect(), Sense::Le, -f.alpha)
}

/// Regions where `f_ij` is the selected inner minimum and the outer max.
///
/// For fixed `(i,j)` the region is `{f_ij ≤ f_ij′ ∀j′} ∩ ⋂_{i′≠i} {min_j″ f_i′j″ ≤ f_ij}`;
/// the second set is a union, so a selection `j″(i′)` is chosen per outer
/// index by depth-first search, pruning selections whose partial region has
/// empty interior.
pub fn pa_maxmin_to_piecewise(g: &MaxMin, limit: usize) -> Result<PlqFunction> {
    g.guard(limit)?;
    let n = g.dim();
    let mut pieces: Vec<Piece> = Vec::new();
    for (i, row) in g.terms().iter().enumerate() {
        for (j, f) in row.iter().enumerate() {
            let mut base = Vec::new();
            for (jj, h) in row.iter().enumerate() {
                if jj != j {
                    base.push(le_row(&f.sub(h)));
                }
            }
            let others: Vec<usize> = (0..g.terms().len()).filter(|&k| k != i).collect();
            let mut stack: Vec<(usize, Vec<(Vec<f64>, Sense, f64)>)> = vec![(0, base)];
            while let Some((depth, rows)) = stack.pop() {
                let poly = Polyhedron::from_rows(&rows, n)?;
                if !matches!(interior_radius(&poly)?, Some(t) if t > 1e-9) {
                    continue;
                }
                if depth == others.len() {
                    pieces.push(Piece {
                        domain: poly,
                        q: Quadratic::affine(f.a.clone(), f.alpha),
                    });
                    continue;
                }
                let ii = others[depth];
                for h in g.terms()[ii].iter().rev() {
                    let mut r = rows.clone();
                    r.push(le_row(&h.sub(f)));
                    stack.push((depth + 1, r));
                }
            }
        }
    }
    PlqFunction::new(pieces)
}

/// `g = G − H` with `G`, `H` convex max-affine.
///
/// Each inner minimum is rewritten as `min_j g_j = Σ_j g_j − max_j Σ_{k≠j} g_k`,
/// i.e. `S_i − M_i`. Then `max_i (S_i − M_i) = max_i (S_i + Σ_{i′≠i} M_i′) − Σ_i M_i`.
pub fn pa_to_dc(g: &MaxMin, limit: usize) -> Result<(MaxAffine, MaxAffine)> {
    g.guard(limit)?;
    let n = g.dim();
    let zero = || MaxAffine {
        terms: vec![AffineFn::constant(n, 0.0)],
    };
    let mut s_terms = Vec::new();
    let mut m_terms = Vec::new();
    for row in g.terms() {
        let total = row.iter().skip(1).fold(row[0].clone(), |acc, f| acc.add(f));
        let m = if row.len() == 1 {
            zero()
        } else {
            let mut terms = Vec::new();
            for f in row {
                push_unique(&mut terms, total.sub(f));
            }
            MaxAffine { terms }
        };
        s_terms.push(total);
        m_terms.push(m);
    }
    let mut h = zero();
    for m in &m_terms {
        h = h.add(m);
    }
    let mut big = MaxAffine { terms: Vec::new() };
    for (i, s) in s_terms.iter().enumerate() {
        let mut acc = zero().shift(s);
        for (k, m) in m_terms.iter().enumerate() {
            if k != i {
                acc = acc.add(m);
            }
        }
        for t in acc.terms {
            push_unique(&mut big.terms, t);
        }
    }
    Ok((big, h))
}
