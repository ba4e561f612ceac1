//! Empirical objectives `Θ ↦ (1/N) Σ ℓ(yᵢ − m(xⁱ;Θ)) + γ·P(Θ)` and the
//! exponential-family variant `(1/N) Σ [yᵢ m + b(m)] + γ·P(Θ)`.

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{max, PaModel};
use super::{tree_sum, Alternative, Loss, Sparsity, TIE_TOL};
use crate::calculus::{composite_dir2, MapPiece, PaMap};
use crate::error::{PlqError, Result};
use crate::geometry::{lp_solve, Polyhedron, Sense, Status};
use crate::linalg::{max_abs_vec, Mat, Vector};
use crate::settings::Settings;

/// Upper bound on the number of linearity cones the stationarity
/// certificate will visit.
pub const MAX_DIRECTIONAL_CONES: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    /// One observation per row.
    #[serde(with = "crate::serde_util::matrix")]
    pub x: Mat,
    #[serde(with = "crate::serde_util::vector")]
    pub y: Vector,
}

impl Dataset {
    pub fn new(x: Mat, y: Vector) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(PlqError::DimensionMismatch(format!(
                "{} observations but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(PlqError::InvalidParameter("dataset is empty".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(PlqError::InvalidParameter("dataset entries must be finite".into()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn row(&self, i: usize) -> Vector {
        self.x.row(i).transpose()
    }

    /// Rows are observations and the last column is the response. A first
    /// line that does not parse as numbers is taken as a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| PlqError::InvalidParameter(format!("CSV: {e}")))?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(r) => rows.push(r),
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(PlqError::InvalidParameter(format!("CSV line {}: {e}", line + 1)));
                }
            }
        }
        let width = rows.first().map_or(0, Vec::len);
        if width < 1 || rows.iter().any(|r| r.len() != width) {
            return Err(PlqError::InvalidParameter("CSV rows must have the same nonzero width".into()));
        }
        let x = Mat::from_fn(rows.len(), width - 1, |i, j| rows[i][j]);
        let y = Vector::from_iterator(rows.len(), rows.iter().map(|r| r[width - 1]));
        Self::new(x, y)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PlqError::InvalidParameter(format!("dataset JSON: {e}")))
    }
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            #[serde(with = "crate::serde_util::matrix")]
            x: Mat,
            #[serde(with = "crate::serde_util::vector")]
            y: Vector,
        }
        let r = Repr::deserialize(d)?;
        Dataset::new(r.x, r.y).map_err(serde::de::Error::custom)
    }
}

/// Cumulant functions of one-parameter exponential families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `t²`
    Square,
    /// `log(1 + eᵗ)`
    Logistic,
    /// `eᵗ`
    Exp,
}

impl Link {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Link::Square => t * t,
            Link::Logistic => {
                // log(1 + eᵗ) without overflow
                t.max(0.0) + (-t.abs()).exp().ln_1p()
            }
            Link::Exp => t.exp(),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            Link::Square => 2.0 * t,
            Link::Logistic => 1.0 / (1.0 + (-t).exp()),
            Link::Exp => t.exp(),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            Link::Square => 2.0,
            Link::Logistic => {
                let s = 1.0 / (1.0 + (-t).exp());
                s * (1.0 - s)
            }
            Link::Exp => t.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    Loss(Loss),
    Link(Link),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeObjective {
    pub data: Dataset,
    pub model: PaModel,
    pub fit: Fit,
    /// Applied to the slope coefficients of `Θ`.
    pub sparsity: Option<Sparsity>,
    pub gamma: f64,
}

impl<'de> Deserialize<'de> for CompositeObjective {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            data: Dataset,
            model: PaModel,
            fit: Fit,
            #[serde(default)]
            sparsity: Option<Sparsity>,
            #[serde(default)]
            gamma: f64,
        }
        let r = Repr::deserialize(d)?;
        CompositeObjective::new(r.data, r.model, r.fit, r.sparsity, r.gamma).map_err(serde::de::Error::custom)
    }
}

/// One-sided derivative of a max over the active terms.
fn max_dir(values: &[f64], slopes: &[f64]) -> f64 {
    super::losses::max_dir(values, slopes)
}

fn active(values: &[f64]) -> Vec<usize> {
    let top = max(values);
    let tol = TIE_TOL * (1.0 + top.abs());
    (0..values.len()).filter(|&r| values[r] >= top - tol).collect()
}

/// Odometer over the alternatives of multi-way groups.
fn next_choice(choice: &mut [usize], sizes: &[usize]) -> bool {
    for (c, &s) in choice.iter_mut().zip(sizes) {
        *c += 1;
        if *c < s {
            return true;
        }
        *c = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConvexPaVerdict {
    /// `f′(Θ̄;δ) ≥ 0` on every linearity cone, hence a local minimizer: a
    /// directionally stationary point of a convex function composed with a
    /// PA map is locally optimal.
    LocalMin { cones: usize },
    NotStationary {
        #[serde(with = "crate::serde_util::vector")]
        direction: Vector,
        slope: f64,
    },
}

impl CompositeObjective {
    pub fn new(data: Dataset, model: PaModel, fit: Fit, sparsity: Option<Sparsity>, gamma: f64) -> Result<Self> {
        if data.dim() != model.dim {
            return Err(PlqError::DimensionMismatch(format!(
                "data has {} features, model expects {}",
                data.dim(),
                model.dim
            )));
        }
        PaModel::new(model.dim, model.k1, model.k2)?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(PlqError::InvalidParameter(format!("γ must be nonnegative, got {gamma}")));
        }
        if let Fit::Loss(l) = fit {
            l.validate()?;
        }
        if let Some(s) = sparsity {
            s.validate()?;
        }
        Ok(Self {
            data,
            model,
            fit,
            sparsity,
            gamma,
        })
    }

    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    fn check(&self, theta: &Vector) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(PlqError::DimensionMismatch(format!(
                "Θ has length {}, model has {} parameters",
                theta.len(),
                self.n_params()
            )));
        }
        Ok(())
    }

    fn slopes(&self, theta: &Vector) -> Vec<f64> {
        self.model.slope_indices().iter().map(|&i| theta[i]).collect()
    }

    fn penalty_active(&self) -> Option<Sparsity> {
        self.sparsity.filter(|_| self.gamma > 0.0)
    }

    /// Per-observation summands, reduced by a fixed pairwise tree so the
    /// result does not depend on the thread count.
    fn average<F: Fn(usize) -> f64 + Sync + Send>(&self, term: F) -> f64 {
        let terms: Vec<f64> = (0..self.data.len()).into_par_iter().map(term).collect();
        tree_sum(&terms) / self.data.len() as f64
    }

    pub fn eval(&self, theta: &Vector) -> Result<f64> {
        self.check(theta)?;
        let data = self.average(|i| {
            let x = self.data.row(i);
            let (a, b) = self.model.term_values(theta, &x);
            let m = max(&a) - max(&b);
            let y = self.data.y[i];
            match self.fit {
                Fit::Loss(l) => l.value(y - m),
                Fit::Link(b) => y * m + b.value(m),
            }
        });
        let pen = match self.penalty_active() {
            Some(s) => self.gamma * s.eval(&self.slopes(theta))?,
            None => 0.0,
        };
        Ok(data + pen)
    }

    /// `f′(Θ;v)` by the chain rule through the active max terms.
    pub fn dir1(&self, theta: &Vector, v: &Vector) -> Result<f64> {
        self.check(theta)?;
        self.check(v)?;
        let data = self.average(|i| {
            let x = self.data.row(i);
            let (a, b) = self.model.term_values(theta, &x);
            let m = max(&a) - max(&b);
            let da: Vec<f64> = (0..self.model.k1).map(|r| self.model.term_form(r, &x).dot(v)).collect();
            let db: Vec<f64> = (0..self.model.k2)
                .map(|s| self.model.term_form(self.model.k1 + s, &x).dot(v))
                .collect();
            let dm = max_dir(&a, &da) - max_dir(&b, &db);
            let y = self.data.y[i];
            match self.fit {
                Fit::Loss(l) => l.dir1(y - m, -dm),
                Fit::Link(b) => (y + b.d1(m)) * dm,
            }
        });
        let pen = match self.penalty_active() {
            Some(s) => self.gamma * s.dir1(&self.slopes(theta), &self.slopes(v))?,
            None => 0.0,
        };
        Ok(data + pen)
    }

    /// `Θ ↦ yᵢ − m(xⁱ;Θ)` with one piece per choice of maximizing terms.
    fn residual_map(&self, i: usize) -> Result<PaMap> {
        let x = self.data.row(i);
        let (k1, k2) = (self.model.k1, self.model.k2);
        let forms: Vec<Vector> = (0..k1 + k2).map(|r| self.model.term_form(r, &x)).collect();
        let p = self.n_params();
        let mut pieces = Vec::with_capacity(k1 * k2);
        for r in 0..k1 {
            for s in k1..k1 + k2 {
                let mut dom = Polyhedron::whole_space(p);
                for r2 in (0..k1).filter(|&r2| r2 != r) {
                    dom.push_row(&(&forms[r2] - &forms[r]), Sense::Le, 0.0);
                }
                for s2 in (k1..k1 + k2).filter(|&s2| s2 != s) {
                    dom.push_row(&(&forms[s2] - &forms[s]), Sense::Le, 0.0);
                }
                let slope = -(&forms[r] - &forms[s]);
                pieces.push(MapPiece {
                    domain: dom,
                    b: Mat::from_row_slice(1, p, slope.as_slice()),
                    q: Vector::from_element(1, self.data.y[i]),
                });
            }
        }
        PaMap::new(pieces)
    }

    /// Second directional derivative. For a Huber loss this is
    /// `composite_dir2` of `ℓ′` with each residual map; for a link it is
    /// `b″(m)·m′²`. The PA penalty contributes nothing. Nonsmooth losses are
    /// refused.
    pub fn dir2(&self, theta: &Vector, v: &Vector) -> Result<f64> {
        self.check(theta)?;
        self.check(v)?;
        let terms: Vec<f64> = match self.fit {
            Fit::Loss(l @ Loss::Huber { .. }) => {
                let grad = l.gradient_map()?;
                (0..self.data.len())
                    .into_par_iter()
                    .map(|i| composite_dir2(&grad, &self.residual_map(i)?, theta, v))
                    .collect::<Result<_>>()?
            }
            Fit::Loss(l) => {
                return Err(PlqError::SecondOrderUnavailable(format!(
                    "{l:?} is not C¹ with a PA derivative"
                )))
            }
            Fit::Link(b) => (0..self.data.len())
                .into_par_iter()
                .map(|i| {
                    let x = self.data.row(i);
                    let (a, bb) = self.model.term_values(theta, &x);
                    let m = max(&a) - max(&bb);
                    let da: Vec<f64> = (0..self.model.k1).map(|r| self.model.term_form(r, &x).dot(v)).collect();
                    let db: Vec<f64> = (0..self.model.k2)
                        .map(|s| self.model.term_form(self.model.k1 + s, &x).dot(v))
                        .collect();
                    let dm = max_dir(&a, &da) - max_dir(&bb, &db);
                    Ok(b.d2(m) * dm * dm)
                })
                .collect::<Result<_>>()?,
        };
        Ok(tree_sum(&terms) / self.data.len() as f64)
    }

    /// Choice groups of `f′(Θ̄;·)`: inside one alternative per group the
    /// derivative is linear on the cone cut out by the alternative's rows.
    fn directional_groups(&self, theta: &Vector) -> Result<Vec<Vec<Alternative>>> {
        let n = self.data.len() as f64;
        let (k1, k2) = (self.model.k1, self.model.k2);
        let mut groups = Vec::with_capacity(self.data.len());
        for i in 0..self.data.len() {
            let x = self.data.row(i);
            let (a, b) = self.model.term_values(theta, &x);
            let m = max(&a) - max(&b);
            let y = self.data.y[i];
            let forms: Vec<Vector> = (0..k1 + k2).map(|r| self.model.term_form(r, &x)).collect();
            let ra = active(&a);
            let sb: Vec<usize> = active(&b).into_iter().map(|s| s + k1).collect();
            let mut alts = Vec::new();
            for &r in &ra {
                for &s in &sb {
                    let dm = &forms[r] - &forms[s];
                    let mut rows: Vec<Vector> = ra
                        .iter()
                        .filter(|&&r2| r2 != r)
                        .map(|&r2| &forms[r2] - &forms[r])
                        .collect();
                    rows.extend(sb.iter().filter(|&&s2| s2 != s).map(|&s2| &forms[s2] - &forms[s]));
                    match self.fit {
                        Fit::Link(lk) => alts.push(Alternative::new(&dm * ((y + lk.d1(m)) / n), rows)),
                        Fit::Loss(Loss::Huber { k }) => {
                            alts.push(Alternative::new(&dm * (-Loss::huber_derivative(k, y - m) / n), rows))
                        }
                        Fit::Loss(l) => {
                            let slopes = l.active_slopes(y - m).ok_or_else(|| {
                                PlqError::NotCompositeConvexPa(format!("{l:?} is not a convex max-affine loss"))
                            })?;
                            // Residual direction u = −m′; slope σ wins where σu ≥ σ′u.
                            for &sig in &slopes {
                                let mut r2 = rows.clone();
                                r2.extend(slopes.iter().filter(|&&s2| s2 != sig).map(|&s2| &dm * (sig - s2)));
                                alts.push(Alternative::new(&dm * (-sig / n), r2));
                            }
                        }
                    }
                }
            }
            groups.push(alts);
        }
        if let Some(s) = self.penalty_active() {
            groups.extend(s.branches(theta, &self.model.slope_indices(), self.gamma)?);
        }
        Ok(groups)
    }

    /// Directional stationarity of the unconstrained problem, checked by one
    /// LP `min f′(Θ̄;δ)` over `δ ∈ [−1,1]^p` per linearity cone. Requires the
    /// outer function to be convex: any link, or a convex loss.
    pub fn convex_pa_certificate(&self, theta: &Vector, settings: &Settings) -> Result<ConvexPaVerdict> {
        self.check(theta)?;
        if let Fit::Loss(l) = self.fit {
            if !l.is_convex() {
                return Err(PlqError::NotCompositeConvexPa(format!("{l:?} is not convex")));
            }
        }
        let p = self.n_params();
        let groups = self.directional_groups(theta)?;
        let mut base = Vector::zeros(p);
        let mut base_rows: Vec<Vector> = Vec::new();
        let mut multi: Vec<&Vec<Alternative>> = Vec::new();
        for g in &groups {
            if g.len() == 1 {
                base += &g[0].grad;
                base_rows.extend(g[0].rows.iter().cloned());
            } else {
                multi.push(g);
            }
        }
        let sizes: Vec<usize> = multi.iter().map(|g| g.len()).collect();
        let count = sizes.iter().fold(1usize, |acc, &s| acc.saturating_mul(s));
        if count > MAX_DIRECTIONAL_CONES {
            return Err(PlqError::TooManyPieces {
                count,
                limit: MAX_DIRECTIONAL_CONES,
            });
        }
        let lo = vec![-1.0; p];
        let hi = vec![1.0; p];
        let mut choice = vec![0usize; multi.len()];
        loop {
            let mut c = base.clone();
            let mut poly = Polyhedron::boxed(&lo, &hi);
            for r in &base_rows {
                poly.push_row(r, Sense::Le, 0.0);
            }
            for (g, &k) in multi.iter().zip(&choice) {
                c += &g[k].grad;
                for r in &g[k].rows {
                    poly.push_row(r, Sense::Le, 0.0);
                }
            }
            let res = lp_solve(&c, &poly)?;
            if res.status != Status::Optimal {
                return Err(PlqError::Numerical(format!("cone LP ended with status {:?}", res.status)));
            }
            let slope = res.value.expect("optimal LP has a value");
            if slope < -settings.tol * (1.0 + max_abs_vec(&c)) {
                return Ok(ConvexPaVerdict::NotStationary {
                    direction: res.point.expect("optimal LP has a point"),
                    slope,
                });
            }
            if !next_choice(&mut choice, &sizes) {
                break;
            }
        }
        Ok(ConvexPaVerdict::LocalMin { cones: count })
    }
}
