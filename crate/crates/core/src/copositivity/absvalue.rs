//! The homogeneous QP `min ½vᵀQv` subject to `bᵀv + Σ α_i|v_i| ≤ 0`.
//!
//! Under `|b_i| ≤ α_i` the feasible set is a product of rays: `v_i = 0`
//! when `|b_i| < α_i`, `v_i ≥ 0` on `I₊` (`−b_i = α_i > 0`), `v_i ≤ 0` on
//! `I₋` (`b_i = α_i > 0`) and `v_i` free on `I_f` (`b_i = α_i = 0`).
//! Copositivity on that set reduces to three checks: `Q_ff ⪰ 0`, the cross
//! block `[Q_{+f}; Q_{−f}]` annihilating the null eigenvectors of `Q_ff`,
//! and copositivity of a sign-flipped Schur complement on the orthant.

use serde::{Deserialize, Serialize};

use super::{copositive_on_cone, CopositivityStatus, CopositivityVerdict, Method};
use crate::error::{PlqError, Result};
use crate::geometry::{ConeHRep, Sense};
use crate::linalg::{asymmetry, check_symmetric, eigh, max_abs, submatrix, symmetrize, Mat, Vector};
use crate::settings::Settings;

/// Relative tolerance for deciding `|b_i| = α_i`.
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignClassification {
    pub zero_idx: Vec<usize>,
    pub plus_idx: Vec<usize>,
    pub minus_idx: Vec<usize>,
    pub free_idx: Vec<usize>,
}

impl SignClassification {
    pub fn dim(&self) -> usize {
        self.zero_idx.len() + self.plus_idx.len() + self.minus_idx.len() + self.free_idx.len()
    }

    /// The feasible set of the absolute-value constraint as a cone.
    pub fn cone(&self) -> ConeHRep {
        let n = self.dim();
        let unit = |i: usize, s: f64| {
            let mut r = vec![0.0; n];
            r[i] = s;
            r
        };
        let mut rows = Vec::new();
        rows.extend(self.zero_idx.iter().map(|&i| (unit(i, 1.0), Sense::Eq)));
        rows.extend(self.plus_idx.iter().map(|&i| (unit(i, -1.0), Sense::Le)));
        rows.extend(self.minus_idx.iter().map(|&i| (unit(i, 1.0), Sense::Le)));
        ConeHRep::from_rows(&rows, n).expect("rows have the cone dimension")
    }
}

pub fn absvalue_classify(b: &Vector, alpha: &Vector) -> Result<SignClassification> {
    if b.len() != alpha.len() {
        return Err(PlqError::DimensionMismatch(format!(
            "b has length {}, α has length {}",
            b.len(),
            alpha.len()
        )));
    }
    let mut out = SignClassification {
        zero_idx: Vec::new(),
        plus_idx: Vec::new(),
        minus_idx: Vec::new(),
        free_idx: Vec::new(),
    };
    for i in 0..b.len() {
        let (bi, ai) = (b[i], alpha[i]);
        if !bi.is_finite() || !ai.is_finite() || ai < 0.0 {
            return Err(PlqError::InvalidCoefficients(format!(
                "α_{i} = {ai} must be finite and nonnegative"
            )));
        }
        let edge = EDGE_TOL * (1.0 + ai);
        if bi.abs() > ai + edge {
            return Err(PlqError::InvalidCoefficients(format!(
                "|b_{i}| = {} exceeds α_{i} = {ai}",
                bi.abs()
            )));
        }
        if ai <= edge {
            out.free_idx.push(i);
        } else if bi.abs() < ai - edge {
            out.zero_idx.push(i);
        } else if bi < 0.0 {
            out.plus_idx.push(i);
        } else {
            out.minus_idx.push(i);
        }
    }
    Ok(out)
}

/// Intermediate quantities of the reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsValueReport {
    pub classification: SignClassification,
    /// Eigenvalues of `Q_ff` (descending).
    pub free_eigenvalues: Vec<f64>,
    /// Positions (into `free_eigenvalues`) forming `I_f⁺` and `I_f⁰`.
    pub free_pos: Vec<usize>,
    pub free_zero: Vec<usize>,
    pub free_psd: bool,
    /// `‖[Q_{+f}; Q_{−f}] P_{f,0}‖∞`.
    pub cross_block_residual: f64,
    /// The reduced matrix on `ℝ₊^{|I₊|+|I₋|}` (rows `I₊` then `I₋`).
    #[serde(with = "opt_matrix", default)]
    pub schur: Option<Mat>,
    pub verdict: CopositivityVerdict,
}

mod opt_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{from_rows, to_rows, Mat};

    pub fn serialize<S: Serializer>(m: &Option<Mat>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Mat>, D::Error> {
        let rows: Option<Vec<Vec<f64>>> = Option::deserialize(d)?;
        rows.map(|r| {
            let ncols = r.first().map_or(0, |x| x.len());
            from_rows(&r, ncols).map_err(serde::de::Error::custom)
        })
        .transpose()
    }
}

pub fn absvalue_copositivity(q: &Mat, b: &Vector, alpha: &Vector, settings: &Settings) -> Result<CopositivityVerdict> {
    Ok(absvalue_analysis(q, b, alpha, settings)?.verdict)
}

pub fn absvalue_analysis(q: &Mat, b: &Vector, alpha: &Vector, settings: &Settings) -> Result<AbsValueReport> {
    check_symmetric(q)?;
    let cls = absvalue_classify(b, alpha)?;
    let n = b.len();
    if q.nrows() != n {
        return Err(PlqError::DimensionMismatch(format!(
            "Q is {}x{}, coefficient vectors have length {n}",
            q.nrows(),
            q.ncols()
        )));
    }
    let f = &cls.free_idx;
    let nz: Vec<usize> = cls.plus_idx.iter().chain(&cls.minus_idx).copied().collect();
    let sign: Vec<f64> = cls
        .plus_idx
        .iter()
        .map(|_| 1.0)
        .chain(cls.minus_idx.iter().map(|_| -1.0))
        .collect();

    let qff = submatrix(q, f, f);
    let e = eigh(&qff)?;
    let thr = 1e-9 * max_abs(&qff);
    let mut report = AbsValueReport {
        classification: cls.clone(),
        free_eigenvalues: e.values.iter().copied().collect(),
        free_pos: (0..f.len()).filter(|&k| e.values[k] > thr).collect(),
        free_zero: (0..f.len()).filter(|&k| e.values[k].abs() <= thr).collect(),
        free_psd: e.min_value() >= -thr || f.is_empty(),
        cross_block_residual: 0.0,
        schur: None,
        verdict: CopositivityVerdict::copositive(Method::AbsValueSchur, Some(0.0)),
    };

    // (i) Q_ff ⪰ 0, refuted by the most negative eigenvector.
    if !report.free_psd {
        let mut v = Vector::zeros(n);
        let row = e.rows.row(f.len() - 1);
        for (k, &i) in f.iter().enumerate() {
            v[i] = row[k];
        }
        report.verdict = CopositivityVerdict::refuted(Method::AbsValueSchur, q, &v);
        return Ok(report);
    }

    // (ii) cross block against the null eigenvectors, entry m_rk = Q_{r,f}·p_k.
    let q_nz_f = submatrix(q, &nz, f);
    let mut worst: Option<(usize, usize, f64)> = None;
    for &k in &report.free_zero {
        let pk = e.rows.row(k).transpose();
        let col = &q_nz_f * &pk;
        for r in 0..nz.len() {
            if worst.is_none_or(|(_, _, m)| col[r].abs() > m.abs()) {
                worst = Some((r, k, col[r]));
            }
        }
    }
    if let Some((r, k, m)) = worst {
        report.cross_block_residual = m.abs();
        if m.abs() > 1e-8 * (1.0 + max_abs(q)) {
            report.verdict = CopositivityVerdict::refuted(
                Method::AbsValueSchur,
                q,
                &cross_block_witness(q, &nz, &sign, f, &e.rows, r, k, m),
            );
            return Ok(report);
        }
    }

    // (iii) S Q_nz S − G Ξ₊⁻¹ Gᵀ with G = S Q_{nz,f} P_{f,+}.
    let s = Mat::from_diagonal(&Vector::from_vec(sign.clone()));
    let p_plus = Mat::from_fn(f.len(), report.free_pos.len(), |i, j| e.rows[(report.free_pos[j], i)]);
    let xi_inv = Mat::from_diagonal(&Vector::from_iterator(
        report.free_pos.len(),
        report.free_pos.iter().map(|&k| 1.0 / e.values[k]),
    ));
    let g = &s * &q_nz_f * &p_plus;
    let raw = &s * submatrix(q, &nz, &nz) * &s - &g * &xi_inv * g.transpose();
    let asym = asymmetry(&raw);
    if asym > 1e-10 * (1.0 + max_abs(&raw)) {
        return Err(PlqError::Numerical(format!(
            "reduced matrix asymmetric by {asym:.3e}"
        )));
    }
    let schur = symmetrize(&raw);
    report.schur = Some(schur.clone());
    if nz.is_empty() {
        return Ok(report);
    }
    let reduced = copositive_on_cone(&schur, &ConeHRep::nonnegative_orthant(nz.len()), settings)?;
    if reduced.status == CopositivityStatus::NotCopositive {
        let u = reduced.witness.expect("refutation carries a witness");
        let y = -(&xi_inv * g.transpose() * &u);
        let vf = &p_plus * y;
        let mut v = Vector::zeros(n);
        for (r, &i) in nz.iter().enumerate() {
            v[i] = sign[r] * u[r];
        }
        for (k, &i) in f.iter().enumerate() {
            v[i] = vf[k];
        }
        report.verdict = CopositivityVerdict::refuted(Method::AbsValueSchur, q, &v);
    } else {
        report.verdict = CopositivityVerdict::copositive(Method::AbsValueSchur, reduced.min_value);
    }
    Ok(report)
}

/// A two-coordinate refutation `v = s_r t e_r + u p_k` when the cross block
/// entry `m = Q_{r,f}·p_k` is nonzero: the form is
/// `Q_rr t² + 2 s_r m t u + σ_k u²` with `σ_k ≈ 0`.
#[allow(clippy::too_many_arguments)]
fn cross_block_witness(
    q: &Mat,
    nz: &[usize],
    sign: &[f64],
    f: &[usize],
    eig_rows: &Mat,
    r: usize,
    k: usize,
    m: f64,
) -> Vector {
    let i = nz[r];
    let qrr = q[(i, i)];
    let t = if qrr > 0.0 { (m.abs() / qrr).min(1.0) } else { 1.0 };
    let u = -(sign[r] * m).signum();
    let mut v = Vector::zeros(q.nrows());
    v[i] = sign[r] * t;
    for (kk, &j) in f.iter().enumerate() {
        v[j] = u * eig_rows[(k, kk)];
    }
    v
}
