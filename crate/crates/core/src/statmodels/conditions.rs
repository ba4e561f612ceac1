//! Second-order conditions for `θ(w) = f(Φ(w)) + Σ αᵢ|wᵢ|` with `f` a
//! `C¹` PLQ function whose gradient `F` is PA and `Φ` a PA map, both given
//! on explicit polyhedral subdivisions.
//!
//! At `w̄` the directions are split into cones by the active `Φ` piece `k`,
//! the sign pattern of `v` on `{i : w̄ᵢ = 0}`, and the active `F` piece `j`
//! along `u = Bᵏv`. On each cone the condition forms are
//! `ℓ(v) = F(z̄)ᵀBᵏv + Σ_{w̄ᵢ≠0} αᵢ sign(w̄ᵢ) vᵢ + Σ_{w̄ᵢ=0} αᵢ σᵢ vᵢ`
//! and `vᵀ(Bᵏ)ᵀAʲBᵏv`.

use serde::{Deserialize, Serialize};

use crate::calculus::PaMap;
use crate::copositivity::{copositive_with, strictly_copositive_on_cone, MethodChoice};
use crate::error::{PlqError, Result};
use crate::geometry::{lp_solve, tangent_cone, ConeHRep, Sense, Status};
use crate::linalg::{max_abs_vec, quad_form, symmetrize, Mat, Vector};
use crate::optimality::Level;
use crate::settings::Settings;

/// Entrywise zero threshold for `ℓ`, matching the edge test of the
/// absolute-value reduction.
const FORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeStructure {
    /// `F = ∇f`, pieces `Aʲz + pʲ`.
    pub f_grad: PaMap,
    /// Pieces `Bᵏw + qᵏ`.
    pub phi: PaMap,
    #[serde(with = "crate::serde_util::vector")]
    pub alpha: Vector,
}

impl<'de> Deserialize<'de> for CompositeStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            f_grad: PaMap,
            phi: PaMap,
            #[serde(with = "crate::serde_util::vector")]
            alpha: Vector,
        }
        let r = Repr::deserialize(d)?;
        CompositeStructure::new(r.f_grad, r.phi, r.alpha).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// First order: `ℓ ≥ 0` on every cone.
    A,
    /// Copositivity of the piece form where `ℓ ≤ 0`.
    B,
    /// Strict copositivity of the piece form where `ℓ ≤ 0`.
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRefutation {
    pub condition: Condition,
    /// `F` piece; absent for condition (a).
    pub f_piece: Option<usize>,
    pub phi_piece: usize,
    /// `(i, σᵢ)` for each `i` with `w̄ᵢ = 0`.
    pub signs: Vec<(usize, i8)>,
    #[serde(with = "crate::serde_util::vector")]
    pub witness: Vector,
    /// `ℓ(witness)` for (a), the quadratic form for (b) and (c).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub level: Level,
    /// The first refutation found for each failing condition.
    pub refutations: Vec<ConditionRefutation>,
    pub cones_checked: usize,
}

impl CompositeStructure {
    pub fn new(f_grad: PaMap, phi: PaMap, alpha: Vector) -> Result<Self> {
        if f_grad.in_dim() != phi.out_dim() || f_grad.out_dim() != phi.out_dim() {
            return Err(PlqError::DimensionMismatch(format!(
                "F is {}→{} but Φ has {} outputs",
                f_grad.in_dim(),
                f_grad.out_dim(),
                phi.out_dim()
            )));
        }
        if alpha.len() != phi.in_dim() {
            return Err(PlqError::DimensionMismatch(format!(
                "α has length {}, Φ has {} inputs",
                alpha.len(),
                phi.in_dim()
            )));
        }
        if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(PlqError::InvalidCoefficients("α must be finite and nonnegative".into()));
        }
        for (name, map) in [("F", &f_grad), ("Φ", &phi)] {
            let r = map.validate()?;
            if !r.continuous {
                return Err(PlqError::InvalidParameter(format!(
                    "{name} is discontinuous across pieces {:?}",
                    r.violations[0].pieces
                )));
            }
        }
        Ok(Self { f_grad, phi, alpha })
    }

    pub fn dim(&self) -> usize {
        self.phi.in_dim()
    }
}

fn unit(n: usize, i: usize, s: f64) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = s;
    v
}

/// `min ℓᵀv` over `K ∩ [−1,1]ⁿ`.
fn min_on_cone(l: &Vector, k: &ConeHRep) -> Result<(f64, Vector)> {
    let r = lp_solve(l, &k.box_slice())?;
    match (r.status, r.value, r.point) {
        (Status::Optimal, Some(v), Some(p)) => Ok((v, p)),
        (s, _, _) => Err(PlqError::Numerical(format!("cone LP ended with status {s:?}"))),
    }
}

/// Records the first refutation of each condition.
fn refute(r: &mut CompositeReport, c: ConditionRefutation) {
    let flag = match c.condition {
        Condition::A => &mut r.a,
        Condition::B => &mut r.b,
        Condition::C => &mut r.c,
    };
    if *flag {
        *flag = false;
        r.refutations.push(c);
    }
}

/// Conditions (a), (b), (c) at `w̄`. The verdict is `StrongLocalMin` under
/// (a) and (c), `LocalMin` under (a) and (b), `Stationary` under (a) alone.
pub fn composite_conditions(cs: &CompositeStructure, w: &Vector, settings: &Settings) -> Result<CompositeReport> {
    let n = cs.dim();
    if w.len() != n {
        return Err(PlqError::DimensionMismatch(format!("w̄ has length {}, expected {n}", w.len())));
    }
    if n > settings.max_composite_dim {
        return Err(PlqError::TooManyPieces {
            count: n,
            limit: settings.max_composite_dim,
        });
    }
    for map in [&cs.f_grad, &cs.phi] {
        if map.pieces().len() > settings.max_composite_pieces {
            return Err(PlqError::TooManyPieces {
                count: map.pieces().len(),
                limit: settings.max_composite_pieces,
            });
        }
    }
    let z = cs.phi.eval(w)?;
    let g = cs.f_grad.eval(&z)?;
    let zero: Vec<usize> = (0..n).filter(|&i| w[i] == 0.0).collect();
    let mut smooth = Vector::zeros(n);
    for i in (0..n).filter(|&i| w[i] != 0.0) {
        smooth[i] = cs.alpha[i] * w[i].signum();
    }
    let f_active: Vec<(usize, ConeHRep)> = cs
        .f_grad
        .active_pieces(&z)
        .into_iter()
        .map(|j| Ok((j, tangent_cone(&cs.f_grad.pieces()[j].domain, &z)?)))
        .collect::<Result<_>>()?;

    let mut report = CompositeReport {
        a: true,
        b: true,
        c: true,
        level: Level::NotStationary,
        refutations: Vec::new(),
        cones_checked: 0,
    };
    for k in cs.phi.active_pieces(w) {
        let piece = &cs.phi.pieces()[k];
        let t_k = tangent_cone(&piece.domain, w)?;
        for mask in 0..(1usize << zero.len()) {
            let signs: Vec<(usize, i8)> = zero
                .iter()
                .enumerate()
                .map(|(b, &i)| (i, if mask >> b & 1 == 1 { -1 } else { 1 }))
                .collect();
            let mut cone = t_k.clone();
            let pulled_g = piece.b.transpose() * &g;
            let mut form = &pulled_g + &smooth;
            for &(i, s) in &signs {
                let s = f64::from(s);
                cone.push_row(&unit(n, i, -s), Sense::Le);
                form[i] += cs.alpha[i] * s;
            }
            // Cancellation at |gᵢ| = αᵢ leaves rounding noise that would
            // otherwise be normalized into a spurious cut.
            for i in 0..n {
                if form[i].abs() <= FORM_TOL * (1.0 + pulled_g[i].abs() + cs.alpha[i]) {
                    form[i] = 0.0;
                }
            }
            let (lmin, lv) = min_on_cone(&form, &cone)?;
            let a_holds = lmin >= -settings.tol * (1.0 + max_abs_vec(&form));
            if !a_holds {
                refute(
                    &mut report,
                    ConditionRefutation {
                        condition: Condition::A,
                        f_piece: None,
                        phi_piece: k,
                        signs: signs.clone(),
                        witness: lv,
                        value: lmin,
                    },
                );
            }
            // Where ℓ ≥ 0 on the cone the level set {ℓ ≤ 0} is {ℓ = 0};
            // the equality row is the numerically sharper encoding.
            let mut cut = cone.clone();
            let scale = max_abs_vec(&form);
            if scale > 0.0 {
                cut.push_row(&(&form / scale), if a_holds { Sense::Eq } else { Sense::Le });
            }
            for (j, s_j) in &f_active {
                report.cones_checked += 1;
                let mut c = cut.clone();
                let pulled = s_j.a() * &piece.b;
                for (r, &sense) in s_j.senses().iter().enumerate() {
                    c.push_row(&pulled.row(r).transpose(), sense);
                }
                let a_j = &cs.f_grad.pieces()[*j].b;
                let q = symmetrize(&(piece.b.transpose() * a_j * &piece.b));
                let weak = copositive_with(&q, &c, MethodChoice::Auto, settings)?;
                if !weak.is_copositive() {
                    let wv = weak.witness.clone().expect("refutation carries a witness");
                    let val = quad_form(&q, &wv);
                    for cond in [Condition::B, Condition::C] {
                        refute(
                            &mut report,
                            ConditionRefutation {
                                condition: cond,
                                f_piece: Some(*j),
                                phi_piece: k,
                                signs: signs.clone(),
                                witness: wv.clone(),
                                value: val,
                            },
                        );
                    }
                    continue;
                }
                if report.c {
                    let strict = strictly_copositive_on_cone(&q, &c, settings)?;
                    if !strict.is_strict() {
                        let wv = strict.witness.clone().unwrap_or_else(|| Vector::zeros(n));
                        let val = quad_form(&q, &wv);
                        refute(
                            &mut report,
                            ConditionRefutation {
                                condition: Condition::C,
                                f_piece: Some(*j),
                                phi_piece: k,
                                signs: signs.clone(),
                                witness: wv,
                                value: val,
                            },
                        );
                    }
                }
            }
        }
    }
    report.level = match (report.a, report.b, report.c) {
        (false, _, _) => Level::NotStationary,
        (true, _, true) => Level::StrongLocalMin,
        (true, true, false) => Level::LocalMin,
        (true, false, false) => Level::Stationary,
    };
    Ok(report)
}

/// The singleton-piece reduction: `Q = BᵀAB`, `b = BᵀF(z̄) + α∘sign(w̄)`,
/// and weights `αᵢ` kept only where `w̄ᵢ = 0`.
pub fn absvalue_data(cs: &CompositeStructure, w: &Vector) -> Result<(Mat, Vector, Vector)> {
    if cs.f_grad.pieces().len() != 1 || cs.phi.pieces().len() != 1 {
        return Err(PlqError::InvalidParameter(
            "the absolute-value reduction needs single-piece F and Φ".into(),
        ));
    }
    let bk = &cs.phi.pieces()[0].b;
    let z = cs.phi.eval(w)?;
    let g = cs.f_grad.eval(&z)?;
    let q = symmetrize(&(bk.transpose() * &cs.f_grad.pieces()[0].b * bk));
    let mut b = bk.transpose() * g;
    let mut alpha = Vector::zeros(w.len());
    for i in 0..w.len() {
        if w[i] == 0.0 {
            alpha[i] = cs.alpha[i];
        } else {
            b[i] += cs.alpha[i] * w[i].signum();
        }
    }
    Ok((q, b, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::MapPiece;
    use crate::copositivity::absvalue_copositivity;
    use crate::geometry::Polyhedron;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    fn abs_map() -> PaMap {
        PaMap::new(vec![
            MapPiece {
                domain: Polyhedron::from_rows(&[(vec![1.0], Sense::Le, 0.0)], 1).unwrap(),
                b: Mat::from_element(1, 1, -1.0),
                q: Vector::zeros(1),
            },
            MapPiece {
                domain: Polyhedron::from_rows(&[(vec![-1.0], Sense::Le, 0.0)], 1).unwrap(),
                b: Mat::from_element(1, 1, 1.0),
                q: Vector::zeros(1),
            },
        ])
        .unwrap()
    }

    fn identity(n: usize) -> PaMap {
        PaMap::affine(Mat::identity(n, n), Vector::zeros(n)).unwrap()
    }

    #[test]
    fn half_square_of_abs_is_a_strong_min() {
        let cs = CompositeStructure::new(identity(1), abs_map(), v(&[0.0])).unwrap();
        let r = composite_conditions(&cs, &v(&[0.0]), &Settings::default()).unwrap();
        assert!(r.a && r.b && r.c, "{r:?}");
        assert_eq!(r.level, Level::StrongLocalMin);
    }

    #[test]
    fn heavy_weight_makes_the_cut_trivial() {
        // f(z) = −½z² with Φ = id and α = 5: ℓ(v) = 5|v| leaves only v = 0.
        let f = PaMap::affine(Mat::from_element(1, 1, -1.0), Vector::zeros(1)).unwrap();
        let cs = CompositeStructure::new(f, identity(1), v(&[5.0])).unwrap();
        let r = composite_conditions(&cs, &v(&[0.0]), &Settings::default()).unwrap();
        assert_eq!(r.level, Level::StrongLocalMin, "{r:?}");
        // Without the weight the concave form is refuted.
        let f = PaMap::affine(Mat::from_element(1, 1, -1.0), Vector::zeros(1)).unwrap();
        let cs = CompositeStructure::new(f, identity(1), v(&[0.0])).unwrap();
        let r = composite_conditions(&cs, &v(&[0.0]), &Settings::default()).unwrap();
        assert_eq!(r.level, Level::Stationary);
        assert!(r.refutations.iter().any(|x| x.condition == Condition::B && x.value < 0.0));
    }

    #[test]
    fn first_order_failure_is_reported() {
        // f(z) = z (F ≡ 1), Φ = id, α = 0.5: ℓ(v) = v + 0.5|v| < 0 for v < 0.
        let f = PaMap::affine(Mat::zeros(1, 1), v(&[1.0])).unwrap();
        let cs = CompositeStructure::new(f, identity(1), v(&[0.5])).unwrap();
        let r = composite_conditions(&cs, &v(&[0.0]), &Settings::default()).unwrap();
        assert!(!r.a);
        assert_eq!(r.level, Level::NotStationary);
        let a = r.refutations.iter().find(|x| x.condition == Condition::A).unwrap();
        assert!(a.witness[0] < 0.0 && a.signs == vec![(0, -1)]);
    }

    #[test]
    fn guards() {
        let cs = CompositeStructure::new(identity(7), PaMap::affine(Mat::identity(7, 7), Vector::zeros(7)).unwrap(), Vector::zeros(7))
            .unwrap();
        assert!(matches!(
            composite_conditions(&cs, &Vector::zeros(7), &Settings::default()),
            Err(PlqError::TooManyPieces { .. })
        ));
    }

    #[test]
    fn discontinuous_map_is_rejected() {
        let mut pieces = abs_map().pieces().to_vec();
        pieces[0].q[0] = 1.0;
        let bad = PaMap::new(pieces).unwrap();
        assert!(CompositeStructure::new(identity(1), bad, v(&[0.0])).is_err());
    }

    #[test]
    fn singleton_pieces_agree_with_the_absolute_value_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = Settings::default();
        for _ in 0..25 {
            let (n, m) = (3, 3);
            let a = symmetrize(&Mat::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0)));
            let bk = Mat::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
            // w̄ has zeros; F(z̄) is chosen so that first order holds.
            let w = Vector::from_fn(n, |i, _| if i == 0 { 0.7 } else { 0.0 });
            let alpha = Vector::from_fn(n, |i, _| if i == 0 { 0.0 } else { 0.5 });
            let target = Vector::from_fn(n, |i, _| if i == 0 { 0.0 } else { [0.5, -0.5, 0.2][i] });
            let g = bk.transpose().pseudo_inverse(1e-12).unwrap() * &target;
            let q = &g - &a * (&bk * &w);
            let f = PaMap::affine(a, q).unwrap();
            let phi = PaMap::affine(bk, Vector::zeros(m)).unwrap();
            let cs = CompositeStructure::new(f, phi, alpha).unwrap();
            let r = composite_conditions(&cs, &w, &s).unwrap();
            let (qq, b, al) = absvalue_data(&cs, &w).unwrap();
            let abs = absvalue_copositivity(&qq, &b, &al, &s).unwrap();
            assert!(r.a);
            assert_eq!(r.b, abs.is_copositive());
        }
    }
}
