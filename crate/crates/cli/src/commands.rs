//! Subcommand bodies. Each returns a JSON result and whether the verdict
//! is positive; errors become exit codes in `main`.

use serde::Serialize;
use serde_json::{json, Value};

use plq_core::calculus::PlqFunction;
use plq_core::copositivity::{
    absvalue_analysis, absvalue_copositivity, copositive_with, strictly_copositive_on_cone, MethodChoice,
};
use plq_core::geometry::{feasible_point, ConeHRep};
use plq_core::linalg::Vector;
use plq_core::optimality::{enumerate_stationary_values, enumerate_strict_minima, plq_local_min, plq_strong_min, Level};
use plq_core::statmodels::{composite_conditions, ConvexPaVerdict};
use plq_core::{PlqError, Settings};

use crate::problem::{CliError, CliResult, MatrixProblem, Objective, Problem};

pub struct Outcome {
    pub result: Value,
    pub positive: bool,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn vec_json(v: &Vector) -> Value {
    json!(v.as_slice())
}

fn unsupported(command: &str, o: &Objective) -> CliError {
    CliError::Input(format!("`{command}` is not available for `{}` objectives", o.kind()))
}

fn plq_validation(f: &PlqFunction) -> CliResult<(Value, bool)> {
    let v = f.validate()?;
    let g = f.gradient_pa_check()?;
    let ok = v.continuous;
    Ok((
        json!({
            "dim": f.dim(),
            "pieces": f.len(),
            "validation": v,
            "gradient_check": g,
        }),
        ok,
    ))
}

pub fn validate(p: &Problem) -> CliResult<Outcome> {
    let (mut result, positive) = match &p.objective {
        Objective::Plq(f) => plq_validation(f)?,
        Objective::PaMaxmin(g, f) => {
            let (mut v, ok) = plq_validation(f)?;
            v["maxmin_terms"] = json!(g.term_count());
            (v, ok)
        }
        Objective::Composite(c) => (
            json!({
                "n_params": c.n_params(),
                "observations": c.data.len(),
                "model": c.model,
                "fit": c.fit,
                "sparsity": c.sparsity,
            }),
            true,
        ),
        Objective::CompositeStructure(c) => (
            json!({
                "dim": c.dim(),
                "f_grad_pieces": c.f_grad.pieces().len(),
                "phi_pieces": c.phi.pieces().len(),
                "continuous": true,
            }),
            true,
        ),
        Objective::BallExample(b) => (json!({ "dim": b.dim() }), true),
    };
    result["kind"] = json!(p.objective.kind());
    if let Some(x) = &p.constraints {
        result["constraints"] = json!({
            "rows": x.nrows(),
            "empty": feasible_point(x)?.is_none(),
        });
    }
    Ok(Outcome { result, positive })
}

fn need_points(p: &Problem, points: &[Vector]) -> CliResult<Vec<Vector>> {
    let pts = if points.is_empty() { p.points.clone() } else { points.to_vec() };
    if pts.is_empty() {
        return Err(CliError::Input("no points given (use --point or the `points` field)".into()));
    }
    Ok(pts)
}

pub fn eval(p: &Problem, points: &[Vector]) -> CliResult<Outcome> {
    let mut out = Vec::new();
    for x in need_points(p, points)? {
        let value = match &p.objective {
            Objective::Plq(f) => f.eval(&x)?,
            Objective::PaMaxmin(g, _) => g.eval(&x),
            Objective::Composite(c) => c.eval(&x)?,
            Objective::BallExample(b) => b.eval(&x)?,
            o @ Objective::CompositeStructure(_) => return Err(unsupported("eval", o)),
        };
        out.push(json!({ "point": vec_json(&x), "value": value }));
    }
    Ok(Outcome {
        result: json!({ "values": out }),
        positive: true,
    })
}

/// A second-order quantity, or the library's reason for refusing it.
fn second_order(r: plq_core::Result<f64>) -> CliResult<Value> {
    match r {
        Ok(v) => Ok(json!(v)),
        Err(PlqError::SecondOrderUnavailable(m)) => Ok(json!({ "unavailable": m })),
        Err(e) => Err(e.into()),
    }
}

pub fn deriv(p: &Problem, points: &[Vector], directions: &[Vector]) -> CliResult<Outcome> {
    let dirs = if directions.is_empty() { p.directions.clone() } else { directions.to_vec() };
    if dirs.is_empty() {
        return Err(CliError::Input(
            "no directions given (use --direction or the `directions` field)".into(),
        ));
    }
    let mut out = Vec::new();
    for x in need_points(p, points)? {
        for v in &dirs {
            let mut entry = json!({ "point": vec_json(&x), "direction": vec_json(v) });
            match &p.objective {
                Objective::Plq(f) | Objective::PaMaxmin(_, f) => {
                    entry["dir1"] = to_json(&f.dir1(&x, v)?);
                    entry["dir2"] = to_json(&f.dir2(&x, v)?);
                }
                Objective::Composite(c) => {
                    entry["dir1"] = json!(c.dir1(&x, v)?);
                    entry["dir2"] = second_order(c.dir2(&x, v))?;
                }
                Objective::BallExample(b) => {
                    entry["dir1"] = json!(b.dir1(&x, v)?);
                    entry["dir2"] = json!(b.dir2(&x, v)?);
                    entry["d2_sub"] = json!(b.d2_sub(&x, v)?);
                }
                o @ Objective::CompositeStructure(_) => return Err(unsupported("deriv", o)),
            }
            out.push(entry);
        }
    }
    Ok(Outcome {
        result: json!({ "derivatives": out }),
        positive: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyLevel {
    Local,
    Strong,
}

impl CertifyLevel {
    fn required(self) -> Level {
        match self {
            CertifyLevel::Local => Level::LocalMin,
            CertifyLevel::Strong => Level::StrongLocalMin,
        }
    }
}

pub fn certify(p: &Problem, points: &[Vector], level: CertifyLevel, s: &Settings) -> CliResult<Outcome> {
    let x_set = p.x_set();
    let mut out = Vec::new();
    let mut positive = true;
    for x in need_points(p, points)? {
        let entry = match &p.objective {
            Objective::Plq(f) | Objective::PaMaxmin(_, f) => {
                let cert = match level {
                    CertifyLevel::Local => plq_local_min(f, &x_set, &x, s)?,
                    CertifyLevel::Strong => plq_strong_min(f, &x_set, &x, s)?,
                };
                positive &= cert.level >= level.required();
                json!({ "point": vec_json(&x), "level": cert.level, "certificate": cert })
            }
            Objective::Composite(c) => {
                if level == CertifyLevel::Strong {
                    return Err(CliError::Input(
                        "composite objectives support `--level local` only".into(),
                    ));
                }
                if p.constraints.is_some() {
                    return Err(CliError::Input(
                        "composite objectives are certified without constraints".into(),
                    ));
                }
                let v = c.convex_pa_certificate(&x, s)?;
                let lv = match v {
                    ConvexPaVerdict::LocalMin { .. } => Level::LocalMin,
                    ConvexPaVerdict::NotStationary { .. } => Level::NotStationary,
                };
                positive &= lv >= level.required();
                json!({ "point": vec_json(&x), "level": lv, "certificate": v })
            }
            Objective::CompositeStructure(cs) => {
                if p.constraints.is_some() {
                    return Err(CliError::Input(
                        "composite structures are certified without constraints".into(),
                    ));
                }
                let r = composite_conditions(cs, &x, s)?;
                positive &= r.level >= level.required();
                json!({ "point": vec_json(&x), "level": r.level, "certificate": r })
            }
            o @ Objective::BallExample(_) => return Err(unsupported("certify", o)),
        };
        out.push(entry);
    }
    Ok(Outcome {
        result: json!({ "required": level.required(), "points": out }),
        positive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerateWhat {
    Minima,
    Values,
}

pub fn enumerate(p: &Problem, what: EnumerateWhat, s: &Settings) -> CliResult<Outcome> {
    let f = p.objective.piecewise().ok_or_else(|| unsupported("enumerate", &p.objective))?;
    let x_set = p.x_set();
    let result = match what {
        EnumerateWhat::Minima => {
            let m = enumerate_strict_minima(f, &x_set, s)?;
            json!({ "count": m.len(), "strict_minima": m })
        }
        EnumerateWhat::Values => {
            let v = enumerate_stationary_values(f, &x_set, s)?;
            json!({ "count": v.len(), "stationary_values": v })
        }
    };
    Ok(Outcome { result, positive: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CopositiveMethod {
    Auto,
    Oracle,
    OneNegEig,
    Absvalue,
}

pub fn copositive(
    m: &MatrixProblem,
    cone: Option<&ConeHRep>,
    method: CopositiveMethod,
    strict: bool,
    s: &Settings,
) -> CliResult<Outcome> {
    let n = m.q.nrows();
    if method == CopositiveMethod::Absvalue {
        if cone.is_some() {
            return Err(CliError::Input(
                "the absvalue method builds its own cone from (b, α); drop --cone".into(),
            ));
        }
        if strict {
            return Err(CliError::Input("--strict is not available for the absvalue method".into()));
        }
        let (b, alpha) = abs_data(m)?;
        let v = absvalue_copositivity(&m.q, b, alpha, s)?;
        let positive = v.is_copositive();
        return Ok(Outcome {
            result: json!({ "verdict": v }),
            positive,
        });
    }
    let orthant;
    let cone = match cone {
        Some(c) => c,
        None => {
            orthant = ConeHRep::nonnegative_orthant(n);
            &orthant
        }
    };
    if cone.dim() != n {
        return Err(CliError::Input(format!("cone has dimension {}, q is {n}×{n}", cone.dim())));
    }
    let v = if strict {
        if !matches!(method, CopositiveMethod::Auto | CopositiveMethod::Oracle) {
            return Err(CliError::Input("strict queries are answered by the oracle only".into()));
        }
        strictly_copositive_on_cone(&m.q, cone, s)?
    } else {
        let choice = match method {
            CopositiveMethod::Auto => MethodChoice::Auto,
            CopositiveMethod::Oracle => MethodChoice::Oracle,
            CopositiveMethod::OneNegEig => MethodChoice::OneNegEig,
            CopositiveMethod::Absvalue => unreachable!("handled above"),
        };
        copositive_with(&m.q, cone, choice, s)?
    };
    let positive = if strict { v.is_strict() } else { v.is_copositive() };
    Ok(Outcome {
        result: json!({ "strict": strict, "verdict": v }),
        positive,
    })
}

fn abs_data(m: &MatrixProblem) -> CliResult<(&Vector, &Vector)> {
    match (&m.b, &m.alpha) {
        (Some(b), Some(a)) => Ok((b, a)),
        _ => Err(CliError::Input("the absolute-value test needs both `b` and `alpha`".into())),
    }
}

pub fn absqp(m: &MatrixProblem, s: &Settings) -> CliResult<Outcome> {
    let (b, alpha) = abs_data(m)?;
    let r = absvalue_analysis(&m.q, b, alpha, s)?;
    let positive = r.verdict.is_copositive();
    Ok(Outcome {
        result: json!({ "analysis": r }),
        positive,
    })
}
