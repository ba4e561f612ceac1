//! Problem files. Everything is parsed and validated before any analysis
//! runs; a failure here is an input error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use plq_core::calculus::{BallExample, MaxMin, PlqFunction};
use plq_core::geometry::{ConeHRep, Polyhedron};
use plq_core::linalg::{Mat, Vector};
use plq_core::statmodels::{CompositeObjective, CompositeStructure, Dataset, Fit, PaModel, Sparsity};
use plq_core::{PlqError, Settings};

pub const VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Guard(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Guard(m) => write!(f, "guard exceeded: {m}"),
        }
    }
}

impl From<PlqError> for CliError {
    fn from(e: PlqError) -> Self {
        if e.is_guard() {
            CliError::Guard(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Composite objectives may point at a CSV file instead of inlining data.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSpec {
    #[serde(default)]
    data: Option<Dataset>,
    #[serde(default)]
    data_csv: Option<PathBuf>,
    model: PaModel,
    fit: Fit,
    #[serde(default)]
    sparsity: Option<Sparsity>,
    #[serde(default)]
    gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    Plq(PlqFunction),
    PaMaxmin(MaxMin),
    Composite(CompositeSpec),
    CompositeStructure(CompositeStructure),
    BallExample(BallExample),
}

pub enum Objective {
    Plq(PlqFunction),
    /// Kept next to its piecewise form so values come from the max-min formula.
    PaMaxmin(MaxMin, PlqFunction),
    Composite(CompositeObjective),
    CompositeStructure(CompositeStructure),
    BallExample(BallExample),
}

impl Objective {
    pub fn kind(&self) -> &'static str {
        match self {
            Objective::Plq(_) => "plq",
            Objective::PaMaxmin(..) => "pa-maxmin",
            Objective::Composite(_) => "composite",
            Objective::CompositeStructure(_) => "composite-structure",
            Objective::BallExample(_) => "ball-example",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Plq(f) | Objective::PaMaxmin(_, f) => f.dim(),
            Objective::Composite(c) => c.n_params(),
            Objective::CompositeStructure(c) => c.dim(),
            Objective::BallExample(b) => b.dim(),
        }
    }

    /// The piecewise form, for commands that need explicit pieces.
    pub fn piecewise(&self) -> Option<&PlqFunction> {
        match self {
            Objective::Plq(f) | Objective::PaMaxmin(_, f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRepr {
    version: u32,
    objective: ObjectiveSpec,
    #[serde(default)]
    constraints: Option<Polyhedron>,
    #[serde(default)]
    points: Vec<Vec<f64>>,
    #[serde(default)]
    directions: Vec<Vec<f64>>,
    #[serde(default)]
    options: Option<Settings>,
}

pub struct Problem {
    pub raw: Value,
    pub objective: Objective,
    pub constraints: Option<Polyhedron>,
    pub points: Vec<Vector>,
    pub directions: Vec<Vector>,
    pub options: Option<Settings>,
}

impl Problem {
    /// `X`, or the whole space when the file gives no constraints.
    pub fn x_set(&self) -> Polyhedron {
        self.constraints
            .clone()
            .unwrap_or_else(|| Polyhedron::whole_space(self.objective.dim()))
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses JSON text; serde_json errors carry line and column.
fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<(T, Value)> {
    let raw: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let parsed = serde_json::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((parsed, raw))
}

fn check_version(path: &Path, v: u32) -> CliResult<()> {
    if v == VERSION {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{}: unsupported problem version {v} (this build reads version {VERSION})",
            path.display()
        )))
    }
}

fn vector_of(what: &str, v: &[f64], n: usize) -> CliResult<Vector> {
    if v.len() != n {
        return Err(CliError::Input(format!("{what} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|t| !t.is_finite()) {
        return Err(CliError::Input(format!("{what} has a non-finite entry")));
    }
    Ok(Vector::from_vec(v.to_vec()))
}

pub fn load_problem(path: &Path, settings_for_pa: impl Fn(Option<&Settings>) -> Settings) -> CliResult<Problem> {
    let text = read(path)?;
    let (repr, raw): (ProblemRepr, Value) = parse(path, &text)?;
    check_version(path, repr.version)?;
    let s = settings_for_pa(repr.options.as_ref());
    let objective = match repr.objective {
        ObjectiveSpec::Plq(f) => Objective::Plq(f),
        ObjectiveSpec::PaMaxmin(g) => {
            let f = plq_core::calculus::pa_maxmin_to_piecewise(&g, s.max_maxmin_terms)?;
            Objective::PaMaxmin(g, f)
        }
        ObjectiveSpec::Composite(c) => {
            let data = match (c.data, c.data_csv) {
                (Some(d), None) => d,
                (None, Some(p)) => {
                    let p = path.parent().unwrap_or(Path::new(".")).join(p);
                    let file = fs::File::open(&p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                    Dataset::from_csv(file).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
                }
                _ => {
                    return Err(CliError::Input(
                        "a composite objective needs exactly one of `data` and `data_csv`".into(),
                    ))
                }
            };
            Objective::Composite(CompositeObjective::new(data, c.model, c.fit, c.sparsity, c.gamma)?)
        }
        ObjectiveSpec::CompositeStructure(c) => Objective::CompositeStructure(c),
        ObjectiveSpec::BallExample(b) => Objective::BallExample(b),
    };
    let n = objective.dim();
    if let Some(x) = &repr.constraints {
        if x.dim() != n {
            return Err(CliError::Input(format!(
                "constraints have dimension {}, objective has {n}",
                x.dim()
            )));
        }
    }
    let points = repr
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| vector_of(&format!("points[{i}]"), p, n))
        .collect::<CliResult<_>>()?;
    let directions = repr
        .directions
        .iter()
        .enumerate()
        .map(|(i, p)| vector_of(&format!("directions[{i}]"), p, n))
        .collect::<CliResult<_>>()?;
    Ok(Problem {
        raw,
        objective,
        constraints: repr.constraints,
        points,
        directions,
        options: repr.options,
    })
}

/// Command-line vectors: comma-separated numbers, e.g. `0.5,-1`.
pub fn parse_vector(what: &str, text: &str, n: usize) -> CliResult<Vector> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Input(format!("{what} `{text}`: {e}")))
        })
        .collect::<CliResult<_>>()?;
    vector_of(&format!("{what} `{text}`"), &v, n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConeSpec {
    Orthant { dim: usize },
    WholeSpace { dim: usize },
    HRep(ConeHRep),
}

impl ConeSpec {
    pub fn build(&self) -> ConeHRep {
        match self {
            ConeSpec::Orthant { dim } => ConeHRep::nonnegative_orthant(*dim),
            ConeSpec::WholeSpace { dim } => ConeHRep::whole_space(*dim),
            ConeSpec::HRep(c) => c.clone(),
        }
    }
}

/// Input of `copositive` and `absqp`: a symmetric `Q`, optionally `(b, α)`
/// and a cone.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRepr {
    version: u32,
    #[serde(with = "plq_core::serde_util::matrix")]
    q: Mat,
    #[serde(default)]
    b: Option<Vec<f64>>,
    #[serde(default)]
    alpha: Option<Vec<f64>>,
    #[serde(default)]
    cone: Option<ConeSpec>,
    #[serde(default)]
    options: Option<Settings>,
}

pub struct MatrixProblem {
    pub raw: Value,
    pub q: Mat,
    pub b: Option<Vector>,
    pub alpha: Option<Vector>,
    pub cone: Option<ConeHRep>,
    pub options: Option<Settings>,
}

pub fn load_matrix(path: &Path) -> CliResult<MatrixProblem> {
    let text = read(path)?;
    let (r, raw): (MatrixRepr, Value) = parse(path, &text)?;
    check_version(path, r.version)?;
    let n = r.q.nrows();
    if r.q.ncols() != n {
        return Err(CliError::Input(format!("q is {}×{}, expected a square matrix", n, r.q.ncols())));
    }
    let b = r.b.as_deref().map(|v| vector_of("b", v, n)).transpose()?;
    let alpha = r.alpha.as_deref().map(|v| vector_of("alpha", v, n)).transpose()?;
    let cone = r.cone.as_ref().map(ConeSpec::build);
    Ok(MatrixProblem {
        raw,
        q: r.q,
        b,
        alpha,
        cone,
        options: r.options,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeFile {
    version: u32,
    cone: ConeSpec,
}

pub fn load_cone(path: &Path) -> CliResult<(ConeHRep, Value)> {
    let text = read(path)?;
    let (r, raw): (ConeFile, Value) = parse(path, &text)?;
    check_version(path, r.version)?;
    Ok((r.cone.build(), raw))
}
