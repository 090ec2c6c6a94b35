//! Spec files: JSON documents tagged by `kind`.
//!
//! Parsing runs in two passes so that serde_json can attach a line and
//! column to every error: the first pass reads only the tag, the second
//! deserializes the whole document into the matching type.

use std::fmt;

use eqsym::algebra::is_permutation;
use eqsym::linalg::{permutation_matrix, CVec, Mat, C64};
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error in {} at line {}, column {}: {}",
            self.path, self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ParseError {}

fn located<T: DeserializeOwned>(path: &str, text: &str) -> Result<T, ParseError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        ParseError {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Group,
    CoupledRep,
    Gspace,
    Network,
    ConvergenceExperiment,
    LearnabilityInstance,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Group => "group",
            Kind::CoupledRep => "coupled_rep",
            Kind::Gspace => "gspace",
            Kind::Network => "network",
            Kind::ConvergenceExperiment => "convergence_experiment",
            Kind::LearnabilityInstance => "learnability_instance",
        }
    }
}

#[derive(Deserialize)]
struct Header {
    kind: Kind,
}

#[derive(Debug, Clone)]
pub enum SpecFile {
    Group(GroupSpec),
    CoupledRep(CoupledRepSpec),
    Gspace(GSpaceSpec),
    Network(NetworkSpec),
    Experiment(ExperimentSpec),
    Learnability(LearnabilitySpec),
}

impl SpecFile {
    pub fn kind(&self) -> Kind {
        match self {
            SpecFile::Group(_) => Kind::Group,
            SpecFile::CoupledRep(_) => Kind::CoupledRep,
            SpecFile::Gspace(_) => Kind::Gspace,
            SpecFile::Network(_) => Kind::Network,
            SpecFile::Experiment(_) => Kind::ConvergenceExperiment,
            SpecFile::Learnability(_) => Kind::LearnabilityInstance,
        }
    }
}

pub fn parse(path: &str, text: &str) -> Result<SpecFile, ParseError> {
    let header: Header = located(path, text)?;
    Ok(match header.kind {
        Kind::Group => SpecFile::Group(located(path, text)?),
        Kind::CoupledRep => SpecFile::CoupledRep(located(path, text)?),
        Kind::Gspace => SpecFile::Gspace(located(path, text)?),
        Kind::Network => SpecFile::Network(located(path, text)?),
        Kind::LearnabilityInstance => SpecFile::Learnability(located(path, text)?),
        Kind::ConvergenceExperiment => {
            let h: ExperimentHeader = located(path, text)?;
            SpecFile::Experiment(match h.experiment {
                ExperimentKind::Generators => ExperimentSpec::Generators(located(path, text)?),
                ExperimentKind::Clouds => ExperimentSpec::Clouds(located(path, text)?),
                ExperimentKind::SemigroupCloud => {
                    ExperimentSpec::SemigroupCloud(located(path, text)?)
                }
                ExperimentKind::Spiral => ExperimentSpec::Spiral(located(path, text)?),
            })
        }
    })
}

// ---- matrices ----

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> C64 {
        match e {
            Entry::Real(re) => C64::new(re, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawMatrix {
    Permutation { permutation: Vec<usize> },
    Rows(Vec<Vec<Entry>>),
}

/// A matrix given as rows of real numbers or `[re, im]` pairs, or as
/// `{"permutation": [...]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct MatrixJson(pub Mat);

impl TryFrom<RawMatrix> for MatrixJson {
    type Error = String;

    fn try_from(raw: RawMatrix) -> Result<Self, String> {
        match raw {
            RawMatrix::Permutation { permutation } => {
                if !is_permutation(&permutation) {
                    return Err(format!("{permutation:?} is not a permutation"));
                }
                Ok(MatrixJson(permutation_matrix(&permutation)))
            }
            RawMatrix::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != cols) {
                    return Err("matrix rows have different lengths".into());
                }
                if rows.is_empty() || cols == 0 {
                    return Err("empty matrix".into());
                }
                let m = Mat::from_fn(rows.len(), cols, |i, j| rows[i][j].into());
                if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err("non-finite matrix entry".into());
                }
                Ok(MatrixJson(m))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(from = "Vec<Entry>")]
pub struct VectorJson(pub CVec);

impl From<Vec<Entry>> for VectorJson {
    fn from(v: Vec<Entry>) -> Self {
        VectorJson(CVec::from_iterator(v.len(), v.into_iter().map(C64::from)))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "Vec<usize>")]
pub struct Permutation(pub Vec<usize>);

impl TryFrom<Vec<usize>> for Permutation {
    type Error = String;

    fn try_from(p: Vec<usize>) -> Result<Self, String> {
        if is_permutation(&p) {
            Ok(Permutation(p))
        } else {
            Err(format!("{p:?} is not a permutation"))
        }
    }
}

pub fn mats(ms: &[MatrixJson]) -> Vec<Mat> {
    ms.iter().map(|m| m.0.clone()).collect()
}

// ---- groups ----

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorsJson {
    Permutations(Vec<Permutation>),
    Matrices(Vec<MatrixJson>),
}

#[derive(Debug, Clone)]
pub enum GroupSource {
    Generators(GeneratorsJson),
    Table(Vec<Vec<usize>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    #[serde(default)]
    #[allow(dead_code)]
    kind: Option<Kind>,
    generators: Option<GeneratorsJson>,
    table: Option<Vec<Vec<usize>>>,
    labels: Option<Vec<String>>,
    ell: Option<Vec<f64>>,
    lambda: Option<Vec<f64>>,
}

/// A finite semigroup from generators or a Cayley table. `ell` and
/// `lambda` feed the convolution audits.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawGroup")]
pub struct GroupSpec {
    pub source: GroupSource,
    pub labels: Option<Vec<String>>,
    pub ell: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

impl TryFrom<RawGroup> for GroupSpec {
    type Error = String;

    fn try_from(raw: RawGroup) -> Result<Self, String> {
        let source = match (raw.generators, raw.table) {
            (Some(g), None) => GroupSource::Generators(g),
            (None, Some(t)) => GroupSource::Table(t),
            _ => return Err("exactly one of `generators` and `table` is required".into()),
        };
        Ok(GroupSpec {
            source,
            labels: raw.labels,
            ell: raw.ell,
            lambda: raw.lambda,
        })
    }
}

// ---- coupled reps ----

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorPair {
    pub u: MatrixJson,
    pub v: MatrixJson,
}

/// Generator pairs `(ρ_U(s), ρ_V(s))`, closed together.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledRepSpec {
    #[allow(dead_code)]
    kind: Kind,
    pub pairs: Vec<GeneratorPair>,
}

// ---- G-spaces ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    copies: Option<usize>,
    action: Option<Vec<Permutation>>,
    mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum SpaceAction {
    /// Free copies of the left regular action.
    Regular(usize),
    /// One permutation per table element.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct SpaceSpec {
    pub action: SpaceAction,
    pub mu: Option<Vec<f64>>,
}

impl TryFrom<RawSpace> for SpaceSpec {
    type Error = String;

    fn try_from(raw: RawSpace) -> Result<Self, String> {
        let action = match (raw.copies, raw.action) {
            (Some(0), None) => return Err("`copies` must be positive".into()),
            (Some(k), None) => SpaceAction::Regular(k),
            (None, None) => SpaceAction::Regular(1),
            (None, Some(a)) => SpaceAction::Explicit(a.into_iter().map(|p| p.0).collect()),
            (Some(_), Some(_)) => return Err("`copies` and `action` are exclusive".into()),
        };
        Ok(SpaceSpec { action, mu: raw.mu })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GSpaceSpec {
    #[allow(dead_code)]
    kind: Kind,
    pub group: GroupSpec,
    pub x: SpaceSpec,
    pub y: SpaceSpec,
}

// ---- networks ----

fn default_sigma() -> String {
    "tanh".into()
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatedSpec {
    pub weight: MatrixJson,
    pub gates: Vec<VectorJson>,
    pub blocks: Vec<Vec<usize>>,
    #[serde(default = "default_sigma")]
    pub sigma: String,
    pub t_in: MatrixJson,
    pub t_out: MatrixJson,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    #[allow(dead_code)]
    kind: Kind,
    pub layers: Vec<MatrixJson>,
    pub gated: Option<GatedSpec>,
}

// ---- learnability ----

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnabilitySpec {
    #[allow(dead_code)]
    kind: Kind,
    pub functions: Vec<String>,
    pub symmetries: Vec<String>,
    pub relation: Vec<Vec<bool>>,
    pub ansatz: Vec<(usize, usize)>,
    pub h: Vec<usize>,
}

// ---- convergence experiments ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Generators,
    Clouds,
    SemigroupCloud,
    Spiral,
}

#[derive(Deserialize)]
struct ExperimentHeader {
    experiment: ExperimentKind,
}

#[derive(Debug, Clone)]
pub enum ExperimentSpec {
    Generators(GeneratorsExperiment),
    Clouds(CloudsExperiment),
    SemigroupCloud(SemigroupCloudExperiment),
    Spiral(SpiralExperiment),
}

fn default_wordlen() -> usize {
    6
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerators {
    #[allow(dead_code)]
    kind: Kind,
    #[allow(dead_code)]
    experiment: ExperimentKind,
    limit: Vec<MatrixJson>,
    steps: Option<Vec<Vec<MatrixJson>>>,
    perturbation: Option<Vec<MatrixJson>>,
    ns: Option<Vec<usize>>,
    #[serde(default = "default_wordlen")]
    max_wordlen: usize,
}

#[derive(Debug, Clone)]
pub enum StepSource {
    Explicit(Vec<Vec<MatrixJson>>),
    /// Step `n` is `limit + perturbation / n`.
    Perturbed {
        perturbation: Vec<MatrixJson>,
        ns: Vec<usize>,
    },
}

/// Generator tuples converging to `limit`, audited on words up to
/// `max_wordlen`.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawGenerators")]
pub struct GeneratorsExperiment {
    pub limit: Vec<MatrixJson>,
    pub steps: StepSource,
    pub max_wordlen: usize,
}

impl TryFrom<RawGenerators> for GeneratorsExperiment {
    type Error = String;

    fn try_from(raw: RawGenerators) -> Result<Self, String> {
        let steps = match (raw.steps, raw.perturbation, raw.ns) {
            (Some(s), None, None) => StepSource::Explicit(s),
            (None, Some(perturbation), Some(ns)) => StepSource::Perturbed { perturbation, ns },
            _ => return Err("give either `steps` or both `perturbation` and `ns`".into()),
        };
        Ok(GeneratorsExperiment {
            limit: raw.limit,
            steps,
            max_wordlen: raw.max_wordlen,
        })
    }
}

/// Point clouds audited against a limit cloud.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudsExperiment {
    #[allow(dead_code)]
    kind: Kind,
    #[allow(dead_code)]
    experiment: ExperimentKind,
    pub limit: Vec<MatrixJson>,
    pub steps: Vec<Vec<MatrixJson>>,
    pub window: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupCloudExperiment {
    #[allow(dead_code)]
    kind: Kind,
    #[allow(dead_code)]
    experiment: ExperimentKind,
    pub generators: Vec<MatrixJson>,
    pub window: f64,
    #[serde(default = "default_wordlen")]
    pub max_wordlen: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Annulus {
        radii: usize,
        angles: usize,
        r_min: f64,
        r_max: f64,
    },
    Circle {
        points: usize,
        radius: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpiralExperiment {
    #[allow(dead_code)]
    kind: Kind,
    #[allow(dead_code)]
    experiment: ExperimentKind,
    pub eps: f64,
    pub t_range: (f64, f64),
    pub samples: usize,
    pub grid: GridSpec,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_carry_positions() {
        let text = "{\n  \"kind\": \"group\",\n  \"generators\": {\"permutations\": [[0, 0]]}\n}";
        let err = parse("t.json", text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("not a permutation"), "{}", err.message);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = parse("t.json", r#"{"kind": "torus"}"#).unwrap_err();
        assert_eq!((err.line, err.column), (1, 16));
    }

    #[test]
    fn complex_entries_and_permutations() {
        let text = r#"{"kind": "coupled_rep", "pairs": [{"u": {"permutation": [1, 0]}, "v": [[[0, 1]]]}]}"#;
        let SpecFile::CoupledRep(c) = parse("t.json", text).unwrap() else {
            panic!()
        };
        assert_eq!(c.pairs[0].u.0[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(c.pairs[0].v.0[(0, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let text = r#"{"kind": "network", "layers": [[[1, 2], [3]]]}"#;
        assert!(parse("t.json", text)
            .unwrap_err()
            .message
            .contains("different lengths"));
    }

    #[test]
    fn group_needs_one_source() {
        let text = r#"{"kind": "group", "table": [[0]], "generators": {"permutations": [[0]]}}"#;
        assert!(parse("t.json", text)
            .unwrap_err()
            .message
            .contains("exactly one"));
    }

    #[test]
    fn experiments_dispatch_on_tag() {
        let text = r#"{"kind": "convergence_experiment", "experiment": "spiral", "eps": 0.1,
            "t_range": [-1, 1], "samples": 10, "grid": {"circle": {"points": 4, "radius": 1}}}"#;
        assert!(matches!(
            parse("t.json", text).unwrap(),
            SpecFile::Experiment(ExperimentSpec::Spiral(_))
        ));
    }
}
