use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("closure exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },

    #[error("ambiguous match: a product lies within {tol:e} of both element {first} and element {second}")]
    AmbiguousMatch {
        first: usize,
        second: usize,
        tol: f64,
    },

    #[error("hypothesis violated: {hypothesis}{}", witness.map(|w| format!(" (witness {w})")).unwrap_or_default())]
    HypothesisViolated {
        hypothesis: String,
        witness: Option<usize>,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("semigroup is not a group")]
    NotAGroup,

    #[error(
        "decomposition unstable: eigenvalue gaps stayed below tolerance after {attempts} attempts"
    )]
    DecompositionUnstable { attempts: usize },

    #[error("irrep matching ambiguous: {0}")]
    MatchingAmbiguous(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("orbit {orbit} is not free (stabilizer of size {stabilizer})")]
    NonFreeOrbit { orbit: usize, stabilizer: usize },

    #[error("search too large: {size} candidates exceeds cap {cap}")]
    SearchTooLarge { size: usize, cap: usize },

    #[error("empty cloud")]
    EmptyCloud,

    #[error("cloud blew up past {points} points")]
    BlowUp { points: usize },

    #[error("ansatz pair (f={f}, gamma={gamma}) is not in the relation R")]
    AnsatzNotSubsetOfR { f: usize, gamma: usize },

    #[error("no section: the action is not transitive ({0})")]
    SectionUndefined(String),
}

impl Error {
    /// Name of the module an error originates from, used when errors are
    /// surfaced by front-ends.
    pub fn module(&self) -> &'static str {
        match self {
            Error::CapExceeded { .. } | Error::AmbiguousMatch { .. } => "algebra",
            Error::ShapeMismatch(_) => "linalg",
            Error::NotAGroup
            | Error::DecompositionUnstable { .. }
            | Error::MatchingAmbiguous(_) => "rep",
            Error::AnsatzNotSubsetOfR { .. } => "nonuniq",
            Error::NonFreeOrbit { .. }
            | Error::SearchTooLarge { .. }
            | Error::SectionUndefined(_) => "conv",
            Error::EmptyCloud | Error::BlowUp { .. } => "converge",
            Error::HypothesisViolated { .. }
            | Error::InvalidInput(_)
            | Error::InternalInconsistency(_) => "core",
        }
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::HypothesisViolated {
            hypothesis: msg.into(),
            witness: None,
        }
    }
}
