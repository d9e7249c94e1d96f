use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),

    #[error("invalid vertex id `{0}`")]
    InvalidVertexId(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("self-loop at vertex `{0}`")]
    SelfLoop(String),

    #[error("edge {u}-{v} has non-positive conductance {c}")]
    NonPositiveConductance { u: String, v: String, c: f64 },

    #[error("edge {u}-{v} listed twice with conflicting conductances {first} and {second}")]
    ConflictingEdge {
        u: String,
        v: String,
        first: f64,
        second: f64,
    },

    #[error("graph is disconnected (vertex `{0}` unreachable)")]
    Disconnected(String),

    #[error("foliation requires a nonempty exterior")]
    NoExterior,

    #[error("layer {0} is empty")]
    EmptyLayer(usize),

    #[error("vertex `{vertex}` appears in {first} and {second}")]
    OverlappingLayers {
        vertex: String,
        first: String,
        second: String,
    },

    #[error("vertex `{0}` is neither exterior nor in any layer")]
    CoverageViolation(String),

    #[error("edge {u}-{v} joins layer {layer_u} to layer {layer_v}")]
    LocalityViolation {
        u: String,
        v: String,
        layer_u: usize,
        layer_v: usize,
    },

    #[error("root `{0}` lies in the exterior")]
    RootsInExterior(String),

    #[error("a component of growth cluster {0} has no edge to the rest of the graph")]
    ExteriorUnreachable(usize),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPD { row: usize, pivot: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue})")]
    NotPSD { eigenvalue: f64 },

    #[error("matrix is singular at column {0}")]
    Singular(usize),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("test function is nonzero at `{0}`, outside the required support")]
    SupportViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
            Error::Parse { .. } => "ParseError",
            Error::EmptyGraph => "EmptyGraph",
            Error::DuplicateVertex(_) => "DuplicateVertex",
            Error::InvalidVertexId(_) => "InvalidVertexId",
            Error::UnknownVertex(_) => "UnknownVertex",
            Error::SelfLoop(_) => "SelfLoop",
            Error::NonPositiveConductance { .. } => "NonPositiveConductance",
            Error::ConflictingEdge { .. } => "ConflictingEdge",
            Error::Disconnected(_) => "Disconnected",
            Error::NoExterior => "NoExterior",
            Error::EmptyLayer(_) => "EmptyLayer",
            Error::OverlappingLayers { .. } => "OverlappingLayers",
            Error::CoverageViolation(_) => "CoverageViolation",
            Error::LocalityViolation { .. } => "LocalityViolation",
            Error::RootsInExterior(_) => "RootsInExterior",
            Error::ExteriorUnreachable(_) => "ExteriorUnreachable",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotPD { .. } => "NotPD",
            Error::NotPSD { .. } => "NotPSD",
            Error::Singular(_) => "Singular",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SupportViolation(_) => "SupportViolation",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// True for errors caused by malformed or invalid input files.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Io(_)
                | Error::NotPD { .. }
                | Error::NotPSD { .. }
                | Error::Singular(_)
                | Error::NoConvergence { .. }
        )
    }
}
