use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported mesh shape `{0}`")]
    UnsupportedShape(String),

    #[error("mesh resolution {0} too small (need >= 2)")]
    ResolutionTooSmall(usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate boundary edge {edge} (length {length:e})")]
    DegenerateEdge { edge: usize, length: f64 },

    #[error("deformation support violation: {0}")]
    SupportViolation(String),

    #[error("deformation too large: det(DF) = {det:e} at evaluation point {point}")]
    DeformationTooLarge { det: f64, point: usize },

    #[error("inverted triangle {triangle} after deformation (signed area {area:e})")]
    InvertedTriangle { triangle: usize, area: f64 },

    #[error("normals required to evaluate boundary weights")]
    MissingNormals,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix coefficient not symmetric at point {point} (asymmetry {asymmetry:e})")]
    NonSymmetric { point: usize, asymmetry: f64 },

    #[error("degenerate coefficient 1 - 2k dpsi = {margin:.6} < 0.5 at step {step}")]
    Degeneracy { step: usize, margin: f64 },

    #[error(
        "Picard iteration did not converge at step {step} after {iterations} iterations (increment {increment:e})"
    )]
    NonConvergence {
        step: usize,
        iterations: usize,
        increment: f64,
    },

    #[error("energy blow-up at step {step}: {energy:e} exceeds {limit:e}")]
    BlowUp { step: usize, energy: f64, limit: f64 },

    #[error("linear solve failed after {iterations} iterations (residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("time window ({t0}, {t1}) not inside [0, {t_final}]")]
    InvalidWindow { t0: f64, t1: f64, t_final: f64 },

    #[error("mesh quality: minimum angle {min_angle_deg:.3} deg below {threshold_deg} deg")]
    MeshQuality { min_angle_deg: f64, threshold_deg: f64 },

    #[error("mesh file parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("optimization iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// Short class name, used by the command-line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::UnsupportedShape(_) => "UnsupportedShape",
            Error::ResolutionTooSmall(_) => "ResolutionTooSmall",
            Error::InvalidMesh(_) => "InvalidMesh",
            Error::DegenerateEdge { .. } => "DegenerateEdge",
            Error::SupportViolation(_) => "SupportViolation",
            Error::DeformationTooLarge { .. } => "DeformationTooLarge",
            Error::InvertedTriangle { .. } => "InvertedTriangle",
            Error::MissingNormals => "MissingNormals",
            Error::NonFinite(_) => "NonFinite",
            Error::NonSymmetric { .. } => "NonSymmetric",
            Error::Degeneracy { .. } => "DegeneracyError",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::BlowUp { .. } => "BlowUp",
            Error::LinearSolve { .. } => "LinearSolveError",
            Error::InvalidWindow { .. } => "InvalidWindow",
            Error::MeshQuality { .. } => "MeshQuality",
            Error::MeshParse { .. } => "MeshParse",
            Error::Config(_) => "ConfigError",
            Error::CheckFailed(_) => "CheckFailed",
            Error::AtIteration { source, .. } => source.class(),
            Error::Io(_) => "IoError",
            Error::Csv(_) => "CsvError",
            Error::Json(_) => "JsonError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
