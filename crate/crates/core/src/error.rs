use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Vertex labels inside messages are 1-based, matching every interchange format.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} is outside 1..={p}")]
    VertexOutOfRange { vertex: usize, p: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("I - Lambda is singular (|det| = {det:e})")]
    SingularSystem { det: f64 },

    #[error("trek expansion did not converge: last term magnitude {tail:e} exceeds {tol:e}")]
    Divergence { tail: f64, tol: f64 },

    #[error("ill-conditioned system (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("degenerate denominator ({value:e}) in closed-form edge weight")]
    DegenerateDenominator { value: f64 },

    #[error("edge-weight quadratic has complex roots (discriminant {discriminant:e})")]
    ComplexRoots { discriminant: f64 },

    #[error("plug-in variance is not positive ({variance:e})")]
    DegenerateVariance { variance: f64 },

    #[error("empirical likelihood did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    ElNonConvergence { iterations: usize, grad_norm: f64 },

    #[error("cannot transform parameters: lambda[{from},{to}] is zero")]
    ZeroDivisor { from: usize, to: usize },

    #[error("graph has more than {limit} directed cycles")]
    ExponentialBlowup { limit: usize },

    #[error("cycle {cycle:?} has |product of weights| = 1 in both orientations")]
    UnstableBothWays { cycle: Vec<usize> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("layer {layer}: {source}")]
    AtLayer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularSystem { .. }
            | Error::Divergence { .. }
            | Error::IllConditioned { .. }
            | Error::DegenerateDenominator { .. }
            | Error::ComplexRoots { .. }
            | Error::DegenerateVariance { .. }
            | Error::ElNonConvergence { .. }
            | Error::ZeroDivisor { .. }
            | Error::UnstableBothWays { .. } => true,
            Error::AtLayer { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
