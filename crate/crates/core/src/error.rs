use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible entropy target {target} bits (feasible range ({min}, {max}])")]
    InfeasibleEntropy { target: f64, min: f64, max: f64 },
    #[error("rate {rate} is unreachable under the given distribution")]
    InfeasibleRate { rate: f64 },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error(
        "degenerate bit channel at level {level}: conditional entropy {entropy} is too close to 1"
    )]
    DegenerateChannel { level: usize, entropy: f64 },
    #[error("ensemble does not converge at the top of the search bracket ({snr_db:.2} dB)")]
    DivergedEnsemble { snr_db: f64 },
    #[error("could not repair candidate to satisfy base matrix constraints")]
    InfeasibleConstraints,
    #[error("lifting factor {factor} cannot resolve {max_entry} parallel edges")]
    CannotResolveParallel { factor: usize, max_entry: u32 },
    #[error("amplitude sequence does not match the composition")]
    CompositionMismatch,
    #[error("cannot build systematic encoder: {0}")]
    EncoderConstruction(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("FER sweep does not bracket the target for R = {rate}")]
    InsufficientSweep { rate: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
