use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wire `{0}` appears more than once")]
    DuplicateWire(String),
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("wire order is not a permutation of the operator's wires")]
    NotAPermutation,
    #[error("wire `{name}` has dimension {left} on one side and {right} on the other")]
    DimConflict { name: String, left: usize, right: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("wire mismatch: {0}")]
    WireMismatch(String),
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("map is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },
    #[error("invalid superchannel: {0}")]
    InvalidSuperchannel(String),
    #[error("superchannel output is not a valid channel: {0}")]
    OutputNotCptp(String),
    #[error("operator is not a channel in the declared direction (residual {residual:.3e})")]
    NotAChannelInDeclaredDirection { residual: f64 },
    #[error("channel is not square (input dim {input}, output dim {output})")]
    NonSquareChannel { input: usize, output: usize },
    #[error("invalid process matrix: {0}")]
    InvalidProcessMatrix(String),
    #[error("mixing parameter {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("SDP is {kind} infeasible (certificate residual {certificate_norm:.3e})")]
    Infeasible { kind: &'static str, certificate_norm: f64 },
    #[error("SDP solver ran into numerical trouble: {0}")]
    NumericalTrouble(String),
    #[error("problem too large: variable side {side} exceeds cap {cap}")]
    ProblemTooLarge { side: usize, cap: usize },
    #[error("quadrature did not reach tolerance {tol:.1e} (estimated error {estimate:.3e})")]
    QuadratureFailure { tol: f64, estimate: f64 },
    #[error("criterion boundary not bracketed: {0}")]
    GridTooCoarse(String),
    #[error("cavity truncation leak: top Fock population {population:.3e}")]
    TruncationLeak { population: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
