use thiserror::Error;

use crate::sde::Calculus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("system is in {got} form but {expected} form is required; convert it explicitly")]
    CalculusMismatch { expected: Calculus, got: Calculus },
    #[error("operation requires polynomial coefficients: {0}")]
    NonPolynomial(String),
    #[error("point outside the domain: {0}")]
    OutsideDomain(String),
    #[error("gradient undefined at {0}")]
    UndefinedGradient(String),
    #[error("no sign change of G found after {attempts} attempts")]
    NoSignChange { attempts: usize },
    #[error("could not bracket the dependent coordinate: {0}")]
    RootBracket(String),
    #[error("initial point is not on the manifold (|G| = {residual:e})")]
    NotOnManifold { residual: f64 },
    #[error("unstable part present (eigenvalue {re} + {im}i): center reduction hypothesis violated")]
    UnstableSpectrum { re: f64, im: f64 },
    #[error("eigenvalue {re} + {im}i has zero real part but nonzero imaginary part")]
    ImaginaryCenter { re: f64, im: f64 },
    #[error("zero eigenvalue is defective (algebraic multiplicity {algebraic}, kernel dimension {geometric})")]
    DefectiveZero { algebraic: usize, geometric: usize },
    #[error("split does not match the system: {0}")]
    SplitMismatch(String),
    #[error("non-finite state at step {index}")]
    NonFinite { index: usize },
    #[error("initial data is characteristic: angle {angle:e} rad below {threshold:e} at parameter {at:?}")]
    Characteristic { angle: f64, threshold: f64, at: Vec<f64> },
    #[error("degenerate initial curve tangent at parameter {0:?}")]
    DegenerateTangent(Vec<f64>),
    #[error("characteristic field vanishes at parameter {0:?}")]
    ZeroFieldVector(Vec<f64>),
    #[error("point {0:?} lies outside the integral surface footprint")]
    OutsideFootprint(Vec<f64>),
    #[error("surface inversion did not converge in {iterations} Newton iterations")]
    NewtonFailed { iterations: usize },
    #[error("initial data produces no zero level set")]
    NoZeroLevel,
    #[error("ensemble too small: {got} < {min}")]
    EnsembleTooSmall { got: usize, min: usize },
    #[error("all trajectories blew up or left the domain")]
    AllBlownUp,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
