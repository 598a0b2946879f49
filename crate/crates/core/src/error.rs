use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polarization vector has length {norm}, must not exceed 1")]
    InvalidPolarization { norm: f64 },

    #[error("matrix is not a valid density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    #[error("post-selection states are not orthogonal (|<psi1|psi2>| = {overlap:e})")]
    NonOrthogonalStates { overlap: f64 },

    #[error("state vector has zero norm")]
    ZeroNormState,

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("detector {detector} has a_VQ = 0, acquisition time undefined")]
    UndefinedAcquisitionTime { detector: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("unknown scenario `{0}` (expected ideal, experimental or experimental_detuned)")]
    UnknownScenario(String),

    #[error("post-selection probability {probability:e} is too small to condition on")]
    ZeroPostSelection { probability: f64 },

    #[error("propagation produced non-finite values at chi = ({chi1}, {chi2})")]
    NonFinite { chi1: f64, chi2: f64 },

    #[error("initial and final polarizations have zero overlap (1 + Pi.Pf = {overlap:e})")]
    ZeroOverlap { overlap: f64 },

    #[error("value {value} outside the grid range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("conditioning row carries mass {mass:e}, slice is degenerate")]
    DegenerateSlice { mass: f64 },

    #[error("distributions are defined on different grids")]
    GridMismatch,

    #[error("regularization scale must be positive, got {0}")]
    InvalidRegularization(f64),

    #[error("measurement time must be positive, got {0}")]
    InvalidTime(f64),

    #[error("grid size {0} is invalid (need an even number of points >= 64)")]
    InvalidGrid(usize),
}
