//! Joint output statistics of a qubit under continuous weak measurement of
//! two non-commuting observables by linear detectors.
//!
//! The crate builds the counting-field master equation, evaluates the
//! (optionally post-selected) generating function of the time-integrated
//! outputs, and inverts it to joint, conditional and marginal distributions.
//! Closed-form short-time results and the shift quasi-distribution are
//! provided as independent references.
//!
//! Units: hbar = 1; index 0 of every 2x2 matrix is the excited state |Z+>.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops are kept
// for the small fixed-size matrix code.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod detector;
pub mod distribution;
pub mod error;
pub mod evolution;
pub mod fourier;
pub mod qubit;
pub mod scenario;
pub mod shift;

pub use analytic::{
    average_outputs, char_function_xy, gaussian_reference, grid_minimum, joint_dist_cross_qv,
    joint_dist_output_corr, joint_dist_xy, positivity_threshold, ShortTimeParams,
};
pub use detector::{
    check_pairwise_cs, check_short_time_positivity, check_two_detector, delta_z,
    derived_quantities, validate_correlators, DerivedDetectorQuantities, DetectorCorrelators,
    InequalityReport, ValidityReport,
};
pub use distribution::{
    auto_grid, conditional_slice, difference_and_certainty, joint_distribution, marginal, moments,
    ChiGrid, ConditionalSlice, Distribution1D, JointDistribution,
};
pub use error::{Error, Result};
pub use evolution::{
    build_liouvillian, generating_function, postselect_probability, propagate, GeneratingFunction,
    Liouvillian,
};
pub use qubit::{
    bloch_to_density, build_postselection, expectation, frame_rotate, Axis, BlochVector,
    DensityMatrix, HamiltonianParams, Ket, Matrix2, PostSelection, PostSelectionSpec, C64,
};
pub use scenario::{Dissipation, ModelConfig, ScenarioTag};
pub use shift::{
    convolve_with_gaussian, shift_char_exact, shift_quasi_2d, shift_weights_1d, PolarizationPair,
    Regularizer, ShiftGrid, ShiftMeasure, ShiftWeights,
};
