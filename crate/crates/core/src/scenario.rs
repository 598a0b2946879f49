//! Model configurations and the three shipped parameter presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::{
    derived_quantities, validate_correlators, DetectorCorrelators, InequalityReport, ValidityReport,
};
use crate::error::{Error, Result};
use crate::qubit::{Axis, HamiltonianParams};

/// Relaxation rates of the experimental preset, in 1/us.
pub const EXP_GAMMA_DOWN: f64 = 1.0 / 22.5;
pub const EXP_GAMMA_UP: f64 = 1.0 / 56.0;
pub const EXP_GAMMA_D: f64 = 1.0 / 15.6;
/// Acquisition time of the experimental preset, in us (2/t_a = 1/92 us^-1).
pub const EXP_T_A: f64 = 184.0;
/// Rabi frequency used by the experimental presets, in rad/us.
pub const EXP_OMEGA: f64 = std::f64::consts::PI;
/// Detuning-to-Rabi ratio of the detuned preset.
pub const DETUNING_RATIO: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioTag {
    Ideal,
    Experimental,
    ExperimentalDetuned,
}

impl ScenarioTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioTag::Ideal => "ideal",
            ScenarioTag::Experimental => "experimental",
            ScenarioTag::ExperimentalDetuned => "experimental_detuned",
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(ScenarioTag::Ideal),
            "experimental" => Ok(ScenarioTag::Experimental),
            "experimental_detuned" => Ok(ScenarioTag::ExperimentalDetuned),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

/// Which decoherence terms the master equation carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dissipation {
    /// Decoherence from detector backaction only: S_QQ^(i,i) D[O_i].
    Detectors,
    /// Dephasing and asymmetric transitions: gamma_d D[sz] + gamma_up D[s+] + gamma_down D[s-].
    Rates {
        gamma_d: f64,
        gamma_up: f64,
        gamma_down: f64,
    },
}

/// Everything the evolution engine needs besides states and counting fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub scenario: ScenarioTag,
    pub correlators: DetectorCorrelators,
    pub hamiltonian: HamiltonianParams,
    pub dissipation: Dissipation,
    /// Operators O_1, O_2 coupled to the detectors.
    pub measured: [Axis; 2],
}

impl ModelConfig {
    /// Shipped presets. Times are in units of 1/Omega for `ideal` and in
    /// microseconds for the experimental presets.
    pub fn preset(tag: ScenarioTag) -> Self {
        match tag {
            ScenarioTag::Ideal => ModelConfig {
                scenario: tag,
                correlators: DetectorCorrelators::identical(1.0, 1.0, 2.0),
                hamiltonian: HamiltonianParams::new(1.0, 0.0, 0.0),
                dissipation: Dissipation::Detectors,
                measured: [Axis::X, Axis::Y],
            },
            ScenarioTag::Experimental | ScenarioTag::ExperimentalDetuned => {
                let delta = if tag == ScenarioTag::ExperimentalDetuned {
                    DETUNING_RATIO * EXP_OMEGA
                } else {
                    0.0
                };
                ModelConfig {
                    scenario: tag,
                    correlators: DetectorCorrelators::identical(
                        EXP_GAMMA_D,
                        1.0,
                        (4.0 / EXP_T_A).sqrt(),
                    ),
                    hamiltonian: HamiltonianParams::new(EXP_OMEGA, 0.0, delta),
                    dissipation: Dissipation::Rates {
                        gamma_d: EXP_GAMMA_D,
                        gamma_up: EXP_GAMMA_UP,
                        gamma_down: EXP_GAMMA_DOWN,
                    },
                    measured: [Axis::X, Axis::Y],
                }
            }
        }
    }

    /// Acquisition time of detector 1.
    pub fn acquisition_time(&self) -> Result<f64> {
        Ok(derived_quantities(&self.correlators, 1.0)?.t_a[0])
    }

    /// Rabi frequency |(Omega_x, Omega_y)|.
    pub fn rabi_frequency(&self) -> f64 {
        self.hamiltonian.omega_bar_sq().sqrt()
    }

    /// All correlator inequalities plus, for rate-based dissipation, the
    /// requirement that the transition rates cover the detector backaction
    /// (D[sx]/t_a1 + D[sy]/t_a2 contributes 1/t_a1 + 1/t_a2 to each of
    /// gamma_up and gamma_down).
    pub fn validate(&self) -> Result<ValidityReport> {
        let mut report = validate_correlators(&self.correlators)?;
        if let Dissipation::Rates {
            gamma_d,
            gamma_up,
            gamma_down,
        } = self.dissipation
        {
            if [gamma_d, gamma_up, gamma_down]
                .iter()
                .any(|r| !r.is_finite() || *r < 0.0)
            {
                return Err(Error::InvalidConfiguration(
                    "dissipation rates must be finite and nonnegative".into(),
                ));
            }
            let mut need = 0.0;
            for i in 0..2 {
                if self.correlators.is_active(i) {
                    let a = self.correlators.a_vq[i][i];
                    need += a * a / (4.0 * self.correlators.s_vv[i][i]);
                }
            }
            report.push(check_rate("rate_up", gamma_up, need));
            report.push(check_rate("rate_down", gamma_down, need));
        }
        Ok(report)
    }
}

fn check_rate(name: &str, rate: f64, need: f64) -> InequalityReport {
    InequalityReport {
        name: name.to_string(),
        lhs: rate,
        rhs: need,
        rhs_direct_gain: need,
        pass: crate::detector::holds(rate, need),
    }
}
