//! Run configuration: a scenario preset plus optional overrides, the list of
//! measurement times and the products to write.

use std::path::{Path, PathBuf};

use cwlm_core::detector::DetectorCorrelators;
use cwlm_core::distribution::{auto_grid_with, ChiGrid, DEFAULT_GRID_SIZE};
use cwlm_core::qubit::{bloch_to_density, frame_rotate, PostSelectionSpec};
use cwlm_core::qubit::{
    build_postselection, Axis, BlochVector, DensityMatrix, HamiltonianParams, PostSelection,
};
use cwlm_core::scenario::{Dissipation, ModelConfig, ScenarioTag};
use cwlm_core::shift::Regularizer;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// Times are used as given.
    #[default]
    Absolute,
    /// Multiples of the acquisition time of detector 1.
    Acquisition,
    /// Multiples of 1 / Omega with Omega = |(Omega_x, Omega_y)|.
    Rabi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_grid_n")]
    pub n: usize,
    /// Counting-field half-widths per axis; overrides the automatic choice.
    #[serde(default)]
    pub chi_max: Option<[f64; 2]>,
    /// Half-range of the output axes O_1, O_2; alternative to `chi_max`.
    #[serde(default)]
    pub o_max: Option<[f64; 2]>,
}

fn default_grid_n() -> usize {
    DEFAULT_GRID_SIZE
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: DEFAULT_GRID_SIZE,
            chi_max: None,
            o_max: None,
        }
    }
}

/// Conditional distributions P(O_free | O_axis = y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    /// Conditioning output, 1 or 2.
    pub axis: usize,
    pub y: Vec<f64>,
}

/// Difference and certainty between post-selection on +n and -n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertaintySpec {
    /// Conditioning output of the slices, 1 or 2.
    #[serde(default = "default_certainty_axis")]
    pub axis: usize,
    #[serde(default = "default_y")]
    pub y: Vec<f64>,
    /// Post-selection direction n; defaults to the prepared Bloch direction.
    #[serde(default)]
    pub direction: Option<[f64; 3]>,
    /// Also write the joint difference and certainty.
    #[serde(default)]
    pub joint: bool,
    /// Slice used for the linear fit certainty = beta * o.
    #[serde(default)]
    pub fit_y: f64,
    #[serde(default = "default_fit_o_max")]
    pub fit_o_max: f64,
}

fn default_certainty_axis() -> usize {
    1
}

fn default_y() -> Vec<f64> {
    vec![0.0]
}

fn default_fit_o_max() -> f64 {
    2.0
}

impl Default for CertaintySpec {
    fn default() -> Self {
        CertaintySpec {
            axis: default_certainty_axis(),
            y: default_y(),
            direction: None,
            joint: false,
            fit_y: 0.0,
            fit_o_max: default_fit_o_max(),
        }
    }
}

/// Shift quasi-distribution of the prepared and post-selected polarizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub regularizer: Regularizer,
    #[serde(default = "default_half_extent")]
    pub half_extent: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_xi() -> f64 {
    1e-3
}

fn default_half_extent() -> f64 {
    2.0
}

fn default_spacing() -> f64 {
    1.0 / 64.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Products {
    #[serde(default = "yes")]
    pub joint: bool,
    #[serde(default)]
    pub marginals: bool,
    #[serde(default = "yes")]
    pub moments: bool,
    #[serde(default)]
    pub slices: Option<SliceSpec>,
    #[serde(default)]
    pub certainty: Option<CertaintySpec>,
    #[serde(default)]
    pub shifts: Option<ShiftSpec>,
}

fn yes() -> bool {
    true
}

impl Default for Products {
    fn default() -> Self {
        Products {
            joint: true,
            marginals: false,
            moments: true,
            slices: None,
            certainty: None,
            shifts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub description: Option<String>,
    pub scenario: ScenarioTag,
    #[serde(default)]
    pub correlators: Option<DetectorCorrelators>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianParams>,
    #[serde(default)]
    pub dissipation: Option<Dissipation>,
    #[serde(default)]
    pub measured: Option<[Axis; 2]>,
    #[serde(default = "default_prep")]
    pub prep: [f64; 3],
    #[serde(default = "default_post")]
    pub post: PostSelectionSpec,
    /// Post-select on exp(-iHT) applied to the configured states.
    #[serde(default)]
    pub frame_correction: bool,
    pub times: Vec<f64>,
    #[serde(default)]
    pub time_unit: TimeUnit,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub products: Products,
}

fn default_prep() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_post() -> PostSelectionSpec {
    PostSelectionSpec::None
}

/// One measurement time in both the configured unit and absolute units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimePoint {
    pub index: usize,
    pub value: f64,
    pub t: f64,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_axis(name: &str, axis: usize) -> Result<(), CliError> {
    if axis == 1 || axis == 2 {
        Ok(())
    } else {
        Err(bad(format!(
            "{name}: output index must be 1 or 2, got {axis}"
        )))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.times.is_empty() {
            return Err(bad("times must list at least one value"));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(bad(format!("times must be positive and finite, got {t}")));
        }
        if self.grid.chi_max.is_some() && self.grid.o_max.is_some() {
            return Err(bad("grid: give at most one of chi_max and o_max"));
        }
        for r in self.grid.chi_max.iter().chain(&self.grid.o_max).flatten() {
            if !(*r > 0.0) || !r.is_finite() {
                return Err(bad(format!("grid ranges must be positive, got {r}")));
            }
        }
        BlochVector::from_array(self.prep).map_err(|e| bad(format!("prep: {e}")))?;
        build_postselection(&self.post).map_err(|e| bad(format!("post: {e}")))?;
        if let Some(s) = &self.products.slices {
            check_axis("slices.axis", s.axis)?;
        }
        if let Some(c) = &self.products.certainty {
            check_axis("certainty.axis", c.axis)?;
            if !(c.fit_o_max > 0.0) {
                return Err(bad("certainty.fit_o_max must be positive"));
            }
        }
        if let Some(s) = &self.products.shifts {
            if !(s.xi > 0.0) {
                return Err(bad(format!("shifts.xi must be positive, got {}", s.xi)));
            }
        }
        Ok(())
    }

    /// Preset for the scenario with every given override applied.
    pub fn model(&self) -> ModelConfig {
        let mut m = ModelConfig::preset(self.scenario);
        if let Some(c) = self.correlators {
            m.correlators = c;
        }
        if let Some(h) = self.hamiltonian {
            m.hamiltonian = h;
        }
        if let Some(d) = self.dissipation {
            m.dissipation = d;
        }
        if let Some(a) = self.measured {
            m.measured = a;
        }
        m
    }

    pub fn time_points(&self, model: &ModelConfig) -> Result<Vec<TimePoint>, CliError> {
        let scale = match self.time_unit {
            TimeUnit::Absolute => 1.0,
            TimeUnit::Acquisition => model
                .acquisition_time()
                .map_err(|e| bad(format!("time_unit: {e}")))?,
            TimeUnit::Rabi => {
                let w = model.rabi_frequency();
                if !(w > 0.0) {
                    return Err(bad("time_unit rabi needs a nonzero Rabi frequency"));
                }
                1.0 / w
            }
        };
        Ok(self
            .times
            .iter()
            .enumerate()
            .map(|(index, &value)| TimePoint {
                index,
                value,
                t: value * scale,
            })
            .collect())
    }

    pub fn prep_state(&self) -> Result<DensityMatrix, CliError> {
        let b = BlochVector::from_array(self.prep).map_err(|e| bad(format!("prep: {e}")))?;
        bloch_to_density(b).map_err(|e| bad(format!("prep: {e}")))
    }

    /// Post-selection at time `t`, frame-corrected when requested.
    pub fn post_selection(&self, model: &ModelConfig, t: f64) -> Result<PostSelection, CliError> {
        let post = build_postselection(&self.post).map_err(|e| bad(format!("post: {e}")))?;
        Ok(self.corrected(post, model, t))
    }

    pub fn corrected(&self, post: PostSelection, model: &ModelConfig, t: f64) -> PostSelection {
        if self.frame_correction {
            frame_rotate(&post, &model.hamiltonian, t)
        } else {
            post
        }
    }

    pub fn chi_grid(&self, model: &ModelConfig, t: f64) -> Result<ChiGrid, cwlm_core::Error> {
        let n = self.grid.n;
        if let Some(chi) = self.grid.chi_max {
            ChiGrid::new([n, n], chi)
        } else if let Some(o) = self.grid.o_max {
            let c = &model.correlators;
            ChiGrid::for_output_range([n, n], o, [c.a_vq[0][0], c.a_vq[1][1]], t)
        } else {
            auto_grid_with(model, t, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::parse(r#"{"scenario": "ideal", "times": [0.1]}"#).unwrap();
        assert_eq!(cfg.prep, [0.0, 0.0, 1.0]);
        assert_eq!(cfg.post, PostSelectionSpec::None);
        assert_eq!(cfg.grid.n, 512);
        assert!(cfg.products.joint && cfg.products.moments && !cfg.products.marginals);
        assert_eq!(cfg.model(), ModelConfig::preset(ScenarioTag::Ideal));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"scenario": "ideal", "times": []}"#,
            r#"{"scenario": "ideal", "times": [-1.0]}"#,
            r#"{"scenario": "nope", "times": [1.0]}"#,
            r#"{"scenario": "ideal", "times": [1.0], "prep": [1.0, 1.0, 0.0]}"#,
            r#"{"scenario": "ideal", "times": [1.0], "unknown": 1}"#,
            r#"{"scenario": "ideal", "times": [1.0], "products": {"slices": {"axis": 3, "y": [0.0]}}}"#,
            r#"{"scenario": "ideal", "times": [1.0], "grid": {"chi_max": [1, 1], "o_max": [1, 1]}}"#,
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn time_units_scale() {
        let mut cfg =
            RunConfig::parse(r#"{"scenario": "experimental", "times": [0.4, 1.2]}"#).unwrap();
        let model = cfg.model();
        cfg.time_unit = TimeUnit::Acquisition;
        let t: Vec<f64> = cfg
            .time_points(&model)
            .unwrap()
            .iter()
            .map(|p| p.t)
            .collect();
        assert!((t[0] - 0.4 * 184.0).abs() < 1e-9 && (t[1] - 1.2 * 184.0).abs() < 1e-9);
        cfg.time_unit = TimeUnit::Rabi;
        let t = cfg.time_points(&model).unwrap()[0].t;
        assert!((t - 0.4 / std::f64::consts::PI).abs() < 1e-12);
    }
}
