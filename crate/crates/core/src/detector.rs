//! Linear detector correlators, derived rates and the positivity inequalities
//! that restrict them.
//!
//! Detector indices are 0-based in the API; report names use the 1-based
//! labels `(1,1)`, `(1,2)`, ... of the physics notation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-frequency noises and responses of two linear detectors (hbar = 1).
///
/// `s_qv[i][j]` is S_QV^(i,j), `a_vq[i][j]` is a_VQ^(i,j), and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorCorrelators {
    pub s_qq: [[f64; 2]; 2],
    #[serde(default)]
    pub s_qv: [[f64; 2]; 2],
    pub s_vv: [[f64; 2]; 2],
    pub a_vq: [[f64; 2]; 2],
    #[serde(default)]
    pub a_qv: [[f64; 2]; 2],
}

impl DetectorCorrelators {
    /// Independent detectors: no cross noises, no cross responses, a_QV = 0.
    pub fn independent(s_qq: [f64; 2], s_vv: [f64; 2], a_vq: [f64; 2]) -> Self {
        let diag = |v: [f64; 2]| [[v[0], 0.0], [0.0, v[1]]];
        DetectorCorrelators {
            s_qq: diag(s_qq),
            s_qv: [[0.0; 2]; 2],
            s_vv: diag(s_vv),
            a_vq: diag(a_vq),
            a_qv: [[0.0; 2]; 2],
        }
    }

    /// Two identical independent detectors.
    pub fn identical(s_qq: f64, s_vv: f64, a_vq: f64) -> Self {
        Self::independent([s_qq; 2], [s_vv; 2], [a_vq; 2])
    }

    /// A detector is active when its direct gain a_VQ^(i,i) is nonzero.
    pub fn is_active(&self, i: usize) -> bool {
        self.a_vq[i][i] != 0.0
    }

    /// a_VQ^(i,i) - a_QV^(i,i), the gain entering the inequalities.
    pub fn effective_gain(&self, i: usize) -> f64 {
        self.a_vq[i][i] - self.a_qv[i][i]
    }

    pub fn has_cross_terms(&self) -> bool {
        self.s_qq[0][1] != 0.0
            || self.s_vv[0][1] != 0.0
            || self.s_qv[0][1] != 0.0
            || self.s_qv[1][0] != 0.0
            || self.a_vq[0][1] != 0.0
            || self.a_vq[1][0] != 0.0
            || self.a_qv[0][1] != 0.0
            || self.a_qv[1][0] != 0.0
    }

    /// Structural invariants: finite entries, nonnegative diagonal noises,
    /// symmetric S_QQ and S_VV.
    pub fn check_invariants(&self) -> Result<()> {
        let all = [self.s_qq, self.s_qv, self.s_vv, self.a_vq, self.a_qv];
        if all.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfiguration("non-finite correlator".into()));
        }
        for i in 0..2 {
            if self.s_qq[i][i] < 0.0 || self.s_vv[i][i] < 0.0 {
                return Err(Error::InvalidConfiguration(format!(
                    "negative diagonal noise for detector {}",
                    i + 1
                )));
            }
        }
        if self.s_qq[0][1] != self.s_qq[1][0] || self.s_vv[0][1] != self.s_vv[1][0] {
            return Err(Error::InvalidConfiguration(
                "S_QQ and S_VV must be symmetric".into(),
            ));
        }
        Ok(())
    }
}

/// Rates and scales that follow from the correlators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedDetectorQuantities {
    /// Measurement-induced dephasing rate of each detector, S_QQ^(i,i).
    pub gamma_i: [f64; 2],
    /// Total dephasing rate.
    pub gamma: f64,
    /// Acquisition time 4 S_VV / a_VQ^2.
    pub t_a: [f64; 2],
    /// Ideality K_i = gamma_i t_a_i, equal to 1 for an ideal detector.
    pub k: [f64; 2],
    /// Variance of the Gaussian noise envelope of O_i at time T, t_a/(4T).
    pub sigma2: [f64; 2],
}

pub fn derived_quantities(c: &DetectorCorrelators, t: f64) -> Result<DerivedDetectorQuantities> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let mut out = DerivedDetectorQuantities {
        gamma_i: [0.0; 2],
        gamma: 0.0,
        t_a: [0.0; 2],
        k: [0.0; 2],
        sigma2: [0.0; 2],
    };
    for i in 0..2 {
        let a = c.a_vq[i][i];
        if a == 0.0 {
            return Err(Error::UndefinedAcquisitionTime { detector: i + 1 });
        }
        out.gamma_i[i] = c.s_qq[i][i];
        out.t_a[i] = 4.0 * c.s_vv[i][i] / (a * a);
        out.k[i] = out.gamma_i[i] * out.t_a[i];
        out.sigma2[i] = out.t_a[i] / (4.0 * t);
    }
    out.gamma = out.gamma_i[0] + out.gamma_i[1];
    Ok(out)
}

/// Outcome of one inequality `lhs >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    /// Right-hand side with the gain a_VQ - a_QV (authoritative).
    pub rhs: f64,
    /// Right-hand side with a_VQ alone (good-amplifier form).
    pub rhs_direct_gain: f64,
    pub pass: bool,
}

impl InequalityReport {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64, rhs_direct_gain: f64) -> Self {
        InequalityReport {
            name: name.into(),
            lhs,
            rhs,
            rhs_direct_gain,
            pass: holds(lhs, rhs),
        }
    }
}

/// `lhs >= rhs` with slack 1e-12 on the residual scaled by max(1, |lhs|, |rhs|).
pub fn holds(lhs: f64, rhs: f64) -> bool {
    let scale = 1f64.max(lhs.abs()).max(rhs.abs());
    (lhs - rhs) / scale >= -1e-12
}

/// S_QQ^(i,i) S_VV^(j,j) - |S_QV^(i,j)|^2 >= |a_VQ^(j,i) - a_QV^(i,j)|^2 / 4.
pub fn check_pairwise_cs(c: &DetectorCorrelators, i: usize, j: usize) -> InequalityReport {
    let lhs = c.s_qq[i][i] * c.s_vv[j][j] - c.s_qv[i][j].powi(2);
    let rhs = 0.25 * (c.a_vq[j][i] - c.a_qv[i][j]).powi(2);
    let rhs_direct = 0.25 * c.a_vq[j][i].powi(2);
    InequalityReport::new(
        format!("cauchy_schwarz({},{})", i + 1, j + 1),
        lhs,
        rhs,
        rhs_direct,
    )
}

/// Input-input and output-output Cauchy-Schwarz bounds S^(1,1) S^(2,2) >= |S^(1,2)|^2.
pub fn check_same_kind_cs(c: &DetectorCorrelators) -> [InequalityReport; 2] {
    let qq = c.s_qq[0][0] * c.s_qq[1][1];
    let vv = c.s_vv[0][0] * c.s_vv[1][1];
    let q12 = c.s_qq[0][1].powi(2);
    let v12 = c.s_vv[0][1].powi(2);
    [
        InequalityReport::new("cauchy_schwarz_qq", qq, q12, q12),
        InequalityReport::new("cauchy_schwarz_vv", vv, v12, v12),
    ]
}

/// Delta[z] = (|1 + z^2| - (1 + |z|^2)) / 2, never positive.
pub fn delta_z(z: Complex64) -> f64 {
    0.5 * ((1.0 + z * z).norm() - (1.0 + z.norm_sqr()))
}

fn require_output_noise(c: &DetectorCorrelators) -> Result<()> {
    for i in 0..2 {
        if !(c.s_vv[i][i] > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "S_VV^({0},{0}) must be positive for the two-detector bounds",
                i + 1
            )));
        }
    }
    Ok(())
}

fn two_detector_rhs(c: &DetectorCorrelators, g: [f64; 2]) -> f64 {
    let svv1 = c.s_vv[0][0];
    let svv2 = c.s_vv[1][1];
    let (s11, s12, s21, s22) = (c.s_qv[0][0], c.s_qv[0][1], c.s_qv[1][0], c.s_qv[1][1]);
    0.25 * g[0] * g[0] / svv1
        + s11 * s11 / svv1
        + 0.25 * g[1] * g[1] / svv2
        + s22 * s22 / svv2
        + (g[0] * s21 / svv1 - g[1] * s12 / svv2).abs()
        + s21 * s21 / svv1
        + s12 * s12 / svv2
}

/// The extra two-detector restriction on S_QQ^(1,1) + S_QQ^(2,2).
pub fn check_two_detector(c: &DetectorCorrelators) -> Result<InequalityReport> {
    require_output_noise(c)?;
    let lhs = c.s_qq[0][0] + c.s_qq[1][1];
    let rhs = two_detector_rhs(c, [c.effective_gain(0), c.effective_gain(1)]);
    let direct = two_detector_rhs(c, [c.a_vq[0][0], c.a_vq[1][1]]);
    Ok(InequalityReport::new("two_detector", lhs, rhs, direct))
}

/// Positivity conditions of the short-time zero-overlap distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortTimePositivityReport {
    /// gamma >= 1/t_a1 + 1/t_a2 (no cross noise).
    pub no_cross: InequalityReport,
    /// Cross-noise condition for prep |Z+>, post |Z->.
    pub cross_zp_to_zm: InequalityReport,
    /// Cross-noise condition for prep |Z->, post |Z+>.
    pub cross_zm_to_zp: InequalityReport,
    pub pass: bool,
}

fn no_cross_rhs(c: &DetectorCorrelators, g: [f64; 2]) -> f64 {
    0.25 * (g[0] * g[0] / c.s_vv[0][0] + g[1] * g[1] / c.s_vv[1][1])
}

/// Right-hand side of the cross-noise condition; `sign = +1` for the
/// |Z+> -> |Z-> orientation, `-1` for the swapped one.
fn cross_rhs(c: &DetectorCorrelators, g: [f64; 2], sign: f64) -> f64 {
    let (s11, s12, s21, s22) = (c.s_qv[0][0], c.s_qv[0][1], c.s_qv[1][0], c.s_qv[1][1]);
    let second = ((g[1] - sign * 2.0 * s12).powi(2) + (2.0 * s22).powi(2)) / c.s_vv[1][1];
    let first = ((g[0] + sign * 2.0 * s21).powi(2) + (2.0 * s11).powi(2)) / c.s_vv[0][0];
    0.25 * (second + first)
}

pub fn check_short_time_positivity(c: &DetectorCorrelators) -> Result<ShortTimePositivityReport> {
    require_output_noise(c)?;
    let lhs = c.s_qq[0][0] + c.s_qq[1][1];
    let g = [c.effective_gain(0), c.effective_gain(1)];
    let direct = [c.a_vq[0][0], c.a_vq[1][1]];
    let no_cross = InequalityReport::new(
        "short_time_no_cross",
        lhs,
        no_cross_rhs(c, g),
        no_cross_rhs(c, direct),
    );
    let cross_zp_to_zm = InequalityReport::new(
        "short_time_cross_zp_to_zm",
        lhs,
        cross_rhs(c, g, 1.0),
        cross_rhs(c, direct, 1.0),
    );
    let cross_zm_to_zp = InequalityReport::new(
        "short_time_cross_zm_to_zp",
        lhs,
        cross_rhs(c, g, -1.0),
        cross_rhs(c, direct, -1.0),
    );
    let pass = no_cross.pass && cross_zp_to_zm.pass && cross_zm_to_zp.pass;
    Ok(ShortTimePositivityReport {
        no_cross,
        cross_zp_to_zm,
        cross_zm_to_zp,
        pass,
    })
}

/// Every inequality evaluated for a correlator set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub checks: Vec<InequalityReport>,
    pub pass: bool,
}

impl ValidityReport {
    pub fn from_checks(checks: Vec<InequalityReport>) -> Self {
        let pass = checks.iter().all(|r| r.pass);
        ValidityReport { checks, pass }
    }

    pub fn push(&mut self, check: InequalityReport) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn failures(&self) -> impl Iterator<Item = &InequalityReport> {
        self.checks.iter().filter(|r| !r.pass)
    }
}

/// Runs the pairwise bounds for all index pairs, the same-kind bounds and,
/// when both detectors are active, the two-detector and short-time positivity conditions.
pub fn validate_correlators(c: &DetectorCorrelators) -> Result<ValidityReport> {
    c.check_invariants()?;
    let mut checks = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            checks.push(check_pairwise_cs(c, i, j));
        }
    }
    checks.extend(check_same_kind_cs(c));
    if c.is_active(0) && c.is_active(1) {
        checks.push(check_two_detector(c)?);
        let app = check_short_time_positivity(c)?;
        checks.extend([app.no_cross, app.cross_zp_to_zm, app.cross_zm_to_zp]);
    }
    Ok(ValidityReport::from_checks(checks))
}
