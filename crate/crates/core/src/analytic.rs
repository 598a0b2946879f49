//! Closed-form short-time statistics for zero overlap between the prepared
//! state |Z+> and the post-selected state |Z->.
//!
//! `gamma` is the total dephasing rate S_QQ^(1,1) + S_QQ^(2,2). Outputs are the
//! normalized O_i = V_i / a_VQ^(i,i).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubit::C64;
use crate::scenario::ModelConfig;

/// Parameters of the short-time formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortTimeParams {
    pub omega_x: f64,
    pub omega_y: f64,
    pub gamma: f64,
    pub t: f64,
    /// Direct gains a_VQ^(i,i).
    pub a: [f64; 2],
    /// Output noises S_VV^(i,i).
    pub s_vv: [f64; 2],
    /// Output cross noise S_VV^(1,2).
    pub s_vv_12: f64,
    /// Input-output noises S_QV^(i,j).
    pub s_qv: [[f64; 2]; 2],
    /// Prepare |Z-> and post-select |Z+> instead.
    pub swapped: bool,
}

impl ShortTimeParams {
    /// Independent detectors with acquisition times `t_a` (S_VV = 1).
    pub fn new(omega_x: f64, omega_y: f64, gamma: f64, t_a: [f64; 2], t: f64) -> Result<Self> {
        let p = ShortTimeParams {
            omega_x,
            omega_y,
            gamma,
            t,
            a: [(4.0 / t_a[0]).sqrt(), (4.0 / t_a[1]).sqrt()],
            s_vv: [1.0, 1.0],
            s_vv_12: 0.0,
            s_qv: [[0.0; 2]; 2],
            swapped: false,
        };
        p.check()?;
        Ok(p)
    }

    /// Parameters read from a model configuration (Hamiltonian detuning is ignored).
    pub fn from_model(cfg: &ModelConfig, t: f64) -> Result<Self> {
        let c = &cfg.correlators;
        let p = ShortTimeParams {
            omega_x: cfg.hamiltonian.omega_x,
            omega_y: cfg.hamiltonian.omega_y,
            gamma: c.s_qq[0][0] + c.s_qq[1][1],
            t,
            a: [c.a_vq[0][0], c.a_vq[1][1]],
            s_vv: [c.s_vv[0][0], c.s_vv[1][1]],
            s_vv_12: c.s_vv[0][1],
            s_qv: c.s_qv,
            swapped: false,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if !(self.t > 0.0) {
            return Err(Error::InvalidTime(self.t));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        for i in 0..2 {
            if !(self.t_a(i) > 0.0) || !self.t_a(i).is_finite() {
                return Err(Error::UndefinedAcquisitionTime { detector: i + 1 });
            }
        }
        Ok(())
    }

    pub fn t_a(&self, i: usize) -> f64 {
        4.0 * self.s_vv[i] / (self.a[i] * self.a[i])
    }

    /// sigma_i^2 = t_a_i / (4T).
    pub fn sigma2(&self, i: usize) -> f64 {
        self.t_a(i) / (4.0 * self.t)
    }

    pub fn omega_bar_sq(&self) -> f64 {
        self.omega_x * self.omega_x + self.omega_y * self.omega_y
    }

    fn denominator(&self) -> f64 {
        4.0 * self.gamma + self.t * self.omega_bar_sq()
    }
}

pub fn char_function_xy(p: &ShortTimeParams, chi: (f64, f64)) -> C64 {
    let (c1, c2) = chi;
    let i = C64::new(0.0, 1.0);
    let x = C64::new(p.omega_x, 0.0) - i * p.a[1] * c2;
    let y = i * p.omega_y - p.a[0] * c1;
    let num = 4.0 * p.gamma + p.t * (x * x - y * y);
    let damping = (-0.5 * (p.s_vv[0] * c1 * c1 + p.s_vv[1] * c2 * c2) * p.t).exp();
    num / p.denominator() * damping
}

/// Product Gaussian with variances t_a_i / (4T).
pub fn gaussian_reference(p: &ShortTimeParams, o1: f64, o2: f64) -> f64 {
    let (v1, v2) = (p.sigma2(0), p.sigma2(1));
    (-(o1 * o1) / (2.0 * v1) - (o2 * o2) / (2.0 * v2)).exp() / (2.0 * PI * (v1 * v2).sqrt())
}

fn assemble(p: &ShortTimeParams, u: f64, v: f64, sub: f64, o1: f64, o2: f64) -> f64 {
    (4.0 * p.gamma + p.t * (u * u + v * v - sub)) / p.denominator() * gaussian_reference(p, o1, o2)
}

pub fn joint_dist_xy(p: &ShortTimeParams, o1: f64, o2: f64) -> f64 {
    let (ta1, ta2) = (p.t_a(0), p.t_a(1));
    let u = p.omega_x - 4.0 * o2 / ta2;
    let v = p.omega_y + 4.0 * o1 / ta1;
    assemble(p, u, v, 4.0 / (p.t * ta2) + 4.0 / (p.t * ta1), o1, o2)
}

/// (mean O_1, mean O_2) = (2 Omega_y, -2 Omega_x) / (4 gamma + T Omega-bar^2).
pub fn average_outputs(p: &ShortTimeParams) -> (f64, f64) {
    let d = p.denominator();
    (2.0 * p.omega_y / d, -2.0 * p.omega_x / d)
}

/// Distribution with correlated output noise S_VV^(1,2), shift terms as published
/// (the Gaussian factor keeps the uncorrelated form).
pub fn joint_dist_output_corr(p: &ShortTimeParams, o1: f64, o2: f64) -> f64 {
    let (ta1, ta2) = (p.t_a(0), p.t_a(1));
    let k = 2.0 * p.s_vv_12 / (p.a[0] * p.a[1]);
    let u = p.omega_x - 4.0 * o2 / ta2 - k * o1;
    let v = p.omega_y + 4.0 * o1 / ta1 + k * o2;
    assemble(p, u, v, 4.0 / (p.t * ta2) + 4.0 / (p.t * ta1), o1, o2)
}

/// Distribution with input-output cross noises S_QV^(i,j).
pub fn joint_dist_cross_qv(p: &ShortTimeParams, o1: f64, o2: f64) -> f64 {
    let sign = if p.swapped { -1.0 } else { 1.0 };
    let (a1, a2) = (p.a[0], p.a[1]);
    let s11 = 2.0 * p.s_qv[0][0] / a1;
    let s12 = sign * 2.0 * p.s_qv[0][1] / a2;
    let s21 = sign * 2.0 * p.s_qv[1][0] / a1;
    let s22 = 2.0 * p.s_qv[1][1] / a2;
    // 1 / (T sigma_i^2) = 4 / t_a_i
    let w1 = 1.0 / (p.t * p.sigma2(0));
    let w2 = 1.0 / (p.t * p.sigma2(1));
    let u = p.omega_x + (s12 - 1.0) * o2 * w2 + s11 * o1 * w1;
    let v = p.omega_y + (1.0 + s21) * o1 * w1 + s22 * o2 * w2;
    let sub =
        ((1.0 - s12).powi(2) * w2 + s11 * s11 * w1 + (1.0 + s21).powi(2) * w1 + s22 * s22 * w2)
            / p.t;
    assemble(p, u, v, sub, o1, o2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityThreshold {
    /// Per-detector ideality gamma t_a / 2 for identical detectors.
    pub k: f64,
    pub pass: bool,
}

/// Positivity of the identical-detector distribution: K = gamma_i t_a >= 1.
pub fn positivity_threshold(p: &ShortTimeParams) -> Result<PositivityThreshold> {
    let (ta1, ta2) = (p.t_a(0), p.t_a(1));
    if (ta1 - ta2).abs() > 1e-12 * ta1.max(ta2) {
        return Err(Error::InvalidConfiguration(
            "positivity threshold is defined for identical detectors".into(),
        ));
    }
    let k = 0.5 * p.gamma * ta1;
    Ok(PositivityThreshold {
        k,
        pass: k >= 1.0 - 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMinimum {
    pub value: f64,
    pub at: (f64, f64),
}

/// Minimum of `f` over a box, sampled on an n x n lattice and refined by
/// repeatedly zooming onto the best cell's neighbourhood.
pub fn grid_minimum<F>(
    f: F,
    lo: (f64, f64),
    hi: (f64, f64),
    n: usize,
    refinements: usize,
) -> GridMinimum
where
    F: Fn(f64, f64) -> f64,
{
    let n = n.max(3);
    let (mut lo, mut hi) = (lo, hi);
    let mut best = GridMinimum {
        value: f64::INFINITY,
        at: lo,
    };
    for _ in 0..=refinements {
        let dx = (hi.0 - lo.0) / (n - 1) as f64;
        let dy = (hi.1 - lo.1) / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (lo.0 + i as f64 * dx, lo.1 + j as f64 * dy);
                let v = f(x, y);
                if v < best.value {
                    best = GridMinimum {
                        value: v,
                        at: (x, y),
                    };
                }
            }
        }
        lo = (best.at.0 - 2.0 * dx, best.at.1 - 2.0 * dy);
        hi = (best.at.0 + 2.0 * dx, best.at.1 + 2.0 * dy);
    }
    best
}
