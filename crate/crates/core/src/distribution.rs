//! Output distributions from generating functions: joint densities of the
//! normalized outputs O_i = V_i / a_VQ^(i,i), conditional slices, marginals,
//! moments and certainties.
//!
//! Convention: C(chi) = integral P(V) exp(i chi . V T) dV, inverted as
//! P(V) = (T / 2 pi)^2 integral C(chi) exp(-i chi . V T) dchi.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::GeneratingFunction;
use crate::fourier::{centered_axis, centered_transform_2d, CenteredFft, Sign};
use crate::qubit::{DensityMatrix, PostSelection, C64};
use crate::scenario::ModelConfig;

pub const DEFAULT_GRID_SIZE: usize = 512;

/// |C| bound at the edge of the automatic grid.
pub const EDGE_DAMPING: f64 = 1e-12;

/// Counting-field grid: chi_k = (k - n/2) * 2 chi_max / n on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiGrid {
    pub n: [usize; 2],
    pub chi_max: [f64; 2],
}

impl ChiGrid {
    pub fn new(n: [usize; 2], chi_max: [f64; 2]) -> Result<Self> {
        for &k in &n {
            if k < 64 || !k.is_power_of_two() {
                return Err(Error::InvalidGrid(k));
            }
        }
        for &c in &chi_max {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidConfiguration(format!(
                    "chi_max must be positive, got {c}"
                )));
            }
        }
        Ok(ChiGrid { n, chi_max })
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.chi_max[axis] / self.n[axis] as f64
    }

    pub fn chi(&self, axis: usize) -> Vec<f64> {
        centered_axis(self.n[axis], self.spacing(axis))
    }

    /// Spacing of the conjugate output grid, 2 pi / (n dchi T).
    pub fn output_spacing(&self, axis: usize, t: f64) -> f64 {
        2.0 * PI / (self.n[axis] as f64 * self.spacing(axis) * t)
    }

    /// Grid whose output axes reach +-o_max for gains `a` at time `t`.
    pub fn for_output_range(n: [usize; 2], o_max: [f64; 2], a: [f64; 2], t: f64) -> Result<Self> {
        let chi = [0, 1].map(|i| n[i] as f64 * PI / (2.0 * o_max[i] * a[i].abs() * t));
        Self::new(n, chi)
    }
}

/// Edge of the counting-field grid where the Gaussian envelope
/// exp(-S_VV chi^2 T / 2) falls to [`EDGE_DAMPING`].
pub fn auto_chi_max(s_vv: f64, t: f64) -> f64 {
    (2.0 * (1.0 / EDGE_DAMPING).ln() / (s_vv * t)).sqrt()
}

pub fn auto_grid(cfg: &ModelConfig, t: f64) -> Result<ChiGrid> {
    auto_grid_with(cfg, t, DEFAULT_GRID_SIZE)
}

pub fn auto_grid_with(cfg: &ModelConfig, t: f64, n: usize) -> Result<ChiGrid> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let c = &cfg.correlators;
    let mut chi = [0.0; 2];
    for i in 0..2 {
        let s = c.s_vv[i][i];
        if !(s > 0.0) {
            return Err(Error::InvalidConfiguration(format!(
                "S_VV^({0},{0}) must be positive to size the grid",
                i + 1
            )));
        }
        chi[i] = auto_chi_max(s, t);
    }
    ChiGrid::new([n, n], chi)
}

/// Descriptive fields carried alongside a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct DistributionMeta {
    pub scenario: String,
    pub t: f64,
    pub prep: [f64; 3],
    pub post: Option<[f64; 3]>,
    pub post_probability: f64,
}

/// Density over the normalized outputs, row-major with O_1 as the row index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    pub o1: Vec<f64>,
    pub o2: Vec<f64>,
    pub p: Vec<f64>,
    /// Integral of p over the grid (not renormalized).
    pub mass: f64,
    /// max |Im P| / max |Re P| of the raw transform.
    pub imag_residue: f64,
    /// max |C| on the outermost ring of the counting-field grid.
    pub edge_magnitude: f64,
    pub meta: DistributionMeta,
}

impl JointDistribution {
    pub fn shape(&self) -> (usize, usize) {
        (self.o1.len(), self.o2.len())
    }

    pub fn step(&self, axis: usize) -> f64 {
        let o = self.axis(axis);
        o[1] - o[0]
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        if axis == 0 {
            &self.o1
        } else {
            &self.o2
        }
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.p[i1 * self.o2.len() + i2]
    }

    pub fn peak(&self) -> f64 {
        self.p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.p.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_area(&self) -> f64 {
        self.step(0) * self.step(1)
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, o1: f64, o2: f64) -> f64 {
        let (n1, n2) = self.shape();
        let x = (o1 - self.o1[0]) / self.step(0);
        let y = (o2 - self.o2[0]) / self.step(1);
        if !(x >= 0.0 && y >= 0.0 && x <= (n1 - 1) as f64 && y <= (n2 - 1) as f64) {
            return 0.0;
        }
        let i = (x.floor() as usize).min(n1 - 2);
        let j = (y.floor() as usize).min(n2 - 2);
        let (fx, fy) = (x - i as f64, y - j as f64);
        (1.0 - fx) * (1.0 - fy) * self.get(i, j)
            + fx * (1.0 - fy) * self.get(i + 1, j)
            + (1.0 - fx) * fy * self.get(i, j + 1)
            + fx * fy * self.get(i + 1, j + 1)
    }
}

/// Joint output density of any characteristic function sampled on `grid`.
///
/// `gains` rescale V_i to O_i = V_i / a_i; `cf` is evaluated in parallel.
pub fn density_from_cf<F>(
    grid: &ChiGrid,
    t: f64,
    gains: [f64; 2],
    cf: F,
) -> Result<JointDistribution>
where
    F: Fn(f64, f64) -> Result<C64> + Sync,
{
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if gains.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidConfiguration(
            "distributions need positive gains a_VQ^(i,i)".into(),
        ));
    }
    let [n1, n2] = grid.n;
    let chi1 = grid.chi(0);
    let chi2 = grid.chi(1);
    let mut values = vec![C64::new(0.0, 0.0); n1 * n2];
    values
        .par_chunks_mut(n2)
        .enumerate()
        .try_for_each(|(k1, row)| -> Result<()> {
            for (k2, v) in row.iter_mut().enumerate() {
                *v = cf(chi1[k1], chi2[k2])?;
            }
            Ok(())
        })?;

    let mut edge: f64 = 0.0;
    for k1 in 0..n1 {
        for k2 in 0..n2 {
            if k1 == 0 || k2 == 0 || k1 == n1 - 1 || k2 == n2 - 1 {
                edge = edge.max(values[k1 * n2 + k2].norm());
            }
        }
    }

    centered_transform_2d(&mut values, n1, n2, Sign::Negative);

    let dchi = [grid.spacing(0), grid.spacing(1)];
    let prefactor = (t / (2.0 * PI)).powi(2) * dchi[0] * dchi[1] * gains[0] * gains[1];
    let max_re = values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let max_im = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let p: Vec<f64> = values.iter().map(|v| v.re * prefactor).collect();

    let o1: Vec<f64> = centered_axis(n1, grid.output_spacing(0, t) / gains[0]);
    let o2: Vec<f64> = centered_axis(n2, grid.output_spacing(1, t) / gains[1]);
    let area = (o1[1] - o1[0]) * (o2[1] - o2[0]);
    let mass = p.iter().sum::<f64>() * area;
    Ok(JointDistribution {
        o1,
        o2,
        p,
        mass,
        imag_residue: if max_re > 0.0 { max_im / max_re } else { 0.0 },
        edge_magnitude: edge,
        meta: DistributionMeta {
            t,
            ..Default::default()
        },
    })
}

/// Joint distribution of the normalized outputs for a prepared state and a
/// post-selection.
pub fn joint_distribution(
    cfg: &ModelConfig,
    rho_i: &DensityMatrix,
    post: &PostSelection,
    t: f64,
    grid: &ChiGrid,
) -> Result<JointDistribution> {
    let gf = GeneratingFunction::new(cfg, rho_i, post, t)?;
    let gains = [cfg.correlators.a_vq[0][0], cfg.correlators.a_vq[1][1]];
    let mut jd = density_from_cf(grid, t, gains, |c1, c2| gf.eval((c1, c2)))?;
    jd.meta = DistributionMeta {
        scenario: cfg.scenario.to_string(),
        t,
        prep: rho_i.bloch().to_array(),
        post: post
            .is_conditioned()
            .then(|| post.polarization().to_array()),
        post_probability: gf.post_probability(),
    };
    Ok(jd)
}

/// One-dimensional density on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution1D {
    pub o: Vec<f64>,
    pub p: Vec<f64>,
}

impl Distribution1D {
    pub fn step(&self) -> f64 {
        self.o[1] - self.o[0]
    }

    pub fn mass(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.step()
    }

    pub fn peak(&self) -> f64 {
        self.p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> f64 {
        let (i, _) = self
            .p
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        self.o[i]
    }

    pub fn moments(&self) -> Moments1D {
        moments_1d(&self.o, &self.p)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.o.len();
        let u = (x - self.o[0]) / self.step();
        if !(u >= 0.0 && u <= (n - 1) as f64) {
            return 0.0;
        }
        let i = (u.floor() as usize).min(n - 2);
        let f = u - i as f64;
        (1.0 - f) * self.p[i] + f * self.p[i + 1]
    }
}

/// P(O_i | O_j = y): `axis` is the conditioning axis j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalSlice {
    pub axis: usize,
    pub y: f64,
    /// Mass of the interpolated conditioning row before renormalization.
    pub row_mass: f64,
    pub dist: Distribution1D,
}

pub fn conditional_slice(jd: &JointDistribution, axis: usize, y: f64) -> Result<ConditionalSlice> {
    let cond = jd.axis(axis);
    let free = jd.axis(1 - axis);
    let (lo, hi) = (cond[0], cond[cond.len() - 1]);
    if !(y >= lo && y <= hi) {
        return Err(Error::OutOfRange {
            value: y,
            min: lo,
            max: hi,
        });
    }
    let u = (y - lo) / jd.step(axis);
    let mut i = u.floor() as usize;
    let mut f = u - i as f64;
    if i >= cond.len() - 1 {
        i = cond.len() - 1;
        f = 0.0;
    }
    let at = |k: usize, m: usize| {
        if axis == 0 {
            jd.get(k, m)
        } else {
            jd.get(m, k)
        }
    };
    let row: Vec<f64> = (0..free.len())
        .map(|m| {
            if f == 0.0 {
                at(i, m)
            } else {
                (1.0 - f) * at(i, m) + f * at(i + 1, m)
            }
        })
        .collect();
    let row_mass = row.iter().sum::<f64>() * jd.step(1 - axis);
    if !(row_mass.abs() >= 1e-12) {
        return Err(Error::DegenerateSlice { mass: row_mass });
    }
    let p = row.iter().map(|v| v / row_mass).collect();
    Ok(ConditionalSlice {
        axis,
        y,
        row_mass,
        dist: Distribution1D {
            o: free.to_vec(),
            p,
        },
    })
}

/// Density of one output with the other integrated out (mass equals the joint mass).
pub fn marginal(jd: &JointDistribution, axis: usize) -> Distribution1D {
    let (n1, n2) = jd.shape();
    let other = jd.step(1 - axis);
    let p = if axis == 0 {
        (0..n1)
            .map(|i| (0..n2).map(|j| jd.get(i, j)).sum::<f64>() * other)
            .collect()
    } else {
        (0..n2)
            .map(|j| (0..n1).map(|i| jd.get(i, j)).sum::<f64>() * other)
            .collect()
    };
    Distribution1D {
        o: jd.axis(axis).to_vec(),
        p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments1D {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments2D {
    pub mass: f64,
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub skewness: [f64; 2],
}

/// Quadrature moments, normalized by the grid mass.
pub fn moments_1d(o: &[f64], p: &[f64]) -> Moments1D {
    let m0: f64 = p.iter().sum();
    let mean = o.iter().zip(p).map(|(x, w)| x * w).sum::<f64>() / m0;
    let central = |k: i32| {
        o.iter()
            .zip(p)
            .map(|(x, w)| (x - mean).powi(k) * w)
            .sum::<f64>()
            / m0
    };
    let variance = central(2);
    let step = if o.len() > 1 { o[1] - o[0] } else { 1.0 };
    Moments1D {
        mass: m0 * step,
        mean,
        variance,
        skewness: central(3) / variance.powf(1.5),
    }
}

pub fn moments(jd: &JointDistribution) -> Moments2D {
    let (n1, n2) = jd.shape();
    let m0: f64 = jd.p.iter().sum();
    let mut mean = [0.0; 2];
    for i in 0..n1 {
        for j in 0..n2 {
            let w = jd.get(i, j);
            mean[0] += jd.o1[i] * w;
            mean[1] += jd.o2[j] * w;
        }
    }
    mean[0] /= m0;
    mean[1] /= m0;
    let mut cov = [[0.0; 2]; 2];
    let mut third = [0.0; 2];
    for i in 0..n1 {
        for j in 0..n2 {
            let w = jd.get(i, j);
            let d = [jd.o1[i] - mean[0], jd.o2[j] - mean[1]];
            for a in 0..2 {
                for b in 0..2 {
                    cov[a][b] += d[a] * d[b] * w;
                }
                third[a] += d[a].powi(3) * w;
            }
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            cov[a][b] /= m0;
        }
        third[a] /= m0;
    }
    Moments2D {
        mass: m0 * jd.cell_area(),
        mean,
        covariance: cov,
        skewness: [
            third[0] / cov[0][0].powf(1.5),
            third[1] / cov[1][1].powf(1.5),
        ],
    }
}

/// Pointwise P+ - P- and (P+ - P-)/(P+ + P-).
///
/// The certainty is `None` where P+ + P- is below 1e-12 of its peak or where
/// either density is negative (numerical noise in the far tails).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certainty {
    pub difference: Vec<f64>,
    pub certainty: Vec<Option<f64>>,
}

impl Certainty {
    pub fn max_abs_difference(&self) -> f64 {
        self.difference.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_certainty(&self) -> f64 {
        self.certainty
            .iter()
            .flatten()
            .map(|c| c.abs())
            .fold(0.0, f64::max)
    }
}

pub fn certainty_of(plus: &[f64], minus: &[f64]) -> Result<Certainty> {
    if plus.len() != minus.len() {
        return Err(Error::GridMismatch);
    }
    let peak = plus
        .iter()
        .zip(minus)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let floor = 1e-12 * peak;
    let difference = plus.iter().zip(minus).map(|(a, b)| a - b).collect();
    let certainty = plus
        .iter()
        .zip(minus)
        .map(|(&a, &b)| {
            (a + b >= floor && a >= 0.0 && b >= 0.0 && a + b > 0.0).then(|| (a - b) / (a + b))
        })
        .collect();
    Ok(Certainty {
        difference,
        certainty,
    })
}

fn same_axis(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

pub fn difference_and_certainty(
    plus: &JointDistribution,
    minus: &JointDistribution,
) -> Result<Certainty> {
    if !same_axis(&plus.o1, &minus.o1) || !same_axis(&plus.o2, &minus.o2) {
        return Err(Error::GridMismatch);
    }
    certainty_of(&plus.p, &minus.p)
}

pub fn difference_and_certainty_1d(
    plus: &Distribution1D,
    minus: &Distribution1D,
) -> Result<Certainty> {
    if !same_axis(&plus.o, &minus.o) {
        return Err(Error::GridMismatch);
    }
    certainty_of(&plus.p, &minus.p)
}

/// Least-squares fit certainty = beta * o over the defined points with |o| <= o_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub beta: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

pub fn certainty_slope(o: &[f64], certainty: &[Option<f64>], o_max: f64) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = o
        .iter()
        .zip(certainty)
        .filter_map(|(&x, c)| c.filter(|_| x.abs() <= o_max).map(|c| (x, c)))
        .collect();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return None;
    }
    let beta = pts.iter().map(|(x, c)| x * c).sum::<f64>() / sxx;
    let ss: f64 = pts.iter().map(|(x, c)| (c - beta * x).powi(2)).sum();
    Some(LinearFit {
        beta,
        residual: (ss / pts.len() as f64).sqrt(),
        points: pts.len(),
    })
}

/// Angular average of the joint density on circles of radius r around the origin.
pub fn radial_profile(jd: &JointDistribution, radii: &[f64], n_theta: usize) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            (0..n_theta)
                .map(|k| {
                    let th = 2.0 * PI * (k as f64 + 0.5) / n_theta as f64;
                    jd.interpolate(r * th.cos(), r * th.sin())
                })
                .sum::<f64>()
                / n_theta as f64
        })
        .collect()
}

/// 1D density of a characteristic function of one variable on a centred grid.
pub fn density_from_cf_1d<F>(
    n: usize,
    chi_max: f64,
    t: f64,
    gain: f64,
    cf: F,
) -> Result<Distribution1D>
where
    F: Fn(f64) -> C64,
{
    if n < 2 {
        return Err(Error::InvalidGrid(n));
    }
    let dchi = 2.0 * chi_max / n as f64;
    let chi = centered_axis(n, dchi);
    let mut v: Vec<C64> = chi.iter().map(|&c| cf(c)).collect();
    CenteredFft::new(n, Sign::Negative).process(&mut v);
    let pref = t / (2.0 * PI) * dchi * gain;
    let o = centered_axis(n, 2.0 * PI / (n as f64 * dchi * t) / gain);
    Ok(Distribution1D {
        o,
        p: v.iter().map(|x| x.re * pref).collect(),
    })
}
