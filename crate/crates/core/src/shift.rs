//! Quasi-distribution of output shifts for short measurements with nonzero
//! overlap between the prepared and post-selected states.
//!
//! The generating function is C(chi) = Tr[rho_f U rho_i U] / Tr[rho_f rho_i] with
//! U = exp(-i chi . sigma / 2), and the shift measure is defined through
//! C(chi) = integral C(s) exp(-i s . chi) ds. A shift of +1 along an axis is the
//! eigenvalue +1 of the corresponding Pauli operator.
//!
//! Relation to the detector outputs at short times: the characteristic
//! function used by the distribution engine is the detector Gaussian times
//! this C evaluated at chi_s = -a_VQ T chi, with shifts in units of O.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::distribution::{DistributionMeta, JointDistribution};
use crate::error::{Error, Result};
use crate::fourier::{centered_axis, centered_transform_2d, Sign};
use crate::qubit::{bloch_to_density, Axis, BlochVector, DensityMatrix, Ket, Matrix2, C64};

/// Initial and final polarizations of a conditioned short measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationPair {
    pub p_i: BlochVector,
    pub p_f: BlochVector,
}

impl PolarizationPair {
    pub fn new(p_i: BlochVector, p_f: BlochVector) -> Result<Self> {
        let pp = PolarizationPair {
            p_i: BlochVector::from_array(p_i.to_array())?,
            p_f: BlochVector::from_array(p_f.to_array())?,
        };
        pp.overlap()?;
        Ok(pp)
    }

    /// 1 + P_i . P_f, i.e. twice Tr[rho_f rho_i].
    pub fn overlap(&self) -> Result<f64> {
        let o = 1.0 + self.p_i.dot(&self.p_f);
        if o > 1e-12 {
            Ok(o)
        } else {
            Err(Error::ZeroOverlap { overlap: o })
        }
    }

    fn densities(&self) -> Result<(DensityMatrix, DensityMatrix)> {
        Ok((bloch_to_density(self.p_i)?, bloch_to_density(self.p_f)?))
    }
}

fn unitary(chi: [f64; 3]) -> Matrix2 {
    let norm = (chi[0] * chi[0] + chi[1] * chi[1] + chi[2] * chi[2]).sqrt();
    if norm == 0.0 {
        return Matrix2::identity();
    }
    let (s, c) = (0.5 * norm).sin_cos();
    let gen =
        (Matrix2::pauli_x() * chi[0] + Matrix2::pauli_y() * chi[1] + Matrix2::pauli_z() * chi[2])
            * (1.0 / norm);
    Matrix2::identity() * c + gen * C64::new(0.0, -s)
}

/// Tr[rho_f U rho_i U] / Tr[rho_f rho_i] by explicit 2x2 products.
pub fn shift_char_exact(pp: &PolarizationPair, chi: [f64; 3]) -> Result<C64> {
    pp.overlap()?;
    let (ri, rf) = pp.densities()?;
    let u = unitary(chi);
    let num = (*rf.matrix() * u * *ri.matrix() * u).trace();
    let den = (*rf.matrix() * *ri.matrix()).trace();
    Ok(num / den)
}

/// Mean shift (P_i + P_f) / (1 + P_i . P_f).
pub fn mean_shift(pp: &PolarizationPair) -> Result<[f64; 3]> {
    let o = pp.overlap()?;
    let (a, b) = (pp.p_i.to_array(), pp.p_f.to_array());
    Ok([0, 1, 2].map(|k| (a[k] + b[k]) / o))
}

/// Delta weights of the shift measure along one axis, at shifts -1, 0, +1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftWeights {
    pub minus: f64,
    pub zero: f64,
    pub plus: f64,
}

impl ShiftWeights {
    pub fn as_array(&self) -> [f64; 3] {
        [self.minus, self.zero, self.plus]
    }

    pub fn sum(&self) -> f64 {
        self.minus + self.zero + self.plus
    }

    pub fn mean(&self) -> f64 {
        self.plus - self.minus
    }

    /// Sum of weighted Gaussians N(o - s, sigma^2), in the same units as the shifts.
    pub fn convolve(&self, sigma: f64, o: &[f64]) -> Vec<f64> {
        let norm = 1.0 / (2.0 * PI * sigma * sigma).sqrt();
        o.iter()
            .map(|&x| {
                [(-1.0, self.minus), (0.0, self.zero), (1.0, self.plus)]
                    .iter()
                    .map(|&(s, w)| w * norm * (-(x - s).powi(2) / (2.0 * sigma * sigma)).exp())
                    .sum()
            })
            .collect()
    }
}

/// Weights from the spectral projectors P+- of sigma_axis: U = e^{-i chi/2} P+ + e^{i chi/2} P-,
/// so the P+ ... P+ term carries exp(-i chi), a shift of +1.
pub fn shift_weights_1d(pp: &PolarizationPair, axis: Axis) -> Result<ShiftWeights> {
    pp.overlap()?;
    let (ri, rf) = pp.densities()?;
    let (ri, rf) = (*ri.matrix(), *rf.matrix());
    let mut dir = [0.0; 3];
    dir[axis.index()] = 1.0;
    let plus = Ket::from_bloch(dir)?.projector();
    let minus = Matrix2::identity() - plus;
    let n = (rf * ri).trace().re;
    let w = |a: &Matrix2, b: &Matrix2| (rf * *a * ri * *b).trace().re / n;
    Ok(ShiftWeights {
        minus: w(&minus, &minus),
        zero: w(&plus, &minus) + w(&minus, &plus),
        plus: w(&plus, &plus),
    })
}

/// Smoothing applied to the shift measure before inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    /// exp(-xi^2 chi^2 / 2): each delta becomes a Gaussian of width xi.
    #[default]
    Gaussian,
    /// exp(-xi |chi|): each delta becomes a Lorentzian-type kernel of width xi.
    Lorentzian,
}

impl Regularizer {
    pub fn factor(self, xi: f64, chi_norm: f64) -> f64 {
        match self {
            Regularizer::Gaussian => (-0.5 * xi * xi * chi_norm * chi_norm).exp(),
            Regularizer::Lorentzian => (-xi * chi_norm).exp(),
        }
    }

    /// One-dimensional smoothing kernel in shift space.
    pub fn kernel_1d(self, xi: f64, s: f64) -> f64 {
        match self {
            Regularizer::Gaussian => (-s * s / (2.0 * xi * xi)).exp() / (2.0 * PI * xi * xi).sqrt(),
            Regularizer::Lorentzian => xi / (PI * (s * s + xi * xi)),
        }
    }
}

/// Regularized 1D shift density sum_k w_k kernel(s - k).
pub fn regularized_density_1d(
    w: &ShiftWeights,
    s: &[f64],
    xi: f64,
    reg: Regularizer,
) -> Result<Vec<f64>> {
    if !(xi > 0.0) {
        return Err(Error::InvalidRegularization(xi));
    }
    Ok(s.iter()
        .map(|&x| {
            w.minus * reg.kernel_1d(xi, x + 1.0)
                + w.zero * reg.kernel_1d(xi, x)
                + w.plus * reg.kernel_1d(xi, x - 1.0)
        })
        .collect())
}

/// Odd, symmetric grid s_m = (m - h) ds with h = (n - 1) / 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftGrid {
    pub half_extent: f64,
    pub spacing: f64,
}

impl Default for ShiftGrid {
    fn default() -> Self {
        ShiftGrid {
            half_extent: 2.0,
            spacing: 1.0 / 64.0,
        }
    }
}

impl ShiftGrid {
    pub fn len(&self) -> usize {
        2 * (self.half_extent / self.spacing).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis(&self) -> Vec<f64> {
        centered_axis(self.len(), self.spacing)
    }

    fn check(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !(self.half_extent >= self.spacing) || self.len() > 8193 {
            return Err(Error::InvalidConfiguration(format!(
                "shift grid needs 0 < spacing <= half_extent and at most 8193 points, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Regularized shift quasi-density on an (s_x, s_y) grid, row index s_x.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftMeasure {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub xi: f64,
    pub regularizer: Regularizer,
    pub mass: f64,
    /// max |Im| / max |Re| of the raw inversion.
    pub imag_residue: f64,
}

impl ShiftMeasure {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.s.len() + iy]
    }

    /// Density along one axis with the other integrated out.
    pub fn marginal(&self, axis: Axis) -> Result<Vec<f64>> {
        let n = self.len();
        let ds = self.spacing();
        match axis {
            Axis::X => Ok((0..n)
                .map(|i| (0..n).map(|j| self.get(i, j)).sum::<f64>() * ds)
                .collect()),
            Axis::Y => Ok((0..n)
                .map(|j| (0..n).map(|i| self.get(i, j)).sum::<f64>() * ds)
                .collect()),
            Axis::Z => Err(Error::InvalidConfiguration(
                "the 2D shift measure has no z axis".into(),
            )),
        }
    }

    /// First moments (mean s_x, mean s_y), normalized by the mass.
    pub fn means(&self) -> [f64; 2] {
        let n = self.len();
        let (mut m, mut x, mut y) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                m += v;
                x += self.s[i] * v;
                y += self.s[j] * v;
            }
        }
        [x / m, y / m]
    }

    /// Angular average on circles s_x^2 + s_y^2 = r^2 (bilinear interpolation).
    pub fn radial_profile(&self, radii: &[f64], n_theta: usize) -> Vec<f64> {
        let n = self.len();
        let ds = self.spacing();
        let s0 = self.s[0];
        let at = |x: f64, y: f64| -> f64 {
            let u = (x - s0) / ds;
            let v = (y - s0) / ds;
            if !(u >= 0.0 && v >= 0.0 && u <= (n - 1) as f64 && v <= (n - 1) as f64) {
                return 0.0;
            }
            let (i, j) = (
                (u.floor() as usize).min(n - 2),
                (v.floor() as usize).min(n - 2),
            );
            let (fu, fv) = (u - i as f64, v - j as f64);
            (1.0 - fu) * (1.0 - fv) * self.get(i, j)
                + fu * (1.0 - fv) * self.get(i + 1, j)
                + (1.0 - fu) * fv * self.get(i, j + 1)
                + fu * fv * self.get(i + 1, j + 1)
        };
        radii
            .iter()
            .map(|&r| {
                (0..n_theta)
                    .map(|k| {
                        let th = 2.0 * PI * (k as f64 + 0.5) / n_theta as f64;
                        at(r * th.cos(), r * th.sin())
                    })
                    .sum::<f64>()
                    / n_theta as f64
            })
            .collect()
    }
}

/// Regularized inversion of C(chi_x, chi_y, 0) on an odd symmetric grid:
/// R(s) = (2 pi)^-2 integral C(chi) reg(chi) exp(i s . chi) dchi.
pub fn shift_quasi_2d(
    pp: &PolarizationPair,
    grid: &ShiftGrid,
    xi: f64,
    reg: Regularizer,
) -> Result<ShiftMeasure> {
    if !(xi > 0.0) {
        return Err(Error::InvalidRegularization(xi));
    }
    grid.check()?;
    pp.overlap()?;
    let n = grid.len();
    let dchi = 2.0 * PI / (n as f64 * grid.spacing);
    let chi = centered_axis(n, dchi);
    let mut values = Vec::with_capacity(n * n);
    for &cx in &chi {
        for &cy in &chi {
            let c = shift_char_exact(pp, [cx, cy, 0.0])?;
            values.push(c * reg.factor(xi, (cx * cx + cy * cy).sqrt()));
        }
    }
    centered_transform_2d(&mut values, n, n, Sign::Positive);
    let pref = (dchi / (2.0 * PI)).powi(2);
    let max_re = values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let max_im = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let values: Vec<f64> = values.iter().map(|v| v.re * pref).collect();
    let mass = values.iter().sum::<f64>() * grid.spacing * grid.spacing;
    Ok(ShiftMeasure {
        s: grid.axis(),
        values,
        xi,
        regularizer: reg,
        mass,
        imag_residue: if max_re > 0.0 { max_im / max_re } else { 0.0 },
    })
}

fn is_uniform(o: &[f64]) -> bool {
    if o.len() < 2 {
        return false;
    }
    let d = o[1] - o[0];
    d > 0.0 && o.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d)
}

/// Shift measure smeared by a product Gaussian with standard deviations `sigma`,
/// evaluated on the output axes `o1`, `o2` (shift units).
pub fn convolve_with_gaussian(
    sm: &ShiftMeasure,
    sigma: [f64; 2],
    o1: &[f64],
    o2: &[f64],
) -> Result<JointDistribution> {
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidConfiguration(
            "Gaussian widths must be positive".into(),
        ));
    }
    if !is_uniform(o1) || !is_uniform(o2) || sm.len() < 2 {
        return Err(Error::GridMismatch);
    }
    let ns = sm.len();
    let ds = sm.spacing();
    let kernel = |o: &[f64], sg: f64| -> Vec<f64> {
        let norm = 1.0 / (2.0 * PI * sg * sg).sqrt();
        let mut g = Vec::with_capacity(o.len() * ns);
        for &x in o {
            for &s in &sm.s {
                g.push(norm * (-(x - s).powi(2) / (2.0 * sg * sg)).exp() * ds);
            }
        }
        g
    };
    let g1 = kernel(o1, sigma[0]);
    let g2 = kernel(o2, sigma[1]);
    // tmp = M G2^T  (ns x n2), then P = G1 tmp  (n1 x n2)
    let n2 = o2.len();
    let mut tmp = vec![0.0; ns * n2];
    for i in 0..ns {
        let row = &sm.values[i * ns..(i + 1) * ns];
        for j in 0..n2 {
            let g = &g2[j * ns..(j + 1) * ns];
            tmp[i * n2 + j] = row.iter().zip(g).map(|(a, b)| a * b).sum();
        }
    }
    let n1 = o1.len();
    let mut p = vec![0.0; n1 * n2];
    for a in 0..n1 {
        let g = &g1[a * ns..(a + 1) * ns];
        for (k, gk) in g.iter().enumerate() {
            if *gk == 0.0 {
                continue;
            }
            let src = &tmp[k * n2..(k + 1) * n2];
            for (dst, v) in p[a * n2..(a + 1) * n2].iter_mut().zip(src) {
                *dst += gk * v;
            }
        }
    }
    let mass = p.iter().sum::<f64>() * (o1[1] - o1[0]) * (o2[1] - o2[0]);
    Ok(JointDistribution {
        o1: o1.to_vec(),
        o2: o2.to_vec(),
        p,
        mass,
        imag_residue: sm.imag_residue,
        edge_magnitude: 0.0,
        meta: DistributionMeta::default(),
    })
}

/// Cell-wise L1 distance between a regularized 1D density on `s` and exact
/// delta weights, each weight assigned to the cell containing its shift.
pub fn cellwise_l1(s: &[f64], density: &[f64], w: &ShiftWeights) -> f64 {
    let ds = s[1] - s[0];
    let mut exact = vec![0.0; s.len()];
    for (shift, weight) in [(-1.0, w.minus), (0.0, w.zero), (1.0, w.plus)] {
        let k = ((shift - s[0]) / ds).round();
        if k >= 0.0 && (k as usize) < s.len() {
            exact[k as usize] += weight;
        }
    }
    density
        .iter()
        .zip(&exact)
        .map(|(d, e)| (d * ds - e).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(x: f64, y: f64, z: f64) -> BlochVector {
        BlochVector::new(x, y, z).unwrap()
    }

    fn pair(a: [f64; 3], b: [f64; 3]) -> PolarizationPair {
        PolarizationPair::new(bv(a[0], a[1], a[2]), bv(b[0], b[1], b[2])).unwrap()
    }

    /// Closed form of the trace formula, expanded with Pauli algebra.
    fn closed_form(pp: &PolarizationPair, chi: [f64; 3]) -> C64 {
        let norm = (chi.iter().map(|c| c * c).sum::<f64>()).sqrt();
        let pi = pp.p_i.to_array();
        let pf = pp.p_f.to_array();
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let n = if norm > 0.0 {
            chi.map(|c| c / norm)
        } else {
            [0.0; 3]
        };
        let ppf = dot(pi, pf);
        let num = C64::new(
            norm.cos() + ppf - (1.0 - norm.cos()) * dot(n, pi) * dot(n, pf),
            -norm.sin() * (dot(n, pi) + dot(n, pf)),
        );
        num / (1.0 + ppf)
    }

    #[test]
    fn char_examples() {
        let zz = pair([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        assert!((shift_char_exact(&zz, [0.0; 3]).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
        for cx in [0.3, 1.0, 2.5] {
            let c = shift_char_exact(&zz, [cx, 0.0, 0.0]).unwrap();
            assert!((c - C64::new(0.5 * (1.0 + cx.cos()), 0.0)).norm() < 1e-15);
        }
        assert!(matches!(
            PolarizationPair::new(bv(0.0, 0.0, 1.0), bv(0.0, 0.0, -1.0)),
            Err(Error::ZeroOverlap { .. })
        ));
    }

    #[test]
    fn weights_examples() {
        let zz = pair([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        let w = shift_weights_1d(&zz, Axis::X).unwrap();
        for (a, b) in w.as_array().iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
        let xx = pair([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let w = shift_weights_1d(&xx, Axis::X).unwrap();
        for (a, b) in w.as_array().iter().zip([0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unconditioned_has_no_half_quantized_weight() {
        let free = pair([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]);
        let w = shift_weights_1d(&free, Axis::X).unwrap();
        for (a, b) in w.as_array().iter().zip([0.5, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let free_x = pair([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]);
        let w = shift_weights_1d(&free_x, Axis::X).unwrap();
        for (a, b) in w.as_array().iter().zip([0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_d_measure_mass_means_and_marginal() {
        let pp = pair([0.3, -0.2, 0.6], [0.5, 0.4, 0.1]);
        let sm = shift_quasi_2d(&pp, &ShiftGrid::default(), 1e-3, Regularizer::Gaussian).unwrap();
        assert!((sm.mass - 1.0).abs() < 1e-2);
        assert!(sm.imag_residue < 1e-9, "{}", sm.imag_residue);
        let mean = mean_shift(&pp).unwrap();
        let m = sm.means();
        assert!(
            (m[0] - mean[0]).abs() < 1e-3 && (m[1] - mean[1]).abs() < 1e-3,
            "{m:?} vs {mean:?}"
        );

        let w = shift_weights_1d(&pp, Axis::X).unwrap();
        let l1 = cellwise_l1(&sm.s, &sm.marginal(Axis::X).unwrap(), &w);
        assert!(l1 < 0.05, "{l1}");
    }

    #[test]
    fn marginal_converges_as_xi_shrinks() {
        let pp = pair([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        let w = shift_weights_1d(&pp, Axis::X).unwrap();
        let grid = ShiftGrid::default();
        let l1 = |xi: f64| {
            let sm = shift_quasi_2d(&pp, &grid, xi, Regularizer::Gaussian).unwrap();
            cellwise_l1(&sm.s, &sm.marginal(Axis::X).unwrap(), &w)
        };
        let values: Vec<f64> = [1e-2, 5e-3, 2e-3, 1e-3].iter().map(|&x| l1(x)).collect();
        assert!(values.windows(2).all(|v| v[1] <= v[0]), "{values:?}");
        assert!(values[3] < 0.05);
    }

    #[test]
    fn ring_trough_for_parallel_z() {
        let pp = pair([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        let grid = ShiftGrid {
            half_extent: 2.0,
            spacing: 1.0 / 32.0,
        };
        let sm = shift_quasi_2d(&pp, &grid, 1e-2, Regularizer::Gaussian).unwrap();
        let radii: Vec<f64> = (1..=60).map(|k| 0.6 + k as f64 * 0.01).collect();
        let prof = sm.radial_profile(&radii, 256);
        let (imin, vmin) =
            prof.iter().enumerate().fold(
                (0, f64::INFINITY),
                |b, (i, &v)| if v < b.1 { (i, v) } else { b },
            );
        assert!(vmin < 0.0, "trough {vmin}");
        assert!(
            radii[imin] < 1.0 && radii[imin] > 0.8,
            "trough at {}",
            radii[imin]
        );
    }

    #[test]
    fn lorentzian_regularizer_also_converges() {
        let pp = pair([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        let w = shift_weights_1d(&pp, Axis::X).unwrap();
        let s: Vec<f64> = centered_axis(4001, 1e-3);
        let l1 = |xi: f64| {
            cellwise_l1(
                &s,
                &regularized_density_1d(&w, &s, xi, Regularizer::Lorentzian).unwrap(),
                &w,
            )
        };
        assert!(l1(1e-3) < l1(1e-2));
        let mass: f64 = regularized_density_1d(&w, &s, 2e-3, Regularizer::Gaussian)
            .unwrap()
            .iter()
            .sum::<f64>()
            * 1e-3;
        assert!((mass - 1.0).abs() < 1e-9);
        assert!(shift_quasi_2d(&pp, &ShiftGrid::default(), 0.0, Regularizer::Gaussian).is_err());
    }

    #[test]
    fn convolution_of_point_mass_is_gaussian() {
        let n = 65;
        let s = centered_axis(n, 0.05);
        let mut values = vec![0.0; n * n];
        values[(n / 2) * n + n / 2] = 1.0 / (0.05 * 0.05);
        let sm = ShiftMeasure {
            s,
            values,
            xi: 1e-3,
            regularizer: Regularizer::Gaussian,
            mass: 1.0,
            imag_residue: 0.0,
        };
        let o = centered_axis(41, 0.25);
        let jd = convolve_with_gaussian(&sm, [1.0, 2.0], &o, &o).unwrap();
        for (i, &x) in o.iter().enumerate() {
            for (j, &y) in o.iter().enumerate() {
                let g = (-(x * x) / 2.0 - y * y / 8.0).exp() / (2.0 * PI * 2.0);
                assert!((jd.get(i, j) - g).abs() < 1e-14);
            }
        }
        assert!(convolve_with_gaussian(&sm, [1.0, 1.0], &[0.0], &o).is_err());
    }

    #[test]
    fn weights_convolution_has_three_peaks() {
        let w = ShiftWeights {
            minus: 0.25,
            zero: 0.5,
            plus: 0.25,
        };
        let o: Vec<f64> = centered_axis(401, 0.01);
        let p = w.convolve(0.15, &o);
        let at = |x: f64| p[((x - o[0]) / 0.01).round() as usize];
        assert!(at(0.0) > at(0.5) && at(1.0) > at(0.5) && at(-1.0) > at(-0.5));
        assert!((at(0.0) / at(1.0) - 2.0).abs() < 1e-3);
    }

    fn unit_ball() -> impl Strategy<Value = [f64; 3]> {
        (0.0..1.0f64, -1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(r, ct, ph)| {
            let st = (1.0 - ct * ct).sqrt();
            [r * st * ph.cos(), r * st * ph.sin(), r * ct]
        })
    }

    proptest! {
        #[test]
        fn trace_formula_matches_closed_form(a in unit_ball(), b in unit_ball(), c in prop::array::uniform3(-6.0..6.0f64)) {
            let pp = pair(a, b);
            prop_assume!(pp.overlap().is_ok() && pp.overlap().unwrap() > 1e-3);
            let exact = shift_char_exact(&pp, c).unwrap();
            prop_assert!((exact - closed_form(&pp, c)).norm() < 1e-10 * (1.0 + exact.norm()));
            let conj = shift_char_exact(&pp, c.map(|x| -x)).unwrap();
            prop_assert!((conj - exact.conj()).norm() < 1e-10 * (1.0 + exact.norm()));
        }

        #[test]
        fn single_axis_is_degree_one(a in unit_ball(), b in unit_ball(), axis in 0usize..3) {
            let pp = pair(a, b);
            prop_assume!(pp.overlap().is_ok() && pp.overlap().unwrap() > 1e-3);
            let ax = [Axis::X, Axis::Y, Axis::Z][axis];
            let w = shift_weights_1d(&pp, ax).unwrap();
            prop_assert!((w.sum() - 1.0).abs() < 1e-12);
            for k in 0..16 {
                let x = -PI + k as f64 * 0.4;
                let mut chi = [0.0; 3];
                chi[axis] = x;
                let c = shift_char_exact(&pp, chi).unwrap();
                let fit = C64::from_polar(w.plus, -x) + w.zero + C64::from_polar(w.minus, x);
                prop_assert!((c - fit).norm() < 1e-12);
            }
        }
    }
}
