//! Discrete Fourier transforms on grids centred at zero.
//!
//! A grid of length n has index k at coordinate (k - c) * step with c = n / 2
//! (integer division), so even grids run from -n/2 to n/2 - 1 and odd grids are
//! symmetric. The centred transform is
//! `out[m] = sum_k in[k] exp(sign * 2 pi i (k - c)(m - c) / n)`,
//! evaluated with one FFT and two phase ramps.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::qubit::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// exp(-2 pi i ...)
    Negative,
    /// exp(+2 pi i ...)
    Positive,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Positive => 1.0,
        }
    }
}

/// Index of the zero coordinate on a centred grid of length n.
pub fn center(n: usize) -> usize {
    n / 2
}

/// Coordinates (k - c) * step of a centred grid.
pub fn centered_axis(n: usize, step: f64) -> Vec<f64> {
    let c = center(n) as f64;
    (0..n).map(|k| (k as f64 - c) * step).collect()
}

/// exp(sign * 2 pi i j / n) with j reduced modulo n first to keep the phase exact.
fn root(n: usize, j: u128, sign: f64) -> C64 {
    let r = (j % n as u128) as f64;
    C64::from_polar(1.0, sign * 2.0 * PI * r / n as f64)
}

/// Reusable centred transform of one length.
pub struct CenteredFft {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    pre: Vec<C64>,
    post: Vec<C64>,
}

impl CenteredFft {
    pub fn new(n: usize, sign: Sign) -> Self {
        let mut planner = FftPlanner::new();
        let fft = match sign {
            Sign::Negative => planner.plan_fft_forward(n),
            Sign::Positive => planner.plan_fft_inverse(n),
        };
        let s = sign.value();
        let c = center(n) as u128;
        let nn = n as u128;
        // (k - c)(m - c) = km - c k - c m + c^2; phases of the last three terms.
        let pre: Vec<C64> = (0..nn).map(|k| root(n, nn * nn - c * k % nn, s)).collect();
        let c2 = root(n, c * c, s);
        let post: Vec<C64> = (0..nn)
            .map(|m| root(n, nn * nn - c * m % nn, s) * c2)
            .collect();
        CenteredFft { n, fft, pre, post }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn process(&self, data: &mut [C64]) {
        assert_eq!(data.len(), self.n);
        for (x, p) in data.iter_mut().zip(&self.pre) {
            *x *= p;
        }
        self.fft.process(data);
        for (x, p) in data.iter_mut().zip(&self.post) {
            *x *= p;
        }
    }
}

/// Centred transform of a row-major n1 x n2 array along both axes.
pub fn centered_transform_2d(data: &mut [C64], n1: usize, n2: usize, sign: Sign) {
    assert_eq!(data.len(), n1 * n2);
    let rows = CenteredFft::new(n2, sign);
    for row in data.chunks_mut(n2) {
        rows.process(row);
    }
    let cols = if n1 == n2 {
        rows
    } else {
        CenteredFft::new(n1, sign)
    };
    let mut buf = vec![C64::new(0.0, 0.0); n1];
    for j in 0..n2 {
        for i in 0..n1 {
            buf[i] = data[i * n2 + j];
        }
        cols.process(&mut buf);
        for i in 0..n1 {
            data[i * n2 + j] = buf[i];
        }
    }
}

/// O(n^2) reference evaluation of the centred transform.
pub fn centered_transform_direct(data: &[C64], sign: Sign) -> Vec<C64> {
    let n = data.len();
    let c = center(n) as i128;
    let s = sign.value();
    (0..n as i128)
        .map(|m| {
            data.iter()
                .enumerate()
                .map(|(k, x)| {
                    let j = ((k as i128 - c) * (m - c)).rem_euclid(n as i128) as u128;
                    x * root(n, j, s)
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(n: usize) -> Vec<C64> {
        (0..n)
            .map(|k| {
                C64::new(
                    (0.37 * k as f64).sin() + 0.1 * k as f64,
                    (1.3 * k as f64).cos(),
                )
            })
            .collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fft_matches_direct_sum() {
        for n in [64, 65, 128, 257] {
            for sign in [Sign::Negative, Sign::Positive] {
                let x = signal(n);
                let mut fast = x.clone();
                CenteredFft::new(n, sign).process(&mut fast);
                let slow = centered_transform_direct(&x, sign);
                let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
                assert!(max_diff(&fast, &slow) < 1e-12 * scale, "n={n}");
            }
        }
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let n = 96;
        let x = signal(n);
        let mut y = x.clone();
        CenteredFft::new(n, Sign::Negative).process(&mut y);
        CenteredFft::new(n, Sign::Positive).process(&mut y);
        let y: Vec<C64> = y.iter().map(|v| v / n as f64).collect();
        assert!(max_diff(&x, &y) < 1e-12);
    }

    #[test]
    fn two_dimensional_is_separable() {
        let (n1, n2) = (8, 6);
        let data: Vec<C64> = signal(n1 * n2);
        let mut fast = data.clone();
        centered_transform_2d(&mut fast, n1, n2, Sign::Negative);
        let (c1, c2) = (center(n1) as f64, center(n2) as f64);
        for m1 in 0..n1 {
            for m2 in 0..n2 {
                let mut s = C64::new(0.0, 0.0);
                for k1 in 0..n1 {
                    for k2 in 0..n2 {
                        let ph = -2.0
                            * PI
                            * ((k1 as f64 - c1) * (m1 as f64 - c1) / n1 as f64
                                + (k2 as f64 - c2) * (m2 as f64 - c2) / n2 as f64);
                        s += data[k1 * n2 + k2] * C64::from_polar(1.0, ph);
                    }
                }
                assert!((s - fast[m1 * n2 + m2]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn axis_is_centred() {
        assert_eq!(centered_axis(4, 0.5), vec![-1.0, -0.5, 0.0, 0.5]);
        assert_eq!(centered_axis(5, 1.0), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
