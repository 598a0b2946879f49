//! Counting-field master equation: generator, propagation and the
//! conditioned generating function.
//!
//! Density matrices are vectorized by stacking columns,
//! vec(rho) = (rho00, rho10, rho01, rho11), so that
//! vec(A rho B) = (B^T kron A) vec(rho).

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::qubit::{DensityMatrix, Matrix2, PostSelection, C64};
use crate::scenario::{Dissipation, ModelConfig};

/// Smallest post-selection probability the generating function accepts.
pub const MIN_POST_PROBABILITY: f64 = 1e-14;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Superoperator on vectorized 2x2 matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superop(pub [[C64; 4]; 4]);

#[inline]
fn vidx(r: usize, c: usize) -> usize {
    r + 2 * c
}

impl Superop {
    pub fn zeros() -> Self {
        Superop([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// rho -> A rho B.
    pub fn sandwich(a: &Matrix2, b: &Matrix2) -> Self {
        let mut m = Self::zeros();
        for r in 0..2 {
            for c in 0..2 {
                for rp in 0..2 {
                    for cp in 0..2 {
                        m.0[vidx(r, c)][vidx(rp, cp)] = a.0[r][rp] * b.0[cp][c];
                    }
                }
            }
        }
        m
    }

    /// rho -> A rho.
    pub fn left(a: &Matrix2) -> Self {
        Self::sandwich(a, &Matrix2::identity())
    }

    /// rho -> rho B.
    pub fn right(b: &Matrix2) -> Self {
        Self::sandwich(&Matrix2::identity(), b)
    }

    /// rho -> D[A] rho = {A^dag A, rho}/2 - A rho A^dag.
    pub fn dissipator(a: &Matrix2) -> Self {
        let ada = a.dagger() * *a;
        (Self::left(&ada) + Self::right(&ada)) * C64::new(0.5, 0.0) - Self::sandwich(a, &a.dagger())
    }

    /// rho -> [A, rho].
    pub fn commutator(a: &Matrix2) -> Self {
        Self::left(a) - Self::right(a)
    }

    /// rho -> {A, rho}.
    pub fn anticommutator(a: &Matrix2) -> Self {
        Self::left(a) + Self::right(a)
    }

    pub fn apply(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }

    pub fn apply_matrix(&self, m: &Matrix2) -> Matrix2 {
        devec(&self.apply(&vec(m)))
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..4)
            .map(|c| (0..4).map(|r| self.0[r][c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Superop) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for Superop {
    type Output = Superop;
    fn add(mut self, rhs: Superop) -> Superop {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl Sub for Superop {
    type Output = Superop;
    fn sub(mut self, rhs: Superop) -> Superop {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl Mul for Superop {
    type Output = Superop;
    fn mul(self, rhs: Superop) -> Superop {
        let mut out = Superop::zeros();
        for r in 0..4 {
            for c in 0..4 {
                out.0[r][c] = self.0[r][0] * rhs.0[0][c]
                    + self.0[r][1] * rhs.0[1][c]
                    + self.0[r][2] * rhs.0[2][c]
                    + self.0[r][3] * rhs.0[3][c];
            }
        }
        out
    }
}

impl Mul<C64> for Superop {
    type Output = Superop;
    fn mul(self, s: C64) -> Superop {
        self.scale(s)
    }
}

impl Mul<f64> for Superop {
    type Output = Superop;
    fn mul(self, s: f64) -> Superop {
        self.scale(C64::new(s, 0.0))
    }
}

pub fn vec(m: &Matrix2) -> [C64; 4] {
    [m.0[0][0], m.0[1][0], m.0[0][1], m.0[1][1]]
}

pub fn devec(v: &[C64; 4]) -> Matrix2 {
    Matrix2([[v[0], v[2]], [v[1], v[3]]])
}

/// exp(A) by scaling and squaring of a truncated Taylor series.
///
/// The trace is shifted out first (A = mu + B with tr B = 0) and restored as a
/// scalar factor. Returns `None` if the result is not finite.
pub fn expm(a: &Superop) -> Option<Superop> {
    let mu = a.trace() / 4.0;
    let mut b = *a;
    for i in 0..4 {
        b.0[i][i] -= mu;
    }
    let norm = b.norm1();
    if !norm.is_finite() {
        return None;
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = b * 0.5f64.powi(squarings);
    let mut sum = Superop::identity();
    let mut term = Superop::identity();
    for k in 1..=30 {
        term = term * b * (1.0 / k as f64);
        sum = sum + term;
        if term.norm1() <= 1e-17 * sum.norm1() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    let out = sum * mu.exp();
    out.is_finite().then_some(out)
}

/// Counting-field generator for one choice of (chi_1, chi_2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Liouvillian {
    pub matrix: Superop,
    pub chi: (f64, f64),
    pub ideal: bool,
}

/// The generator split by its dependence on the counting fields:
/// L(chi) = base + chi_1 lin[0] + chi_2 lin[1] - (chi_1^2 S_VV1 + chi_2^2 S_VV2)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParts {
    pub base: Superop,
    pub lin: [Superop; 2],
    pub s_vv: [f64; 2],
    pub ideal: bool,
}

impl GeneratorParts {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let c = &cfg.correlators;
        cfg.correlators.check_invariants()?;
        if c.s_qv[0][1] != 0.0 || c.s_qv[1][0] != 0.0 || c.s_vv[0][1] != 0.0 {
            return Err(Error::InvalidConfiguration(
                "the master equation supports independent detectors only; \
                 cross noises are handled by the short-time formulas"
                    .into(),
            ));
        }
        let h = cfg.hamiltonian.matrix();
        let mut base = Superop::commutator(&h) * C64::new(0.0, -1.0);
        let ops = [cfg.measured[0].pauli(), cfg.measured[1].pauli()];
        let ideal = match cfg.dissipation {
            Dissipation::Detectors => {
                for i in 0..2 {
                    base = base - Superop::dissipator(&ops[i]) * c.s_qq[i][i];
                }
                true
            }
            Dissipation::Rates {
                gamma_d,
                gamma_up,
                gamma_down,
            } => {
                base = base
                    - Superop::dissipator(&Matrix2::pauli_z()) * gamma_d
                    - Superop::dissipator(&Matrix2::sigma_plus()) * gamma_up
                    - Superop::dissipator(&Matrix2::sigma_minus()) * gamma_down;
                false
            }
        };
        let mut lin = [Superop::zeros(); 2];
        for i in 0..2 {
            // -S_QV [rho, O] + (i a_VQ / 2) {rho, O}
            let rho_o = Superop::right(&ops[i]) - Superop::left(&ops[i]);
            lin[i] = rho_o * (-c.s_qv[i][i])
                + Superop::anticommutator(&ops[i]) * C64::new(0.0, 0.5 * c.a_vq[i][i]);
        }
        Ok(GeneratorParts {
            base,
            lin,
            s_vv: [c.s_vv[0][0], c.s_vv[1][1]],
            ideal,
        })
    }

    /// Generator without the scalar -chi^2 S_VV/2 damping.
    fn drift(&self, chi: (f64, f64)) -> Superop {
        self.base + self.lin[0] * chi.0 + self.lin[1] * chi.1
    }

    /// -(chi_1^2 S_VV1 + chi_2^2 S_VV2)/2.
    pub fn scalar_damping(&self, chi: (f64, f64)) -> f64 {
        -0.5 * (chi.0 * chi.0 * self.s_vv[0] + chi.1 * chi.1 * self.s_vv[1])
    }

    pub fn at(&self, chi: (f64, f64)) -> Liouvillian {
        let mut m = self.drift(chi);
        let d = self.scalar_damping(chi);
        for i in 0..4 {
            m.0[i][i] += d;
        }
        Liouvillian {
            matrix: m,
            chi,
            ideal: self.ideal,
        }
    }

    /// exp(L(chi) T), with the scalar damping applied analytically.
    pub fn propagator(&self, chi: (f64, f64), t: f64) -> Result<Superop> {
        let e = expm(&(self.drift(chi) * t)).ok_or(Error::NonFinite {
            chi1: chi.0,
            chi2: chi.1,
        })?;
        let out = e * (self.scalar_damping(chi) * t).exp();
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite {
                chi1: chi.0,
                chi2: chi.1,
            })
        }
    }
}

pub fn build_liouvillian(cfg: &ModelConfig, chi: (f64, f64)) -> Result<Liouvillian> {
    Ok(GeneratorParts::new(cfg)?.at(chi))
}

/// Quasi-density matrix rho(chi; T); not trace preserving for chi != 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState(pub Matrix2);

impl AugmentedState {
    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }
}

pub fn propagate(rho0: &DensityMatrix, l: &Liouvillian, t: f64) -> Result<AugmentedState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let e = expm(&(l.matrix * t)).ok_or(Error::NonFinite {
        chi1: l.chi.0,
        chi2: l.chi.1,
    })?;
    Ok(AugmentedState(e.apply_matrix(rho0.matrix())))
}

/// Evaluates the conditioned generating function at many counting fields
/// for a fixed configuration, state pair and measurement time.
///
/// Shareable across threads: evaluation takes `&self`.
#[derive(Debug, Clone)]
pub struct GeneratingFunction {
    parts: GeneratorParts,
    rho0: [C64; 4],
    /// Row vector w with Tr[rho_f X] = w . vec(X).
    projector: [C64; 4],
    t: f64,
    probability: f64,
}

impl GeneratingFunction {
    pub fn new(
        cfg: &ModelConfig,
        rho_i: &DensityMatrix,
        post: &PostSelection,
        t: f64,
    ) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        let parts = GeneratorParts::new(cfg)?;
        let f = post.operator().copied().unwrap_or_else(Matrix2::identity);
        let projector = [f.0[0][0], f.0[0][1], f.0[1][0], f.0[1][1]];
        let mut gf = GeneratingFunction {
            parts,
            rho0: vec(rho_i.matrix()),
            projector,
            t,
            probability: 1.0,
        };
        let p0 = gf.unnormalized((0.0, 0.0))?;
        gf.probability = p0.re;
        if !(gf.probability >= MIN_POST_PROBABILITY) {
            return Err(Error::ZeroPostSelection {
                probability: gf.probability,
            });
        }
        Ok(gf)
    }

    /// Tr[rho_f rho(chi; T)].
    pub fn unnormalized(&self, chi: (f64, f64)) -> Result<C64> {
        let u = self.parts.propagator(chi, self.t)?;
        let v = u.apply(&self.rho0);
        Ok((0..4).map(|k| self.projector[k] * v[k]).sum())
    }

    pub fn eval(&self, chi: (f64, f64)) -> Result<C64> {
        Ok(self.unnormalized(chi)? / self.probability)
    }

    /// Tr[rho_f rho(0; T)].
    pub fn post_probability(&self) -> f64 {
        self.probability
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn s_vv(&self) -> [f64; 2] {
        self.parts.s_vv
    }
}

pub fn generating_function(
    cfg: &ModelConfig,
    rho_i: &DensityMatrix,
    post: &PostSelection,
    chi: (f64, f64),
    t: f64,
) -> Result<C64> {
    GeneratingFunction::new(cfg, rho_i, post, t)?.eval(chi)
}

/// Tr[rho_f rho(0; T)], equal to 1 without post-selection.
pub fn postselect_probability(
    cfg: &ModelConfig,
    rho_i: &DensityMatrix,
    post: &PostSelection,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let parts = GeneratorParts::new(cfg)?;
    let u = parts.propagator((0.0, 0.0), t)?;
    let rho = u.apply_matrix(rho_i.matrix());
    Ok(post.project(&rho).re.clamp(0.0, 1.0))
}
