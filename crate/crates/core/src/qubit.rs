//! 2x2 operator algebra, qubit states and post-selection operators.
//!
//! Units have hbar = 1. The computational basis is the sigma_z eigenbasis,
//! index 0 = |Z+> (excited), index 1 = |Z->.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Matrix2 {
        match self {
            Axis::X => Matrix2::pauli_x(),
            Axis::Y => Matrix2::pauli_y(),
            Axis::Z => Matrix2::pauli_z(),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Dense complex 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2(pub [[C64; 2]; 2]);

impl Matrix2 {
    pub const fn new(m: [[C64; 2]; 2]) -> Self {
        Matrix2(m)
    }

    pub fn zeros() -> Self {
        Matrix2([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        Matrix2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn pauli_x() -> Self {
        Matrix2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Matrix2([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Matrix2([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// sigma_+ = |Z+><Z-|.
    pub fn sigma_plus() -> Self {
        Matrix2([[ZERO, ONE], [ZERO, ZERO]])
    }

    /// sigma_- = |Z-><Z+|.
    pub fn sigma_minus() -> Self {
        Matrix2([[ZERO, ZERO], [ONE, ZERO]])
    }

    pub fn outer(a: &Ket, b: &Ket) -> Self {
        let mut m = Self::zeros();
        for r in 0..2 {
            for c in 0..2 {
                m.0[r][c] = a.0[r] * b.0[c].conj();
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Matrix2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= tol
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }

    /// Components (c0, c) with M = c0 * 1 + c . sigma.
    pub fn pauli_components(&self) -> (C64, [C64; 3]) {
        let m = &self.0;
        let c0 = 0.5 * (m[0][0] + m[1][1]);
        let cx = 0.5 * (m[0][1] + m[1][0]);
        let cy = 0.5 * I * (m[0][1] - m[1][0]);
        let cz = 0.5 * (m[0][0] - m[1][1]);
        (c0, [cx, cy, cz])
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(mut self, rhs: Matrix2) -> Matrix2 {
        for r in 0..2 {
            for c in 0..2 {
                self.0[r][c] += rhs.0[r][c];
            }
        }
        self
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, rhs: Matrix2) -> Matrix2 {
        self + (-rhs)
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        self.scale(-ONE)
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = Matrix2::zeros();
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        out
    }
}

impl Mul<C64> for Matrix2 {
    type Output = Matrix2;
    fn mul(self, s: C64) -> Matrix2 {
        self.scale(s)
    }
}

impl Mul<f64> for Matrix2 {
    type Output = Matrix2;
    fn mul(self, s: f64) -> Matrix2 {
        self.scale(C64::new(s, 0.0))
    }
}

/// Normalized qubit state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket(pub [C64; 2]);

impl Ket {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm < 1e-300 {
            return Err(Error::ZeroNormState);
        }
        Ok(Ket([a / norm, b / norm]))
    }

    pub fn z_plus() -> Self {
        Ket([ONE, ZERO])
    }

    pub fn z_minus() -> Self {
        Ket([ZERO, ONE])
    }

    /// Pure state pointing along the unit vector `dir` on the Bloch sphere.
    pub fn from_bloch(dir: [f64; 3]) -> Result<Self> {
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        if n < 1e-300 {
            return Err(Error::ZeroNormState);
        }
        let (x, y, z) = (dir[0] / n, dir[1] / n, dir[2] / n);
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        Ok(Ket([
            C64::new((0.5 * theta).cos(), 0.0),
            C64::from_polar((0.5 * theta).sin(), phi),
        ]))
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn projector(&self) -> Matrix2 {
        Matrix2::outer(self, self)
    }
}

/// Polarization vector P with rho = (1 + P.sigma)/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl BlochVector {
    pub fn new(px: f64, py: f64, pz: f64) -> Result<Self> {
        let v = BlochVector { px, py, pz };
        let norm = v.norm();
        if !norm.is_finite() || norm > 1.0 + TOL {
            return Err(Error::InvalidPolarization { norm });
        }
        Ok(v)
    }

    pub fn zero() -> Self {
        BlochVector {
            px: 0.0,
            py: 0.0,
            pz: 0.0,
        }
    }

    pub fn from_array(p: [f64; 3]) -> Result<Self> {
        Self::new(p[0], p[1], p[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.px, self.py, self.pz]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.px * other.px + self.py * other.py + self.pz * other.pz
    }

    pub fn component(&self, axis: Axis) -> f64 {
        self.to_array()[axis.index()]
    }
}

/// Physical qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2);

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity to 1e-12.
    pub fn new(m: Matrix2) -> Result<Self> {
        if !m.is_hermitian(TOL) {
            return Err(Error::InvalidDensityMatrix {
                reason: "not Hermitian".into(),
            });
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("trace {tr}"),
            });
        }
        let ev = m.hermitian_eigenvalues();
        if ev[0] < -TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("negative eigenvalue {:e}", ev[0]),
            });
        }
        Ok(DensityMatrix(m))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix2::identity() * 0.5)
    }

    pub fn pure(ket: &Ket) -> Self {
        DensityMatrix(ket.projector())
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector {
            px: expectation(self, Axis::X),
            py: expectation(self, Axis::Y),
            pz: expectation(self, Axis::Z),
        }
    }
}

/// rho = (1 + P.sigma)/2.
pub fn bloch_to_density(p: BlochVector) -> Result<DensityMatrix> {
    let p = BlochVector::new(p.px, p.py, p.pz)?;
    let m = Matrix2([
        [
            C64::new(0.5 * (1.0 + p.pz), 0.0),
            C64::new(0.5 * p.px, -0.5 * p.py),
        ],
        [
            C64::new(0.5 * p.px, 0.5 * p.py),
            C64::new(0.5 * (1.0 - p.pz), 0.0),
        ],
    ]);
    Ok(DensityMatrix(m))
}

/// Tr[rho sigma_axis].
pub fn expectation(rho: &DensityMatrix, axis: Axis) -> f64 {
    (rho.0 * axis.pauli()).trace().re
}

/// The operator a post-selected trace is taken against.
///
/// `rho_f == None` means no post-selection: the plain trace is used and the
/// statistics are unconditioned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelection {
    rho_f: Option<Matrix2>,
}

impl PostSelection {
    pub fn none() -> Self {
        PostSelection { rho_f: None }
    }

    pub fn pure(ket: &Ket) -> Self {
        PostSelection {
            rho_f: Some(ket.projector()),
        }
    }

    /// rho_f = (1 - p_e)|psi1><psi1| + p_e |psi2><psi2|.
    pub fn faulty(psi1: &Ket, psi2: &Ket, p_e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_e) {
            return Err(Error::InvalidProbability(p_e));
        }
        let overlap = psi1.inner(psi2).norm();
        if overlap > 1e-10 {
            return Err(Error::NonOrthogonalStates { overlap });
        }
        let rho = psi1.projector() * (1.0 - p_e) + psi2.projector() * p_e;
        Ok(PostSelection { rho_f: Some(rho) })
    }

    pub fn operator(&self) -> Option<&Matrix2> {
        self.rho_f.as_ref()
    }

    pub fn is_conditioned(&self) -> bool {
        self.rho_f.is_some()
    }

    /// Polarization of rho_f; zero for the unconditioned case.
    pub fn polarization(&self) -> BlochVector {
        match &self.rho_f {
            None => BlochVector::zero(),
            Some(m) => {
                // rho_f = c0 (1 + P.sigma) with c0 = Tr[rho_f] / 2.
                let (c0, c) = m.pauli_components();
                BlochVector {
                    px: c[0].re / c0.re,
                    py: c[1].re / c0.re,
                    pz: c[2].re / c0.re,
                }
            }
        }
    }

    /// Tr[rho_f X], or Tr[X] without post-selection.
    pub fn project(&self, x: &Matrix2) -> C64 {
        match &self.rho_f {
            None => x.trace(),
            Some(f) => (*f * *x).trace(),
        }
    }
}

/// Serializable description of a post-selection, resolved by [`build_postselection`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PostSelectionSpec {
    None,
    /// Pure projector onto the Bloch-sphere direction `bloch`.
    Pure {
        bloch: [f64; 3],
    },
    Faulty {
        psi1: [f64; 3],
        psi2: [f64; 3],
        p_e: f64,
    },
}

pub fn build_postselection(spec: &PostSelectionSpec) -> Result<PostSelection> {
    match spec {
        PostSelectionSpec::None => Ok(PostSelection::none()),
        PostSelectionSpec::Pure { bloch } => Ok(PostSelection::pure(&Ket::from_bloch(*bloch)?)),
        PostSelectionSpec::Faulty { psi1, psi2, p_e } => {
            PostSelection::faulty(&Ket::from_bloch(*psi1)?, &Ket::from_bloch(*psi2)?, *p_e)
        }
    }
}

/// H_q = (Omega_x sigma_x + Omega_y sigma_y + Delta sigma_z)/2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub omega_x: f64,
    #[serde(default)]
    pub omega_y: f64,
    #[serde(default)]
    pub delta: f64,
}

impl HamiltonianParams {
    pub fn new(omega_x: f64, omega_y: f64, delta: f64) -> Self {
        HamiltonianParams {
            omega_x,
            omega_y,
            delta,
        }
    }

    /// Omega-bar squared = Omega_x^2 + Omega_y^2.
    pub fn omega_bar_sq(&self) -> f64 {
        self.omega_x * self.omega_x + self.omega_y * self.omega_y
    }

    pub fn matrix(&self) -> Matrix2 {
        (Matrix2::pauli_x() * self.omega_x
            + Matrix2::pauli_y() * self.omega_y
            + Matrix2::pauli_z() * self.delta)
            * 0.5
    }

    /// exp(-i H t) = cos(|h|t/2) - i sin(|h|t/2) (h/|h|).sigma.
    pub fn propagator(&self, t: f64) -> Matrix2 {
        let h = [self.omega_x, self.omega_y, self.delta];
        let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        if norm == 0.0 {
            return Matrix2::identity();
        }
        let angle = 0.5 * norm * t;
        let (s, c) = angle.sin_cos();
        let gen =
            (Matrix2::pauli_x() * h[0] + Matrix2::pauli_y() * h[1] + Matrix2::pauli_z() * h[2])
                * (1.0 / norm);
        Matrix2::identity() * c + gen * C64::new(0.0, -s)
    }
}

/// rho_f -> e^{-iHT} rho_f e^{iHT}, post-selecting on the freely evolved states.
pub fn frame_rotate(post: &PostSelection, h: &HamiltonianParams, t: f64) -> PostSelection {
    match post.rho_f {
        None => *post,
        Some(f) => {
            let u = h.propagator(t);
            PostSelection {
                rho_f: Some(u * f * u.dagger()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: &Matrix2, b: &Matrix2, tol: f64) -> bool {
        a.max_abs_diff(b) < tol
    }

    fn diag(a: f64, b: f64) -> Matrix2 {
        Matrix2([[C64::new(a, 0.0), ZERO], [ZERO, C64::new(b, 0.0)]])
    }

    #[test]
    fn bloch_examples() {
        let mixed = bloch_to_density(BlochVector::zero()).unwrap();
        assert!(close(mixed.matrix(), &(Matrix2::identity() * 0.5), 1e-15));

        let up = bloch_to_density(BlochVector::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(close(up.matrix(), &diag(1.0, 0.0), 1e-15));

        let xp = bloch_to_density(BlochVector::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((xp.matrix().get(r, c) - C64::new(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn postselection_polarization() {
        let p = PostSelection::pure(&Ket::from_bloch([1.0, 2.0, -2.0]).unwrap()).polarization();
        assert!((p.px - 1.0 / 3.0).abs() < 1e-12 && (p.py - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.pz + 2.0 / 3.0).abs() < 1e-12);
        let f = PostSelection::faulty(&Ket::z_plus(), &Ket::z_minus(), 0.1)
            .unwrap()
            .polarization();
        assert!((f.pz - 0.8).abs() < 1e-12 && f.px.abs() < 1e-15);
        assert_eq!(PostSelection::none().polarization().to_array(), [0.0; 3]);
    }

    #[test]
    fn rejects_long_polarization() {
        assert!(matches!(
            BlochVector::new(0.8, 0.8, 0.0),
            Err(Error::InvalidPolarization { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let up = DensityMatrix::pure(&Ket::z_plus());
        assert!((expectation(&up, Axis::Z) - 1.0).abs() < 1e-15);
        assert!(expectation(&DensityMatrix::maximally_mixed(), Axis::X).abs() < 1e-15);
        let xp = bloch_to_density(BlochVector::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((expectation(&xp, Axis::X) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn postselection_examples() {
        let pure = build_postselection(&PostSelectionSpec::Pure {
            bloch: [0.0, 0.0, -1.0],
        })
        .unwrap();
        assert!(close(pure.operator().unwrap(), &diag(0.0, 1.0), 1e-15));

        let f0 = PostSelection::faulty(&Ket::z_plus(), &Ket::z_minus(), 0.0).unwrap();
        assert!(close(f0.operator().unwrap(), &diag(1.0, 0.0), 1e-15));

        let half = PostSelection::faulty(&Ket::z_plus(), &Ket::z_minus(), 0.5).unwrap();
        assert!(close(
            half.operator().unwrap(),
            &(Matrix2::identity() * 0.5),
            1e-15
        ));
    }

    #[test]
    fn faulty_requires_orthogonal_states() {
        let x = Ket::from_bloch([1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            PostSelection::faulty(&Ket::z_plus(), &x, 0.1),
            Err(Error::NonOrthogonalStates { .. })
        ));
        assert!(matches!(
            PostSelection::faulty(&Ket::z_plus(), &Ket::z_minus(), 1.5),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn frame_rotation_examples() {
        let omega = 1.7;
        let h = HamiltonianParams::new(omega, 0.0, 0.0);
        let up = PostSelection::pure(&Ket::z_plus());

        let same = frame_rotate(&up, &h, 0.0);
        assert!(close(
            same.operator().unwrap(),
            up.operator().unwrap(),
            1e-15
        ));

        let full = frame_rotate(&up, &h, 2.0 * PI / omega);
        assert!(close(
            full.operator().unwrap(),
            up.operator().unwrap(),
            1e-12
        ));

        let half = frame_rotate(&up, &h, PI / omega);
        assert!(close(half.operator().unwrap(), &diag(0.0, 1.0), 1e-12));
    }

    #[test]
    fn propagator_matches_taylor_series() {
        // Independent route: sum the exponential series of -iHt directly.
        let h = HamiltonianParams::new(0.7, -0.3, 1.1);
        let t = 0.9;
        let gen = h.matrix() * C64::new(0.0, -t);
        let mut term = Matrix2::identity();
        let mut sum = Matrix2::identity();
        for k in 1..40 {
            term = term * gen * (1.0 / k as f64);
            sum = sum + term;
        }
        assert!(close(&h.propagator(t), &sum, 1e-14));
    }

    #[test]
    fn ket_from_bloch_reproduces_direction() {
        let dir = [0.3, -0.5, 0.81];
        let n = (dir.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let rho = DensityMatrix::pure(&Ket::from_bloch(dir).unwrap());
        let p = rho.bloch();
        assert!((p.px - dir[0] / n).abs() < 1e-14);
        assert!((p.py - dir[1] / n).abs() < 1e-14);
        assert!((p.pz - dir[2] / n).abs() < 1e-14);
    }

    fn bloch_strategy() -> impl Strategy<Value = BlochVector> {
        (0.0..1.0f64, 0.0..PI, 0.0..2.0 * PI).prop_map(|(r, th, ph)| BlochVector {
            px: r * th.sin() * ph.cos(),
            py: r * th.sin() * ph.sin(),
            pz: r * th.cos(),
        })
    }

    proptest! {
        #[test]
        fn density_roundtrip(p in bloch_strategy()) {
            let rho = bloch_to_density(p).unwrap();
            prop_assert!(DensityMatrix::new(*rho.matrix()).is_ok());
            prop_assert!((expectation(&rho, Axis::X) - p.px).abs() < 1e-12);
            prop_assert!((expectation(&rho, Axis::Y) - p.py).abs() < 1e-12);
            prop_assert!((expectation(&rho, Axis::Z) - p.pz).abs() < 1e-12);
        }

        #[test]
        fn frame_rotation_preserves_spectrum(
            p_e in 0.0..1.0f64,
            dir in bloch_strategy(),
            wx in -5.0..5.0f64, wy in -5.0..5.0f64, d in -5.0..5.0f64,
            t in 0.0..20.0f64,
        ) {
            prop_assume!(dir.norm() > 1e-3);
            let psi1 = Ket::from_bloch(dir.to_array()).unwrap();
            let psi2 = Ket::from_bloch([-dir.px, -dir.py, -dir.pz]).unwrap();
            let post = PostSelection::faulty(&psi1, &psi2, p_e).unwrap();
            let rotated = frame_rotate(&post, &HamiltonianParams::new(wx, wy, d), t);
            let before = post.operator().unwrap().hermitian_eigenvalues();
            let after = rotated.operator().unwrap().hermitian_eigenvalues();
            prop_assert!((before[0] - after[0]).abs() < 1e-12);
            prop_assert!((before[1] - after[1]).abs() < 1e-12);
            prop_assert!((rotated.operator().unwrap().trace() - ONE).norm() < 1e-12);
        }

        #[test]
        fn faulty_swap_symmetry(p_e in 0.0..1.0f64, dir in bloch_strategy()) {
            prop_assume!(dir.norm() > 1e-3);
            let psi1 = Ket::from_bloch(dir.to_array()).unwrap();
            let psi2 = Ket::from_bloch([-dir.px, -dir.py, -dir.pz]).unwrap();
            let a = PostSelection::faulty(&psi1, &psi2, p_e).unwrap();
            let b = PostSelection::faulty(&psi2, &psi1, 1.0 - p_e).unwrap();
            prop_assert!(a.operator().unwrap().max_abs_diff(b.operator().unwrap()) < 1e-12);
        }
    }
}
