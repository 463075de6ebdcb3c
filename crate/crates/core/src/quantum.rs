//! Per-mode density matrices and their unitary evolution.
//!
//! A mode state is block structured: a 2x2 Hermitian block on the coupled
//! pair `{|0,0>, |k,-k>}` plus the populations of the two inert levels.
//! Coherences between the block and the inert levels are never generated.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{ModeHamiltonian, RampProtocol};

const STATE_TOL: f64 = 1e-12;
const COHERENCE_TOL: f64 = 1e-9;
const MIN_GAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("invalid mode state: {0}")]
    InvalidState(&'static str),
    #[error("invalid integrator options: {0}")]
    InvalidOptions(&'static str),
    #[error("state has coherence {0:e} in the start eigenbasis")]
    NotDiagonal(f64),
    #[error("gap {0:e} too small to define a quasiparticle count")]
    GapTooSmall(f64),
    #[error("integration produced a non-finite state")]
    NonFinite,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn real_symmetric(a: f64, b: f64, d: f64) -> Self {
        let b = Complex64::new(b, 0.0);
        Mat2([[Complex64::new(a, 0.0), b], [b, Complex64::new(d, 0.0)]])
    }

    /// `|v><v|` for a real unit vector.
    fn projector(v: [f64; 2]) -> Self {
        Self::real_symmetric(v[0] * v[0], v[0] * v[1], v[1] * v[1])
    }

    pub fn hamiltonian(h: &ModeHamiltonian) -> Self {
        Self::real_symmetric(h.diag, h.offdiag, -h.diag)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    pub fn adjoint(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        self.add(&o.scale(-ONE))
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let mut r = *self;
        r.0.iter_mut().flatten().for_each(|x| *x *= s);
        r
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn commutator(&self, o: &Mat2) -> Mat2 {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Mat2) -> Mat2 {
        self.mul(rho).mul(&self.adjoint())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        let mean = 0.5 * (a + d);
        let r = (0.5 * (a - d)).hypot(b.norm());
        [mean - r, mean + r]
    }
}

/// Exact propagator `exp(-i H dt)` for a traceless real mode block.
pub fn step_unitary(h: &ModeHamiltonian, dt: f64) -> Mat2 {
    let eps = h.gap();
    if eps == 0.0 {
        return Mat2::IDENTITY;
    }
    let (s, c) = (eps * dt).sin_cos();
    let f = s / eps;
    let cd = Complex64::new(c, -f * h.diag);
    let od = Complex64::new(0.0, -f * h.offdiag);
    Mat2([[cd, od], [od, cd.conj()]])
}

/// Ground (`-eps`) and excited (`+eps`) eigenvectors of the active block.
pub fn eigenvectors(h: &ModeHamiltonian) -> ([f64; 2], [f64; 2]) {
    let (s, c) = (0.5 * h.mixing_angle()).sin_cos();
    ([-s, c], [c, s])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub block: Mat2,
    pub p2: f64,
    pub p3: f64,
}

impl ModeState {
    pub fn new(block: Mat2, p2: f64, p3: f64) -> Result<Self, QuantumError> {
        let s = Self { block, p2, p3 };
        s.validate()?;
        Ok(s)
    }

    pub fn maximally_mixed() -> Self {
        Self { block: Mat2::IDENTITY.scale(Complex64::new(0.25, 0.0)), p2: 0.25, p3: 0.25 }
    }

    /// Pure ground state of `h`.
    pub fn ground(h: &ModeHamiltonian) -> Self {
        let (g, _) = eigenvectors(h);
        Self { block: Mat2::projector(g), p2: 0.0, p3: 0.0 }
    }

    /// Diagonal in the eigenbasis of `h` with populations
    /// `(ground, inert, inert, excited)`.
    pub fn from_eigen_populations(h: &ModeHamiltonian, pops: [f64; 4]) -> Self {
        let (g, e) = eigenvectors(h);
        let block = Mat2::projector(g)
            .scale(Complex64::new(pops[0], 0.0))
            .add(&Mat2::projector(e).scale(Complex64::new(pops[3], 0.0)));
        Self { block, p2: pops[1], p3: pops[2] }
    }

    pub fn trace(&self) -> f64 {
        self.block.trace().re + self.p2 + self.p3
    }

    pub fn purity(&self) -> f64 {
        self.block.mul(&self.block).trace().re + self.p2 * self.p2 + self.p3 * self.p3
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        if !self.block.is_finite() || !self.p2.is_finite() || !self.p3.is_finite() {
            return Err(QuantumError::InvalidState("non-finite entries"));
        }
        if (self.trace() - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::InvalidState("trace differs from one"));
        }
        let b = &self.block.0;
        if b[0][0].im.abs() > STATE_TOL
            || b[1][1].im.abs() > STATE_TOL
            || (b[0][1] - b[1][0].conj()).norm() > STATE_TOL
        {
            return Err(QuantumError::InvalidState("block not Hermitian"));
        }
        if self.block.hermitian_eigenvalues()[0] < -STATE_TOL {
            return Err(QuantumError::InvalidState("block not positive semidefinite"));
        }
        let in_unit = |p: f64| (-STATE_TOL..=1.0 + STATE_TOL).contains(&p);
        if !in_unit(self.p2) || !in_unit(self.p3) {
            return Err(QuantumError::InvalidState("inert population outside [0, 1]"));
        }
        Ok(())
    }

    /// Full 4x4 density matrix in the Fock basis.
    pub fn to_dense(&self) -> [[Complex64; 4]; 4] {
        let mut m = [[ZERO; 4]; 4];
        let b = &self.block.0;
        m[0][0] = b[0][0];
        m[0][3] = b[0][1];
        m[3][0] = b[1][0];
        m[3][3] = b[1][1];
        m[1][1] = Complex64::new(self.p2, 0.0);
        m[2][2] = Complex64::new(self.p3, 0.0);
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Product of exact 2x2 exponentials of the midpoint Hamiltonian.
    #[default]
    ExactMidpointExponential,
    /// Classical RK4 on the von Neumann equation; used for cross-checks.
    Rk4Crosscheck,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegratorOptions {
    pub dt_max: f64,
    pub substeps_min: usize,
    pub scheme: Scheme,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { dt_max: 1e-3, substeps_min: 100, scheme: Scheme::ExactMidpointExponential }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<(), QuantumError> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(QuantumError::InvalidOptions("dt_max must be positive and finite"));
        }
        if self.substeps_min < 1 {
            return Err(QuantumError::InvalidOptions("substeps_min must be at least 1"));
        }
        Ok(())
    }

    pub fn substeps(&self, duration: f64) -> usize {
        let n = (duration / self.dt_max).ceil();
        (n as usize).max(self.substeps_min)
    }
}

/// `Z = 2 + 2 cosh(eps / T)`. Saturates to infinity once `eps / T` exceeds the
/// exponent range.
pub fn partition_function(eps: f64, t: f64) -> Result<f64, QuantumError> {
    check_temperature(t)?;
    let x = (eps / t).abs();
    if x > 700.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 + 2.0 * x.cosh())
}

fn check_temperature(t: f64) -> Result<(), QuantumError> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(QuantumError::InvalidTemperature(t))
    }
}

/// Gibbs populations `(ground, inert, inert, excited)` for gap `eps` at `T`.
pub fn thermal_populations(eps: f64, t: f64) -> Result<[f64; 4], QuantumError> {
    check_temperature(t)?;
    // shifted by the ground-state weight so nothing overflows
    let w = (-(eps.abs()) / t).exp();
    let ground = 1.0 / (1.0 + w).powi(2);
    let inert = w * ground;
    let excited = w * inert;
    Ok([ground, inert, inert, excited])
}

pub fn thermal_mode_state(hk: &ModeHamiltonian, t: f64) -> Result<ModeState, QuantumError> {
    let pops = thermal_populations(hk.gap(), t)?;
    Ok(ModeState::from_eigen_populations(hk, pops))
}

/// `Tr(H rho)`; the inert levels carry zero energy.
pub fn mode_energy_expectation(s: &ModeState, hk: &ModeHamiltonian) -> f64 {
    let b = &s.block.0;
    hk.diag * (b[0][0].re - b[1][1].re) + 2.0 * hk.offdiag * b[0][1].re
}

/// Populations of `s` in the eigenbasis of `h`, plus the ground/excited coherence.
pub fn eigen_populations(s: &ModeState, h: &ModeHamiltonian) -> ([f64; 4], Complex64) {
    let (g, e) = eigenvectors(h);
    let b = &s.block.0;
    let quad = |u: [f64; 2], v: [f64; 2]| {
        b[0][0] * u[0] * v[0] + b[0][1] * u[0] * v[1] + b[1][0] * u[1] * v[0] + b[1][1] * u[1] * v[1]
    };
    let pg = quad(g, g).re;
    let pe = quad(e, e).re;
    ([pg, s.p2, s.p3, pe], quad(g, e))
}

/// Moves the eigen-populations of `s` from the eigenbasis of `start` onto the
/// eigenbasis of `end`, preserving the energy ordering.
pub fn adiabatic_map(
    s: &ModeState,
    start: &ModeHamiltonian,
    end: &ModeHamiltonian,
) -> Result<ModeState, QuantumError> {
    s.validate()?;
    let (pops, coh) = eigen_populations(s, start);
    if coh.norm() > COHERENCE_TOL {
        return Err(QuantumError::NotDiagonal(coh.norm()));
    }
    Ok(ModeState::from_eigen_populations(end, pops))
}

/// Excess population promoted to the top level relative to `s_adia`.
pub fn mode_excess_excitation(
    s_final: &ModeState,
    hk_final: &ModeHamiltonian,
    s_adia: &ModeState,
) -> Result<f64, QuantumError> {
    s_final.validate()?;
    s_adia.validate()?;
    let gap = hk_final.gap();
    if gap < MIN_GAP {
        return Err(QuantumError::GapTooSmall(gap));
    }
    let de = mode_energy_expectation(s_final, hk_final) - mode_energy_expectation(s_adia, hk_final);
    Ok(de / (2.0 * gap))
}

/// Propagator of the active block over a full ramp (exact midpoint scheme),
/// or RK4 on `dU/dt = -i H U` when the options ask for it.
pub fn ramp_propagator<F>(ramp: &RampProtocol, hk_of_field: F, opts: &IntegratorOptions) -> Result<Mat2, QuantumError>
where
    F: Fn(f64) -> ModeHamiltonian,
{
    opts.validate()?;
    let n = opts.substeps(ramp.duration);
    let dt = ramp.duration / n as f64;
    let nf = n as f64;
    let mut u = Mat2::IDENTITY;
    match opts.scheme {
        Scheme::ExactMidpointExponential => {
            for i in 0..n {
                let h = hk_of_field(ramp.at_fraction((i as f64 + 0.5) / nf));
                u = step_unitary(&h, dt).mul(&u);
            }
        }
        Scheme::Rk4Crosscheck => {
            let gen = |s: f64, u: &Mat2| Mat2::hamiltonian(&hk_of_field(ramp.at_fraction(s))).mul(u).scale(-I);
            for i in 0..n {
                let s0 = i as f64 / nf;
                let sh = (i as f64 + 0.5) / nf;
                let s1 = (i as f64 + 1.0) / nf;
                let half = Complex64::new(0.5 * dt, 0.0);
                let k1 = gen(s0, &u);
                let k2 = gen(sh, &u.add(&k1.scale(half)));
                let k3 = gen(sh, &u.add(&k2.scale(half)));
                let k4 = gen(s1, &u.add(&k3.scale(Complex64::new(dt, 0.0))));
                let incr = k1.add(&k2.scale(Complex64::new(2.0, 0.0)))
                    .add(&k3.scale(Complex64::new(2.0, 0.0)))
                    .add(&k4)
                    .scale(Complex64::new(dt / 6.0, 0.0));
                u = u.add(&incr);
            }
        }
    }
    if !u.is_finite() {
        return Err(QuantumError::NonFinite);
    }
    Ok(u)
}

/// Evolves `s` through `ramp` under `d rho/dt = -i [H(t), rho]`.
///
/// The inert populations are copied through untouched. The exact scheme
/// builds the block propagator as an ordered product of closed-form 2x2
/// exponentials; the RK4 scheme integrates the density matrix directly.
pub fn evolve_mode<F>(
    s: &ModeState,
    ramp: &RampProtocol,
    hk_of_field: F,
    opts: &IntegratorOptions,
) -> Result<ModeState, QuantumError>
where
    F: Fn(f64) -> ModeHamiltonian,
{
    s.validate()?;
    opts.validate()?;
    let block = match opts.scheme {
        Scheme::ExactMidpointExponential => ramp_propagator(ramp, &hk_of_field, opts)?.conjugate(&s.block),
        Scheme::Rk4Crosscheck => rk4_density(&s.block, ramp, &hk_of_field, opts)?,
    };
    Ok(ModeState { block, p2: s.p2, p3: s.p3 })
}

fn rk4_density<F>(rho0: &Mat2, ramp: &RampProtocol, hk_of_field: &F, opts: &IntegratorOptions) -> Result<Mat2, QuantumError>
where
    F: Fn(f64) -> ModeHamiltonian,
{
    let n = opts.substeps(ramp.duration);
    let dt = ramp.duration / n as f64;
    let nf = n as f64;
    let rhs = |s: f64, rho: &Mat2| Mat2::hamiltonian(&hk_of_field(ramp.at_fraction(s))).commutator(rho).scale(-I);
    let mut rho = *rho0;
    for i in 0..n {
        let s0 = i as f64 / nf;
        let sh = (i as f64 + 0.5) / nf;
        let s1 = (i as f64 + 1.0) / nf;
        let half = Complex64::new(0.5 * dt, 0.0);
        let k1 = rhs(s0, &rho);
        let k2 = rhs(sh, &rho.add(&k1.scale(half)));
        let k3 = rhs(sh, &rho.add(&k2.scale(half)));
        let k4 = rhs(s1, &rho.add(&k3.scale(Complex64::new(dt, 0.0))));
        let two = Complex64::new(2.0, 0.0);
        rho = rho.add(
            &k1.add(&k2.scale(two)).add(&k3.scale(two)).add(&k4).scale(Complex64::new(dt / 6.0, 0.0)),
        );
    }
    if !rho.is_finite() {
        return Err(QuantumError::NonFinite);
    }
    Ok(rho)
}

/// Dense 4x4 reference path used to check the block representation.
#[cfg(any(test, feature = "dense-reference"))]
pub mod dense {
    use super::*;

    pub type Dense = [[Complex64; 4]; 4];

    pub fn mul(a: &Dense, b: &Dense) -> Dense {
        let mut r = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    r[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        r
    }

    pub fn adjoint(a: &Dense) -> Dense {
        let mut r = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] = a[j][i].conj();
            }
        }
        r
    }

    pub fn energy(rho: &Dense, h: &ModeHamiltonian) -> f64 {
        let hd = h.to_dense();
        let mut tr = ZERO;
        for i in 0..4 {
            for k in 0..4 {
                tr += rho[k][i] * hd[i][k];
            }
        }
        tr.re
    }

    /// Exact 4x4 step: the inert rows of `H` exponentiate to the identity.
    pub fn step(h: &ModeHamiltonian, dt: f64) -> Dense {
        let eps = h.gap();
        let mut u = [[ZERO; 4]; 4];
        u[1][1] = ONE;
        u[2][2] = ONE;
        let (s, c) = (eps * dt).sin_cos();
        let f = if eps == 0.0 { dt } else { s / eps };
        let hd = h.to_dense();
        for &i in &[0usize, 3] {
            for &j in &[0usize, 3] {
                let id = if i == j { c } else { 0.0 };
                u[i][j] = Complex64::new(id, -f * hd[i][j]);
            }
        }
        u
    }

    pub fn evolve<F>(rho: &Dense, ramp: &RampProtocol, hk_of_field: F, opts: &IntegratorOptions) -> Dense
    where
        F: Fn(f64) -> ModeHamiltonian,
    {
        let n = opts.substeps(ramp.duration);
        let dt = ramp.duration / n as f64;
        let mut r = *rho;
        for i in 0..n {
            let u = step(&hk_of_field(ramp.at_fraction((i as f64 + 0.5) / n as f64)), dt);
            r = mul(&mul(&u, &r), &adjoint(&u));
        }
        r
    }
}
