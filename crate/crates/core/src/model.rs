//! Free-fermion working media.
//!
//! A translation-invariant free-fermion chain decouples into independent
//! momentum modes. Each mode `k > 0` lives in a four-dimensional Fock space
//! spanned by `|0,0>, |k,0>, |0,-k>, |k,-k>`; only the first and last states
//! are coupled, so the per-mode Hamiltonian is fixed by two real numbers.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("chain length must be even and at least 2, got {0}")]
    InvalidLength(usize),
    #[error("ramp duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("time {t} outside ramp window [{start}, {end}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },
    #[error("critical exponents must be strictly positive")]
    InvalidExponents,
}

/// Active block of the four-level mode Hamiltonian.
///
/// Materialised as a 4x4 matrix it reads
///
/// ```text
/// [ diag     0 0  offdiag ]
/// [ 0        0 0  0       ]
/// [ 0        0 0  0       ]
/// [ offdiag  0 0 -diag    ]
/// ```
///
/// with eigenvalues `{-gap, 0, 0, +gap}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeHamiltonian {
    pub diag: f64,
    pub offdiag: f64,
}

impl ModeHamiltonian {
    pub fn new(diag: f64, offdiag: f64) -> Self {
        Self { diag, offdiag }
    }

    /// Single-particle energy `eps_k`; the many-body gap is `2 * eps_k`.
    pub fn gap(&self) -> f64 {
        self.diag.hypot(self.offdiag)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = self.gap();
        [-e, 0.0, 0.0, e]
    }

    /// Mixing angle `theta` with `H = eps (cos theta sz + sin theta sx)` on the active block.
    pub fn mixing_angle(&self) -> f64 {
        self.offdiag.atan2(self.diag)
    }

    /// Full 4x4 matrix in the Fock basis, row-major.
    pub fn to_dense(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        m[0][0] = self.diag;
        m[3][3] = -self.diag;
        m[0][3] = self.offdiag;
        m[3][0] = self.offdiag;
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalExponents {
    /// Correlation-length exponent.
    pub nu: f64,
    /// Dynamical exponent.
    pub z: f64,
    /// Spatial dimension.
    pub d: u32,
}

impl CriticalExponents {
    pub fn new(nu: f64, z: f64, d: u32) -> Result<Self, ModelError> {
        if !(nu > 0.0 && z > 0.0 && d > 0 && nu.is_finite() && z.is_finite()) {
            return Err(ModelError::InvalidExponents);
        }
        Ok(Self { nu, z, d })
    }

    /// Exponent of the defect density after a ground-state ramp of duration tau.
    pub fn kz_exponent_zero_t(&self) -> f64 {
        -self.nu * f64::from(self.d) / (self.nu * self.z + 1.0)
    }

    /// Exponent of the thermal excess (carries an extra `1/T` prefactor).
    pub fn kz_exponent_thermal(&self) -> f64 {
        -(f64::from(self.d) + self.z) * self.nu / (self.nu * self.z + 1.0)
    }

    /// Exponent relating `tau_min` to `R/T`.
    pub fn tau_min_exponent(&self) -> f64 {
        -1.0 / self.kz_exponent_thermal()
    }
}

pub fn kz_exponent_zero_t(c: &CriticalExponents) -> f64 {
    c.kz_exponent_zero_t()
}

pub fn kz_exponent_thermal(c: &CriticalExponents) -> f64 {
    c.kz_exponent_thermal()
}

/// Linear drive of the control field over `[t_offset, t_offset + duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProtocol {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub duration: f64,
    pub t_offset: f64,
}

impl RampProtocol {
    pub fn new(alpha_start: f64, alpha_end: f64, duration: f64) -> Result<Self, ModelError> {
        Self::with_offset(alpha_start, alpha_end, duration, 0.0)
    }

    pub fn with_offset(
        alpha_start: f64,
        alpha_end: f64,
        duration: f64,
        t_offset: f64,
    ) -> Result<Self, ModelError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(ModelError::InvalidDuration(duration));
        }
        Ok(Self { alpha_start, alpha_end, duration, t_offset })
    }

    pub fn end_time(&self) -> f64 {
        self.t_offset + self.duration
    }

    pub fn value(&self, t: f64) -> Result<f64, ModelError> {
        if !(t >= self.t_offset && t <= self.end_time()) {
            return Err(ModelError::OutsideWindow { t, start: self.t_offset, end: self.end_time() });
        }
        Ok(self.at_fraction((t - self.t_offset) / self.duration))
    }

    /// Field at fraction `s` in `[0, 1]` of the ramp; no window check.
    pub fn at_fraction(&self, s: f64) -> f64 {
        self.alpha_start + (self.alpha_end - self.alpha_start) * s
    }

    /// Same path traversed backwards over the same window.
    pub fn reversed(&self) -> Self {
        Self { alpha_start: self.alpha_end, alpha_end: self.alpha_start, ..*self }
    }
}

pub fn ramp_value(p: &RampProtocol, t: f64) -> Result<f64, ModelError> {
    p.value(t)
}

/// Antiperiodic momenta `k_j = (2j + 1) pi / L`, `j = 0 .. L/2`.
pub fn momentum_grid(l: usize) -> Result<Vec<f64>, ModelError> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(ModelError::InvalidLength(l));
    }
    let lf = l as f64;
    Ok((0..l / 2).map(|j| (2 * j + 1) as f64 * PI / lf).collect())
}

/// Behaviour shared by free-fermion chains whose modes take the form
/// `(alpha + m_k) sz + n_k sx`.
pub trait WorkingMedium: Sync {
    /// Mode-dependent mass term `m_k`.
    fn mass(&self, k: f64) -> f64;
    /// Mode-dependent mixing term `n_k`.
    fn mixing(&self, k: f64) -> f64;
    /// Maps the physical control field onto the `alpha` entering the mode Hamiltonian.
    fn alpha_of_field(&self, field: f64) -> f64;
    fn critical_exponents(&self) -> CriticalExponents;
    fn critical_field(&self) -> f64;

    fn momentum_grid(&self, l: usize) -> Result<Vec<f64>, ModelError> {
        momentum_grid(l)
    }

    fn mode_hamiltonian(&self, k: f64, field: f64) -> ModeHamiltonian {
        ModeHamiltonian::new(self.alpha_of_field(field) + self.mass(k), self.mixing(k))
    }
}

/// Transverse-field Ising chain with `J = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransverseIsing;

impl WorkingMedium for TransverseIsing {
    fn mass(&self, k: f64) -> f64 {
        2.0 * k.cos()
    }

    fn mixing(&self, k: f64) -> f64 {
        2.0 * k.sin()
    }

    fn alpha_of_field(&self, field: f64) -> f64 {
        -2.0 * field
    }

    fn critical_exponents(&self) -> CriticalExponents {
        CriticalExponents { nu: 1.0, z: 1.0, d: 1 }
    }

    fn critical_field(&self) -> f64 {
        1.0
    }

    fn mode_hamiltonian(&self, k: f64, field: f64) -> ModeHamiltonian {
        tfim_mode_hamiltonian(k, field)
    }
}

pub fn tfim_mode_hamiltonian(k: f64, h: f64) -> ModeHamiltonian {
    ModeHamiltonian::new(-2.0 * (h - k.cos()), 2.0 * k.sin())
}

/// Closed form `2 sqrt((h - cos k)^2 + sin^2 k)`.
pub fn tfim_gap(k: f64, h: f64) -> f64 {
    2.0 * ((h - k.cos()).powi(2) + k.sin().powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_small_lengths() {
        assert_eq!(momentum_grid(2).unwrap(), vec![PI / 2.0]);
        let g = momentum_grid(4).unwrap();
        assert!((g[0] - PI / 4.0).abs() < 1e-15);
        assert!((g[1] - 3.0 * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn grid_hundred_sites() {
        let g = momentum_grid(100).unwrap();
        assert_eq!(g.len(), 50);
        assert!((g[0] - PI / 100.0).abs() < 1e-15);
        assert!((g[49] - 99.0 * PI / 100.0).abs() < 1e-14);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.iter().all(|&k| k > 0.0 && k < PI));
    }

    #[test]
    fn grid_rejects_bad_lengths() {
        for l in [0, 1, 3, 101] {
            assert_eq!(momentum_grid(l), Err(ModelError::InvalidLength(l)));
        }
    }

    #[test]
    fn tfim_entries() {
        let h = tfim_mode_hamiltonian(PI / 2.0, 0.0);
        assert!(h.diag.abs() < 1e-15);
        assert!((h.offdiag - 2.0).abs() < 1e-15);
        assert!((h.gap() - 2.0).abs() < 1e-15);

        let h = tfim_mode_hamiltonian(PI / 2.0, 10.0);
        assert!((h.gap() - 2.0 * 101f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gap_closes_at_critical_point() {
        let mut last = f64::INFINITY;
        for k in [1e-2, 1e-4, 1e-6] {
            let e = tfim_mode_hamiltonian(k, 1.0).gap();
            assert!(e < last);
            last = e;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn min_gap_shrinks_with_length() {
        let min_gap = |l| {
            momentum_grid(l)
                .unwrap()
                .into_iter()
                .map(|k| tfim_gap(k, 1.0))
                .fold(f64::INFINITY, f64::min)
        };
        let gaps: Vec<f64> = [10, 100, 1000].into_iter().map(min_gap).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        // smallest mode carries the minimum
        let g = momentum_grid(100).unwrap();
        assert_eq!(min_gap(100), tfim_gap(g[0], 1.0));
    }

    #[test]
    fn dense_matrix_layout() {
        let m = ModeHamiltonian::new(1.5, -0.5).to_dense();
        for i in 0..4 {
            for j in 0..4 {
                let want = match (i, j) {
                    (0, 0) => 1.5,
                    (3, 3) => -1.5,
                    (0, 3) | (3, 0) => -0.5,
                    _ => 0.0,
                };
                assert_eq!(m[i][j], want);
            }
        }
    }

    #[test]
    fn generic_form_matches_tfim() {
        let medium = TransverseIsing;
        let generic = ModeHamiltonian::new(
            medium.alpha_of_field(0.3) + medium.mass(0.7),
            medium.mixing(0.7),
        );
        let direct = tfim_mode_hamiltonian(0.7, 0.3);
        assert!((generic.diag - direct.diag).abs() < 1e-15);
        assert_eq!(generic.offdiag, direct.offdiag);
    }

    #[test]
    fn ramp_values() {
        let r = RampProtocol::with_offset(10.0, 1.0, 100.0, 7.0).unwrap();
        assert_eq!(r.value(7.0).unwrap(), 10.0);
        assert_eq!(r.value(107.0).unwrap(), 1.0);
        assert_eq!(r.value(57.0).unwrap(), 5.5);
        assert!(r.value(6.9).is_err());
        assert!(r.value(107.1).is_err());
        assert!(RampProtocol::new(0.0, 1.0, 0.0).is_err());
        assert!(RampProtocol::new(0.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn kz_exponents() {
        let ising = TransverseIsing.critical_exponents();
        assert_eq!(kz_exponent_zero_t(&ising), -0.5);
        assert_eq!(kz_exponent_thermal(&ising), -1.0);
        assert_eq!(ising.tau_min_exponent(), 1.0);

        let c = CriticalExponents::new(1.0, 2.0, 2).unwrap();
        assert!((c.kz_exponent_zero_t() + 2.0 / 3.0).abs() < 1e-15);
        let c = CriticalExponents::new(0.63, 1.0, 3).unwrap();
        assert!((c.kz_exponent_zero_t() + 1.890 / 1.63).abs() < 1e-12);
        assert!((c.kz_exponent_zero_t() + 1.160).abs() < 1e-3);
        let c = CriticalExponents::new(1.0, 1.0, 2).unwrap();
        assert_eq!(c.kz_exponent_thermal(), -1.5);
        let c = CriticalExponents::new(1.0, 2.0, 1).unwrap();
        assert_eq!(c.kz_exponent_thermal(), -1.0);
        assert!(CriticalExponents::new(0.0, 1.0, 1).is_err());
        assert!(CriticalExponents::new(1.0, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn gap_matches_closed_form(l in 1usize..200, h in -20.0f64..20.0) {
            for k in momentum_grid(2 * l).unwrap() {
                let e = tfim_mode_hamiltonian(k, h).gap();
                prop_assert!((e - tfim_gap(k, h)).abs() <= 1e-13 * (1.0 + e));
            }
        }

        #[test]
        fn ramp_is_reversible(a in -20.0f64..20.0, b in -20.0f64..20.0,
                              tau in 1e-3f64..1e4, s in 0.0f64..1.0) {
            let fwd = RampProtocol::new(a, b, tau).unwrap();
            let bwd = fwd.reversed();
            let t = s * tau;
            let x = fwd.value(t).unwrap();
            let y = bwd.value(tau - t).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }

        #[test]
        fn thermal_minus_zero_t_exponent(nu in 0.05f64..5.0, z in 0.05f64..5.0, d in 1u32..5) {
            let c = CriticalExponents::new(nu, z, d).unwrap();
            let diff = c.kz_exponent_thermal() - c.kz_exponent_zero_t();
            prop_assert!((diff + nu * z / (nu * z + 1.0)).abs() < 1e-12);
        }
    }
}
