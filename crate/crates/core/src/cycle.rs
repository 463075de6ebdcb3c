//! The four-stroke Otto cycle.
//!
//! A: field `h1`, after the unitary ramp from D.
//! B: Gibbs state at `(h1, T_H)`.
//! C: B ramped from `h1` to `h2` over `tau1`.
//! D: Gibbs state at `(h2, T_C)`.
//!
//! Thermalisation strokes replace the state by the exact Gibbs state, so
//! the cycle is periodic from the first pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, RampProtocol, TransverseIsing, WorkingMedium};
use crate::quantum::{
    adiabatic_map, mode_energy_expectation, ramp_propagator, thermal_mode_state, thermal_populations,
    IntegratorOptions, Mat2, ModeState, QuantumError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CycleError {
    #[error("invalid cycle configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

impl CycleError {
    /// True for contradictions in the requested physics (as opposed to
    /// numerical failures during integration).
    pub fn is_config(&self) -> bool {
        !matches!(self, CycleError::Quantum(QuantumError::NonFinite))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PowerDenominator {
    #[default]
    Tau2Only,
    Tau1PlusTau2,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    /// Chain length (even).
    pub l: usize,
    /// Field during the hot stroke.
    pub h1: f64,
    /// Field during the cold stroke.
    pub h2: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    /// Duration of the B -> C ramp.
    pub tau1: f64,
    /// Duration of the D -> A ramp.
    pub tau2: f64,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    #[serde(default)]
    pub power_denominator: PowerDenominator,
}

impl CycleConfig {
    /// `L = 100, h1 = 10, h2 = 1, T_H = 1000, tau1 = 10` with the given cold side.
    pub fn reference(t_cold: f64, tau2: f64) -> Self {
        Self {
            l: 100,
            h1: 10.0,
            h2: 1.0,
            t_hot: 1000.0,
            t_cold,
            tau1: 10.0,
            tau2,
            integrator: IntegratorOptions::default(),
            power_denominator: PowerDenominator::Tau2Only,
        }
    }

    pub fn validate(&self) -> Result<(), CycleError> {
        let bad = |m: &str| Err(CycleError::Config(m.to_string()));
        if self.l < 2 || !self.l.is_multiple_of(2) {
            return bad("L must be even and at least 2");
        }
        if !(self.h1.is_finite() && self.h2.is_finite()) {
            return bad("fields must be finite");
        }
        if !(self.t_cold > 0.0 && self.t_cold.is_finite()) {
            return bad("T_C must be positive and finite");
        }
        if !(self.t_hot.is_finite() && self.t_hot >= self.t_cold) {
            return bad("T_H must be finite and not below T_C");
        }
        for (name, tau) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(CycleError::Config(format!("{name} must be positive and finite")));
            }
        }
        if let PowerDenominator::Explicit(t) = self.power_denominator {
            if !(t > 0.0 && t.is_finite()) {
                return bad("explicit cycle time must be positive and finite");
            }
        }
        self.integrator.validate()?;
        Ok(())
    }

    pub fn hot_ramp(&self) -> Result<RampProtocol, ModelError> {
        RampProtocol::new(self.h1, self.h2, self.tau1)
    }

    pub fn cold_ramp(&self) -> Result<RampProtocol, ModelError> {
        RampProtocol::with_offset(self.h2, self.h1, self.tau2, self.tau1)
    }

    pub fn cycle_time(&self) -> f64 {
        match self.power_denominator {
            PowerDenominator::Tau2Only => self.tau2,
            PowerDenominator::Tau1PlusTau2 => self.tau1 + self.tau2,
            PowerDenominator::Explicit(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Engine,
    Refrigerator,
    Heater,
    Other,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Engine => "engine",
            Regime::Refrigerator => "refrigerator",
            Regime::Heater => "heater",
            Regime::Other => "other",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Q_in` is heat taken from the hot bath, `Q_out` heat taken from the cold
/// bath, and `W = -(Q_in + Q_out)` the work done on the medium.
pub fn classify_regime(q_in: f64, q_out: f64, w: f64) -> Regime {
    if q_in > 0.0 && q_out < 0.0 && w < 0.0 {
        Regime::Engine
    } else if q_in < 0.0 && q_out > 0.0 && w > 0.0 {
        Regime::Refrigerator
    } else if q_in < 0.0 && q_out < 0.0 && w > 0.0 {
        Regime::Heater
    } else {
        Regime::Other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub e_a: f64,
    pub e_b: f64,
    pub e_c: f64,
    pub e_d: f64,
    pub e_a_adia: f64,
    pub e_c_adia: f64,
    pub q_in: f64,
    pub q_out: f64,
    pub work: f64,
    pub work_adiabatic: f64,
    /// `E_A - E_A^adia`.
    pub e_a_excess: f64,
    /// `E_C - E_C^adia`; vanishes only in the limit of an infinitely hot bath.
    pub e_c_residual: f64,
    pub efficiency: Option<f64>,
    pub power: f64,
    pub regime: Regime,
}

impl CycleResult {
    /// `W - W~`, which equals `e_a_excess + e_c_residual`.
    pub fn work_deficit(&self) -> f64 {
        self.work - self.work_adiabatic
    }
}

/// `-W / Q_in` in the engine regime, and `W / tau_total`.
pub fn efficiency_and_power(r: &CycleResult, cfg: &CycleConfig) -> (Option<f64>, f64) {
    efficiency_and_power_raw(r.q_in, r.work, r.regime, cfg.cycle_time())
}

fn efficiency_and_power_raw(q_in: f64, w: f64, regime: Regime, cycle_time: f64) -> (Option<f64>, f64) {
    let eta = (regime == Regime::Engine).then(|| -w / q_in);
    (eta, w / cycle_time)
}

/// Compensated sum in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Per-mode block propagators for one ramp, in grid order.
pub fn stroke_propagators<M: WorkingMedium>(
    medium: &M,
    ks: &[f64],
    ramp: &RampProtocol,
    opts: &IntegratorOptions,
) -> Result<Vec<Mat2>, CycleError> {
    ks.par_iter()
        .map(|&k| ramp_propagator(ramp, |h| medium.mode_hamiltonian(k, h), opts).map_err(CycleError::from))
        .collect()
}

pub fn run_cycle(cfg: &CycleConfig) -> Result<CycleResult, CycleError> {
    run_cycle_in(&TransverseIsing, cfg)
}

pub fn run_cycle_in<M: WorkingMedium>(medium: &M, cfg: &CycleConfig) -> Result<CycleResult, CycleError> {
    cfg.validate()?;
    let ks = medium.momentum_grid(cfg.l)?;
    let hot = stroke_propagators(medium, &ks, &cfg.hot_ramp()?, &cfg.integrator)?;
    let cold = stroke_propagators(medium, &ks, &cfg.cold_ramp()?, &cfg.integrator)?;
    cycle_with_propagators(medium, cfg, &ks, &hot, &cold)
}

struct ModeEnergies {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    a_adia: f64,
    c_adia: f64,
}

/// Evaluates the cycle with precomputed stroke propagators. `hot` drives
/// B -> C and `cold` drives D -> A; both must follow `ks`.
pub fn cycle_with_propagators<M: WorkingMedium>(
    medium: &M,
    cfg: &CycleConfig,
    ks: &[f64],
    hot: &[Mat2],
    cold: &[Mat2],
) -> Result<CycleResult, CycleError> {
    cfg.validate()?;
    if hot.len() != ks.len() || cold.len() != ks.len() {
        return Err(CycleError::Config("propagator count does not match the momentum grid".into()));
    }
    // With equal fields both strokes are constant Hamiltonians acting on
    // their own thermal states, which they leave unchanged.
    let frozen = cfg.h1 == cfg.h2;
    let modes: Vec<ModeEnergies> = ks
        .par_iter()
        .zip(hot.par_iter().zip(cold.par_iter()))
        .map(|(&k, (u1, u2))| {
            let h1 = medium.mode_hamiltonian(k, cfg.h1);
            let h2 = medium.mode_hamiltonian(k, cfg.h2);
            let rho_b = thermal_mode_state(&h1, cfg.t_hot)?;
            let rho_d = thermal_mode_state(&h2, cfg.t_cold)?;
            let (rho_c, rho_a) = if frozen {
                (rho_b, rho_d)
            } else {
                (
                    ModeState { block: u1.conjugate(&rho_b.block), ..rho_b },
                    ModeState { block: u2.conjugate(&rho_d.block), ..rho_d },
                )
            };
            let a_adia = adiabatic_map(&rho_d, &h2, &h1)?;
            let c_adia = adiabatic_map(&rho_b, &h1, &h2)?;
            Ok(ModeEnergies {
                a: mode_energy_expectation(&rho_a, &h1),
                b: mode_energy_expectation(&rho_b, &h1),
                c: mode_energy_expectation(&rho_c, &h2),
                d: mode_energy_expectation(&rho_d, &h2),
                a_adia: mode_energy_expectation(&a_adia, &h1),
                c_adia: mode_energy_expectation(&c_adia, &h2),
            })
        })
        .collect::<Result<_, QuantumError>>()?;

    let total = |f: fn(&ModeEnergies) -> f64| kahan_sum(modes.iter().map(f));
    let e_a = total(|m| m.a);
    let e_b = total(|m| m.b);
    let e_c = total(|m| m.c);
    let e_d = total(|m| m.d);
    let e_a_adia = total(|m| m.a_adia);
    let e_c_adia = total(|m| m.c_adia);
    if ![e_a, e_b, e_c, e_d].iter().all(|e| e.is_finite()) {
        return Err(QuantumError::NonFinite.into());
    }

    let q_in = e_b - e_a;
    let q_out = e_d - e_c;
    let work = 0.0 - (q_in + q_out);
    let work_adiabatic = -(e_b - e_a_adia + e_d - e_c_adia);
    let regime = classify_regime(q_in, q_out, work);
    let (efficiency, power) = efficiency_and_power_raw(q_in, work, regime, cfg.cycle_time());
    Ok(CycleResult {
        e_a,
        e_b,
        e_c,
        e_d,
        e_a_adia,
        e_c_adia,
        q_in,
        q_out,
        work,
        work_adiabatic,
        e_a_excess: e_a - e_a_adia,
        e_c_residual: e_c - e_c_adia,
        efficiency,
        power,
        regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticWork {
    pub e_a_adia: f64,
    pub e_c_adia: f64,
    pub work_adiabatic: f64,
}

/// Work of the cycle with both ramps perfectly adiabatic, from the
/// Boltzmann weights alone.
pub fn adiabatic_work(cfg: &CycleConfig) -> Result<AdiabaticWork, CycleError> {
    adiabatic_work_in(&TransverseIsing, cfg)
}

pub fn adiabatic_work_in<M: WorkingMedium>(medium: &M, cfg: &CycleConfig) -> Result<AdiabaticWork, CycleError> {
    cfg.validate()?;
    let ks = medium.momentum_grid(cfg.l)?;
    let mut terms = Vec::with_capacity(ks.len());
    for &k in &ks {
        let e1 = medium.mode_hamiltonian(k, cfg.h1).gap();
        let e2 = medium.mode_hamiltonian(k, cfg.h2).gap();
        // (e^{-x} - e^{x}) / Z
        let hot = thermal_populations(e1, cfg.t_hot)?;
        let cold = thermal_populations(e2, cfg.t_cold)?;
        let w_hot = hot[3] - hot[0];
        let w_cold = cold[3] - cold[0];
        terms.push([e1 * w_hot, e2 * w_cold, e1 * w_cold, e2 * w_hot]);
    }
    let col = |i: usize| kahan_sum(terms.iter().map(|t| t[i]));
    let (e_b, e_d, e_a_adia, e_c_adia) = (col(0), col(1), col(2), col(3));
    Ok(AdiabaticWork { e_a_adia, e_c_adia, work_adiabatic: -(e_b - e_a_adia + e_d - e_c_adia) })
}
