//! Parameter sweeps, power-law fits, adiabaticity threshold detection and
//! the Landau-Zener x tanh estimate of the excess energy.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::{
    adiabatic_work_in, cycle_with_propagators, stroke_propagators, CycleConfig, CycleError, CycleResult,
};
use crate::model::{RampProtocol, TransverseIsing, WorkingMedium};
use crate::quantum::Mat2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("need at least 3 points inside the fit window, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive value ({x}, {y}) inside the fit window")]
    NonPositive { x: f64, y: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(
        "no crossing below {epsilon} in grid: excess {excess_lo} at tau2 = {tau_lo}, {excess_hi} at tau2 = {tau_hi}"
    )]
    NoCrossing { epsilon: f64, tau_lo: f64, excess_lo: f64, tau_hi: f64, excess_hi: f64 },
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

/// Sample points of a sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Grid {
    Explicit { values: Vec<f64> },
    Log { lo: f64, hi: f64, count: usize },
}

impl Grid {
    pub fn log(lo: f64, hi: f64, count: usize) -> Result<Self, AnalysisError> {
        let g = Grid::Log { lo, hi, count };
        g.values()?;
        Ok(g)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self, AnalysisError> {
        let g = Grid::Explicit { values };
        g.values()?;
        Ok(g)
    }

    /// Materialised grid; non-empty, strictly increasing and positive.
    pub fn values(&self) -> Result<Vec<f64>, AnalysisError> {
        let v = match self {
            Grid::Explicit { values } => values.clone(),
            Grid::Log { lo, hi, count } => log_space(*lo, *hi, *count)?,
        };
        if v.is_empty() {
            return Err(AnalysisError::Grid("empty grid".into()));
        }
        if !v.iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(AnalysisError::Grid("grid values must be positive and finite".into()));
        }
        if !v.windows(2).all(|w| w[0] < w[1]) {
            return Err(AnalysisError::Grid("grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, AnalysisError> {
    if count == 0 {
        return Err(AnalysisError::Grid("empty grid".into()));
    }
    if !(lo > 0.0 && hi.is_finite() && lo.is_finite()) {
        return Err(AnalysisError::Grid("log grid bounds must be positive and finite".into()));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    if hi <= lo {
        return Err(AnalysisError::Grid("log grid needs hi > lo".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let n = (count - 1) as f64;
    Ok((0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => (a + (b - a) * i as f64 / n).exp(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "axis")]
pub enum SweepAxis {
    Tau2 { grid: Grid },
    ColdTemperature { grid: Grid },
    Tau2AndColdTemperature { tau2: Grid, t_cold: Grid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: CycleConfig,
    pub axis: SweepAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Fully resolved configuration of this point.
    pub config: CycleConfig,
    pub result: Result<CycleResult, CycleError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `(x, W - W~)` for the successful rows, with `x` taken by `axis_value`.
    pub fn deficit_series(&self, axis_value: impl Fn(&CycleConfig) -> f64) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|res| (axis_value(&r.config), res.work_deficit())))
            .unzip()
    }
}

/// A cycle with the hot-side stroke prepared once; cold-side quantities can
/// then be evaluated for many `(tau2, T_C)` pairs.
pub struct PreparedCycle<M: WorkingMedium> {
    medium: M,
    base: CycleConfig,
    ks: Vec<f64>,
    hot: Vec<Mat2>,
}

impl<M: WorkingMedium> PreparedCycle<M> {
    pub fn new(medium: M, base: CycleConfig) -> Result<Self, CycleError> {
        base.validate()?;
        let ks = medium.momentum_grid(base.l)?;
        let hot = stroke_propagators(&medium, &ks, &base.hot_ramp()?, &base.integrator)?;
        Ok(Self { medium, base, ks, hot })
    }

    pub fn base(&self) -> &CycleConfig {
        &self.base
    }

    pub fn momenta(&self) -> &[f64] {
        &self.ks
    }

    pub fn config(&self, t_cold: f64, tau2: f64) -> CycleConfig {
        CycleConfig { t_cold, tau2, ..self.base }
    }

    pub fn cold_propagators(&self, tau2: f64) -> Result<Vec<Mat2>, CycleError> {
        let ramp = RampProtocol::with_offset(self.base.h2, self.base.h1, tau2, self.base.tau1)?;
        stroke_propagators(&self.medium, &self.ks, &ramp, &self.base.integrator)
    }

    pub fn evaluate(&self, t_cold: f64, tau2: f64, cold: &[Mat2]) -> Result<CycleResult, CycleError> {
        cycle_with_propagators(&self.medium, &self.config(t_cold, tau2), &self.ks, &self.hot, cold)
    }

    pub fn run(&self, t_cold: f64, tau2: f64) -> Result<CycleResult, CycleError> {
        let cold = self.cold_propagators(tau2)?;
        self.evaluate(t_cold, tau2, &cold)
    }

    pub fn adiabatic_work(&self, t_cold: f64) -> Result<f64, CycleError> {
        Ok(adiabatic_work_in(&self.medium, &self.config(t_cold, self.base.tau2))?.work_adiabatic)
    }
}

/// One cycle per grid point, evaluated in parallel and returned in grid
/// order. Failing points are kept as error rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, AnalysisError> {
    run_sweep_in(TransverseIsing, spec)
}

pub fn run_sweep_in<M: WorkingMedium>(medium: M, spec: &SweepSpec) -> Result<SweepTable, AnalysisError> {
    let prepared = PreparedCycle::new(medium, spec.base)?;
    let base = spec.base;
    let rows = match &spec.axis {
        SweepAxis::Tau2 { grid } => grid
            .values()?
            .into_par_iter()
            .map(|tau2| SweepRow { config: prepared.config(base.t_cold, tau2), result: prepared.run(base.t_cold, tau2) })
            .collect(),
        SweepAxis::ColdTemperature { grid } => {
            let values = grid.values()?;
            let cold = prepared.cold_propagators(base.tau2);
            values
                .into_par_iter()
                .map(|tc| SweepRow {
                    config: prepared.config(tc, base.tau2),
                    result: cold.clone().and_then(|c| prepared.evaluate(tc, base.tau2, &c)),
                })
                .collect()
        }
        SweepAxis::Tau2AndColdTemperature { tau2, t_cold } => {
            let temps = t_cold.values()?;
            let taus = tau2.values()?;
            let per_tau: Vec<Vec<SweepRow>> = taus
                .into_par_iter()
                .map(|tau| {
                    let cold = prepared.cold_propagators(tau);
                    temps
                        .iter()
                        .map(|&tc| SweepRow {
                            config: prepared.config(tc, tau),
                            result: cold.clone().and_then(|c| prepared.evaluate(tc, tau, &c)),
                        })
                        .collect()
                })
                .collect();
            per_tau.into_iter().flatten().collect()
        }
    };
    Ok(SweepTable { spec: spec.clone(), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    /// Natural log of the prefactor.
    pub intercept: f64,
    pub r_squared: f64,
    /// Range of `x` actually used.
    pub window: (f64, f64),
    pub points: usize,
}

impl PowerLawFit {
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Upper decade of the data range.
pub fn default_window(xs: &[f64]) -> Option<(f64, f64)> {
    let hi = xs.iter().copied().fold(f64::NAN, f64::max);
    hi.is_finite().then_some((hi / 10.0, hi))
}

/// Least squares of `ln y` against `ln x` over the points with `x` inside
/// `window` (inclusive).
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: Option<(f64, f64)>) -> Result<PowerLawFit, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::Argument("xs and ys differ in length".into()));
    }
    let inside = |x: f64| window.is_none_or(|(lo, hi)| x >= lo && x <= hi);
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut used = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if !inside(x) {
            continue;
        }
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(AnalysisError::NonPositive { x, y });
        }
        lx.push(x.ln());
        ly.push(y.ln());
        used.push(x);
    }
    let n = lx.len();
    if n < 3 {
        return Err(AnalysisError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Argument("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    let window = (used.iter().copied().fold(f64::INFINITY, f64::min), used.iter().copied().fold(0.0, f64::max));
    Ok(PowerLawFit { slope, intercept, r_squared, window, points: n })
}

/// `exp(-2 pi tau2 sin^2 k / |h1 - h2|)`, clamped to `[0, 1]`.
pub fn lz_probability(k: f64, tau2: f64, h1: f64, h2: f64) -> Result<f64, AnalysisError> {
    if h1 == h2 || !(h1 - h2).is_finite() {
        return Err(AnalysisError::Argument("lz_probability needs h1 != h2".into()));
    }
    if !(tau2 >= 0.0) {
        return Err(AnalysisError::Argument("tau2 must be non-negative".into()));
    }
    let p = (-2.0 * PI * tau2 * k.sin().powi(2) / (h1 - h2).abs()).exp();
    Ok(p.clamp(0.0, 1.0))
}

fn analytic_integrand<M: WorkingMedium>(medium: &M, cfg: &CycleConfig, k: f64) -> f64 {
    let e1 = medium.mode_hamiltonian(k, cfg.h1).gap();
    let e2 = medium.mode_hamiltonian(k, cfg.h2).gap();
    let p = (-2.0 * PI * cfg.tau2 * k.sin().powi(2) / (cfg.h1 - cfg.h2).abs()).exp();
    2.0 * e1 * p * (e2 / (2.0 * cfg.t_cold)).tanh()
}

/// `sum_k 2 eps_k(h1) p_k tanh(eps_k(h2) / 2 T_C)` over the momentum grid.
pub fn analytic_excess_energy(cfg: &CycleConfig) -> Result<f64, AnalysisError> {
    analytic_excess_energy_in(&TransverseIsing, cfg)
}

pub fn analytic_excess_energy_in<M: WorkingMedium>(medium: &M, cfg: &CycleConfig) -> Result<f64, AnalysisError> {
    check_analytic(cfg)?;
    let ks = medium.momentum_grid(cfg.l).map_err(CycleError::from)?;
    Ok(crate::cycle::kahan_sum(ks.iter().map(|&k| analytic_integrand(medium, cfg, k))))
}

/// Continuum version `(L / 2 pi) * int_0^pi dk (...)` by adaptive Simpson.
pub fn analytic_excess_energy_continuum(cfg: &CycleConfig) -> Result<f64, AnalysisError> {
    check_analytic(cfg)?;
    let medium = TransverseIsing;
    let f = |k: f64| analytic_integrand(&medium, cfg, k);
    let integral = adaptive_simpson(&f, 0.0, PI, 1e-8, 50);
    Ok(cfg.l as f64 / (2.0 * PI) * integral)
}

fn check_analytic(cfg: &CycleConfig) -> Result<(), AnalysisError> {
    cfg.validate()?;
    if cfg.h1 == cfg.h2 {
        return Err(AnalysisError::Argument("analytic excess needs h1 != h2".into()));
    }
    Ok(())
}

/// Adaptive Simpson quadrature with a relative tolerance on the total.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // scale the absolute tolerance with a coarse estimate of the integral
    let coarse = adaptive_rec(f, a, b, fa, fm, fb, whole, 1e-3 * whole.abs().max(f64::MIN_POSITIVE), 12);
    let tol = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    adaptive_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Single global factor `c` minimising `sum (ln(c * model) - ln(data))^2`.
pub fn fit_prefactor(model: &[f64], data: &[f64]) -> Result<f64, AnalysisError> {
    if model.len() != data.len() || model.is_empty() {
        return Err(AnalysisError::Argument("prefactor fit needs matching non-empty series".into()));
    }
    let mut acc = 0.0;
    for (&m, &d) in model.iter().zip(data) {
        if !(m > 0.0 && d > 0.0) {
            return Err(AnalysisError::NonPositive { x: m, y: d });
        }
        acc += (d / m).ln();
    }
    Ok((acc / model.len() as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    None,
    /// Already below threshold at the first grid point.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauMinResult {
    pub t_cold: f64,
    /// Refined threshold time.
    pub tau_min: f64,
    /// First grid point below threshold.
    pub tau_min_grid: f64,
    pub epsilon: f64,
    /// Relative width of the final bracket.
    pub resolution: f64,
    /// `W - W~` at `tau_min`.
    pub deficit_at_tau_min: f64,
    pub censoring: Censoring,
}

/// Relative bracket width at which refinement stops.
pub const TAU_MIN_RESOLUTION: f64 = 1e-2;

/// Smallest `tau2` on `grid` with `deficit(tau2) < epsilon`, refined by
/// geometric bisection against the previous grid point.
pub fn find_tau_min_by<F>(deficit: F, t_cold: f64, epsilon: f64, grid: &[f64]) -> Result<TauMinResult, AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError>,
{
    let values: Vec<Option<f64>> = grid.iter().map(|_| None).collect();
    find_tau_min_cached(deficit, t_cold, epsilon, grid, values)
}

fn find_tau_min_cached<F>(
    deficit: F,
    t_cold: f64,
    epsilon: f64,
    grid: &[f64],
    mut known: Vec<Option<f64>>,
) -> Result<TauMinResult, AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError>,
{
    if !(epsilon > 0.0) {
        return Err(AnalysisError::Argument("epsilon must be positive".into()));
    }
    Grid::explicit(grid.to_vec())?;
    let mut at = |i: usize| -> Result<f64, AnalysisError> {
        if let Some(v) = known[i] {
            return Ok(v);
        }
        let v = deficit(grid[i])?;
        known[i] = Some(v);
        Ok(v)
    };
    let mut hit = None;
    for i in 0..grid.len() {
        if at(i)? < epsilon {
            hit = Some(i);
            break;
        }
    }
    let Some(i) = hit else {
        let last = grid.len() - 1;
        return Err(AnalysisError::NoCrossing {
            epsilon,
            tau_lo: grid[0],
            excess_lo: at(0)?,
            tau_hi: grid[last],
            excess_hi: at(last)?,
        });
    };
    if i == 0 {
        return Ok(TauMinResult {
            t_cold,
            tau_min: grid[0],
            tau_min_grid: grid[0],
            epsilon,
            resolution: 0.0,
            deficit_at_tau_min: at(0)?,
            censoring: Censoring::Left,
        });
    }
    let (mut lo, mut hi) = (grid[i - 1], grid[i]);
    let mut at_hi = at(i)?;
    while (hi - lo) / hi > TAU_MIN_RESOLUTION {
        let mid = (lo * hi).sqrt();
        let v = deficit(mid)?;
        if v < epsilon {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(TauMinResult {
        t_cold,
        tau_min: hi,
        tau_min_grid: grid[i],
        epsilon,
        resolution: (hi - lo) / hi,
        deficit_at_tau_min: at_hi,
        censoring: Censoring::None,
    })
}

/// Threshold search on the simulated cycle at one cold-bath temperature.
pub fn find_tau_min(base: &CycleConfig, t_cold: f64, epsilon: f64, tau2_grid: &[f64]) -> Result<TauMinResult, AnalysisError> {
    let prepared = PreparedCycle::new(TransverseIsing, *base)?;
    tau_min_on(&prepared, t_cold, epsilon, tau2_grid, None)
}

fn tau_min_on<M: WorkingMedium>(
    prepared: &PreparedCycle<M>,
    t_cold: f64,
    epsilon: f64,
    tau2_grid: &[f64],
    grid_props: Option<&[Vec<Mat2>]>,
) -> Result<TauMinResult, AnalysisError> {
    let deficit = |tau2: f64| -> Result<f64, AnalysisError> { Ok(prepared.run(t_cold, tau2)?.work_deficit()) };
    let known = match grid_props {
        Some(props) => tau2_grid
            .par_iter()
            .zip(props.par_iter())
            .map(|(&tau, u)| prepared.evaluate(t_cold, tau, u).map(|r| Some(r.work_deficit())))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![None; tau2_grid.len()],
    };
    find_tau_min_cached(deficit, t_cold, epsilon, tau2_grid, known)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub t_cold: f64,
    pub tau_min: TauMinResult,
    pub work_adiabatic_abs: f64,
    /// `|W~| / tau_min`.
    pub power_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub points: Vec<PowerPoint>,
    pub argmax: usize,
}

impl PowerCurve {
    pub fn from_points(points: Vec<PowerPoint>) -> Result<Self, AnalysisError> {
        let argmax = points
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.power_abs.total_cmp(&b.1.power_abs))
            .map(|(i, _)| i)
            .ok_or_else(|| AnalysisError::Grid("empty temperature grid".into()))?;
        Ok(Self { points, argmax })
    }

    pub fn peak(&self) -> &PowerPoint {
        &self.points[self.argmax]
    }

    /// True when the maximum sits strictly inside the grid.
    pub fn has_interior_maximum(&self) -> bool {
        self.argmax > 0 && self.argmax + 1 < self.points.len()
    }
}

/// `tau_min` per cold temperature followed by `|P| = |W~| / tau_min`.
///
/// Propagators for the shared `tau2` grid are computed once and reused for
/// every temperature.
pub fn power_curve_at_tau_min(
    base: &CycleConfig,
    t_cold_grid: &[f64],
    epsilon: f64,
    tau2_grid: &[f64],
) -> Result<PowerCurve, AnalysisError> {
    tau_min_scan(base, t_cold_grid, epsilon, tau2_grid)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .and_then(PowerCurve::from_points)
}

/// Per-temperature results, keeping failures (e.g. no crossing) in place.
pub fn tau_min_scan(
    base: &CycleConfig,
    t_cold_grid: &[f64],
    epsilon: f64,
    tau2_grid: &[f64],
) -> Result<Vec<Result<PowerPoint, AnalysisError>>, AnalysisError> {
    Grid::explicit(t_cold_grid.to_vec())?;
    Grid::explicit(tau2_grid.to_vec())?;
    let prepared = PreparedCycle::new(TransverseIsing, *base)?;
    let props = tau2_grid
        .par_iter()
        .map(|&tau| prepared.cold_propagators(tau))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(t_cold_grid
        .par_iter()
        .map(|&tc| {
            let tau_min = tau_min_on(&prepared, tc, epsilon, tau2_grid, Some(&props))?;
            let w = prepared.adiabatic_work(tc)?.abs();
            Ok(PowerPoint { t_cold: tc, tau_min, work_adiabatic_abs: w, power_abs: w / tau_min.tau_min })
        })
        .collect())
}
