use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use critical_otto::analysis::{
    analytic_excess_energy, default_window, fit_power_law, fit_prefactor, run_sweep, tau_min_scan, AnalysisError,
    Censoring, Grid, PowerCurve, PowerLawFit, PowerPoint, SweepAxis, SweepSpec, SweepTable,
};
use critical_otto::cycle::{run_cycle, CycleConfig, CycleResult, PowerDenominator};
use critical_otto::io::config::FileConfig;
use critical_otto::io::csv::{analytic_csv, cycle_csv, sweep_csv, tau_min_csv, AnalyticRow};
use critical_otto::io::fmt_f64;
use critical_otto::io::manifest::{config_from_text, FitRecord, RunManifest};
use critical_otto::io::spec::{format_power_denominator, parse_grid, parse_power_denominator, parse_window};
use critical_otto::io::svg::svg_from_csv;
use critical_otto::IntegratorOptions;

use crate::args::{AnalyticArgs, AxisArg, Base, Common, CycleArgs, PlotArgs, SweepArgs, TauminArgs, VerifyArgs};
use crate::output::{io_err, read_manifest, thread_count, Failure, OutputSet};

const DEFAULT_TAU2_GRID: &str = "log:1:3000:40";
const DEFAULT_EPSILON: f64 = 2.0;

/// Run-wide context shared by the subcommands.
pub struct Session {
    started: Instant,
    threads: usize,
    threads_source: &'static str,
}

impl Session {
    pub fn start(common: &Common) -> Result<Self, Failure> {
        let (threads, threads_source) = thread_count(common.threads)?;
        if threads_source != "default" {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
        }
        Ok(Self { started: Instant::now(), threads, threads_source })
    }

    fn manifest(&self, command: &str, config: FileConfig) -> RunManifest {
        RunManifest {
            tool: "critical-otto".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            threads: self.threads,
            threads_source: self.threads_source.into(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            notes: Vec::new(),
            summary: BTreeMap::new(),
            config,
            fits: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

fn load(common: &Common, base: &Base) -> Result<FileConfig, Failure> {
    let from_file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            config_from_text(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let merged = from_file.merged(&base.to_file_config());
    merged.check_syntax()?;
    Ok(merged)
}

fn required(v: Option<f64>, flag: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("missing {flag}")))
}

fn cycle_config(fc: &FileConfig, t_cold: f64, tau2: f64) -> Result<CycleConfig, Failure> {
    let reference = CycleConfig::reference(t_cold, tau2);
    let defaults = IntegratorOptions::default();
    let power_denominator = match &fc.power_denominator {
        Some(p) => parse_power_denominator(p)?,
        None => PowerDenominator::default(),
    };
    let cfg = CycleConfig {
        l: fc.l.unwrap_or(reference.l),
        h1: fc.h1.unwrap_or(reference.h1),
        h2: fc.h2.unwrap_or(reference.h2),
        t_hot: fc.t_hot.unwrap_or(reference.t_hot),
        t_cold,
        tau1: fc.tau1.unwrap_or(reference.tau1),
        tau2,
        integrator: IntegratorOptions {
            dt_max: fc.dt_max.unwrap_or(defaults.dt_max),
            substeps_min: fc.substeps_min.unwrap_or(defaults.substeps_min),
            scheme: fc.scheme.unwrap_or(defaults.scheme),
        },
        power_denominator,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// The configuration as actually used, for the manifest.
fn resolved(fc: &FileConfig, cfg: &CycleConfig) -> FileConfig {
    FileConfig {
        l: Some(cfg.l),
        h1: Some(cfg.h1),
        h2: Some(cfg.h2),
        t_hot: Some(cfg.t_hot),
        t_cold: Some(cfg.t_cold),
        tau1: Some(cfg.tau1),
        tau2: Some(cfg.tau2),
        dt_max: Some(cfg.integrator.dt_max),
        substeps_min: Some(cfg.integrator.substeps_min),
        scheme: Some(cfg.integrator.scheme),
        power_denominator: Some(format_power_denominator(&cfg.power_denominator)),
        ..fc.clone()
    }
}

fn grid_values(spec: &str) -> Result<Vec<f64>, Failure> {
    Ok(parse_grid(spec)?.values()?)
}

fn window_text(w: (f64, f64)) -> String {
    format!("{}:{}", fmt_f64(w.0), fmt_f64(w.1))
}

fn fit_record(name: &str, x: &str, y: &str, f: &PowerLawFit) -> FitRecord {
    FitRecord {
        name: name.into(),
        x: x.into(),
        y: y.into(),
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        window_lo: f.window.0,
        window_hi: f.window.1,
        points: f.points,
    }
}

fn print_fit(label: &str, f: &PowerLawFit) {
    println!(
        "fit {label}: slope {:.6}  prefactor {:.6e}  R^2 {:.6}  window [{}, {}]  points {}",
        f.slope,
        f.prefactor(),
        f.r_squared,
        f.window.0,
        f.window.1,
        f.points
    );
}

fn first_error(table: &SweepTable) -> Result<(), Failure> {
    match table.rows.iter().find_map(|r| r.result.as_ref().err()) {
        Some(e) => Err(e.clone().into()),
        None => Ok(()),
    }
}

fn print_summary(cfg: &CycleConfig, r: &CycleResult) {
    println!(
        "L = {}  h1 = {:?}  h2 = {:?}  Th = {:?}  Tc = {:?}  tau1 = {:?}  tau2 = {:?}",
        cfg.l, cfg.h1, cfg.h2, cfg.t_hot, cfg.t_cold, cfg.tau1, cfg.tau2
    );
    println!("E_A     = {:.10e}", r.e_a);
    println!("E_B     = {:.10e}", r.e_b);
    println!("E_C     = {:.10e}", r.e_c);
    println!("E_D     = {:.10e}", r.e_d);
    println!("Q_in    = {:.10e}", r.q_in);
    println!("Q_out   = {:.10e}", r.q_out);
    println!("W       = {:.10e}", r.work);
    println!("W~      = {:.10e}", r.work_adiabatic);
    println!("W - W~  = {:.10e}", r.work_deficit());
    match r.efficiency {
        Some(eta) => println!("eta     = {eta:.10}"),
        None => println!("eta     = undefined"),
    }
    println!("P       = {:.10e}", r.power);
    println!("regime  = {}", r.regime);
}

pub fn cycle(args: &CycleArgs) -> Result<(), Failure> {
    let session = Session::start(&args.common)?;
    let fc = load(&args.common, &args.base)?;
    let cfg = cycle_config(&fc, required(fc.t_cold, "--Tc")?, required(fc.tau2, "--tau2")?)?;
    let mut out = OutputSet::new(&args.out)?;
    let result = run_cycle(&cfg)?;
    print_summary(&cfg, &result);
    out.add(&args.out, cycle_csv(&cfg, &result))?;
    let mut manifest = session.manifest("cycle", resolved(&fc, &cfg));
    manifest.outputs = out.digests();
    out.commit(&manifest)
}

pub fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let session = Session::start(&args.common)?;
    let mut fc = load(&args.common, &args.base)?;
    if let Some(a) = args.axis {
        fc.axis = Some(a.as_str().into());
    }
    if let Some(g) = &args.grid {
        fc.grid = Some(g.clone());
    }
    if let Some(w) = &args.fit_window {
        fc.fit_window = Some(w.clone());
    }
    fc.check_syntax()?;
    let axis = match fc.axis.as_deref() {
        Some("tau2") => AxisArg::Tau2,
        Some("Tc") => AxisArg::Tc,
        _ => return Err(Failure::Usage("missing --axis".into())),
    };
    let grid_text = fc.grid.clone().ok_or_else(|| Failure::Usage("missing --grid".into()))?;
    let values = grid_values(&grid_text)?;
    let grid = Grid::explicit(values.clone())?;

    let (base, spec_axis, column) = match axis {
        AxisArg::Tau2 => {
            let tc = required(fc.t_cold, "--Tc")?;
            for &t in &values {
                cycle_config(&fc, tc, t)?;
            }
            (cycle_config(&fc, tc, values[0])?, SweepAxis::Tau2 { grid }, "tau2")
        }
        AxisArg::Tc => {
            let tau2 = required(fc.tau2, "--tau2")?;
            for &t in &values {
                cycle_config(&fc, t, tau2)?;
            }
            (cycle_config(&fc, values[0], tau2)?, SweepAxis::ColdTemperature { grid }, "T_C")
        }
    };
    let mut out = OutputSet::new(&args.out)?;
    let table = run_sweep(&SweepSpec { base, axis: spec_axis })?;
    first_error(&table)?;
    let csv = sweep_csv(&table);

    let (xs, ys) = table.deficit_series(|c| if axis == AxisArg::Tau2 { c.tau2 } else { c.t_cold });
    let window = match &fc.fit_window {
        Some(w) => Some(parse_window(w)?),
        None => default_window(&xs),
    };
    let mut resolved_fc = resolved(&fc, &base);
    resolved_fc.fit_window = window.map(window_text);
    if axis == AxisArg::Tau2 {
        resolved_fc.tau2 = None;
    } else {
        resolved_fc.t_cold = None;
    }
    let mut manifest = session.manifest("sweep", resolved_fc);
    match fit_power_law(&xs, &ys, window) {
        Ok(f) => {
            print_fit(&format!("excess vs {column}"), &f);
            manifest.fits.push(fit_record("excess", column, "excess", &f));
        }
        Err(e) => {
            eprintln!("warning: power-law fit failed: {e}");
            manifest.notes.push(format!("power-law fit failed: {e}"));
        }
    }
    println!("{} rows written to {}", table.rows.len(), args.out.display());

    out.add(&args.out, csv.clone())?;
    if let Some(plot) = &args.plot {
        out.add(plot, svg_from_csv(&csv, column, "excess", true, window)?)?;
    }
    manifest.outputs = out.digests();
    out.commit(&manifest)
}

pub fn taumin(args: &TauminArgs) -> Result<(), Failure> {
    let session = Session::start(&args.common)?;
    let mut fc = load(&args.common, &args.base)?;
    if let Some(g) = &args.tc_grid {
        fc.tc_grid = Some(g.clone());
    }
    if let Some(g) = &args.tau2_grid {
        fc.tau2_grid = Some(g.clone());
    }
    if let Some(e) = args.epsilon {
        fc.epsilon = Some(e);
    }
    if let Some(w) = &args.fit_window {
        fc.fit_window = Some(w.clone());
    }
    let tau2_text = fc.tau2_grid.get_or_insert_with(|| DEFAULT_TAU2_GRID.into()).clone();
    let epsilon = *fc.epsilon.get_or_insert(DEFAULT_EPSILON);
    fc.check_syntax()?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Failure::Usage("--epsilon must be positive and finite".into()));
    }
    let tcs = grid_values(fc.tc_grid.as_deref().ok_or_else(|| Failure::Usage("missing --Tc-grid".into()))?)?;
    let taus = grid_values(&tau2_text)?;
    for &tc in &tcs {
        cycle_config(&fc, tc, taus[0])?;
    }
    let base = cycle_config(&fc, tcs[0], taus[0])?;
    let window = fc.fit_window.as_deref().map(parse_window).transpose()?;
    let mut out = OutputSet::new(&args.out)?;

    let scan = tau_min_scan(&base, &tcs, epsilon, &taus)?;
    let mut rows: Vec<(f64, Result<PowerPoint, AnalysisError>)> = Vec::with_capacity(tcs.len());
    let mut notes = Vec::new();
    for (&tc, r) in tcs.iter().zip(scan) {
        match r {
            Err(AnalysisError::NoCrossing { .. }) => {
                let e = r.unwrap_err();
                notes.push(format!("T_C = {tc}: {e}"));
                rows.push((tc, Err(e)));
            }
            Err(e) => return Err(e.into()),
            Ok(p) => {
                if p.tau_min.censoring == Censoring::Left {
                    notes.push(format!("T_C = {tc}: left-censored, excess already below {epsilon} at tau2 = {}", taus[0]));
                }
                rows.push((tc, Ok(p)));
            }
        }
    }
    for n in &notes {
        eprintln!("warning: {n}");
    }
    let csv = tau_min_csv(&rows);

    let mut resolved_fc = resolved(&fc, &base);
    resolved_fc.t_cold = None;
    resolved_fc.tau2 = None;
    let mut manifest = session.manifest("taumin", resolved_fc);
    manifest.notes = notes;
    manifest.summary.insert("epsilon".into(), epsilon);

    let found: Vec<PowerPoint> = rows
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .filter(|p| p.tau_min.censoring == Censoring::None)
        .copied()
        .collect();
    let xs: Vec<f64> = found.iter().map(|p| p.t_cold).collect();
    for (name, ys) in [
        ("tau_min_refined", found.iter().map(|p| p.tau_min.tau_min).collect::<Vec<_>>()),
        ("tau_min_grid", found.iter().map(|p| p.tau_min.tau_min_grid).collect()),
    ] {
        match fit_power_law(&xs, &ys, window) {
            Ok(f) => {
                print_fit(&format!("{name} vs T_C"), &f);
                manifest.fits.push(fit_record(name, "T_C", name, &f));
            }
            Err(e) => {
                eprintln!("warning: {name} fit failed: {e}");
                manifest.notes.push(format!("{name} fit failed: {e}"));
            }
        }
    }
    if let Ok(curve) = PowerCurve::from_points(found) {
        let peak = curve.peak();
        println!(
            "|P| maximum {:.6e} at T_C = {} ({})",
            peak.power_abs,
            peak.t_cold,
            if curve.has_interior_maximum() { "interior" } else { "at the grid edge" }
        );
        manifest.summary.insert("power_max".into(), peak.power_abs);
        manifest.summary.insert("power_argmax_T_C".into(), peak.t_cold);
        manifest.summary.insert("power_interior_maximum".into(), f64::from(u8::from(curve.has_interior_maximum())));
    }

    out.add(&args.out, csv.clone())?;
    if let Some(plot) = &args.plot {
        out.add(plot, svg_from_csv(&csv, "T_C", "tau_min_refined", true, window.or(Some((tcs[0], tcs[tcs.len() - 1]))))?)?;
    }
    if let Some(plot) = &args.power_plot {
        out.add(plot, svg_from_csv(&csv, "T_C", "P_abs", false, None)?)?;
    }
    manifest.outputs = out.digests();
    out.commit(&manifest)
}

pub fn analytic(args: &AnalyticArgs) -> Result<(), Failure> {
    let session = Session::start(&args.common)?;
    let mut fc = load(&args.common, &args.base)?;
    if let Some(g) = &args.tc_grid {
        fc.tc_grid = Some(g.clone());
        fc.tau2_grid = None;
    }
    if let Some(g) = &args.tau2_grid {
        fc.tau2_grid = Some(g.clone());
        fc.tc_grid = None;
    }
    if let Some(w) = &args.fit_window {
        fc.fit_window = Some(w.clone());
    }
    fc.check_syntax()?;
    let (axis, values) = match (&fc.tc_grid, &fc.tau2_grid) {
        (Some(g), None) => (AxisArg::Tc, grid_values(g)?),
        (None, Some(g)) => (AxisArg::Tau2, grid_values(g)?),
        (Some(_), Some(_)) => return Err(Failure::Usage("give either --Tc-grid or --tau2-grid, not both".into())),
        (None, None) => return Err(Failure::Usage("missing --Tc-grid or --tau2-grid".into())),
    };
    let grid = Grid::explicit(values.clone())?;
    let (base, spec_axis) = match axis {
        AxisArg::Tc => {
            let tau2 = required(fc.tau2, "--tau2")?;
            for &t in &values {
                cycle_config(&fc, t, tau2)?;
            }
            (cycle_config(&fc, values[0], tau2)?, SweepAxis::ColdTemperature { grid })
        }
        AxisArg::Tau2 => {
            let tc = required(fc.t_cold, "--Tc")?;
            for &t in &values {
                cycle_config(&fc, tc, t)?;
            }
            (cycle_config(&fc, tc, values[0])?, SweepAxis::Tau2 { grid })
        }
    };
    if base.h1 == base.h2 {
        return Err(Failure::Contradiction("the analytic comparison needs h1 != h2".into()));
    }
    let window = fc.fit_window.as_deref().map(parse_window).transpose()?;
    let mut out = OutputSet::new(&args.out)?;

    let table = run_sweep(&SweepSpec { base, axis: spec_axis })?;
    first_error(&table)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let r = row.result.as_ref().map_err(|e| Failure::from(e.clone()))?;
        rows.push(AnalyticRow {
            tau2: row.config.tau2,
            t_cold: row.config.t_cold,
            numerical: r.work_deficit(),
            analytic: analytic_excess_energy(&row.config)?,
            scaled: f64::NAN,
        });
    }
    let x_of = |r: &AnalyticRow| if axis == AxisArg::Tc { r.t_cold } else { r.tau2 };
    let inside: Vec<&AnalyticRow> =
        rows.iter().filter(|r| window.is_none_or(|(lo, hi)| (lo..=hi).contains(&x_of(r)))).collect();
    if inside.is_empty() {
        return Err(Failure::Usage("no grid point inside the fit window".into()));
    }
    let model: Vec<f64> = inside.iter().map(|r| r.analytic).collect();
    let data: Vec<f64> = inside.iter().map(|r| r.numerical).collect();
    let prefactor = fit_prefactor(&model, &data)?;
    for r in &mut rows {
        r.scaled = prefactor * r.analytic;
    }
    let worst = rows
        .iter()
        .filter(|r| window.is_none_or(|(lo, hi)| (lo..=hi).contains(&x_of(r))))
        .map(|r| r.relative_deviation().abs())
        .fold(0.0, f64::max);
    println!("fitted prefactor {prefactor:.6e}");
    println!("largest |relative deviation| in the fit window {worst:.6}");

    let mut resolved_fc = resolved(&fc, &base);
    if axis == AxisArg::Tc {
        resolved_fc.t_cold = None;
    } else {
        resolved_fc.tau2 = None;
    }
    let mut manifest = session.manifest("analytic", resolved_fc);
    manifest.summary.insert("prefactor".into(), prefactor);
    manifest.summary.insert("max_abs_relative_deviation".into(), worst);

    out.add(&args.out, analytic_csv(&rows))?;
    manifest.outputs = out.digests();
    out.commit(&manifest)
}

/// Writes the SVG and records it in the target directory's manifest,
/// creating one when the directory has none.
pub fn plot(args: &PlotArgs) -> Result<(), Failure> {
    let session = Session::start(&Common { config: None, threads: Some(1) })?;
    let csv = std::fs::read_to_string(&args.csv).map_err(|e| io_err(&args.csv, e))?;
    let window = args.fit_window.as_deref().map(parse_window).transpose()?;
    let svg = svg_from_csv(&csv, &args.x, &args.y, !args.no_fit, window)?;
    let mut out = OutputSet::new(&args.out)?;
    out.add(&args.out, svg)?;
    let mut manifest = match read_manifest(out.dir())? {
        Some(m) => m,
        None => session.manifest("plot", FileConfig::default()),
    };
    for d in out.digests() {
        manifest.outputs.retain(|o| o.file != d.file);
        manifest.outputs.push(d);
    }
    out.commit(&manifest)
}

pub fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let manifest = read_manifest(&args.dir)?
        .ok_or_else(|| Failure::Io(format!("{}: no manifest", args.dir.display())))?;
    manifest.verify(Path::new(&args.dir)).map_err(Failure::Verify)?;
    println!("{} outputs verified", manifest.outputs.len());
    Ok(())
}
