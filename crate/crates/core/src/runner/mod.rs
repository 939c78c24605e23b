//! Experiment layer: scenario configs and presets, engines, sweeps, step
//! counting, trace comparison, and CSV plus manifest output.
//!
//! Every `write_*` function below produces its data files and one TOML
//! manifest (`<stem>.manifest.toml`) that echoes the resolved config.

pub mod compare;
pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod steps;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analytic::{chain_compose, chain_down_asymptotic, chain_up_asymptotic};
use crate::propagate::{Diagnostics, PopulationTrace};
use crate::{Error, Result};

pub use compare::{compare, CompareReport};
pub use config::{Engine, ScenarioConfig, StepParams, Variant};
pub use output::RunManifest;
pub use presets::{preset, PRESETS};
pub use run::{run_scenario, RunOutcome};
pub use steps::{count_steps, detect_steps, Step};
pub use sweep::{sweep_pattern, SweepGrid};

use output::{out_path, plot_script, render_csv, scenario_metadata, trace_csv, write_atomic, IntegratorInfo};

fn manifest(
    cfg: &ScenarioConfig,
    command: &str,
    wall: f64,
    outputs: &[PathBuf],
    diagnostics: Diagnostics,
    max_step: Option<f64>,
    error: Option<&Error>,
) -> RunManifest {
    RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        status: if error.is_some() { "partial" } else { "ok" }.to_string(),
        error: error.map(|e| e.to_string()),
        wall_time_s: wall,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect(),
        integrator: max_step.map(|h| IntegratorInfo {
            method: "DOP853, PI step control".into(),
            rel_tol: cfg.grid.rel_tol,
            abs_tol: cfg.grid.abs_tol,
            max_step: h,
        }),
        invariants: diagnostics,
        config: cfg.clone(),
    }
}

fn finish(dir: &Path, stem: &str, m: RunManifest, mut files: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    let path = out_path(dir, stem, "manifest.toml");
    m.write(&path)?;
    files.push(path);
    Ok(files)
}

/// Writes the trace CSV, optional plot script and manifest of a run. A
/// partial run is written too and then reported as its error.
pub fn write_run(outcome: &RunOutcome, dir: &Path, command: &str) -> Result<Vec<PathBuf>> {
    let cfg = &outcome.config;
    let stem = cfg.stem();
    let mut meta = scenario_metadata(cfg);
    if let Some(e) = &outcome.failure {
        meta.push(format!("PARTIAL: {e}"));
    }
    let csv = out_path(dir, &stem, "csv");
    write_atomic(&csv, &trace_csv(&outcome.trace, cfg.model.alpha, &meta))?;
    let mut files = vec![csv];
    if cfg.output.plot_script {
        let py = out_path(dir, &stem, "plot.py");
        write_atomic(&py, &plot_script(&format!("{stem}.csv"), &stem))?;
        files.push(py);
    }
    let m = manifest(
        cfg,
        command,
        outcome.wall_time_s,
        &files,
        outcome.trace.diagnostics,
        outcome.max_step,
        outcome.failure.as_ref(),
    );
    let files = finish(dir, &stem, m, files)?;
    match &outcome.failure {
        Some(e) => Err(Error::Numeric(format!("run stopped early ({e}); partial output written"))),
        None => Ok(files),
    }
}

/// The closed-form engine matching a scenario: the monochromatic,
/// static-plus-periodic or polychromatic formula for `su3`, the crossing chain
/// for the photon-dressed blocks.
pub fn analytic_counterpart(cfg: &ScenarioConfig) -> Result<ScenarioConfig> {
    let mut c = cfg.clone();
    c.scenario.engine = match cfg.scenario.variant {
        Variant::Su3 => {
            let d = &cfg.drive;
            if d.static_delta != 0.0 {
                Engine::AnalyticStatic
            } else if d.harmonics.len() == 1 {
                Engine::AnalyticMono
            } else {
                Engine::AnalyticPoly
            }
        }
        Variant::HUp | Variant::HDown if cfg.chain.is_some() => Engine::Chain,
        v => return Err(Error::Config(format!("no analytic counterpart for variant {v}"))),
    };
    c.validate()?;
    Ok(c)
}

/// Forces a numeric engine (density matrix unless state propagation is
/// already selected).
pub fn numeric_counterpart(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut c = cfg.clone();
    if !c.scenario.engine.is_numeric() {
        c.scenario.engine = Engine::NumericDensity;
    }
    c
}

/// Runs the numeric and the analytic engine and writes the deviation report.
pub fn write_compare(cfg: &ScenarioConfig, dir: &Path) -> Result<(CompareReport, Vec<PathBuf>)> {
    let clock = Instant::now();
    let num = run_scenario(&numeric_counterpart(cfg))?.into_result()?;
    let ana = run_scenario(&analytic_counterpart(cfg)?)?;
    let report = compare(&num.trace, &ana.trace)?;
    let stem = format!("{}.compare", cfg.stem());
    let meta = scenario_metadata(cfg);
    let per_time = out_path(dir, &stem, "csv");
    write_atomic(&per_time, &report.per_time_csv(&meta))?;
    let summary = out_path(dir, &format!("{stem}.summary"), "csv");
    write_atomic(&summary, &report.summary_csv(&meta))?;
    let m = manifest(
        &num.config,
        "compare",
        clock.elapsed().as_secs_f64(),
        &[per_time.clone(), summary.clone()],
        num.trace.diagnostics,
        num.max_step,
        None,
    );
    let files = finish(dir, &stem, m, vec![per_time, summary])?;
    Ok((report, files))
}

/// Runs the scenario, counts steps in `steps.level`, and writes the step list.
pub fn write_steps(cfg: &ScenarioConfig, dir: &Path) -> Result<(Vec<Step>, Vec<PathBuf>)> {
    let out = run_scenario(cfg)?.into_result()?;
    let steps = trace_steps(&out.trace, &cfg.steps, cfg.model.alpha)?;
    let stem = format!("{}.steps", cfg.stem());
    let sa = cfg.model.alpha.sqrt();
    let mut meta = scenario_metadata(cfg);
    meta.push(format!("level {}: {} steps", cfg.steps.level, steps.len()));
    let path = out_path(dir, &stem, "csv");
    let rows = steps.iter().map(|s| vec![s.t_first * sa, s.t_last * sa, s.drop]);
    write_atomic(&path, &render_csv(&meta, &["t_first_sqrt_alpha", "t_last_sqrt_alpha", "drop"], rows))?;
    let m = manifest(cfg, "steps", out.wall_time_s, std::slice::from_ref(&path), out.trace.diagnostics, out.max_step, None);
    let files = finish(dir, &stem, m, vec![path])?;
    Ok((steps, files))
}

/// Steps of the 1-based `params.level` of a trace.
pub fn trace_steps(trace: &PopulationTrace, params: &StepParams, alpha: f64) -> Result<Vec<Step>> {
    if params.level == 0 || params.level > trace.dim() {
        return Err(Error::Config(format!("steps.level {} outside 1..={}", params.level, trace.dim())));
    }
    detect_steps(&trace.times, &trace.level(params.level - 1), params, alpha)
}

/// Asymptotic chain populations: the closed forms next to the composed chain.
pub fn write_chain(cfg: &ScenarioConfig, dir: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<PathBuf>)> {
    let clock = Instant::now();
    let mut c = cfg.clone();
    c.scenario.engine = Engine::Chain;
    c.validate()?;
    let (chain, start) = run::scenario_chain(&c)?;
    let composed = chain_compose(&chain, start)?;
    let regime = c.chain.expect("validated").regime;
    let lambda = c
        .couplings
        .as_ref()
        .and_then(|k| k.uniform_value(c.scenario.variant))
        .expect("validated")
        / c.model.alpha.sqrt();
    let closed: Vec<f64> = match c.scenario.variant {
        Variant::HUp => chain_up_asymptotic(lambda, regime)?.to_vec(),
        _ => chain_down_asymptotic(lambda, regime)?.to_vec(),
    };
    let stem = format!("{}.chain", c.stem());
    let path = out_path(dir, &stem, "csv");
    let rows = (0..closed.len()).map(|k| vec![(k + 1) as f64, closed[k], composed[k]]);
    write_atomic(&path, &render_csv(&scenario_metadata(&c), &["level", "closed_form", "composed"], rows))?;
    let m = manifest(&c, "chain", clock.elapsed().as_secs_f64(), std::slice::from_ref(&path), Diagnostics::default(), None, None);
    let files = finish(dir, &stem, m, vec![path])?;
    Ok((closed, composed, files))
}

/// Runs the `[sweep]` grid and writes it in long format.
pub fn write_sweep(cfg: &ScenarioConfig, dir: &Path) -> Result<(SweepGrid, Vec<PathBuf>)> {
    let clock = Instant::now();
    let grid = sweep_pattern(cfg)?;
    let stem = format!("{}.sweep", cfg.stem());
    let mut meta = scenario_metadata(cfg);
    meta.push(format!(
        "x = t*sqrt(alpha), y = {}/sqrt(alpha)",
        match grid.axis {
            config::SweepAxis::D => "D",
            config::SweepAxis::Omega => "omega",
        }
    ));
    let path = out_path(dir, &stem, "csv");
    write_atomic(&path, &grid.to_csv(&meta))?;
    let m = manifest(cfg, "sweep", clock.elapsed().as_secs_f64(), std::slice::from_ref(&path), Diagnostics::default(), None, None);
    let files = finish(dir, &stem, m, vec![path])?;
    Ok((grid, files))
}
