//! Executes one scenario with the configured engine.

use std::time::Instant;

use crate::adiabatic::adiabatic_trace;
use crate::analytic::{
    chain_compose, chain_for_down, chain_for_up, p_mono_from, p_poly_from, p_static_ext_from, transition_matrix,
    CrossingChain,
};
use crate::models::{Hamiltonian, LinearSweep, ModelParams, Semiclassical};
use crate::propagate::{
    evolve_density_partial, evolve_state_partial, DensityMatrix, PartialRun, PopulationTrace, TimeGrid,
};
use crate::{Error, Result};

use super::config::{Engine, ScenarioConfig, Variant};

/// Either Hamiltonian family behind one type, so the generic propagators
/// can be called once.
pub enum AnyHamiltonian {
    Driven(Semiclassical),
    Linear(LinearSweep),
}

impl Hamiltonian for AnyHamiltonian {
    fn dim(&self) -> usize {
        match self {
            AnyHamiltonian::Driven(h) => h.dim(),
            AnyHamiltonian::Linear(h) => h.dim(),
        }
    }

    fn fill(&self, t: f64, out: &mut [f64]) {
        match self {
            AnyHamiltonian::Driven(h) => h.fill(t, out),
            AnyHamiltonian::Linear(h) => h.fill(t, out),
        }
    }

    fn max_frequency(&self) -> f64 {
        match self {
            AnyHamiltonian::Driven(h) => h.max_frequency(),
            AnyHamiltonian::Linear(h) => h.max_frequency(),
        }
    }

    fn sweep_rate(&self) -> f64 {
        match self {
            AnyHamiltonian::Driven(h) => h.sweep_rate(),
            AnyHamiltonian::Linear(h) => h.sweep_rate(),
        }
    }
}

/// The Hamiltonian selected by `cfg.scenario.variant`.
pub fn build_hamiltonian(cfg: &ScenarioConfig) -> Result<AnyHamiltonian> {
    let p = cfg.model;
    let coup = || cfg.couplings.as_ref().ok_or_else(|| Error::Config("missing [couplings]".into()));
    Ok(match cfg.scenario.variant {
        Variant::Su3 => AnyHamiltonian::Driven(Semiclassical::new(p, cfg.drive.clone())),
        Variant::HUp => {
            let c = coup()?;
            AnyHamiltonian::Linear(LinearSweep::h_up(&p, c.omega, &c.up_couplings()?))
        }
        Variant::HDown => {
            let c = coup()?;
            AnyHamiltonian::Linear(LinearSweep::h_down(&p, c.omega, &c.down_couplings()?))
        }
        Variant::NineLevel => AnyHamiltonian::Linear(LinearSweep::nine_level(&p, &coup()?.quantized()?)?),
    })
}

/// Result of [`run_scenario`]. A numeric failure part-way keeps the samples
/// recorded so far and the error in `failure`.
#[derive(Debug)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub trace: PopulationTrace,
    pub failure: Option<Error>,
    pub wall_time_s: f64,
    /// Step bound actually used by the numeric engines.
    pub max_step: Option<f64>,
}

impl RunOutcome {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Converts a partial run into its error.
    pub fn into_result(self) -> Result<RunOutcome> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Runs the configured engine on the configured grid.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let clock = Instant::now();
    let mut max_step = None;
    let (trace, failure) = match cfg.scenario.engine {
        Engine::NumericDensity | Engine::NumericState => {
            let h = build_hamiltonian(cfg)?;
            max_step = Some(
                cfg.grid
                    .max_step
                    .unwrap_or_else(|| crate::propagate::default_max_step(h.max_frequency(), h.sweep_rate())),
            );
            let psi0 = cfg.initial.state(h.dim())?;
            let res = if cfg.scenario.engine == Engine::NumericDensity {
                evolve_density_partial(&h, &DensityMatrix::from_state(&psi0)?, &cfg.grid)
            } else {
                evolve_state_partial(&h, &psi0, &cfg.grid)
            };
            match res {
                Ok(t) => (t, None),
                Err(PartialRun { trace, error }) if !trace.is_empty() => (trace, Some(error)),
                Err(PartialRun { error, .. }) => return Err(error),
            }
        }
        Engine::AnalyticMono | Engine::AnalyticStatic | Engine::AnalyticPoly => (analytic_trace(cfg)?, None),
        Engine::Chain => (chain_trace(cfg)?, None),
        Engine::Adiabatic => {
            let k = cfg.initial.basis_index(3)?;
            (adiabatic_trace(&cfg.model, &cfg.drive, &cfg.grid.sample_times(), k)?, None)
        }
    };
    Ok(RunOutcome {
        config: cfg.clone(),
        trace,
        failure,
        wall_time_s: clock.elapsed().as_secs_f64(),
        max_step,
    })
}

/// `(p₊, p₋)` of the configured analytic engine at time `t`, window opened
/// at `t0`.
pub fn analytic_pair(cfg: &ScenarioConfig, p: &ModelParams, t: f64, t0: f64) -> Result<(f64, f64)> {
    let d = &cfg.drive;
    let first = d.harmonics.first().copied();
    Ok(match cfg.scenario.engine {
        Engine::AnalyticMono => {
            let h = first.ok_or_else(|| Error::Config("analytic-mono needs a harmonic".into()))?;
            p_mono_from(t, t0, p, h.amp, h.freq, h.phase)
        }
        Engine::AnalyticStatic => {
            let (amp, freq, phase) = first.map_or((0.0, 0.0, 0.0), |h| (h.amp, h.freq, h.phase));
            p_static_ext_from(t, t0, p, d.static_delta, amp, freq, phase)
        }
        Engine::AnalyticPoly => p_poly_from(t, t0, p, &d.harmonics),
        e => return Err(Error::Config(format!("{e} is not an analytic engine"))),
    })
}

fn analytic_trace(cfg: &ScenarioConfig) -> Result<PopulationTrace> {
    let k = cfg.initial.basis_index(3)?;
    let times = cfg.grid.sample_times();
    let t0 = cfg.grid.t_start;
    let rows = times
        .iter()
        .map(|&t| {
            let (pp, pm) = analytic_pair(cfg, &cfg.model, t, t0)?;
            let m = transition_matrix(pp, pm);
            Ok((0..3).map(|j| m[(k, j)]).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(PopulationTrace::from_rows(times, rows))
}

/// The crossing chain of a block scenario with times in the scenario's units,
/// and the 0-based initial level.
pub fn scenario_chain(cfg: &ScenarioConfig) -> Result<(CrossingChain, usize)> {
    let regime = cfg.chain.ok_or_else(|| Error::Config("missing [chain]".into()))?.regime;
    let c = cfg.couplings.as_ref().ok_or_else(|| Error::Config("missing [couplings]".into()))?;
    let lambda = c
        .uniform_value(cfg.scenario.variant)
        .ok_or_else(|| Error::Config("chain engine needs equal couplings".into()))?;
    let sa = cfg.model.alpha.sqrt();
    let (d, w) = (cfg.model.d_aniso / sa, c.omega / sa);
    let (mut chain, start) = match cfg.scenario.variant {
        Variant::HUp => chain_for_up(lambda / sa, regime, d, w)?,
        Variant::HDown => chain_for_down(lambda / sa, regime, d, w)?,
        v => return Err(Error::Config(format!("no crossing chain for variant {v}"))),
    };
    for ev in &mut chain.events {
        ev.time /= sa;
    }
    let k = cfg.initial.basis_index(chain.dim)?;
    if k != start {
        return Err(Error::Config(format!(
            "the chain solution starts in level {}, config starts in level {}",
            start + 1,
            k + 1
        )));
    }
    Ok((chain, start))
}

/// Piecewise-constant populations: each crossing acts at its time.
fn chain_trace(cfg: &ScenarioConfig) -> Result<PopulationTrace> {
    let (chain, start) = scenario_chain(cfg)?;
    let times = cfg.grid.sample_times();
    let rows = times
        .iter()
        .map(|&t| {
            let done = chain.events.iter().take_while(|e| e.time <= t).copied().collect();
            chain_compose(&CrossingChain { dim: chain.dim, events: done }, start)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PopulationTrace::from_rows(times, rows))
}

/// Same grid with integrator tolerances scaled by `factor`.
pub fn scaled_tolerances(grid: &TimeGrid, factor: f64) -> TimeGrid {
    grid.with_tolerances(grid.rel_tol * factor, grid.abs_tol * factor)
}
