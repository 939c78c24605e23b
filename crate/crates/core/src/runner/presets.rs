//! Named reference scenarios. All use `α = 1`, so every
//! number is already in units of `√α` (energies) or `1/√α` (times).

use std::f64::consts::{PI, SQRT_2};

use crate::analytic::Regime;
use crate::models::{DownCouplings, DriveSpec, Harmonic, ModelParams};
use crate::propagate::TimeGrid;
use crate::{Error, Result};

use super::config::{
    ChainSpec, CouplingSpec, Engine, InitialState, OutputSpec, ScenarioConfig, ScenarioSection, StepParams,
    SweepAxis, SweepSpec, Variant,
};

/// Drive amplitude shared by the presets.
pub const AMP: f64 = 0.005;
/// Static coupling of the fig6 scenarios.
pub const FIG6_DELTA: f64 = 0.00167;
/// `D = ω = 11π/2` of the polychromatic scenarios.
pub const FIG5Q_D: f64 = 11.0 * PI / 2.0;
/// Coupling strength used by the chain presets unless overridden.
pub const CHAIN_LAMBDA: f64 = 0.5;

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    build: fn() -> ScenarioConfig,
}

impl Preset {
    pub fn config(&self) -> ScenarioConfig {
        (self.build)()
    }
}

macro_rules! preset {
    ($name:literal, $about:literal, $build:expr) => {
        Preset { name: $name, about: $about, build: $build }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("zero-drive", "no transverse field; populations stay put", || {
        su3("zero-drive", 1.0, DriveSpec::zero(), grid(-10.0, 10.0, 0.1))
    }),
    preset!("fig2a", "two steps: D=0.05, w=15", || mono("fig2a", 0.05, 15.0, 40.0)),
    preset!("fig2b", "beats with steps: D=15, w=1.5", || mono("fig2b", 15.0, 1.5, 40.0)),
    preset!("fig3a", "three steps: D=w=12", || mono("fig3a", 12.0, 12.0, 40.0)),
    preset!("fig3b", "four steps: D=15, w=8", || mono("fig3b", 15.0, 8.0, 40.0)),
    preset!("fig3b-swapped", "four steps: D=8, w=15", || mono("fig3b-swapped", 8.0, 15.0, 40.0)),
    preset!("fig4a", "5-level block, D=0.08, w=10, couplings 0.00176*sqrt(2)", || {
        down_block("fig4a", 0.08, 10.0, DownCouplings::uniform(0.00176 * SQRT_2))
    }),
    preset!("fig4b", "5-level block, D=12, w=1, couplings 0.0021*sqrt(2)", || {
        down_block("fig4b", 12.0, 1.0, DownCouplings::uniform(0.0021 * SQRT_2))
    }),
    preset!("fig4k-a", "5-level block, D=w=12, unequal couplings", || {
        let (a, b) = (0.00176 * SQRT_2, 0.0025 * SQRT_2);
        down_block("fig4k-a", 12.0, 12.0, DownCouplings { l_1w_2: a, l_1mw_2: a, l_2_3mw: b, l_2_3w: b })
    }),
    preset!("fig4k-b", "5-level block, D=18, w=8, unequal couplings", || {
        let (a, b) = (0.00176 * SQRT_2, 0.0025 * SQRT_2);
        down_block("fig4k-b", 18.0, 8.0, DownCouplings { l_1w_2: a, l_1mw_2: b, l_2_3mw: a, l_2_3w: b })
    }),
    preset!("fig5", "P22(t, D) map, w=12, t0=-10 (sweep)", fig5),
    preset!("fig5q-n2", "two harmonics n*w, D=w=11pi/2", || poly("fig5q-n2", 2)),
    preset!("fig5q-n3", "three harmonics n*w, D=w=11pi/2", || poly("fig5q-n3", 3)),
    preset!("fig5q-n4", "four harmonics n*w, D=w=11pi/2", || poly("fig5q-n4", 4)),
    preset!("fig5q-n5", "five harmonics n*w, D=w=11pi/2", || poly("fig5q-n5", 5)),
    preset!("fig6a", "static + periodic field, five steps: D=w=19.4163", || {
        static_ext("fig6a", 19.4163, 19.4163)
    }),
    preset!("fig6b", "static + periodic field, six steps: D=30, w=15.5", || static_ext("fig6b", 30.0, 15.5)),
    preset!("fig8-d0", "5-level block chain, D=0, w=20", || {
        chain_block("fig8-d0", Variant::HDown, Regime::DZero, 0.0, 20.0)
    }),
    preset!("fig8-dw", "5-level block chain, D=w=20", || {
        chain_block("fig8-dw", Variant::HDown, Regime::DEqualsOmega, 20.0, 20.0)
    }),
    preset!("fig8-wd", "5-level block chain, D=30, w=20", || {
        chain_block("fig8-wd", Variant::HDown, Regime::OmegaBelowD, 30.0, 20.0)
    }),
    preset!("fig9-d0", "4-level block chain, D=0, w=20", || {
        chain_block("fig9-d0", Variant::HUp, Regime::DZero, 0.0, 20.0)
    }),
    preset!("fig9-dw", "4-level block chain, D=w=20", || {
        chain_block("fig9-dw", Variant::HUp, Regime::DEqualsOmega, 20.0, 20.0)
    }),
    preset!("fig9-wd", "4-level block chain, D=20, w=10", || {
        chain_block("fig9-wd", Variant::HUp, Regime::OmegaBelowD, 20.0, 10.0)
    }),
];

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::config)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}' (try `presets list`)")))
}

fn grid(t0: f64, t1: f64, stride: f64) -> TimeGrid {
    TimeGrid::new(t0, t1, stride).expect("preset grid")
}

fn su3(name: &str, d: f64, drive: DriveSpec, grid: TimeGrid) -> ScenarioConfig {
    ScenarioConfig {
        scenario: ScenarioSection { name: name.into(), engine: Engine::NumericDensity, variant: Variant::Su3 },
        model: ModelParams { alpha: 1.0, d_aniso: d },
        drive,
        initial: InitialState::level(2),
        grid,
        couplings: None,
        chain: None,
        steps: StepParams::default(),
        sweep: None,
        output: OutputSpec::default(),
    }
}

fn mono(name: &str, d: f64, omega: f64, half: f64) -> ScenarioConfig {
    su3(name, d, DriveSpec::mono(AMP, omega, 0.0), grid(-half, half, 0.01))
}

fn static_ext(name: &str, d: f64, omega: f64) -> ScenarioConfig {
    let drive = DriveSpec { static_delta: FIG6_DELTA, harmonics: vec![Harmonic::new(AMP, omega, 0.0)] };
    su3(name, d, drive, grid(-60.0, 60.0, 0.01))
}

fn poly(name: &str, n: usize) -> ScenarioConfig {
    let harmonics = (1..=n).map(|k| Harmonic::new(AMP, k as f64 * FIG5Q_D, 0.0)).collect();
    su3(name, FIG5Q_D, DriveSpec { static_delta: 0.0, harmonics }, grid(-130.0, 130.0, 0.01))
}

fn fig5() -> ScenarioConfig {
    let mut c = su3("fig5", 0.0, DriveSpec::mono(AMP, 12.0, 0.0), grid(-10.0, 10.0, 0.1));
    c.scenario.engine = Engine::AnalyticMono;
    c.sweep = Some(SweepSpec {
        y_axis: SweepAxis::D,
        x_min: -10.0,
        x_max: 10.0,
        y_min: -10.0,
        y_max: 10.0,
        nx: 200,
        ny: 200,
    });
    c
}

fn down_block(name: &str, d: f64, omega: f64, c: DownCouplings) -> ScenarioConfig {
    let mut cfg = su3(name, d, DriveSpec::zero(), grid(-40.0, 40.0, 0.01));
    cfg.scenario.variant = Variant::HDown;
    // |2⟩ is the middle state of the 5-level basis
    cfg.initial = InitialState::level(3);
    cfg.steps.level = 3;
    cfg.couplings = Some(CouplingSpec { omega, down: Some(c), ..CouplingSpec::default() });
    cfg
}

fn chain_block(name: &str, variant: Variant, regime: Regime, d: f64, omega: f64) -> ScenarioConfig {
    // ~10⁵ steps with |H| up to 500√α: the default 1e-10 lets the state norm
    // drift past 1e-9 by the end of the window
    let g = grid(-500.0, 500.0, 0.1).with_tolerances(1e-12, 1e-12);
    let mut cfg = su3(name, d, DriveSpec::zero(), g);
    cfg.scenario.variant = variant;
    let start = if variant == Variant::HUp { 2 } else { 3 };
    cfg.initial = InitialState::level(start);
    cfg.steps.level = start;
    cfg.couplings = Some(CouplingSpec { omega, uniform: Some(CHAIN_LAMBDA), ..CouplingSpec::default() });
    cfg.chain = Some(ChainSpec { regime });
    cfg
}
