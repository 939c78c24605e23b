//! Scenario configuration: a TOML file whose sections mirror [`ScenarioConfig`].
//!
//! Values are resolved in three layers, later ones winning: a named preset,
//! the config file, then `key.path=value` overrides from the command line.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::Regime;
use crate::models::{DownCouplings, DriveSpec, ModelParams, QuantizedCouplings, UpCouplings};
use crate::propagate::TimeGrid;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    NumericDensity,
    NumericState,
    AnalyticMono,
    AnalyticStatic,
    AnalyticPoly,
    Chain,
    Adiabatic,
}

impl Engine {
    pub const ALL: [Engine; 7] = [
        Engine::NumericDensity,
        Engine::NumericState,
        Engine::AnalyticMono,
        Engine::AnalyticStatic,
        Engine::AnalyticPoly,
        Engine::Chain,
        Engine::Adiabatic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::NumericDensity => "numeric-density",
            Engine::NumericState => "numeric-state",
            Engine::AnalyticMono => "analytic-mono",
            Engine::AnalyticStatic => "analytic-static",
            Engine::AnalyticPoly => "analytic-poly",
            Engine::Chain => "chain",
            Engine::Adiabatic => "adiabatic",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Engine::NumericDensity | Engine::NumericState)
    }

    pub fn is_analytic(self) -> bool {
        matches!(self, Engine::AnalyticMono | Engine::AnalyticStatic | Engine::AnalyticPoly)
    }

    /// Whether the engine is implemented for `variant`.
    pub fn supports(self, variant: Variant) -> bool {
        match self {
            Engine::NumericDensity | Engine::NumericState => true,
            Engine::AnalyticMono | Engine::AnalyticStatic | Engine::AnalyticPoly | Engine::Adiabatic => {
                variant == Variant::Su3
            }
            Engine::Chain => matches!(variant, Variant::HUp | Variant::HDown),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown engine '{s}'")))
    }
}

/// Which Hamiltonian is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Su3,
    HUp,
    HDown,
    NineLevel,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Su3 => "su3",
            Variant::HUp => "h_up",
            Variant::HDown => "h_down",
            Variant::NineLevel => "nine_level",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Variant::Su3 => 3,
            Variant::HUp => 4,
            Variant::HDown => 5,
            Variant::NineLevel => 9,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default)]
    pub name: String,
    pub engine: Engine,
    #[serde(default = "default_variant")]
    pub variant: Variant,
}

fn default_variant() -> Variant {
    Variant::Su3
}

/// Initial condition: a 1-based basis level, or an explicit state vector of
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<[f64; 2]>>,
}

impl InitialState {
    pub fn level(level: usize) -> Self {
        Self { level: Some(level), vector: None }
    }

    /// Normalized state vector of length `dim`.
    pub fn state(&self, dim: usize) -> Result<Vec<C64>> {
        match (self.level, &self.vector) {
            (Some(k), None) => {
                if k == 0 || k > dim {
                    return Err(Error::Config(format!("initial level {k} outside 1..={dim}")));
                }
                let mut v = vec![C64::default(); dim];
                v[k - 1] = C64::new(1.0, 0.0);
                Ok(v)
            }
            (None, Some(vec)) => {
                if vec.len() != dim {
                    return Err(Error::Config(format!("initial vector has {} entries, need {dim}", vec.len())));
                }
                let v: Vec<C64> = vec.iter().map(|&[re, im]| C64::new(re, im)).collect();
                let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!("initial vector norm {n} != 1")));
                }
                Ok(v)
            }
            _ => Err(Error::Config("initial state needs exactly one of `level`, `vector`".into())),
        }
    }

    /// 0-based basis index, when the initial state is a basis level.
    pub fn basis_index(&self, dim: usize) -> Result<usize> {
        let v = self.state(dim)?;
        v.iter()
            .position(|c| (c.norm_sqr() - 1.0).abs() < 1e-12)
            .ok_or_else(|| Error::Config("this engine needs a basis level as initial state".into()))
    }
}

/// One explicit 9-level coupling, 0-based matrix position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Static couplings of the photon-dressed models. Every stored `λ` enters
/// the Hamiltonian as `λ/√2`. `uniform` fills every position; the block
/// tables or `entries` then override individual values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up: Option<UpCouplings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub down: Option<DownCouplings>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<CouplingEntry>,
}

impl CouplingSpec {
    pub fn up_couplings(&self) -> Result<UpCouplings> {
        match (self.up, self.uniform) {
            (Some(c), _) => Ok(c),
            (None, Some(l)) => Ok(UpCouplings::uniform(l)),
            (None, None) => Err(Error::Config("h_up needs couplings.up or couplings.uniform".into())),
        }
    }

    pub fn down_couplings(&self) -> Result<DownCouplings> {
        match (self.down, self.uniform) {
            (Some(c), _) => Ok(c),
            (None, Some(l)) => Ok(DownCouplings::uniform(l)),
            (None, None) => Err(Error::Config("h_down needs couplings.down or couplings.uniform".into())),
        }
    }

    pub fn quantized(&self) -> Result<QuantizedCouplings> {
        let mut q = QuantizedCouplings::uniform(self.omega, self.uniform.unwrap_or(0.0));
        for e in &self.entries {
            q.set(e.i, e.j, e.value).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(q)
    }

    /// The common value when all couplings of the block are equal.
    pub fn uniform_value(&self, variant: Variant) -> Option<f64> {
        let vals: Vec<f64> = match variant {
            Variant::HUp => {
                let c = self.up_couplings().ok()?;
                vec![c.l_1_2w, c.l_1_2mw, c.l_2w_3, c.l_2mw_3]
            }
            Variant::HDown => {
                let c = self.down_couplings().ok()?;
                vec![c.l_1w_2, c.l_1mw_2, c.l_2_3mw, c.l_2_3w]
            }
            _ => return None,
        };
        vals.iter().all(|&v| v == vals[0]).then_some(vals[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub regime: Regime,
}

/// Step-detector settings; `window` and `merge_radius` are in units of `1/√α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepParams {
    #[serde(default = "StepParams::default_window")]
    pub window: f64,
    #[serde(default = "StepParams::default_threshold")]
    pub threshold: f64,
    #[serde(default = "StepParams::default_merge")]
    pub merge_radius: f64,
    /// 1-based level whose population is analysed.
    #[serde(default = "StepParams::default_level")]
    pub level: usize,
}

impl StepParams {
    fn default_window() -> f64 {
        0.5
    }
    fn default_threshold() -> f64 {
        0.05
    }
    fn default_merge() -> f64 {
        3.0
    }
    fn default_level() -> usize {
        2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window >= 0.0 && self.merge_radius >= 0.0 && self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("invalid step parameters {self:?}")));
        }
        if self.level == 0 {
            return Err(Error::Config("steps.level is 1-based".into()));
        }
        Ok(())
    }
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            window: Self::default_window(),
            threshold: Self::default_threshold(),
            merge_radius: Self::default_merge(),
            level: Self::default_level(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    /// Also write a matplotlib script next to the CSV.
    #[serde(default)]
    pub plot_script: bool,
}

/// Axis definition of a two-parameter sweep. `x` is time, `y` is `D` or `ω`;
/// both ranges are in units of `√α` (`t√α`, `D/√α`, `ω/√α`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub y_axis: SweepAxis,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    D,
    Omega,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub model: ModelParams,
    #[serde(default)]
    pub drive: DriveSpec,
    pub initial: InitialState,
    pub grid: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<CouplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub steps: StepParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.model.validate().map_err(cfg_err)?;
        self.drive.validate().map_err(cfg_err)?;
        self.grid.validate().map_err(cfg_err)?;
        self.steps.validate()?;
        let (engine, variant) = (self.scenario.engine, self.scenario.variant);
        if !engine.supports(variant) {
            return Err(Error::Config(format!("engine {engine} is not available for variant {variant}")));
        }
        self.initial.state(variant.dim())?;
        if variant != Variant::Su3 {
            let c = self
                .couplings
                .as_ref()
                .ok_or_else(|| Error::Config(format!("variant {variant} needs a [couplings] section")))?;
            match variant {
                Variant::HUp => drop(c.up_couplings()?),
                Variant::HDown => drop(c.down_couplings()?),
                _ => drop(c.quantized()?),
            }
            if !self.drive.harmonics.is_empty() || self.drive.static_delta != 0.0 {
                return Err(Error::Config(format!(
                    "variant {variant} has static couplings; leave [drive] empty"
                )));
            }
        }
        match engine {
            Engine::AnalyticMono => {
                if self.drive.harmonics.len() != 1 || self.drive.static_delta != 0.0 {
                    return Err(Error::Config("analytic-mono needs exactly one harmonic and no static field".into()));
                }
            }
            Engine::AnalyticStatic => {
                if self.drive.harmonics.len() > 1 {
                    return Err(Error::Config("analytic-static takes at most one harmonic".into()));
                }
            }
            Engine::AnalyticPoly => {
                if self.drive.static_delta != 0.0 {
                    return Err(Error::Config(
                        "analytic-poly has no static term; add it as a zero-frequency harmonic".into(),
                    ));
                }
            }
            Engine::Chain => {
                if self.chain.is_none() {
                    return Err(Error::Config("chain engine needs a [chain] section".into()));
                }
                if self.couplings.as_ref().and_then(|c| c.uniform_value(variant)).is_none() {
                    return Err(Error::Config("chain engine needs equal couplings".into()));
                }
            }
            _ => {}
        }
        if engine.is_analytic() || engine == Engine::Chain || engine == Engine::Adiabatic {
            self.initial.basis_index(variant.dim())?;
        }
        if let Some(s) = &self.sweep {
            if s.nx < 2 || s.ny < 2 {
                return Err(Error::Config("sweep resolution must be >= 2 per axis".into()));
            }
            if !(s.x_min < s.x_max && s.y_min <= s.y_max) {
                return Err(Error::Config("sweep ranges must be increasing".into()));
            }
        }
        Ok(())
    }

    /// Output file stem.
    pub fn stem(&self) -> String {
        match (&self.output.stem, self.scenario.name.as_str()) {
            (Some(s), _) => s.clone(),
            (None, "") => "run".to_string(),
            (None, n) => n.to_string(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = table.try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }
}

/// Reads a TOML file into a table without validating it.
pub fn read_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path)?;
    text.parse().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Recursively merges `top` into `base`; tables merge, everything else is replaced.
pub fn merge_tables(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge_tables(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c=value` where `value` is parsed as a TOML value, falling
/// back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' must look like key.path=value")))?;
    let value = parse_value(raw.trim());
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad key path '{path}'")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{k}' in '{path}' is not a table")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
