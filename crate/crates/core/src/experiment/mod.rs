//! Parameter sweeps over the detection analysis and the phase optimizers,
//! driven by a TOML experiment description and written out as CSV.
//!
//! Powers enter experiment files in dBm and are converted to watts here; the
//! rest of the library works in watts only.

mod presets;
mod run;
mod table;

pub use presets::{preset, Analysis, PRESET_NAMES};
pub use run::{random_baseline, run_dep_analysis, run_optimization, BaselineDraw, OptimizationOutput};
pub use table::{emit_csv, read_csv, Cell, Column, Table};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, Geometry, SystemConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Node positions and 10 dBi antennas as in the reference scenario.
    #[default]
    Paper,
    /// 19 dBi antennas with the BD next to the IRS (see [`SystemConfig::calibrated`]).
    Calibrated,
}

/// Overrides on top of the chosen layout. Unset fields keep the layout's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub layout: Layout,
    pub elements: Option<usize>,
    pub p_max_dbm: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub rician_factor: Option<f64>,
    pub eta: Option<u32>,
    pub eps_sic: Option<f64>,
    pub eps_c: Option<f64>,
    pub quadrature_order: Option<usize>,
    pub lipschitz: Option<f64>,
    pub tol: Option<f64>,
    pub gain_tx_dbi: Option<f64>,
    pub gain_rx_dbi: Option<f64>,
    pub geometry: Option<Geometry>,
}

impl ScenarioSpec {
    /// Reads the `[scenario]` table of an experiment file, ignoring everything
    /// else; a file without one gives the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wrapper {
            #[serde(default)]
            scenario: ScenarioSpec,
        }
        let w: Wrapper = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        w.scenario.build()?;
        Ok(w.scenario)
    }

    pub fn build(&self) -> Result<SystemConfig> {
        let mut c = match self.layout {
            Layout::Paper => SystemConfig::default(),
            Layout::Calibrated => SystemConfig::calibrated(SystemConfig::default().elements),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        set!(
            elements,
            rician_factor,
            eta,
            eps_sic,
            eps_c,
            quadrature_order,
            lipschitz,
            tol,
            gain_tx_dbi,
            gain_rx_dbi,
            geometry
        );
        if let Some(dbm) = self.p_max_dbm {
            c.p_max = dbm_to_watts(dbm);
        }
        if let Some(dbm) = self.noise_power_dbm {
            c.noise_power = dbm_to_watts(dbm);
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PMaxDbm,
    Elements,
    EpsSic,
    EpsC,
    Eta,
    Alpha,
}

impl SweepParam {
    pub fn column(&self) -> Column {
        match self {
            SweepParam::PMaxDbm => Column::new("p_max", "dBm"),
            SweepParam::Elements => Column::new("elements", ""),
            SweepParam::EpsSic => Column::new("eps_sic", "bit/s/Hz"),
            SweepParam::EpsC => Column::new("eps_c", "bit/s/Hz"),
            SweepParam::Eta => Column::new("eta", ""),
            SweepParam::Alpha => Column::new("alpha", ""),
        }
    }

    fn is_integer(&self) -> bool {
        matches!(self, SweepParam::Elements | SweepParam::Eta)
    }
}

/// The single swept parameter of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn cell(&self, value: f64) -> Cell {
        if self.param.is_integer() {
            Cell::Int(value as u64)
        } else {
            Cell::Num(value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Psr,
    Csr,
    #[default]
    Both,
}

/// What the warden knows, which decides its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wcsi {
    /// Statistics known: the warden uses the DEP-minimizing threshold at every point.
    #[default]
    Stat,
    /// The warden keeps one threshold, the optimal one for the unswept scenario
    /// at `alpha` and its P_max, while the sweep moves the operating point.
    None,
}

/// Monte Carlo trials per point for the detection analysis.
pub const DEFAULT_DEP_TRIALS: u64 = 100_000;
/// Channel instances per point for optimization sweeps.
pub const DEFAULT_OPT_TRIALS: u64 = 10;
/// Random (phase, α) draws per instance for the baseline.
pub const DEFAULT_BASELINE_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub scenario: ScenarioSpec,
    pub sweep: Sweep,
    #[serde(default)]
    pub mode: ModeSelection,
    #[serde(default)]
    pub wcsi: Wcsi,
    /// Monte Carlo trials (detection analysis) or channel instances
    /// (optimization) per point. Defaults depend on the analysis.
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Reflection coefficient for the detection analysis.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_baseline_draws")]
    pub baseline_draws: usize,
    pub out: Option<PathBuf>,
}

fn default_alpha() -> f64 {
    0.2
}

fn default_baseline_draws() -> usize {
    DEFAULT_BASELINE_DRAWS
}

/// One sweep point: the scenario with the swept value applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub config: SystemConfig,
    pub alpha: f64,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioSpec, sweep: Sweep) -> Self {
        Self {
            scenario,
            sweep,
            mode: ModeSelection::default(),
            wcsi: Wcsi::default(),
            trials: None,
            seed: 0,
            alpha: default_alpha(),
            baseline_draws: DEFAULT_BASELINE_DRAWS,
            out: None,
        }
    }

    /// Parses and validates; TOML errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(what));
        if self.trials == Some(0) {
            return bad("trials must be at least 1".into());
        }
        if self.sweep.values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if self.baseline_draws == 0 {
            return bad("baseline_draws must be at least 1".into());
        }
        self.scenario.build()?;
        for &v in &self.sweep.values {
            let ok = match self.sweep.param {
                SweepParam::Elements | SweepParam::Eta => v >= 1.0 && v.fract() == 0.0,
                SweepParam::EpsSic | SweepParam::EpsC => v >= 0.0,
                SweepParam::Alpha => v > 0.0 && v <= 1.0,
                SweepParam::PMaxDbm => v.is_finite(),
            };
            if !ok {
                return bad(format!("sweep value {v} is invalid for {}", self.sweep.param.column().name));
            }
        }
        Ok(())
    }

    pub fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let base = self.scenario.build()?;
        self.sweep
            .values
            .iter()
            .map(|&value| {
                let mut config = base.clone();
                let mut alpha = self.alpha;
                match self.sweep.param {
                    SweepParam::PMaxDbm => config.p_max = dbm_to_watts(value),
                    SweepParam::Elements => config.elements = value as usize,
                    SweepParam::EpsSic => config.eps_sic = value,
                    SweepParam::EpsC => config.eps_c = value,
                    SweepParam::Eta => config.eta = value as u32,
                    SweepParam::Alpha => alpha = value,
                }
                config.validate()?;
                Ok(SweepPoint { value, config, alpha })
            })
            .collect()
    }
}
