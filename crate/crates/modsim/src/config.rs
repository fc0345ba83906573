//! Run configuration: one TOML file, every key optional.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use modsim_core::bayesopt::{AcquisitionKind, KernelSpec, SearchConfig};
use modsim_core::choice::Mode;
use modsim_core::equilibrium::{EquilibriumConfig, SupplyParams};
use modsim_core::netgraph::TransitAccessConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub synthetic: SyntheticConfig,
    pub network: NetworkConfig,
    pub supply: SupplyParams,
    pub equilibrium: EquilibriumConfig,
    pub simulate: SimulateConfig,
    pub optimize: OptimizeConfig,
    pub calibration: CalibrationConfig,
    pub scenario: ScenarioConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            data: DataConfig::default(),
            synthetic: SyntheticConfig::default(),
            network: NetworkConfig::default(),
            supply: SupplyParams::default(),
            equilibrium: EquilibriumConfig::default(),
            simulate: SimulateConfig::default(),
            optimize: OptimizeConfig::default(),
            calibration: CalibrationConfig::default(),
            scenario: ScenarioConfig::default(),
        }
    }
}

/// Input files. The road network is generated when `nodes` is absent, and
/// demand when `demand` is absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub lines: Option<PathBuf>,
    pub line_stops: Option<PathBuf>,
    pub demand: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub speed_mps: f64,
    pub requests: usize,
    pub horizon_s: f64,
    /// Defaults to the run seed.
    pub demand_seed: Option<u64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { rows: 10, cols: 10, spacing_m: 400.0, speed_mps: 8.0, requests: 500, horizon_s: 3600.0, demand_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub walk_radius_mi: f64,
    /// Defaults to the bounding box of the nodes.
    pub area_sq_mi: Option<f64>,
    pub transit: TransitAccessConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { walk_radius_mi: 0.5, area_sq_mi: None, transit: TransitAccessConfig::default() }
    }
}

/// Fixed mode shares for the one-shot `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub shares: BTreeMap<Mode, f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { shares: Mode::ALL.iter().map(|&m| (m, 0.25)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Bo,
    Random,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Profit at the mode-choice equilibrium.
    #[default]
    Equilibrium,
    /// A closed-form profit surface over the fleet sizes.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub method: Method,
    pub objective: Objective,
    pub budget: usize,
    pub n_init: usize,
    pub acquisition: AcquisitionKind,
    pub kappa: f64,
    pub delta: f64,
    pub kernel: KernelSpec,
    pub refit_lengthscale: bool,
    pub noise: f64,
    pub search: SearchConfig,
    /// Lower and upper fleet sizes (n1, n4, n10).
    pub fleet_min: [usize; 3],
    pub fleet_max: [usize; 3],
    /// Fleet step of the grid.
    pub grid_step: usize,
    /// Hold (γ4, γ10) fixed; otherwise both are searched over [0, 1].
    pub fixed_gamma: Option<[f64; 2]>,
    /// Wall-clock cap per equilibrium evaluation, seconds.
    pub eval_time_limit_s: Option<f64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            objective: Objective::default(),
            budget: 40,
            n_init: 10,
            acquisition: AcquisitionKind::default(),
            kappa: 2.0,
            delta: 0.1,
            kernel: KernelSpec::default(),
            refit_lengthscale: false,
            noise: 1e-4,
            search: SearchConfig::default(),
            fleet_min: [25, 0, 0],
            fleet_max: [800, 300, 150],
            grid_step: 25,
            fixed_gamma: None,
            eval_time_limit_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub asc_grid: Vec<f64>,
    /// Target transit share range.
    pub target: [f64; 2],
    /// Size of the single ride-hailing fleet.
    pub fleet: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { asc_grid: vec![-1.0, -1.5, -2.0, -2.5, -3.0], target: [0.05, 0.15], fleet: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Discount-function scenarios 1 to 3; 0 means no discount penalty.
    pub scenarios: Vec<u8>,
    /// Per-ride levies on ride-hailing to compare.
    pub taxes: Vec<f64>,
    /// Optimize supply for every (scenario, tax) pair.
    pub optimize: bool,
    /// Scale the configured discounts by each multiplier at fixed fleets.
    pub multipliers: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![1, 2, 3],
            taxes: vec![0.0],
            optimize: true,
            multipliers: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
        }
    }
}

impl RunConfig {
    /// Reads `path` (or defaults when `None`), applies `key=value`
    /// overrides, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut value: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Some(base) = path.and_then(Path::parent) {
            cfg.data.resolve(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        self.equilibrium.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.supply.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.network.walk_radius_mi > 0.0) {
            return bad("network.walk_radius_mi must be positive");
        }
        let o = &self.optimize;
        if o.budget == 0 || o.n_init == 0 {
            return bad("optimize.budget and optimize.n_init must be positive");
        }
        if o.grid_step == 0 || (0..3).any(|i| o.fleet_min[i] > o.fleet_max[i]) {
            return bad("optimize fleet bounds must satisfy min <= max with a positive grid step");
        }
        if let Some(g) = o.fixed_gamma {
            if g.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return bad("optimize.fixed_gamma must lie in [0, 1]");
            }
        }
        if self.calibration.asc_grid.is_empty() || !(self.calibration.target[0] <= self.calibration.target[1]) {
            return bad("calibration needs a non-empty grid and target lo <= hi");
        }
        if self.scenario.scenarios.iter().any(|&s| s > 3) {
            return bad("scenario numbers must be 0 to 3");
        }
        if self.scenario.taxes.iter().chain(&self.scenario.multipliers).any(|&x| !(x >= 0.0)) {
            return bad("taxes and multipliers must be non-negative");
        }
        let total: f64 = self.simulate.shares.values().sum();
        if self.simulate.shares.values().any(|&s| !(s >= 0.0)) || !(total > 0.0) {
            return bad("simulate.shares must be non-negative with a positive sum");
        }
        if self.synthetic.rows * self.synthetic.cols < 2 && self.data.nodes.is_none() {
            return bad("the synthetic grid needs at least two nodes");
        }
        let d = &self.data;
        if d.nodes.is_some() != d.edges.is_some() {
            return bad("data.nodes and data.edges go together");
        }
        let transit = [&d.stations, &d.lines, &d.line_stops].iter().filter(|p| p.is_some()).count();
        if transit != 0 && transit != 3 {
            return bad("data.stations, data.lines and data.line_stops go together");
        }
        if d.nodes.is_some() && transit == 0 {
            return bad("a road network from files needs the transit files too");
        }
        for p in [&d.nodes, &d.edges, &d.stations, &d.lines, &d.line_stops, &d.demand].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn demand_seed(&self) -> u64 {
        self.synthetic.demand_seed.unwrap_or(self.seed)
    }
}

impl DataConfig {
    /// Relative paths are taken relative to the config file.
    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.nodes, &mut self.edges, &mut self.stations, &mut self.lines, &mut self.line_stops, &mut self.demand]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// `a.b.c=value`, where value is read as a TOML literal or else as a string.
fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
