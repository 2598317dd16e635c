//! Experiment configuration files (TOML).
//!
//! Physical inputs carry SI unit suffixes (`mass_kg`, `separation_m`, ...). Grid and
//! solver inputs are in the PDE unit system and are suffixed `_sigma` (lengths in units of
//! the packet width) or `_pde` (times in units of `2 m sigma^2 / hbar`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use snlab_core::{FrequencyConvention, NonlinearityUpdate, PhysicalParams, Scheme, SnError};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    GaussianCorrelations,
    SnEffective,
    BipartiteOracle,
    Signaling,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::GaussianCorrelations => "gaussian_correlations",
            Kind::SnEffective => "sn_effective",
            Kind::BipartiteOracle => "bipartite_oracle",
            Kind::Signaling => "signaling",
            Kind::Sweep => "sweep",
        }
    }

    pub fn subcommand(self) -> &'static str {
        match self {
            Kind::GaussianCorrelations => "gaussian",
            Kind::SnEffective => "sn-effective",
            Kind::BipartiteOracle => "bipartite",
            Kind::Signaling => "signaling",
            Kind::Sweep => "sweep",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    /// How `physical.trap_frequency_hz` is read: `cyclic` gives `omega0 = 2 pi f`,
    /// `angular` takes the number itself as `omega0` in rad/s.
    #[serde(default)]
    pub convention: FrequencyConvention,
    /// Multiplies Newton's constant everywhere (correlations and PDE coupling alike).
    #[serde(default = "one")]
    pub inflation: f64,
    /// Used when no `--out` is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<std::path::PathBuf>,
    pub physical: PhysicalSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sn_effective: Option<SnEffectiveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bipartite: Option<BipartiteSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signaling: Option<SignalingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    pub mass_kg: f64,
    pub separation_m: f64,
    pub trap_frequency_hz: f64,
    #[serde(default)]
    pub temperature_k: f64,
    /// Packet width; defaults to the trap ground-state width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_m: Option<f64>,
    /// Newton's constant [m^3 kg^-1 s^-2] before inflation; defaults to CODATA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravitational_constant_si: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianSection {
    pub temperatures_k: Vec<f64>,
    pub t_end_s: f64,
    pub dt_s: f64,
    pub mi_threshold_bits: f64,
    pub en_threshold_bits: f64,
}

impl Default for GaussianSection {
    fn default() -> Self {
        Self { temperatures_k: vec![0.0, 300e-6, 50e-6, 12e-6], t_end_s: 4.0, dt_s: 1e-3, mi_threshold_bits: 0.01, en_threshold_bits: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketSection {
    pub width_sigma: f64,
    pub z0_sigma: f64,
    pub k0_per_sigma: f64,
    pub chirp_per_sigma2: f64,
}

impl Default for PacketSection {
    fn default() -> Self {
        Self { width_sigma: 1.0, z0_sigma: 0.0, k0_per_sigma: 0.0, chirp_per_sigma2: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxSection {
    pub dtau_pde: f64,
    pub max_steps: usize,
    pub tolerance: f64,
}

impl Default for RelaxSection {
    fn default() -> Self {
        Self { dtau_pde: 1e-3, max_steps: 20_000, tolerance: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnEffectiveSection {
    pub ns: usize,
    pub nz: usize,
    pub s_extent_sigma: f64,
    pub z_half_extent_sigma: f64,
    pub dt_pde: f64,
    pub n_steps: usize,
    pub sample_every: usize,
    pub scheme: Scheme,
    pub nonlinearity: NonlinearityUpdate,
    /// Include the mirrored partner at `z = -L`.
    pub partner: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorbing_width_sigma: Option<f64>,
    pub initial: PacketSection,
    /// Relax the initial packet in imaginary time before the real-time run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relax: Option<RelaxSection>,
    /// Write a field snapshot at every sampled time.
    pub snapshots: bool,
}

impl Default for SnEffectiveSection {
    fn default() -> Self {
        Self {
            ns: 64,
            nz: 128,
            s_extent_sigma: 8.0,
            z_half_extent_sigma: 8.0,
            dt_pde: 4e-4,
            n_steps: 2500,
            sample_every: 25,
            scheme: Scheme::SplitOperator,
            nonlinearity: NonlinearityUpdate::PredictorCorrector,
            partner: true,
            absorbing_width_sigma: None,
            initial: PacketSection::default(),
            relax: None,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Sn,
    QuadraticNewton,
    FullNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BipartiteSection {
    pub n: usize,
    pub half_extent_sigma: f64,
    pub dt_pde: f64,
    pub n_steps: usize,
    pub sample_every: usize,
    pub kernel: KernelChoice,
    /// Softening length of the mean-field kernel.
    pub softening_sigma: f64,
}

impl Default for BipartiteSection {
    fn default() -> Self {
        Self {
            n: 256,
            half_extent_sigma: 10.0,
            dt_pde: 1e-4,
            n_steps: 10_000,
            sample_every: 500,
            kernel: KernelChoice::Sn,
            softening_sigma: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalingSection {
    pub n: usize,
    pub half_extent_sigma: f64,
    pub packet_width_sigma: f64,
    /// Distance between the two packets of the spin-z ensemble.
    pub peak_separation_sigma: f64,
    pub softening_sigma: f64,
    pub dt_pde: f64,
    pub n_steps: usize,
    pub sample_every: usize,
    pub nonlinearity: NonlinearityUpdate,
    pub modes: Vec<ModeChoice>,
    /// Also propagate the density matrix directly (at most 1024 nodes).
    pub von_neumann: bool,
}

impl Default for SignalingSection {
    fn default() -> Self {
        Self {
            n: 2048,
            half_extent_sigma: 40.0,
            packet_width_sigma: 1.0,
            peak_separation_sigma: 4.0,
            softening_sigma: 0.5,
            dt_pde: 5e-5,
            n_steps: 20_000,
            sample_every: 1000,
            nonlinearity: NonlinearityUpdate::PerStep,
            modes: vec![ModeChoice::Mixed, ModeChoice::Pure],
            von_neumann: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub base: Kind,
    /// Dotted path of the varied key, e.g. `physical.temperature_k`.
    pub parameter: String,
    pub values: Vec<toml::Value>,
    #[serde(default = "one_worker")]
    pub workers: usize,
}

fn one_worker() -> usize {
    1
}

/// Raw table and parsed form of a configuration file.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub table: toml::Table,
    pub config: ExperimentConfig,
}

/// Reads a TOML config, or the `config` echo of a run's `manifest.json`.
pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        return parse_manifest(&text);
    }
    parse(&text)
}

pub fn parse_manifest(text: &str) -> Result<LoadedConfig, CliError> {
    let mut manifest: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    let echo = manifest
        .get_mut("config")
        .map(serde_json::Value::take)
        .ok_or_else(|| CliError::Config("manifest: no `config` object".into()))?;
    let table: toml::Table = serde_json::from_value(echo).map_err(|e| CliError::Config(format!("manifest.config: {e}")))?;
    let config = from_table(&table)?;
    Ok(LoadedConfig { table, config })
}

pub fn parse(text: &str) -> Result<LoadedConfig, CliError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let config = from_table(&table)?;
    Ok(LoadedConfig { table, config })
}

pub fn from_table(table: &toml::Table) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::deserialize(toml::Value::Table(table.clone())).map_err(|e| CliError::Config(e.to_string()))
}

impl ExperimentConfig {
    /// Fills in the kind and its section, and rejects sections belonging to other kinds.
    pub fn resolve(mut self, kind: Kind) -> Result<Self, CliError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(CliError::Config(format!(
                    "kind: config declares `{}` but the `{}` subcommand runs `{}`",
                    k.name(),
                    kind.subcommand(),
                    kind.name()
                )));
            }
        }
        self.kind = Some(kind);
        if !(self.inflation.is_finite() && self.inflation >= 1.0) {
            return Err(CliError::Config(format!("inflation: must be >= 1, got {}", self.inflation)));
        }
        let allowed = match kind {
            Kind::Sweep => {
                let sweep = self.sweep.as_ref().ok_or_else(|| CliError::Config("sweep: section is required".into()))?;
                if sweep.base == Kind::Sweep {
                    return Err(CliError::Config("sweep.base: sweeps cannot be nested".into()));
                }
                if sweep.values.is_empty() {
                    return Err(CliError::Config("sweep.values: at least one value is required".into()));
                }
                if sweep.workers == 0 {
                    return Err(CliError::Config("sweep.workers: must be >= 1".into()));
                }
                sweep.base
            }
            k => k,
        };
        let present = [
            (Kind::GaussianCorrelations, self.gaussian.is_some()),
            (Kind::SnEffective, self.sn_effective.is_some()),
            (Kind::BipartiteOracle, self.bipartite.is_some()),
            (Kind::Signaling, self.signaling.is_some()),
        ];
        for (k, is_present) in present {
            if is_present && k != allowed {
                return Err(CliError::Config(format!("{}: section does not apply to `{}`", section_name(k), kind.name())));
            }
        }
        if kind != Kind::Sweep && self.sweep.is_some() {
            return Err(CliError::Config(format!("sweep: section does not apply to `{}`", kind.name())));
        }
        match allowed {
            Kind::GaussianCorrelations => {
                self.gaussian.get_or_insert_with(Default::default);
            }
            Kind::SnEffective => {
                self.sn_effective.get_or_insert_with(Default::default);
            }
            Kind::BipartiteOracle => {
                self.bipartite.get_or_insert_with(Default::default);
            }
            Kind::Signaling => {
                self.signaling.get_or_insert_with(Default::default);
            }
            Kind::Sweep => unreachable!(),
        }
        self.params()?;
        Ok(self)
    }

    /// SI parameters with the inflation folded into Newton's constant.
    pub fn params(&self) -> Result<PhysicalParams, CliError> {
        let p = &self.physical;
        let omega0 = self.convention.angular_frequency(p.trap_frequency_hz);
        let mut params = PhysicalParams::ground_state(p.mass_kg, p.separation_m, omega0, p.temperature_k).map_err(physical_error)?;
        if let Some(sigma) = p.sigma_m {
            params = params.with_sigma(sigma).map_err(physical_error)?;
        }
        let g = p.gravitational_constant_si.unwrap_or(params.g_newton);
        params.with_g(g * self.inflation).map_err(physical_error)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }
}

fn section_name(kind: Kind) -> &'static str {
    match kind {
        Kind::GaussianCorrelations => "gaussian",
        Kind::SnEffective => "sn_effective",
        Kind::BipartiteOracle => "bipartite",
        Kind::Signaling => "signaling",
        Kind::Sweep => "sweep",
    }
}

/// Names the offending config key for parameter errors.
fn physical_error(e: SnError) -> CliError {
    match e {
        SnError::InvalidParameter { field, reason } => {
            let key = match field {
                "m" => "physical.mass_kg",
                "separation" => "physical.separation_m",
                "omega0" => "physical.trap_frequency_hz",
                "temperature" => "physical.temperature_k",
                "sigma" => "physical.sigma_m",
                "g_newton" => "physical.gravitational_constant_si",
                other => other,
            };
            CliError::Config(format!("{key}: {reason}"))
        }
        other => CliError::Core(other),
    }
}

/// Replaces the value at a dotted path, creating intermediate tables.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Config(format!("sweep.parameter: empty path `{path}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("sweep.parameter: `{p}` in `{path}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
