//! CSV, JSON and manifest writers.
//!
//! Every CSV has a header row, comma separators and floats printed with 17 significant
//! digits, so identical runs produce identical bytes. Column layouts are versioned by the
//! schema ids below and listed in each run's manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

pub const CORRELATIONS_SCHEMA: &str = "correlations/1";
pub const CORRELATIONS_COLUMNS: &[&str] = &[
    "temperature_k",
    "t_s",
    "log_negativity_bits",
    "mutual_information_bits",
    "nu_tilde_minus",
    "nu_minus",
    "nu_plus",
];

pub const DIAGNOSTICS_SCHEMA: &str = "sn_diagnostics/1";
pub const DIAGNOSTICS_COLUMNS: &[&str] = &[
    "t_pde",
    "t_s",
    "norm",
    "mean_z_sigma",
    "mean_pz_pde",
    "width_z_sigma",
    "width_s_sigma",
    "kinetic_energy_pde",
    "dtdt_direct_pde",
    "dtdt_continuity_pde",
    "boundary_ratio",
];

pub const BIPARTITE_SCHEMA: &str = "bipartite/1";
pub const BIPARTITE_COLUMNS: &[&str] = &[
    "t_pde",
    "norm",
    "purity",
    "mutual_information_bits",
    "cov_x1_x1",
    "cov_x1_p1",
    "cov_x1_x2",
    "cov_x1_p2",
    "cov_p1_p1",
    "cov_p1_x2",
    "cov_p1_p2",
    "cov_x2_x2",
    "cov_x2_p2",
    "cov_p2_p2",
];

pub const GAP_SCHEMA: &str = "signaling_gap/1";
pub const GAP_COLUMNS: &[&str] = &["t_pde", "mode", "l1_gap"];

/// Screen densities: `z_sigma`, then one column per evolved ensemble.
pub const SCREENS_SCHEMA: &str = "screens/1";

pub const VON_NEUMANN_SCHEMA: &str = "von_neumann/1";
pub const VON_NEUMANN_COLUMNS: &[&str] = &["t_pde", "trace_norm_deviation"];

pub const SWEEP_SCHEMA: &str = "sweep/1";
pub const SWEEP_COLUMNS: &[&str] = &["index", "value", "status", "exit_code", "directory", "message"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::Output(format!("{}: row of {} fields under {} columns", path.display(), row.len(), header.len())));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    /// Column schema id for CSV files, `None` for other files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
}

impl OutputFile {
    pub fn csv(path: &str, schema: &str) -> Self {
        Self { path: path.into(), schema: Some(schema.into()) }
    }

    pub fn plain(path: &str) -> Self {
        Self { path: path.into(), schema: None }
    }
}

/// Unit scales and couplings implied by the configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub omega0_rad_s: f64,
    pub sigma_m: f64,
    pub pde_time_unit_s: f64,
    pub pde_energy_unit_j: f64,
    /// `2 G m^3 sigma / hbar^2` with the configured (uninflated) Newton constant.
    pub coupling_physical: f64,
    /// Coupling actually used by the wave-equation solvers.
    pub coupling_effective: f64,
    pub separation_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub code_version: String,
    pub kind: String,
    /// Reproduces this directory from the files it contains.
    pub rerun: String,
    pub config_file: String,
    pub config: ExperimentConfig,
    pub derived: Derived,
    pub wall_time_s: f64,
    pub regression_constants: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
    pub warnings: Vec<String>,
}
