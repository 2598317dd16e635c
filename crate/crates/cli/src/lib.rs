//! Config-driven runner for the snlab experiments.
//!
//! Every run writes its CSV and JSON outputs plus `config_resolved.toml` and
//! `manifest.json` into the output directory.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use snlab_core::FrequencyConvention;

use crate::config::{from_table, set_path, Kind};
pub use crate::error::CliError;
use crate::output::{write_csv, write_json, Derived, Manifest, OutputFile, MANIFEST_SCHEMA_VERSION, SWEEP_COLUMNS, SWEEP_SCHEMA};
use crate::run::Outcome;

pub const TOOL: &str = "snlab";

/// Loads `config_path` (TOML, or a previous run's `manifest.json`), runs `kind` and writes
/// everything into `out`, falling back to the config's `output_dir`.
pub fn execute(kind: Kind, config_path: &Path, out: Option<&Path>, convention: Option<FrequencyConvention>) -> Result<(), CliError> {
    let mut loaded = config::load(config_path)?;
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => loaded
            .config
            .output_dir
            .clone()
            .ok_or_else(|| CliError::Config("output_dir: required when --out is not given".into()))?,
    };
    if let Some(c) = convention {
        let name = match c {
            FrequencyConvention::Cyclic => "cyclic",
            FrequencyConvention::Angular => "angular",
        };
        loaded.table.insert("convention".into(), toml::Value::String(name.into()));
    }
    run_table(kind, &loaded.table, &config_path.display().to_string(), &out)
}

fn run_table(kind: Kind, table: &toml::Table, config_file: &str, out: &Path) -> Result<(), CliError> {
    let cfg = from_table(table)?.resolve(kind)?;
    let params = cfg.params()?;
    fs::create_dir_all(out).map_err(|e| CliError::Output(format!("cannot create {}: {e}", out.display())))?;
    let resolved = cfg.to_toml();
    fs::write(out.join("config_resolved.toml"), &resolved)?;
    let start = Instant::now();
    log::info!("running {} into {}", kind.name(), out.display());

    let result = match kind {
        Kind::GaussianCorrelations => run::gaussian_correlations(&cfg, out),
        Kind::SnEffective => run::sn_effective(&cfg, out),
        Kind::BipartiteOracle => run::bipartite_oracle(&cfg, out),
        Kind::Signaling => run::signaling(&cfg, out),
        Kind::Sweep => sweep(&cfg, table, out),
    };
    let (outcome, failure) = match result {
        Ok(o) => (o, None),
        Err(CliError::Sweep { failed, total, code }) => (sweep_outcome(), Some(CliError::Sweep { failed, total, code })),
        Err(e) => return Err(e),
    };

    let uninflated = {
        let mut c = cfg.clone();
        c.inflation = 1.0;
        c.params()?
    };
    let units = params.pde_units();
    let derived = Derived {
        omega0_rad_s: params.omega0,
        sigma_m: params.sigma,
        pde_time_unit_s: units.time,
        pde_energy_unit_j: units.energy,
        coupling_physical: uninflated.pde_units().coupling,
        coupling_effective: units.coupling,
        separation_sigma: params.separation / params.sigma,
    };
    let mut outputs = vec![OutputFile::plain("config_resolved.toml"), OutputFile::plain("manifest.json")];
    outputs.extend(outcome.outputs);
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: TOOL.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        kind: kind.name().into(),
        rerun: format!("{TOOL} {} --config {} --out {}", kind.subcommand(), out.join("config_resolved.toml").display(), out.display()),
        config_file: config_file.into(),
        config: cfg,
        derived,
        wall_time_s: start.elapsed().as_secs_f64(),
        regression_constants: outcome.constants,
        outputs,
        warnings: params.warnings(),
    };
    for w in &manifest.warnings {
        log::warn!("{w}");
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    failure.map_or(Ok(()), Err)
}

fn sweep_outcome() -> Outcome {
    Outcome { outputs: vec![OutputFile::csv("sweep.csv", SWEEP_SCHEMA)], constants: BTreeMap::new() }
}

/// Runs the base experiment once per value, each in `run_NNN/`, on a pool of
/// `sweep.workers` threads.
fn sweep(cfg: &config::ExperimentConfig, table: &toml::Table, out: &Path) -> Result<Outcome, CliError> {
    let sec = cfg.sweep.as_ref().expect("resolved sweep has its section");
    let mut base = table.clone();
    base.remove("sweep");
    base.insert("kind".into(), toml::Value::String(sec.base.name().into()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sec.workers)
        .build()
        .map_err(|e| CliError::Output(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(String, Result<(), CliError>)> = pool.install(|| {
        sec.values
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                let dir = format!("run_{i:03}");
                let res = (|| {
                    let mut t = base.clone();
                    set_path(&mut t, &sec.parameter, v.clone())?;
                    run_table(sec.base, &t, &format!("{}[{i}]", sec.parameter), &out.join(&dir))
                })();
                (dir, res)
            })
            .collect()
    });

    let mut worst = 0;
    let mut failed = 0;
    let rows: Vec<Vec<String>> = results
        .iter()
        .zip(&sec.values)
        .enumerate()
        .map(|(i, ((dir, res), v))| {
            let (status, code, message) = match res {
                Ok(()) => ("ok", 0, String::new()),
                Err(e) => {
                    failed += 1;
                    worst = worst.max(e.exit_code());
                    log::error!("{dir}: {e}");
                    ("failed", e.exit_code(), e.to_string())
                }
            };
            vec![i.to_string(), v.to_string(), status.into(), code.to_string(), dir.clone(), message]
        })
        .collect();
    write_csv(&out.join("sweep.csv"), SWEEP_COLUMNS, rows)?;
    if failed > 0 {
        return Err(CliError::Sweep { failed, total: sec.values.len(), code: worst });
    }
    Ok(sweep_outcome())
}
