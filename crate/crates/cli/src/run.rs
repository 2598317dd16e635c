//! One runner per experiment kind. Each writes its files into `out` and reports them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use snlab_core::correlations::{first_exceedance, mutual_information, trajectory};
use snlab_core::ensemble::{evolve_ensemble, l1_distance, spin_ensemble_pair, von_neumann_consistency};
use snlab_core::gaussian::{coupling_frequency, covariance_natural, phonon_number};
use snlab_core::reference::{
    ENTANGLING_MUTUAL_INFORMATION_FLOOR, MIXED_SIGNALING_GAP_CEILING, PRODUCT_MUTUAL_INFORMATION_CEILING,
    PURE_SIGNALING_GAP_FLOOR, PURITY_DEFICIT_CEILING,
};
use snlab_core::snapshot::write_field;
use snlab_core::solver::{ehrenfest_force_si, evolve_bipartite_1d, relax_ground_state, CylinderSolver};
use snlab_core::{
    BipartiteKernel, EnsembleMode, GridSpec, PhysicalParams, SolverConfig, WaveField,
};

use crate::config::{ExperimentConfig, KernelChoice, ModeChoice};
use crate::error::CliError;
use crate::output::*;

#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<OutputFile>,
    pub constants: BTreeMap<String, f64>,
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: must be > 0, got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<(), CliError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: must be >= 1")))
    }
}

fn summary(out: &Path, kind: &str, body: serde_json::Value) -> Result<OutputFile, CliError> {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), json!(SUMMARY_SCHEMA_VERSION));
    map.insert("kind".into(), json!(kind));
    if let serde_json::Value::Object(rest) = body {
        map.extend(rest);
    }
    write_json(&out.join("summary.json"), &map)?;
    Ok(OutputFile::plain("summary.json"))
}

#[derive(Serialize)]
struct TemperatureSummary {
    temperature_k: f64,
    phonon_number: f64,
    first_mi_above_s: Option<f64>,
    first_en_above_s: Option<f64>,
    /// `true` when the mutual-information threshold is crossed strictly first (or
    /// entanglement never crosses).
    mi_precedes_en: bool,
    max_log_negativity_bits: f64,
    max_mutual_information_bits: f64,
}

pub fn gaussian_correlations(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let sec = cfg.gaussian.as_ref().expect("resolved config has its section");
    positive("gaussian.t_end_s", sec.t_end_s)?;
    positive("gaussian.dt_s", sec.dt_s)?;
    positive("gaussian.mi_threshold_bits", sec.mi_threshold_bits)?;
    positive("gaussian.en_threshold_bits", sec.en_threshold_bits)?;
    if sec.temperatures_k.is_empty() {
        return Err(CliError::Config("gaussian.temperatures_k: at least one temperature is required".into()));
    }
    let base = cfg.params()?;
    let n = (sec.t_end_s / sec.dt_s).round() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * sec.dt_s).collect();

    let mut rows = Vec::with_capacity(times.len() * sec.temperatures_k.len());
    let mut per_t = Vec::new();
    for (i, &temp) in sec.temperatures_k.iter().enumerate() {
        let p = base
            .with_temperature(temp)
            .map_err(|e| CliError::Config(format!("gaussian.temperatures_k[{i}]: {e}")))?;
        let series = trajectory(&p, &times)?;
        let t_i = first_exceedance(&series, sec.mi_threshold_bits, |r| r.mutual_information);
        let t_e = first_exceedance(&series, sec.en_threshold_bits, |r| r.log_negativity);
        per_t.push(TemperatureSummary {
            temperature_k: temp,
            phonon_number: phonon_number(&p),
            first_mi_above_s: t_i,
            first_en_above_s: t_e,
            mi_precedes_en: match (t_i, t_e) {
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                _ => false,
            },
            max_log_negativity_bits: series.iter().map(|r| r.log_negativity).fold(0.0, f64::max),
            max_mutual_information_bits: series.iter().map(|r| r.mutual_information).fold(0.0, f64::max),
        });
        rows.extend(series.iter().map(|r| {
            vec![
                num(temp),
                num(r.t),
                num(r.log_negativity),
                num(r.mutual_information),
                num(r.nu_tilde_minus),
                num(r.nu_minus),
                num(r.nu_plus),
            ]
        }));
    }
    write_csv(&out.join("correlations.csv"), CORRELATIONS_COLUMNS, rows)?;
    let sum = summary(
        out,
        cfg_kind(cfg),
        json!({
            "coupling_frequency_rad_s": coupling_frequency(&base),
            "mi_threshold_bits": sec.mi_threshold_bits,
            "en_threshold_bits": sec.en_threshold_bits,
            "samples_per_temperature": times.len(),
            "temperatures": per_t,
        }),
    )?;
    Ok(Outcome { outputs: vec![OutputFile::csv("correlations.csv", CORRELATIONS_SCHEMA), sum], constants: BTreeMap::new() })
}

fn cfg_kind(cfg: &ExperimentConfig) -> &'static str {
    cfg.kind.map_or("unknown", |k| k.name())
}

pub fn sn_effective(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let sec = cfg.sn_effective.as_ref().expect("resolved config has its section");
    positive("sn_effective.dt_pde", sec.dt_pde)?;
    at_least_one("sn_effective.n_steps", sec.n_steps)?;
    at_least_one("sn_effective.sample_every", sec.sample_every)?;
    positive("sn_effective.initial.width_sigma", sec.initial.width_sigma)?;
    let params = cfg.params()?;
    let units = params.pde_units();
    let g = units.coupling;
    let separation = sec.partner.then(|| params.separation / params.sigma);
    let grid = GridSpec::cylinder(sec.ns, sec.nz, sec.s_extent_sigma, sec.z_half_extent_sigma)?;
    let init = &sec.initial;
    let mut psi = WaveField::gaussian_cylinder(grid, init.width_sigma, init.z0_sigma, init.k0_per_sigma, init.chirp_per_sigma2)?;
    let mut relax_steps = None;
    if let Some(r) = &sec.relax {
        positive("sn_effective.relax.dtau_pde", r.dtau_pde)?;
        let (ground, steps) = relax_ground_state(psi, g, separation, r.dtau_pde, r.max_steps, r.tolerance)?;
        psi = ground;
        relax_steps = Some(steps);
    }
    let initial_force_n = if separation.is_some() { Some(ehrenfest_force_si(&psi, &params)?) } else { None };

    let mut solver_cfg = SolverConfig::new(sec.dt_pde, sec.n_steps)
        .with_sample_every(sec.sample_every)
        .with_scheme(sec.scheme)
        .with_nonlinearity(sec.nonlinearity);
    if let Some(w) = sec.absorbing_width_sigma {
        positive("sn_effective.absorbing_width_sigma", w)?;
        solver_cfg = solver_cfg.with_absorbing(w);
    }
    let mut solver = CylinderSolver::new(&grid, g, separation, solver_cfg)?;
    let traj = solver.run(psi, sec.snapshots)?;

    let rows = traj.diagnostics.iter().map(|d| {
        vec![
            num(d.t),
            num(d.t * units.time),
            num(d.norm),
            num(d.mean_z),
            num(d.mean_pz),
            num(d.width_z),
            num(d.width_s),
            num(d.kinetic_energy),
            num(d.dt_dt_direct),
            num(d.dt_dt_continuity),
            num(d.boundary_ratio),
        ]
    });
    write_csv(&out.join("diagnostics.csv"), DIAGNOSTICS_COLUMNS, rows)?;
    let mut outputs = vec![OutputFile::csv("diagnostics.csv", DIAGNOSTICS_SCHEMA)];
    if sec.snapshots {
        fs::create_dir_all(out.join("snapshots"))?;
        for (i, (t, field)) in traj.snapshots.iter().enumerate() {
            let stem = format!("snapshots/snap_{i:05}");
            write_field(&out.join(&stem), field, *t, Some(&params))?;
            outputs.push(OutputFile::plain(&format!("{stem}.bin")));
            outputs.push(OutputFile::plain(&format!("{stem}.json")));
        }
    }
    let last = traj.diagnostics.last();
    outputs.push(summary(
        out,
        cfg_kind(cfg),
        json!({
            "coupling": g,
            "separation_sigma": separation,
            "relax_steps": relax_steps,
            "initial_partner_force_n": initial_force_n,
            "max_norm_drift_per_step": traj.max_norm_drift,
            "boundary_warning": traj.boundary_warning,
            "final": last,
        }),
    )?);
    Ok(Outcome { outputs, constants: BTreeMap::new() })
}

pub fn bipartite_oracle(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let sec = cfg.bipartite.as_ref().expect("resolved config has its section");
    positive("bipartite.dt_pde", sec.dt_pde)?;
    at_least_one("bipartite.n_steps", sec.n_steps)?;
    at_least_one("bipartite.sample_every", sec.sample_every)?;
    let params = cfg.params()?;
    let g = params.pde_units().coupling;
    let l = params.separation / params.sigma;
    let kernel = match sec.kernel {
        KernelChoice::Sn => {
            positive("bipartite.softening_sigma", sec.softening_sigma)?;
            BipartiteKernel::SoftenedGravity { a: sec.softening_sigma }
        }
        KernelChoice::QuadraticNewton => BipartiteKernel::QuadraticNewton,
        KernelChoice::FullNewton => BipartiteKernel::FullNewton,
    };
    let grid = GridSpec::plane(sec.n, sec.half_extent_sigma)?;
    let psi = WaveField::gaussian_product(grid, 1.0, 0.0, 0.0)?;
    let solver_cfg = SolverConfig::new(sec.dt_pde, sec.n_steps).with_sample_every(sec.sample_every);
    let rep = evolve_bipartite_1d(psi, g, l, kernel, solver_cfg)?;

    let rows = rep.samples.iter().map(|s| {
        let c = &s.covariance;
        let mut row = vec![num(s.t), num(s.norm), num(s.purity), num(s.mutual_information)];
        for j in 0..4 {
            for k in j..4 {
                row.push(num(c[j][k]));
            }
        }
        row
    });
    write_csv(&out.join("bipartite.csv"), BIPARTITE_COLUMNS, rows)?;

    let w2 = 8.0 * g / l.powi(3);
    let t_end = rep.samples.last().map_or(0.0, |s| s.t);
    let gaussian_mi = mutual_information(&covariance_natural(t_end, w2.sqrt()))?;
    let min_purity = rep.min_purity();
    let max_mi = rep.max_mutual_information();
    let final_mi = rep.samples.last().map_or(0.0, |s| s.mutual_information);
    let product_form = 1.0 - min_purity <= PURITY_DEFICIT_CEILING && max_mi < PRODUCT_MUTUAL_INFORMATION_CEILING;
    let sum = summary(
        out,
        cfg_kind(cfg),
        json!({
            "kernel": kernel,
            "coupling": g,
            "separation_sigma": l,
            "quadratic_coupling_w2": w2,
            "min_purity": min_purity,
            "max_mutual_information_bits": max_mi,
            "final_mutual_information_bits": final_mi,
            "gaussian_model_mutual_information_bits": gaussian_mi,
            "product_form_preserved": product_form,
            "entangling": final_mi > ENTANGLING_MUTUAL_INFORMATION_FLOOR,
            "max_norm_drift_per_step": rep.max_norm_drift,
            "boundary_warning": rep.boundary_warning,
        }),
    )?;
    let constants = BTreeMap::from([
        ("purity_deficit_ceiling".to_string(), PURITY_DEFICIT_CEILING),
        ("product_mutual_information_ceiling_bits".to_string(), PRODUCT_MUTUAL_INFORMATION_CEILING),
        ("entangling_mutual_information_floor_bits".to_string(), ENTANGLING_MUTUAL_INFORMATION_FLOOR),
    ]);
    Ok(Outcome { outputs: vec![OutputFile::csv("bipartite.csv", BIPARTITE_SCHEMA), sum], constants })
}

fn mode_of(m: ModeChoice) -> EnsembleMode {
    match m {
        ModeChoice::Pure => EnsembleMode::PureStateSn,
        ModeChoice::Mixed => EnsembleMode::MixedStateSn,
    }
}

fn mode_label(m: ModeChoice) -> &'static str {
    match m {
        ModeChoice::Pure => "pure",
        ModeChoice::Mixed => "mixed",
    }
}

pub fn signaling(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let sec = cfg.signaling.as_ref().expect("resolved config has its section");
    positive("signaling.dt_pde", sec.dt_pde)?;
    positive("signaling.packet_width_sigma", sec.packet_width_sigma)?;
    positive("signaling.softening_sigma", sec.softening_sigma)?;
    at_least_one("signaling.n_steps", sec.n_steps)?;
    at_least_one("signaling.sample_every", sec.sample_every)?;
    if sec.modes.is_empty() {
        return Err(CliError::Config("signaling.modes: at least one mode is required".into()));
    }
    let params: PhysicalParams = cfg.params()?;
    let g = params.pde_units().coupling;
    let grid = GridSpec::line(sec.n, sec.half_extent_sigma)?;
    let (a, b) = spin_ensemble_pair(grid, sec.packet_width_sigma, sec.peak_separation_sigma)?;
    let solver_cfg = SolverConfig::new(sec.dt_pde, sec.n_steps)
        .with_sample_every(sec.sample_every)
        .with_nonlinearity(sec.nonlinearity);
    let soft = sec.softening_sigma;

    let free = evolve_ensemble(a.clone(), 0.0, soft, solver_cfg, EnsembleMode::MixedStateSn)?;
    let mut gap_rows = Vec::new();
    let mut screen_header = vec!["z_sigma".to_string(), "free".to_string()];
    let mut screens = vec![free.densities.last().cloned().unwrap_or_default()];
    let mut per_mode = serde_json::Map::new();
    for &m in &sec.modes {
        let ta = evolve_ensemble(a.clone(), g, soft, solver_cfg, mode_of(m))?;
        let tb = evolve_ensemble(b.clone(), g, soft, solver_cfg, mode_of(m))?;
        let mut max_gap = 0.0f64;
        for ((t, da), db) in ta.times.iter().zip(&ta.densities).zip(&tb.densities) {
            let gap = l1_distance(&grid, da, db);
            max_gap = max_gap.max(gap);
            gap_rows.push(vec![num(*t), mode_label(m).to_string(), num(gap)]);
        }
        let label = mode_label(m);
        screen_header.push(format!("{label}_spin_z"));
        screen_header.push(format!("{label}_spin_x"));
        screens.push(ta.densities.last().cloned().unwrap_or_default());
        screens.push(tb.densities.last().cloned().unwrap_or_default());
        per_mode.insert(
            label.to_string(),
            json!({
                "max_gap": max_gap,
                "max_norm_error": ta.max_norm_error.max(tb.max_norm_error),
                "below_mixed_ceiling": max_gap < MIXED_SIGNALING_GAP_CEILING,
            }),
        );
    }
    write_csv(&out.join("gap.csv"), GAP_COLUMNS, gap_rows)?;
    let GridSpec::Line { z } = grid else { unreachable!("line grid") };
    let screen_rows = (0..z.n).map(|k| {
        let mut row = vec![num(z.coord(k))];
        row.extend(screens.iter().map(|d| num(d[k])));
        row
    });
    write_csv(&out.join("screens.csv"), &screen_header, screen_rows)?;
    let mut outputs = vec![OutputFile::csv("gap.csv", GAP_SCHEMA), OutputFile::csv("screens.csv", SCREENS_SCHEMA)];

    let mut von_neumann = None;
    if sec.von_neumann {
        let rep = von_neumann_consistency(a, g, soft, solver_cfg)?;
        let rows = rep.samples.iter().map(|(t, d)| vec![num(*t), num(*d)]);
        write_csv(&out.join("von_neumann.csv"), VON_NEUMANN_COLUMNS, rows)?;
        outputs.push(OutputFile::csv("von_neumann.csv", VON_NEUMANN_SCHEMA));
        von_neumann = Some(rep.max_deviation);
    }
    outputs.push(summary(
        out,
        cfg_kind(cfg),
        json!({
            "coupling": g,
            "t_end_pde": sec.dt_pde * sec.n_steps as f64,
            "modes": per_mode,
            "von_neumann_max_deviation": von_neumann,
        }),
    )?);
    let constants = BTreeMap::from([
        ("mixed_signaling_gap_ceiling".to_string(), MIXED_SIGNALING_GAP_CEILING),
        ("pure_signaling_gap_floor".to_string(), PURE_SIGNALING_GAP_FLOOR),
    ]);
    Ok(Outcome { outputs, constants })
}
