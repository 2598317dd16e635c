use std::fs;
use std::path::Path;
use std::process::Command;

const PHYSICAL: &str = r#"
[physical]
mass_kg = 1.11e-17
separation_m = 5.0e-7
trap_frequency_hz = 5.0e5
"#;

fn snlab(sub: &str, config: &str, dir: &Path) -> (i32, String) {
    let cfg = dir.join("in.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_snlab"))
        .args([sub, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

fn floats(csv: &str, name: &str) -> Vec<f64> {
    column(csv, name).iter().map(|s| s.parse().unwrap()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gaussian_run_writes_versioned_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{PHYSICAL}\n[gaussian]\ntemperatures_k = [0.0]\nt_end_s = 0.5\ndt_s = 0.01\n");
    let (code, err) = snlab("gaussian", &cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("correlations.csv")).unwrap();
    assert!(csv.starts_with("temperature_k,t_s,log_negativity_bits,mutual_information_bits,"));
    assert_eq!(csv.lines().count(), 52);
    assert!(column(&csv, "t_s")[1].contains('e'));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["kind"], "gaussian_correlations");
    assert_eq!(m["config"]["inflation"], 1.0);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o["schema"] == "correlations/1"));
    assert_eq!(json(&out.join("summary.json"))["schema_version"], 1);
    assert!(out.join("config_resolved.toml").exists());
}

#[test]
fn resolved_config_reproduces_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{PHYSICAL}\n[gaussian]\ntemperatures_k = [0.0, 1e-5]\nt_end_s = 1.0\ndt_s = 0.01\n");
    assert_eq!(snlab("gaussian", &cfg, dir.path()).0, 0);
    let out = dir.path().join("out");
    let first = fs::read(out.join("correlations.csv")).unwrap();
    let again = dir.path().join("again");
    let status = Command::new(env!("CARGO_BIN_EXE_snlab"))
        .args(["gaussian", "--config"])
        .arg(out.join("config_resolved.toml"))
        .arg("--out")
        .arg(&again)
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read(again.join("correlations.csv")).unwrap(), first);
}

#[test]
fn zero_gravity_leaves_no_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{PHYSICAL}gravitational_constant_si = 0.0\n[gaussian]\ntemperatures_k = [0.0]\nt_end_s = 2.0\ndt_s = 0.01\n"
    );
    let (code, err) = snlab("gaussian", &cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("out/correlations.csv")).unwrap();
    assert!(floats(&csv, "log_negativity_bits").iter().all(|&v| v == 0.0));
    assert!(floats(&csv, "mutual_information_bits").iter().all(|&v| v == 0.0));
}

#[test]
fn angular_convention_delays_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{PHYSICAL}\n[gaussian]\ntemperatures_k = [0.0]\nt_end_s = 4.0\ndt_s = 0.01\n");
    assert_eq!(snlab("gaussian", &cfg, dir.path()).0, 0);
    let cyclic = json(&dir.path().join("out/summary.json"))["temperatures"][0]["first_mi_above_s"].as_f64().unwrap();
    let angular_cfg = format!("convention = \"angular\"\n{cfg}");
    assert_eq!(snlab("gaussian", &angular_cfg, dir.path()).0, 0);
    let angular = json(&dir.path().join("out/summary.json"))["temperatures"][0]["first_mi_above_s"].as_f64().unwrap();
    assert!(angular > cyclic, "{angular} vs {cyclic}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        format!("{PHYSICAL}\n[gaussian]\nbogus = 1\n"),
        "[physical]\nseparation_m = 5e-7\ntrap_frequency_hz = 5e5\n".to_string(),
        format!("{PHYSICAL}").replace("1.11e-17", "-1.0"),
        format!("inflation = 0.5\n{PHYSICAL}"),
        format!("{PHYSICAL}\n[bipartite]\nn = 64\n"),
        format!("kind = \"signaling\"\n{PHYSICAL}"),
        format!("{PHYSICAL}\n[gaussian]\ndt_s = 0.0\n"),
        "not toml [".to_string(),
    ];
    for cfg in &cases {
        let (code, err) = snlab("gaussian", cfg, dir.path());
        assert_eq!(code, 2, "{cfg}\n{err}");
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_snlab"))
        .args(["gaussian", "--config", "/nonexistent.toml", "--out"])
        .arg(dir.path().join("x"))
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn unstable_time_step_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{PHYSICAL}\n[sn_effective]\nns = 16\nnz = 32\ndt_pde = 0.5\nn_steps = 4\nsample_every = 1\n");
    let (code, err) = snlab("sn-effective", &cfg, dir.path());
    assert_eq!(code, 3, "{err}");
}

#[test]
fn oversized_density_matrix_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{PHYSICAL}\n[signaling]\nn = 2048\nhalf_extent_sigma = 40.0\ndt_pde = 5e-5\nn_steps = 2\nsample_every = 1\nmodes = [\"mixed\"]\nvon_neumann = true\n"
    );
    let (code, err) = snlab("signaling", &cfg, dir.path());
    assert_eq!(code, 4, "{err}");
}

#[test]
fn mixed_ensembles_do_not_signal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[physical]
mass_kg = 1.11e-17
separation_m = 5.0e-7
trap_frequency_hz = 5.0e5
sigma_m = 1.0e-7
gravitational_constant_si = 4.065869072910316e-11

[signaling]
n = 256
half_extent_sigma = 16.0
dt_pde = 5e-4
n_steps = 400
sample_every = 100
modes = ["mixed", "pure"]
"#;
    let (code, err) = snlab("signaling", cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("gap.csv")).unwrap();
    let modes = column(&csv, "mode");
    let gaps = floats(&csv, "l1_gap");
    let mixed = modes.iter().zip(&gaps).filter(|(m, _)| *m == "mixed").map(|(_, g)| *g).fold(0.0, f64::max);
    let pure = modes.iter().zip(&gaps).filter(|(m, _)| *m == "pure").map(|(_, g)| *g).fold(0.0, f64::max);
    assert!(mixed < 1e-8, "{mixed}");
    assert!(pure > 1e-3, "{pure}");
    let screens = fs::read_to_string(out.join("screens.csv")).unwrap();
    assert!(screens.starts_with("z_sigma,free,mixed_spin_z,mixed_spin_x,pure_spin_z,pure_spin_x\n"));
    assert_eq!(screens.lines().count(), 257);
    let m = json(&out.join("manifest.json"));
    assert!((m["derived"]["coupling_effective"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(m["regression_constants"]["mixed_signaling_gap_ceiling"].is_number());
}

#[test]
fn softened_bipartite_run_stays_in_product_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[physical]
mass_kg = 1.11e-17
separation_m = 5.0e-7
trap_frequency_hz = 5.0e5
sigma_m = 1.0e-7
gravitational_constant_si = 6.35292042642237e-11

[bipartite]
n = 64
half_extent_sigma = 8.0
dt_pde = 1e-3
n_steps = 200
sample_every = 50
kernel = "sn"
"#;
    let (code, err) = snlab("bipartite", cfg, dir.path());
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("bipartite.csv")).unwrap();
    assert!(floats(&csv, "purity").iter().all(|p| (1.0 - p).abs() < 1e-10));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["product_form_preserved"], true);
    assert!((s["separation_sigma"].as_f64().unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn sweep_runs_each_value_in_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{PHYSICAL}\n[gaussian]\nt_end_s = 0.2\ndt_s = 0.01\n\n[sweep]\nbase = \"gaussian_correlations\"\nparameter = \"physical.temperature_k\"\nvalues = [0.0, 1e-5, -1.0]\nworkers = 2\n"
    );
    let (code, _) = snlab("sweep", &cfg, dir.path());
    assert_eq!(code, 2);
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(column(&csv, "status"), ["ok", "ok", "failed"]);
    assert_eq!(column(&csv, "directory"), ["run_000", "run_001", "run_002"]);
    assert!(out.join("run_001/correlations.csv").exists());
    let run = json(&out.join("run_001/manifest.json"));
    assert_eq!(run["config"]["physical"]["temperature_k"], 1e-5);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn inflation_scales_the_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("inflation = 1e3\n{PHYSICAL}\n[gaussian]\ntemperatures_k = [0.0]\nt_end_s = 0.1\ndt_s = 0.01\n");
    assert_eq!(snlab("gaussian", &cfg, dir.path()).0, 0);
    let m = json(&dir.path().join("out/manifest.json"));
    let d = &m["derived"];
    let ratio = d["coupling_effective"].as_f64().unwrap() / d["coupling_physical"].as_f64().unwrap();
    assert!((ratio - 1e3).abs() < 1e-9);
    assert_eq!(m["config"]["inflation"], 1e3);
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("inflation = 10.0\n{PHYSICAL}\n[gaussian]\ntemperatures_k = [0.0, 1e-5]\nt_end_s = 1.0\ndt_s = 0.01\n");
    assert_eq!(snlab("gaussian", &cfg, dir.path()).0, 0);
    let out = dir.path().join("out");
    let again = dir.path().join("again");
    let status = Command::new(env!("CARGO_BIN_EXE_snlab"))
        .args(["gaussian", "--config"])
        .arg(out.join("manifest.json"))
        .arg("--out")
        .arg(&again)
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read(again.join("correlations.csv")).unwrap(), fs::read(out.join("correlations.csv")).unwrap());
}

#[test]
fn output_directory_can_come_from_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config");
    let cfg = format!("output_dir = {:?}\n{PHYSICAL}\n[gaussian]\nt_end_s = 0.1\ndt_s = 0.01\n", target.display().to_string());
    fs::write(dir.path().join("in.toml"), &cfg).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_snlab"))
        .args(["gaussian", "--config"])
        .arg(dir.path().join("in.toml"))
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(target.join("manifest.json").exists());

    fs::write(dir.path().join("bare.toml"), PHYSICAL).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_snlab"))
        .args(["gaussian", "--config"])
        .arg(dir.path().join("bare.toml"))
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn default_bipartite_run_keeps_purity() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = snlab("bipartite", PHYSICAL, dir.path());
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("out/bipartite.csv")).unwrap();
    let purity = floats(&csv, "purity");
    assert_eq!(purity.len(), 21);
    assert!(purity.iter().all(|&p| p >= 1.0 - 1e-6));
}
