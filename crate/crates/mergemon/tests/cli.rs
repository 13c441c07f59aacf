use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mergemon::schema;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mergemon");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("MERGEMON_OUT")
        .output()
        .expect("spawn mergemon")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

const SMALL_SPECTRUM: &str = r#"
[qubit]
f01_ghz = 4.475
anharmonicity_ghz = 0.170
n_levels = 4

[resonator]
f_r_ghz = 6.876331
chi01_ghz = 0.000465

[drive]
f_start_ghz = 4.35
f_stop_ghz = 4.50
points = 24
powers_dbm = [-5.0, 15.0]
ref_amplitude_ghz = 0.0019
ref_power_dbm = -5.0

[dissipation]
t1_ns = 55.0
"#;

const SWEEP: &str = r#"
[loss]
scenario = "crystalline"
f_q_ghz = 5.0

[sweep]
thickness_nm = [9.0, 50.0, 200.0]
radius_nm = [2000.0, 10000.0, 40000.0]
scaling = "independent"
"#;

#[test]
fn fitted_qubit_report() {
    let tmp = TempDir::new().unwrap();
    let o = run(&configs().join("fitted.toml"), tmp.path(), &["qubit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("qubit.json"));
    assert!((num(&r, "f01_ghz") - 4.475).abs() < 1e-6);
    assert!((num(&r, "anharmonicity_ghz") - 0.170).abs() < 1e-6);
    let csv = fs::read_to_string(tmp.path().join("qubit_levels.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("level,energy_ghz,charge_dispersion_ghz"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn design_point_ratio() {
    let tmp = TempDir::new().unwrap();
    let o = run(&configs().join("design_point.toml"), tmp.path(), &["qubit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("qubit.json"));
    assert!((num(&r, "ej_over_ec") - 61.0).abs() < 0.01);
}

#[test]
fn negative_charging_energy_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", "[qubit]\nej_ghz = 15.0\nec_ghz = -0.2\n");
    let o = run(&cfg, tmp.path(), &["qubit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qubit.ec_ghz"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", "[qubit]\nej_ghz = 15.0\nec_ghz = 0.2\nfrequency = 5\n");
    let o = run(&cfg, tmp.path(), &["qubit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frequency"), "{}", stderr(&o));
}

#[test]
fn syntax_error_reports_a_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "c.toml", "[qubit]\nej_ghz = 15.0\nec_ghz = \n");
    let o = run(&cfg, tmp.path(), &["qubit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn empty_power_list_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL_SPECTRUM.replace("powers_dbm = [-5.0, 15.0]", "powers_dbm = []");
    let cfg = write_config(&tmp, "c.toml", &text);
    let o = run(&cfg, tmp.path(), &["spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("powers_dbm"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_flag_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &configs().join("table1.toml"),
        tmp.path(),
        &["loss", "--scenario", "polycrystalline"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&tmp.path().join("absent.toml"), tmp.path(), &["qubit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.toml"), "{}", stderr(&o));
}

#[test]
fn resonant_coupling_is_a_numeric_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "c.toml",
        "[qubit]\nf01_ghz = 4.475\nanharmonicity_ghz = 0.170\n[resonator]\nf_r_ghz = 4.476\ng01_ghz = 0.03\n",
    );
    let o = run(&cfg, tmp.path(), &["dispersive"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!tmp.path().join("dispersive.json").exists());
}

#[test]
fn measured_shift_coupling() {
    let tmp = TempDir::new().unwrap();
    let o = run(&configs().join("fitted.toml"), tmp.path(), &["dispersive"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("dispersive.json"));
    assert!((num(&r, "g01_ghz") - 0.0334).abs() < 1e-4);
    assert_eq!(r["g01_source"], "measured_shift");
    // Ground-state dressed frequency is f_r + |chi01|.
    let dressed = r["dressed_freq_ghz"][0].as_f64().unwrap();
    assert!((dressed - (6.876331 + 0.000465)).abs() < 1e-9);
}

#[test]
fn zero_coupling_leaves_resonator_bare() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "c.toml",
        "[qubit]\nf01_ghz = 4.475\nanharmonicity_ghz = 0.170\n[resonator]\nf_r_ghz = 6.876331\ng01_ghz = 0.0\n",
    );
    let o = run(&cfg, tmp.path(), &["dispersive"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("dispersive.json"));
    for f in r["dressed_freq_ghz"].as_array().unwrap() {
        assert_eq!(f.as_f64().unwrap(), 6.876331);
    }
    assert_eq!(num(&r, "exact_dressed_ground_ghz"), 6.876331);
}

#[test]
fn table1_budget_total() {
    let tmp = TempDir::new().unwrap();
    let o = run(&configs().join("table1.toml"), tmp.path(), &["loss"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("loss_budget.json"));
    assert!((num(&r, "t1_total_us") * 1e3 - 17.1).abs() < 0.2);
    let csv = fs::read_to_string(tmp.path().join("loss_budget.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("region,participation,tan_delta,t1_us"));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn environment_sets_output_directory() {
    let tmp = TempDir::new().unwrap();
    let target = tmp.path().join("from_env");
    let o = Command::new(BIN)
        .arg("--config")
        .arg(configs().join("design_point.toml"))
        .arg("design")
        .env("MERGEMON_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("design.json").exists());
}

#[test]
fn flag_beats_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(BIN)
        .arg("--config")
        .arg(configs().join("design_point.toml"))
        .arg("--out")
        .arg(tmp.path().join("flag"))
        .arg("design")
        .env("MERGEMON_OUT", tmp.path().join("env"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("flag/design.json").exists());
    assert!(!tmp.path().join("env").exists());
}

#[test]
fn reports_revalidate_against_shipped_schemas() {
    let tmp = TempDir::new().unwrap();
    let spectrum = write_config(&tmp, "s.toml", SMALL_SPECTRUM);
    let cases = [
        (
            configs().join("fitted.toml"),
            "qubit",
            "qubit.json",
            schema::QUBIT_REPORT,
        ),
        (
            configs().join("fitted.toml"),
            "dispersive",
            "dispersive.json",
            schema::DISPERSIVE_REPORT,
        ),
        (
            configs().join("table1.toml"),
            "loss",
            "loss_budget.json",
            schema::LOSS_REPORT,
        ),
        (
            configs().join("design_point.toml"),
            "design",
            "design.json",
            schema::DESIGN_REPORT,
        ),
        (spectrum, "spectrum", "spectrum.json", schema::SPECTRUM_REPORT),
    ];
    for (cfg, cmd, file, s) in cases {
        let out = tmp.path().join(cmd);
        let o = run(&cfg, &out, &[cmd]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        schema::check(s, &json(&out.join(file))).unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}

#[test]
fn spectrum_files_are_named_by_power() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "s.toml", SMALL_SPECTRUM);
    let o = run(&cfg, tmp.path(), &["spectrum", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = files(tmp.path()).into_keys().collect();
    for n in [
        "spectrum_-5.0dBm.csv",
        "spectrum_+15.0dBm.csv",
        "spectrum_peaks.csv",
        "spectrum.json",
    ] {
        assert!(names.iter().any(|x| x == n), "{n} not in {names:?}");
    }
    let trace = fs::read_to_string(tmp.path().join("spectrum_-5.0dBm.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("f_pump_ghz,amplitude_ghz,n_avg"));
    assert_eq!(trace.lines().count(), 25);
}

#[test]
fn spectrum_is_deterministic_across_workers() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "s.toml", SMALL_SPECTRUM);
    let outputs: Vec<_> = [("a", "1"), ("b", "1"), ("c", "3")]
        .iter()
        .map(|(dir, workers)| {
            let out = tmp.path().join(dir);
            let o = run(&cfg, &out, &["spectrum", "--workers", workers]);
            assert!(o.status.success(), "{}", stderr(&o));
            files(&out)
        })
        .collect();
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn loss_sweep_is_deterministic_across_workers() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "s.toml", SWEEP);
    let outputs: Vec<_> = [("a", "1"), ("b", "4")]
        .iter()
        .map(|(dir, workers)| {
            let out = tmp.path().join(dir);
            let o = run(&cfg, &out, &["loss", "--analytic-pr", "--workers", workers]);
            assert!(o.status.success(), "{}", stderr(&o));
            files(&out)
        })
        .collect();
    assert!(outputs[0].contains_key("t1_sweep.csv"));
    assert_eq!(outputs[0], outputs[1]);
    let sweep = String::from_utf8(outputs[0]["t1_sweep.csv"].clone()).unwrap();
    assert_eq!(sweep.lines().next(), Some("d_nm,r_nm,t1_us"));
    assert_eq!(sweep.lines().count(), 10);
}

#[test]
fn zero_workers_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "s.toml", SWEEP);
    let o = run(&cfg, tmp.path(), &["loss", "--analytic-pr", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
