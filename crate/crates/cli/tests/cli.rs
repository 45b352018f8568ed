use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use casimir_cli::record::RunRecord;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("casimir-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn casimir(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("CASIMIR_PLAIN", "1")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[derive(serde::Deserialize, Debug)]
struct Row {
    gamma: f64,
    epsilon: f64,
    #[serde(rename = "M")]
    periods: u32,
    #[serde(rename = "K")]
    modes: usize,
    k: Option<usize>,
    #[serde(rename = "N_numeric")]
    n_numeric: Option<f64>,
    #[serde(rename = "N_analytic")]
    n_analytic: Option<f64>,
    rel_err: Option<f64>,
    provenance: String,
}

fn rows(dir: &Path) -> Vec<Row> {
    csv::Reader::from_path(dir.join("summary.csv"))
        .unwrap()
        .deserialize()
        .map(|r| r.unwrap())
        .collect()
}

fn records(dir: &Path) -> Vec<RunRecord> {
    let mut paths: Vec<_> = std::fs::read_dir(dir.join("records")).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    paths.iter().map(|p| toml::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()).collect()
}

#[test]
fn simulate_matches_resonant_photon_number() {
    let dir = scratch("simulate");
    let o = casimir(&["simulate", "--gamma", "2", "--epsilon", "1e-3", "--periods", "16", "--modes", "16"], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(&dir);
    assert_eq!(rows.len(), 16);
    let first = &rows[0];
    assert_eq!((first.gamma, first.epsilon, first.periods, first.modes, first.k), (2.0, 1e-3, 16, 16, Some(1)));
    assert_eq!(first.provenance, "numeric-full/analytic-resonant");
    assert!(first.rel_err.unwrap() < 0.05);
    assert!((first.n_numeric.unwrap() - first.n_analytic.unwrap()).abs() / first.n_analytic.unwrap() < 0.05);
    assert!(rows[1].rel_err.is_none());
}

#[test]
fn zero_amplitude_creates_no_photons() {
    let dir = scratch("free");
    let o = casimir(&["simulate", "--epsilon", "0", "--periods", "4", "--modes", "6"], &dir);
    assert_eq!(code(&o), 0);
    for r in rows(&dir) {
        assert!(r.n_numeric.unwrap() < 1e-20, "{r:?}");
        assert_eq!(r.n_analytic, Some(0.0));
    }
}

#[test]
fn record_round_trips_and_echoes_spec() {
    let dir = scratch("record");
    let o = casimir(&["simulate", "--periods", "4", "--modes", "6", "--format", "records"], &dir);
    assert_eq!(code(&o), 0);
    assert!(!dir.join("summary.csv").exists());
    let recs = records(&dir);
    assert_eq!(recs.len(), 1);
    let rec = &recs[0];
    assert_eq!(rec.spec.axes.modes, vec![6]);
    assert_eq!(rec.spectra.len(), 2);
    assert!(rec.defects.iter().all(|d| d.within));
    let again: RunRecord = toml::from_str(&rec.to_toml().unwrap()).unwrap();
    assert_eq!(&again, rec);
}

#[test]
fn csv_output_is_deterministic() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    let args = ["sweep", "--gamma", "2,3", "--periods", "6", "--modes", "6", "--format", "csv"];
    assert_eq!(code(&casimir(&args, &a)), 0);
    let mut seq = args.to_vec();
    seq.extend(["--workers", "1"]);
    assert_eq!(code(&casimir(&seq, &b)), 0);
    let read = |d: &Path| std::fs::read(d.join("summary.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn flags_override_config_file() {
    let dir = scratch("precedence");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        "gamma = 3.0\nepsilon = 2e-3\nperiods = 5\nmodes = 7\nscheme = \"adaptive\"\nrtol = 1e-9\n",
    )
    .unwrap();
    let o = casimir(&["simulate", "--config", cfg.to_str().unwrap(), "--modes", "6"], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(&dir);
    assert_eq!((rows[0].gamma, rows[0].epsilon, rows[0].periods, rows[0].modes), (3.0, 2e-3, 5, 6));
    let rec = &records(&dir)[0];
    assert_eq!(
        rec.spec.integrator.scheme,
        casimir_core::Scheme::Adaptive {
            rtol: 1e-9,
            atol: casimir_cli::spec::DEFAULT_ATOL
        }
    );
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = scratch("invalid");
    let bad_cfg = dir.join("bad.toml");
    std::fs::write(&bad_cfg, "gama = 2.0\n").unwrap();
    let empty_cfg = dir.join("empty.toml");
    std::fs::write(&empty_cfg, "gamma = []\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--epsilon", "1.5"],
        vec!["simulate", "--modes", "0"],
        vec!["simulate", "--gamma", "2,3"],
        vec!["simulate", "--step-per-period", "0"],
        vec!["compare", "--gamma", "2.5", "--periods", "4"],
        vec!["simulate", "--config", bad_cfg.to_str().unwrap()],
        vec!["sweep", "--config", empty_cfg.to_str().unwrap()],
        vec!["simulate", "--config", "/nonexistent/casimir.toml"],
        vec!["simulate", "--gamma", "abc"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = casimir(&args, &dir);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn validate_reports_each_property() {
    let dir = scratch("validate");
    let o = casimir(&["validate", "--periods", "8", "--modes", "8"], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);
    assert!(!stdout.contains('\x1b'));
    assert!(dir.join("validation.csv").exists());
}

#[test]
fn validate_catches_injected_faults() {
    let dir = scratch("fault");
    let o = casimir(&["validate", "--periods", "8", "--modes", "8", "--inject-fault", "g-sign"], &dir);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("coupling-antisymmetry")));

    let o = casimir(&["validate", "--periods", "8", "--modes", "8", "--unitarity-threshold", "0"], &dir);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("unitarity")));
}

#[test]
fn sweep_finds_spectrum_peaks() {
    let dir = scratch("sweep");
    let o = casimir(&["sweep", "--gamma", "4,2,3", "--periods", "12"], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&dir);
    let peaks: Vec<(f64, Vec<usize>)> = recs.iter().map(|r| (r.point.unwrap().gamma, r.spectra[0].peak_modes.clone())).collect();
    assert_eq!(peaks, vec![(2.0, vec![1]), (3.0, vec![1, 2]), (4.0, vec![2])]);
    let gammas: Vec<f64> = rows(&dir).iter().map(|r| r.gamma).collect();
    assert!(gammas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn perturb_and_compare_label_provenance() {
    let dir = scratch("perturb");
    assert_eq!(code(&casimir(&["perturb", "--periods", "8", "--modes", "4"], &dir)), 0);
    let prov: Vec<String> = rows(&dir).into_iter().map(|r| r.provenance).collect();
    assert_eq!(prov.len(), 8);
    assert_eq!(&prov[..2], ["analytic-first-order", "analytic-resonant"]);

    let dir = scratch("compare");
    let o = casimir(&["compare", "--epsilon", "1e-3,5e-4", "--periods", "8", "--modes", "8"], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rec = &records(&dir)[0];
    let exponent = rec.comparison.as_ref().unwrap().scaling_exponent.unwrap();
    assert!((exponent - 2.0).abs() < 0.2, "{exponent}");
    assert!(rows(&dir).iter().any(|r| r.provenance == "numeric-linearized/analytic-resonant"));
}

#[test]
fn truncation_sweep_converges() {
    let dir = scratch("modes");
    let o = casimir(&["sweep", "--modes", "24,8,16", "--periods", "16", "--format", "csv"], &dir);
    assert_eq!(code(&o), 0);
    let n1: Vec<(usize, f64)> = rows(&dir).iter().filter(|r| r.k == Some(1)).map(|r| (r.modes, r.n_numeric.unwrap())).collect();
    assert_eq!(n1.iter().map(|x| x.0).collect::<Vec<_>>(), vec![8, 16, 24]);
    assert!((n1[1].1 - n1[2].1).abs() / n1[2].1 < 1e-3);
}

#[test]
fn failed_sweep_points_are_marked() {
    let dir = scratch("partial");
    let cfg = dir.join("tiny.toml");
    std::fs::write(&cfg, "max_steps = 50\n").unwrap();
    let o = casimir(
        &["sweep", "--config", cfg.to_str().unwrap(), "--gamma", "2,3", "--periods", "4", "--modes", "4"],
        &dir,
    );
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = rows(&dir);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.provenance.starts_with("failed: ") && r.k.is_none()));
    assert!(records(&dir).iter().all(|r| r.error.is_some()));
}
