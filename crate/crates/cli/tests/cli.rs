use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn nvcpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvcpt")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_NOISY: &str = r#"
mode = "steady"

[drive]
omega_m = 0.83
power_nw = 0.5

[scan]
half_span = 0.8
points = 17

[noise]
seed = 4
n_samples = 12

[noise.spin]
kind = "static_gaussian"
sigma = 0.16
"#;

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&nvcpt(&["--help"])), 0);
    assert_eq!(code(&nvcpt(&["--version"])), 0);
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(code(&nvcpt(&[])), 1);
    assert_eq!(code(&nvcpt(&["spectrum", "--bogus"])), 1);
    assert_eq!(code(&nvcpt(&["spectrum", "--preset", "fig9z"])), 1);
    assert_eq!(code(&nvcpt(&["spectrum", "--preset", "fig2b", "--config", "x.toml"])), 1);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[drive]\nomega_m = 1.0\npowr_nw = 2.0\n");
    let out = nvcpt(&["spectrum", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("powr_nw"));
}

#[test]
fn missing_config_file_is_io() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&nvcpt(&["spectrum", "--config", missing.to_str().unwrap()])), 3);
}

#[test]
fn empty_grid_is_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "empty.toml", "[scan]\npoints = 0\n");
    assert_eq!(code(&nvcpt(&["spectrum", "--config", &cfg, "--out", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn unwritable_output_is_io() {
    let dir = TempDir::new().unwrap();
    let blocker = write(dir.path(), "file", "");
    let out = format!("{blocker}/sub");
    assert_eq!(code(&nvcpt(&["oracle", "--out", &out])), 3);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "noisy.toml", SMALL_NOISY);
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "1", "3", "0"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let r = nvcpt(&["spectrum", "--config", &cfg, "--workers", workers, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        csvs.push(fs::read(out.join("spectrum.csv")).unwrap());
    }
    assert!(csvs.windows(2).all(|w| w[0] == w[1]));

    let out = dir.path().join("reseeded");
    nvcpt(&["spectrum", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_ne!(fs::read(out.join("spectrum.csv")).unwrap(), csvs[0]);
    assert_eq!(json(&out.join("spectrum.json"))["seed"], 5);
}

#[test]
fn spectrum_csv_has_seventeen_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "noisy.toml", SMALL_NOISY);
    nvcpt(&["spectrum", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("detuning_mhz,signal,stderr"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for field in row {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
    assert_eq!(text.lines().count(), 18);
}

#[test]
fn five_dip_preset_fits_back_to_its_predictions() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&nvcpt(&["spectrum", "--preset", "fig2b", "--out", d])), 0);
    let side = json(&dir.path().join("spectrum.json"));
    let predicted: Vec<f64> = side["predictions_mhz"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(predicted.len(), 5);
    let centers = predicted.iter().map(|c| format!("{}", c * 1.03)).collect::<Vec<_>>().join(",");
    let csv = dir.path().join("spectrum.csv");
    let r = nvcpt(&["fit", "--input", csv.to_str().unwrap(), "--peaks", "5", "--centers", &centers, "--out", d]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let fit = json(&dir.path().join("fit.json"));
    let peaks = fit["model"]["peaks"].as_array().unwrap();
    let central = peaks[2]["center"].as_f64().unwrap();
    assert!(central.abs() < 0.01 * predicted[3]);
    // at 6 nW the outer dips overlap their neighbours and are pulled outwards
    for (k, (p, want)) in peaks.iter().zip(&predicted).enumerate() {
        let got = p["center"].as_f64().unwrap();
        let tol = if k == 0 || k == 4 { 0.02 } else { 0.01 };
        if *want != 0.0 {
            assert!((got - want).abs() <= tol * want.abs(), "{got} vs {want}");
        }
    }
}

#[test]
fn fit_recovers_a_synthetic_lorentzian() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("detuning_mhz,signal\n");
    for i in 0..=200 {
        let x = -1.0 + i as f64 * 0.01;
        let h: f64 = 0.06;
        text += &format!("{x},{}\n", 4.0 - 1.5 * h * h / ((x - 0.12).powi(2) + h * h));
    }
    let csv = write(dir.path(), "line.csv", &text);
    let r = nvcpt(&["fit", "--input", &csv, "--peaks", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    let p = &json(&dir.path().join("fit.json"))["model"]["peaks"][0];
    assert!((p["center"].as_f64().unwrap() - 0.12).abs() < 1e-8);
    assert!((p["fwhm"].as_f64().unwrap() - 0.12).abs() < 1e-8);
    assert!((p["amplitude"].as_f64().unwrap() - 1.5).abs() < 1e-8);
}

#[test]
fn fit_input_errors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let csv = write(dir.path(), "line.csv", "detuning_mhz,signal\n0,1\n1,0.5\n2,1\n3,1\n");
    assert_eq!(code(&nvcpt(&["fit", "--input", &csv, "--peaks", "0", "--out", d])), 1);
    assert_eq!(code(&nvcpt(&["fit", "--input", &csv, "--peaks", "1", "--centers", "0.1,0.2", "--out", d])), 1);
    let bad = write(dir.path(), "bad.csv", "detuning_mhz,signal\n0,1\n1,abc\n");
    let out = nvcpt(&["fit", "--input", &bad, "--peaks", "1", "--out", d]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));
    let cols = write(dir.path(), "cols.csv", "x,y\n0,1\n");
    assert_eq!(code(&nvcpt(&["fit", "--input", &cols, "--peaks", "1", "--out", d])), 1);
    let missing = dir.path().join("none.csv");
    assert_eq!(code(&nvcpt(&["fit", "--input", missing.to_str().unwrap(), "--peaks", "1", "--out", d])), 3);
}

#[test]
fn oracle_default_linewidth() {
    let dir = TempDir::new().unwrap();
    let r = nvcpt(&["oracle", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 0);
    let w = json(&dir.path().join("oracle.json"))["effective_fwhm_mhz"].as_f64().unwrap();
    assert!((w - 0.74f64.powi(2) / 6.5).abs() < 1e-12);
    assert!(String::from_utf8_lossy(&r.stdout).contains("effective FWHM 0.084246"));
    let rows = fs::read_to_string(dir.path().join("oracle.csv")).unwrap().lines().count();
    assert_eq!(rows, 202);

    let cfg = write(dir.path(), "bad.toml", "[oracle]\ngamma = 0.0\n");
    assert_eq!(code(&nvcpt(&["oracle", "--config", &cfg, "--out", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn rabi_matches_the_generalised_frequency() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "rabi.toml", "[rabi]\nrabi = 1.5\ndetuning = 0.8\nduration = 8.0\n");
    let r = nvcpt(&["rabi", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let side = json(&dir.path().join("rabi.json"));
    let (got, want) = (side["rabi_mhz"].as_f64().unwrap(), side["expected_mhz"].as_f64().unwrap());
    assert!((got - want).abs() < 0.01 * want, "{got} vs {want}");

    let bad = write(dir.path(), "bad.toml", "[rabi]\nlower = \"plus\"\nupper = \"minus\"\n");
    assert_eq!(code(&nvcpt(&["rabi", "--config", &bad, "--out", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn splitting_sweep_writes_both_regressions() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "split.toml", "[drive]\npower_nw = 1.0\n\n[sweep]\nkind = \"splitting\"\nvalues = [0.75, 1.0, 1.5]\n");
    let r = nvcpt(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("omega_m/sqrt2: slope"));
    let side = json(&dir.path().join("sweep.json"));
    assert!(side["vs_scaled"]["slope"].as_f64().is_some());
    assert!(side["vs_omega_m"]["slope"].as_f64().is_some());
    assert_eq!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap().lines().count(), 4);
}

#[test]
fn sweep_needs_a_sweep_table() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&nvcpt(&["sweep", "--out", dir.path().to_str().unwrap()])), 1);
}

#[test]
fn every_preset_loads() {
    let dir = TempDir::new().unwrap();
    for name in ["fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig3d"] {
        // the oracle only reads its own table, so this exercises parsing alone
        let r = nvcpt(&["oracle", "--preset", name, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&r), 0, "{name}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(json(&dir.path().join("oracle.json"))["config"]["drive"]["omega_m"].is_number());
    }
}
