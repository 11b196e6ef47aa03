//! Contract tests for the `rydoa` binary: exit codes, provenance headers,
//! sidecar files, structured errors, and the shapes of the emitted tables.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rydoa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydoa"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn rydoa")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Parses a provenance-headed CSV into (header_lines, column_names, rows).
fn parse_csv(text: &str) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let mut headers = Vec::new();
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(stripped) = line.strip_prefix('#') {
            headers.push(stripped.trim().to_string());
        } else if columns.is_empty() {
            columns = line.split(',').map(str::to_string).collect();
        } else {
            rows.push(line.split(',').map(str::to_string).collect());
        }
    }
    (headers, columns, rows)
}

fn column(columns: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = columns
        .iter()
        .position(|c| c == name)
        .unwrap_or_else(|| panic!("column {name} missing from {columns:?}"));
    rows.iter()
        .map(|r| {
            let cell = &r[idx];
            match cell.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                "nan" => f64::NAN,
                v => v.parse().unwrap_or_else(|_| panic!("bad float {v:?} in {name}")),
            }
        })
        .collect()
}

#[test]
fn spectrum_stdout_has_provenance_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(dir.path(), &["spectrum", "--preset", "fig3", "--transition", "e1"]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    assert!(text.starts_with("# rydoa"), "missing version header");
    for tag in ["command:", "preset: fig3", "overrides:", "seed: 0"] {
        assert!(
            text.lines().any(|l| l.starts_with('#') && l.contains(tag)),
            "missing provenance line {tag:?}"
        );
    }
    let (_, columns, rows) = parse_csv(&text);
    assert_eq!(columns, ["delta_c_mhz", "im_rho21"]);
    assert!(rows.len() >= 1000, "suspiciously short grid: {}", rows.len());
    let response = column(&columns, &rows, "im_rho21");
    assert!(response.iter().all(|v| v.is_finite() && *v >= 0.0));
}

#[test]
fn spectrum_peak_sidecar_counts_zeeman_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &["spectrum", "--preset", "fig3", "--out", "spec.csv"],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    assert!(dir.path().join("spec.csv").exists());
    let peaks: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("spec.peaks.json")).unwrap())
            .unwrap();
    assert_eq!(peaks["n_peaks"], 4);
    assert!(peaks["pi_area"].as_f64().unwrap() > 0.0);
    assert!(peaks["sigma_area"].as_f64().unwrap() > 0.0);
    assert_eq!(peaks["peaks"].as_array().unwrap().len(), 4);
    assert_eq!(peaks["provenance"]["preset"], "fig3");
}

#[test]
fn spectrum_zero_bias_collapses_to_single_peak() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &["spectrum", "--preset", "fig3", "--b-bias", "0", "--out", "flat.csv"],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let peaks: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("flat.peaks.json")).unwrap())
            .unwrap();
    assert_eq!(peaks["n_peaks"], 1, "degenerate Zeeman lines must merge");
}

#[test]
fn spectrum_at_ninety_degrees_is_sigma_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &["spectrum", "--preset", "fig3", "--theta-rf", "90", "--out", "s90.csv"],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let peaks: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("s90.peaks.json")).unwrap())
            .unwrap();
    assert_eq!(peaks["pi_area"].as_f64().unwrap(), 0.0);
    assert!(peaks["sigma_area"].as_f64().unwrap() > 0.0);
    for p in peaks["peaks"].as_array().unwrap() {
        assert_ne!(p["path"]["q"], 0, "π path survived at θ_RF = 90°");
    }
}

#[test]
fn sweep_reports_divergent_angles_as_inf_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &[
            "qcrb-sweep", "--preset", "fig5", "--variable", "theta-rf", "--start", "0",
            "--stop", "180", "--steps", "7",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let (_, columns, rows) = parse_csv(&stdout_str(&out));
    let angles = column(&columns, &rows, "theta_rf_deg");
    let qcrb = column(&columns, &rows, "qcrb_theta_rf_rad2");
    let flags = column(&columns, &rows, "diverged_theta_rf");
    assert_eq!(rows.len(), 7);
    for ((a, q), f) in angles.iter().zip(&qcrb).zip(&flags) {
        let sentinel = *a == 0.0 || *a == 90.0 || *a == 180.0;
        assert_eq!(q.is_infinite(), sentinel, "qcrb at {a}°");
        assert_eq!(*f == 1.0, sentinel, "flag at {a}°");
    }
}

#[test]
fn sweep_rejects_bad_axes_with_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        // Too few points.
        &["qcrb-sweep", "--variable", "theta-rf", "--start", "0", "--stop", "10", "--steps", "1"],
        // Equal endpoints.
        &["qcrb-sweep", "--variable", "theta-rf", "--start", "45", "--stop", "45", "--steps", "2"],
        // Log spacing across zero.
        &["qcrb-sweep", "--variable", "e0", "--start", "0", "--stop", "1", "--steps", "4", "--log"],
        // Variable that only the compare table accepts.
        &["qcrb-sweep", "--variable", "snr", "--start", "1", "--stop", "10", "--steps", "3"],
        // Compare sweeping a scene angle.
        &["compare", "--variable", "theta-rf", "--start", "10", "--stop", "60", "--steps", "3"],
    ];
    for args in cases {
        let out = rydoa(dir.path(), args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "`rydoa {}` should fail as a config error, stderr: {}",
            args.join(" "),
            stderr_str(&out)
        );
        assert!(!stderr_str(&out).is_empty());
    }
}

#[test]
fn overrides_are_validated_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown key and malformed pair are config errors.
    for bad in [
        ["doa", "--set", "no_such_key=1"],
        ["doa", "--set", "omega_p_mhz"],
    ] {
        let out = rydoa(dir.path(), &bad);
        assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_str(&out));
    }
    // A valid override lands in the provenance header.
    let out = rydoa(
        dir.path(),
        &["spectrum", "--preset", "fig3", "--set", "theta_rf_deg=60"],
    );
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(
        text.lines()
            .any(|l| l.starts_with('#') && l.contains("theta_rf_deg=60")),
        "override missing from provenance"
    );
}

#[test]
fn unknown_preset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(dir.path(), &["spectrum", "--preset", "not_a_preset"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("not_a_preset"));
}

#[test]
fn doa_forbidden_angle_yields_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &["doa", "--preset", "fig5", "--set", "theta_rf_deg=0", "--out", "bad.json"],
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_str(&out));
    let doc: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("bad.json")).unwrap()).unwrap();
    assert_eq!(doc["error"]["kind"], "insufficient_information");
    assert!(doc["error"]["message"].as_str().unwrap().contains("forbidden"));
    assert_eq!(doc["provenance"]["preset"], "fig5");
}

#[test]
fn doa_success_reports_estimate_bound_and_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &["doa", "--preset", "fig5", "--trials", "50", "--noise-rel", "0.05", "--out", "doa.json"],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let doc: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("doa.json")).unwrap()).unwrap();
    assert!(doc["error_deg"]["theta_doa"].as_f64().unwrap() < 0.5);
    assert!(doc["error_deg"]["theta_rf"].as_f64().unwrap() < 0.5);
    assert!(doc["qcrb"]["theta_rf_rad2"].as_f64().unwrap() > 0.0);
    let mc = &doc["monte_carlo"];
    assert_eq!(mc["trials"], 50);
    assert!(mc["theta_rf"]["std_deg"].as_f64().unwrap() > 0.0);
    // Every spectra path the document references must exist on disk.
    let e1 = doc["spectra"]["e1_csv"].as_str().unwrap();
    assert!(dir.path().join(e1).exists(), "missing E1 sidecar {e1}");
    for m1 in doc["spectra"]["m1_csv"].as_array().unwrap() {
        let p = m1.as_str().unwrap();
        assert!(dir.path().join(p).exists(), "missing M1 sidecar {p}");
    }
}

#[test]
fn compare_element_sweep_shows_aperture_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &[
            "compare", "--variable", "n-elements", "--start", "4", "--stop", "64",
            "--steps", "5", "--log",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let (_, columns, rows) = parse_csv(&stdout_str(&out));
    let ns = column(&columns, &rows, "n_elements");
    let ula = column(&columns, &rows, "ula_rad2");
    let vsa = column(&columns, &rows, "vsa_rad2");
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = ula.iter().map(|v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    assert!(
        (slope + 3.0).abs() < 0.1,
        "ULA column slope {slope:.3} departs from -3"
    );
    for (v, u) in vsa.iter().zip(&ula) {
        assert!(v <= u && *v >= u / 2.0, "VSA {v:.3e} outside [ULA/2, ULA]");
    }
}

#[test]
fn compare_snr_sweep_floors_rydberg_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &[
            "compare", "--variable", "snr", "--start", "0.1", "--stop", "10000",
            "--steps", "11", "--log",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let (_, columns, rows) = parse_csv(&stdout_str(&out));
    let snr = column(&columns, &rows, "snr");
    let free = column(&columns, &rows, "rydberg_lo_free_rad2");
    let dressed = column(&columns, &rows, "rydberg_lo_dressed_rad2");
    let ula = column(&columns, &rows, "ula_rad2");
    let n = rows.len();
    assert_eq!(free[n - 1], free[n - 2], "LO-free bound must floor");
    assert_eq!(dressed[n - 1], dressed[n - 2], "LO-dressed bound must floor");
    let ratio = ula[n - 1] / ula[n - 2];
    let expected = snr[n - 2] / snr[n - 1];
    assert!(
        (ratio / expected - 1.0).abs() < 1e-9,
        "ULA departs from 1/SNR scaling"
    );
}

#[test]
fn compare_distance_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &[
            "compare", "--variable", "distance", "--start", "10", "--stop", "1000",
            "--steps", "9", "--log",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let (_, columns, rows) = parse_csv(&stdout_str(&out));
    for name in [
        "rydberg_lo_free_rad2",
        "rydberg_lo_dressed_rad2",
        "ula_rad2",
        "vsa_rad2",
    ] {
        let vals = column(&columns, &rows, name);
        for w in vals.windows(2) {
            assert!(
                w[1] >= w[0] * (1.0 - 1e-12),
                "{name} not monotone nondecreasing with distance"
            );
        }
    }
}

#[test]
fn plot_stub_is_emitted_next_to_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydoa(
        dir.path(),
        &[
            "qcrb-sweep", "--preset", "fig5", "--variable", "theta-bias", "--start", "-60",
            "--stop", "60", "--steps", "5", "--out", "tilt.csv", "--plot-script",
        ],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let stub = std::fs::read_to_string(dir.path().join("tilt.plot.py")).unwrap();
    assert!(stub.starts_with("#!/usr/bin/env python3"));
    assert!(stub.contains("tilt.csv"), "stub must reference its CSV");
    // Data-only contract: the stub renders the CSV, it does not embed values.
    assert!(!stub.contains("e-"), "stub appears to embed numeric data");
}
