//! `rydoa doa`: end-to-end reconstruction with optional Monte Carlo noise.

use crate::args::DoaArgs;
use crate::error::{CliError, CliResult};
use crate::output::{self, fmt_f64, Provenance};
use crate::scenario_io;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rydoa_core::constants::TAU;
use rydoa_core::{full_cycle, full_cycle_monte_carlo, qcrb, CoreError, EitSpectrum};
use serde_json::json;
use std::f64::consts::PI;
use std::path::Path;

fn wrap_pi(x: f64) -> f64 {
    let mut r = x % (2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    } else if r < -PI {
        r += 2.0 * PI;
    }
    r
}

fn error_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::InsufficientInformation(_) => "insufficient_information",
        CoreError::DegenerateGeometry(_) => "degenerate_geometry",
        CoreError::DegeneratePlan(_) => "degenerate_plan",
        CoreError::DegenerateSteadyState(_) => "degenerate_steady_state",
        CoreError::DerivativeUnstable { .. } => "derivative_unstable",
        CoreError::InvalidInput(_) => "invalid_input",
        CoreError::Config(_) => "config",
        CoreError::Io(_) => "io",
        CoreError::Json(_) => "json",
    }
}

/// Centered sample statistics of an angle series around a truth value.
fn angle_stats(samples: impl Iterator<Item = f64>, truth: f64) -> serde_json::Value {
    let devs: Vec<f64> = samples.map(|x| wrap_pi(x - truth)).collect();
    let n = devs.len();
    if n < 2 {
        return serde_json::Value::Null;
    }
    let mean_d = devs.iter().sum::<f64>() / n as f64;
    let var = devs.iter().map(|d| (d - mean_d).powi(2)).sum::<f64>() / (n - 1) as f64;
    json!({
        "mean_deg": (truth + mean_d).to_degrees(),
        "std_deg": var.sqrt().to_degrees(),
        "sample_var_rad2": var,
    })
}

fn spectrum_csv(prov: &Provenance, spec: &EitSpectrum) -> String {
    let rows: Vec<Vec<String>> = spec
        .detuning_grid
        .iter()
        .zip(&spec.response)
        .map(|(d, r)| vec![fmt_f64(d / (TAU * 1e6)), fmt_f64(*r)])
        .collect();
    output::csv_document(prov, &["delta_c_mhz", "im_rho21"], &rows)
}

fn write_spectra(
    out: &Path,
    prov: &Provenance,
    e1: &EitSpectrum,
    m1: &[EitSpectrum],
) -> CliResult<(serde_json::Value, serde_json::Value)> {
    let e1_path = output::sidecar(out, "e1", "csv");
    std::fs::write(&e1_path, spectrum_csv(prov, e1))
        .map_err(|e| CliError::compute(format!("writing {}: {e}", e1_path.display())))?;
    let mut m1_paths = Vec::new();
    for (i, spec) in m1.iter().enumerate() {
        let path = output::sidecar(out, &format!("m1.{i}"), "csv");
        std::fs::write(&path, spectrum_csv(prov, spec))
            .map_err(|e| CliError::compute(format!("writing {}: {e}", path.display())))?;
        m1_paths.push(json!(path.to_string_lossy()));
    }
    Ok((json!(e1_path.to_string_lossy()), serde_json::Value::Array(m1_paths)))
}

pub fn run(args: &DoaArgs) -> CliResult<()> {
    if !(args.noise_rel >= 0.0) || !args.noise_rel.is_finite() {
        return Err(CliError::config(format!(
            "--noise-rel must be finite and >= 0, got {}",
            args.noise_rel
        )));
    }
    let (sc, prov) = scenario_io::resolve(&args.common, "doa", "fig5", &[])?;
    let cfgs = sc.ladders();

    let cycle = match full_cycle(&sc.scene, &sc.bias, &cfgs, &sc.plan) {
        Ok(c) => c,
        Err(e) => {
            let doc = json!({
                "provenance": prov.json_value(),
                "error": { "kind": error_kind(&e), "message": e.to_string() },
            });
            let text = serde_json::to_string_pretty(&doc)
                .map_err(|err| CliError::compute(err.to_string()))?;
            output::emit(args.common.out.as_deref(), &(text + "\n"))?;
            return Err(CliError::from_compute(e));
        }
    };

    let est = &cycle.estimate;
    let truth_doa = {
        let e = [0.0, sc.scene.theta_rf.cos(), sc.scene.theta_rf.sin()];
        let b = [0.0, sc.scene.theta_b.cos(), sc.scene.theta_b.sin()];
        rydoa_core::compose_doa(&e, &b)
            .map(|d| d.theta_doa)
            .map_err(CliError::from_compute)?
    };

    // The bound is reported alongside; a failure here degrades the report,
    // not the reconstruction.
    let bound = qcrb(&sc.scene, &sc.bias, &cfgs, sc.nu).ok();
    let qcrb_json = match &bound {
        Some(f) => json!({
            "theta_rf_rad2": f.qcrb[0][0],
            "theta_b_rad2": f.qcrb[1][1],
            "resolution_theta_rf_deg": f.resolution_deg[0],
            "resolution_theta_b_deg": f.resolution_deg[1],
            "diverged": f.diverged,
            "nu": f.nu,
        }),
        None => serde_json::Value::Null,
    };

    let monte_carlo = if args.trials > 0 {
        let mut rng = ChaCha12Rng::seed_from_u64(args.common.seed);
        let mc = full_cycle_monte_carlo(
            &sc.scene,
            &sc.bias,
            &cfgs,
            &sc.plan,
            args.noise_rel,
            args.trials,
            &mut rng,
        )
        .map_err(CliError::from_compute)?;
        json!({
            "trials": args.trials,
            "failures": mc.failures,
            "noise_rel": args.noise_rel,
            "theta_rf": angle_stats(mc.trials.iter().map(|t| t.theta_rf_hat), sc.scene.theta_rf),
            "theta_b": angle_stats(mc.trials.iter().map(|t| t.theta_b_hat), sc.scene.theta_b),
            "theta_doa": angle_stats(mc.trials.iter().map(|t| t.theta_doa), truth_doa),
        })
    } else {
        serde_json::Value::Null
    };

    let (e1_path, m1_paths) = match &args.common.out {
        Some(out) => write_spectra(out, &prov, &cycle.e1_spectrum, &cycle.m1_spectra)?,
        None => (serde_json::Value::Null, serde_json::Value::Null),
    };

    let doc = json!({
        "provenance": prov.json_value(),
        "truth": {
            "theta_rf_deg": sc.scene.theta_rf.to_degrees(),
            "theta_b_deg": sc.scene.theta_b.to_degrees(),
            "theta_doa_deg": truth_doa.to_degrees(),
        },
        "estimate": {
            "theta_rf_hat_deg": est.theta_rf_hat.to_degrees(),
            "theta_b_hat_deg": est.theta_b_hat.to_degrees(),
            "theta_doa_deg": est.theta_doa.to_degrees(),
            "k_hat": est.k_hat,
            "b_rf_vector": est.b_rf_vector,
        },
        "error_deg": {
            "theta_rf": wrap_pi(est.theta_rf_hat - sc.scene.theta_rf).to_degrees(),
            "theta_b": wrap_pi(est.theta_b_hat - sc.scene.theta_b).to_degrees(),
            "theta_doa": wrap_pi(est.theta_doa - truth_doa).to_degrees(),
        },
        "qcrb": qcrb_json,
        "spectra": {
            "e1_csv": e1_path,
            "m1_csv": m1_paths,
            "e1_points": cycle.e1_spectrum.detuning_grid.len(),
            "m1_orientations": cycle.m1_spectra.len(),
        },
        "monte_carlo": monte_carlo,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::compute(e.to_string()))?;
    output::emit(args.common.out.as_deref(), &(text + "\n"))
}
