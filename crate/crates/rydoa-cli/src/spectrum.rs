//! `rydoa spectrum`: synthesize one EIT readout and its peak table.

use crate::args::{SpectrumArgs, Transition};
use crate::error::{CliError, CliResult};
use crate::output::{self, fmt_f64};
use crate::scenario_io;
use rydoa_core::constants::TAU;
use rydoa_core::{
    decompose_b_field, decompose_e_field, default_grid, enumerate_paths, sweep_spectrum,
};

pub fn run(args: &SpectrumArgs) -> CliResult<()> {
    let mut flags: Vec<(String, String)> = Vec::new();
    if let Some(v) = args.theta_rf {
        flags.push(("theta_rf_deg".into(), v.to_string()));
    }
    if let Some(v) = args.b_bias {
        flags.push(("b_bias_mt".into(), v.to_string()));
    }
    if let Some(v) = args.theta_bias {
        flags.push(("theta_bias_deg".into(), v.to_string()));
    }
    let (sc, prov) = scenario_io::resolve(&args.common, "spectrum", "fig3", &flags)?;

    let (cfg, decomp) = match args.transition {
        Transition::E1 => (
            sc.ladder_e1,
            decompose_e_field(sc.scene.e_amplitude, sc.scene.theta_rf),
        ),
        Transition::M1 => (
            sc.ladder_m1,
            decompose_b_field(sc.scene.b_amplitude, sc.scene.theta_b),
        ),
    };
    let paths = enumerate_paths(&cfg, &decomp, &sc.bias).map_err(CliError::from_compute)?;
    let grid = default_grid(&cfg, &paths);
    let spectrum =
        sweep_spectrum(&cfg, &decomp, &sc.bias, &grid).map_err(CliError::from_compute)?;

    for w in &spectrum.warnings {
        eprintln!("warning: {w}");
    }

    let rows: Vec<Vec<String>> = spectrum
        .detuning_grid
        .iter()
        .zip(&spectrum.response)
        .map(|(d, r)| vec![fmt_f64(d / (TAU * 1e6)), fmt_f64(*r)])
        .collect();
    let doc = output::csv_document(&prov, &["delta_c_mhz", "im_rho21"], &rows);
    output::emit(args.common.out.as_deref(), &doc)?;

    if let Some(out) = &args.common.out {
        let peaks = serde_json::json!({
            "provenance": prov.json_value(),
            "n_peaks": spectrum.peaks.len(),
            "pi_area": spectrum.pi_area(),
            "sigma_area": spectrum.sigma_area(),
            "peaks": spectrum.peaks,
        });
        let path = output::sidecar(out, "peaks", "json");
        let text = serde_json::to_string_pretty(&peaks)
            .map_err(|e| CliError::compute(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::compute(format!("writing {}: {e}", path.display())))?;
        if args.plot_script {
            output::write_plot_stub(out, false)?;
        }
    }
    Ok(())
}
