//! `rydoa compare`: single-cell QCRB against ULA/VSA baselines.

use crate::args::{CompareArgs, SweepVar};
use crate::error::{CliError, CliResult};
use crate::output::{self, fmt_f64};
use crate::scenario_io;
use crate::sweep::grid_of;
use rayon::prelude::*;
use rydoa_core::constants::{C_LIGHT, TAU};
use rydoa_core::scenario::presets::{SIGMA_TOTAL_SQ_LO_DRESSED, SIGMA_TOTAL_SQ_LO_FREE};
use rydoa_core::{
    crb_ula, crb_vsa, qcrb_with_diag, rydberg_qcrb_vs_snr, vsa_steering, ArrayKind, ArrayModel,
};

/// One axis point resolved into the quantities each column needs.
struct PointSetup {
    snr: f64,
    n_elements: usize,
    nu: u64,
}

pub fn run(args: &CompareArgs) -> CliResult<()> {
    match args.axis.variable {
        SweepVar::Snr | SweepVar::NElements | SweepVar::Distance | SweepVar::NAtoms => {}
        other => {
            return Err(CliError::config(format!(
                "variable {} is not sweepable by compare (use qcrb-sweep)",
                other.name()
            )));
        }
    }
    if !(args.snr > 0.0) {
        return Err(CliError::config(format!("--snr must be > 0, got {}", args.snr)));
    }
    if args.n_elements < 2 {
        return Err(CliError::config(format!(
            "--n-elements must be >= 2, got {}",
            args.n_elements
        )));
    }

    let (sc, prov) = scenario_io::resolve(&args.common, "compare", "fig5", &[])?;
    let grid = grid_of(&args.axis)?;

    // The Rydberg columns share one saturation cap: the derivative power
    // actually available at the scenario's operating point.
    let cap = qcrb_with_diag(&sc.scene, &sc.bias, &sc.ladders(), sc.nu)
        .map_err(CliError::from_compute)?
        .a_norm_sq[0];
    if !(cap > 0.0) {
        return Err(CliError::compute(format!(
            "operating point carries no theta_rf information (cap = {cap})"
        )));
    }

    let wavelength = TAU * C_LIGHT / sc.scene.frequency;
    let var = args.axis.variable;
    let d_ref = sc.link.distance;

    let setup = |v: f64| -> CliResult<PointSetup> {
        let mut p = PointSetup {
            snr: args.snr,
            n_elements: args.n_elements,
            nu: sc.nu,
        };
        match var {
            SweepVar::Snr => p.snr = v,
            SweepVar::NElements => {
                let n = v.round();
                if !(n >= 2.0) {
                    return Err(CliError::config(format!("n_elements grid value {v} < 2")));
                }
                p.n_elements = n as usize;
            }
            SweepVar::Distance => {
                if !(v > 0.0) {
                    return Err(CliError::config(format!("distance grid value {v} <= 0")));
                }
                p.snr = args.snr * (d_ref / v).powi(2);
            }
            SweepVar::NAtoms => {
                let n = v.round();
                if !(n >= 1.0) {
                    return Err(CliError::config(format!("n_atoms grid value {v} < 1")));
                }
                p.nu = n as u64;
            }
            _ => unreachable!("variable validated above"),
        }
        Ok(p)
    };

    let pool = scenario_io::thread_pool(args.common.jobs)?;
    let rows: CliResult<Vec<Vec<String>>> = pool.install(|| {
        grid.par_iter()
            .map(|&v| {
                let p = setup(v)?;
                let ry_free = rydberg_qcrb_vs_snr(p.snr, SIGMA_TOTAL_SQ_LO_FREE, cap, p.nu)
                    .map_err(CliError::from_compute)?;
                let ry_dressed = rydberg_qcrb_vs_snr(p.snr, SIGMA_TOTAL_SQ_LO_DRESSED, cap, p.nu)
                    .map_err(CliError::from_compute)?;
                let ula_model = ArrayModel::half_wavelength(ArrayKind::Ula, p.n_elements, wavelength);
                let vsa_model = ArrayModel::half_wavelength(ArrayKind::Vsa, p.n_elements, wavelength);
                let ula = crb_ula(&ula_model, p.snr, 0.0).map_err(CliError::from_compute)?;
                let (a, da) = vsa_steering(&vsa_model, 0.0);
                let vsa = crb_vsa(&vsa_model, p.snr, 0.0, &a, &da).map_err(CliError::from_compute)?;
                Ok(vec![
                    fmt_f64(v),
                    fmt_f64(p.snr),
                    fmt_f64(ry_free),
                    fmt_f64(ry_dressed),
                    fmt_f64(ula),
                    fmt_f64(vsa),
                ])
            })
            .collect()
    });
    let rows = rows?;

    let columns = [
        var.name(),
        "snr_effective",
        "rydberg_lo_free_rad2",
        "rydberg_lo_dressed_rad2",
        "ula_rad2",
        "vsa_rad2",
    ];
    let doc = output::csv_document(&prov, &columns, &rows);
    output::emit(args.common.out.as_deref(), &doc)?;
    if args.plot_script {
        if let Some(out) = &args.common.out {
            output::write_plot_stub(out, true)?;
        }
    }
    Ok(())
}
