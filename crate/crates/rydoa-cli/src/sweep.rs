//! Sweep-axis grids and the `rydoa qcrb-sweep` command.

use crate::args::{AxisArgs, QcrbSweepArgs, SweepVar};
use crate::error::{CliError, CliResult};
use crate::output::{self, fmt_f64};
use crate::scenario_io;
use rayon::prelude::*;
use rydoa_core::{BiasField, PlaneWave, QcrbPoint, ScenarioConfig};
use std::f64::consts::FRAC_PI_2;

/// Materialize one axis: `steps` points from `start` to `stop`, linear or
/// logarithmic. Degenerate axes are schema errors, not empty sweeps.
pub fn axis_grid(var: SweepVar, start: f64, stop: f64, steps: usize, log: bool) -> CliResult<Vec<f64>> {
    if steps < 2 {
        return Err(CliError::config(format!(
            "{}: steps must be >= 2, got {steps}",
            var.name()
        )));
    }
    if !(start.is_finite() && stop.is_finite()) || start == stop {
        return Err(CliError::config(format!(
            "{}: endpoints must be finite and distinct, got [{start}, {stop}]",
            var.name()
        )));
    }
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(CliError::config(format!(
            "{}: log spacing requires positive endpoints, got [{start}, {stop}]",
            var.name()
        )));
    }
    let n = steps as f64;
    let grid = (0..steps)
        .map(|k| {
            let t = k as f64 / (n - 1.0);
            if log {
                (start.ln() + (stop.ln() - start.ln()) * t).exp()
            } else {
                start + (stop - start) * t
            }
        })
        .collect();
    Ok(grid)
}

pub fn grid_of(axis: &AxisArgs) -> CliResult<Vec<f64>> {
    axis_grid(axis.variable, axis.start, axis.stop, axis.steps, axis.log)
}

/// Apply one swept value to a scenario copy. Sweeping θ_RF keeps the
/// plane-wave constraint θ_B = θ_RF + 90°; sweeping a magnitude keeps the
/// configured orientations.
pub fn apply_point(sc: &ScenarioConfig, var: SweepVar, v: f64) -> CliResult<ScenarioConfig> {
    let mut out = sc.clone();
    match var {
        SweepVar::ThetaRf => {
            let th = v.to_radians();
            out.scene = PlaneWave::new(sc.scene.e_amplitude, th, th + FRAC_PI_2, sc.scene.frequency);
        }
        SweepVar::ThetaBias => {
            out.bias = BiasField::new(sc.bias.magnitude, v.to_radians());
        }
        SweepVar::E0 => {
            if !(v > 0.0) {
                return Err(CliError::config(format!("e0 grid value must be > 0, got {v}")));
            }
            out.scene = PlaneWave::new(v, sc.scene.theta_rf, sc.scene.theta_b, sc.scene.frequency);
        }
        SweepVar::BBias => {
            if !(v >= 0.0) {
                return Err(CliError::config(format!("b_bias grid value must be >= 0, got {v}")));
            }
            out.bias = BiasField::new(v, sc.bias.theta_bias);
        }
        other => {
            return Err(CliError::config(format!(
                "variable {} is not sweepable by qcrb-sweep (use compare)",
                other.name()
            )));
        }
    }
    Ok(out)
}

const COLUMNS: [&str; 11] = [
    "qcrb_theta_rf_rad2",
    "qcrb_theta_b_rad2",
    "resolution_theta_rf_deg",
    "resolution_theta_b_deg",
    "diverged_theta_rf",
    "diverged_theta_b",
    "a_norm_sq_theta_rf",
    "a_norm_sq_theta_b",
    "richardson_rel_theta_rf",
    "richardson_rel_theta_b",
    "status",
];

fn point_cells(point: Result<QcrbPoint, String>) -> Vec<String> {
    match point {
        Ok(p) => {
            let f = &p.fisher;
            vec![
                fmt_f64(f.qcrb[0][0]),
                fmt_f64(f.qcrb[1][1]),
                fmt_f64(f.resolution_deg[0]),
                fmt_f64(f.resolution_deg[1]),
                (f.diverged[0] as u8).to_string(),
                (f.diverged[1] as u8).to_string(),
                fmt_f64(p.a_norm_sq[0]),
                fmt_f64(p.a_norm_sq[1]),
                fmt_f64(p.richardson_rel[0]),
                fmt_f64(p.richardson_rel[1]),
                "ok".to_string(),
            ]
        }
        Err(msg) => {
            eprintln!("warning: sweep point failed: {msg}");
            let mut row = vec![fmt_f64(f64::INFINITY); 4];
            row.extend(["1".to_string(), "1".to_string()]);
            row.extend(vec![fmt_f64(f64::INFINITY); 4]);
            row.push("error".to_string());
            row
        }
    }
}

fn check_applicable(var: SweepVar) -> CliResult<()> {
    match var {
        SweepVar::ThetaRf | SweepVar::ThetaBias | SweepVar::E0 | SweepVar::BBias => Ok(()),
        other => Err(CliError::config(format!(
            "variable {} is not sweepable by qcrb-sweep (use compare)",
            other.name()
        ))),
    }
}

pub fn run(args: &QcrbSweepArgs) -> CliResult<()> {
    check_applicable(args.axis.variable)?;
    if let Some(v2) = args.variable2 {
        check_applicable(v2)?;
    }
    let (sc, prov) = scenario_io::resolve(&args.common, "qcrb-sweep", "fig5", &[])?;
    let primary = grid_of(&args.axis)?;
    let secondary = match args.variable2 {
        Some(var2) => {
            if var2 == args.axis.variable {
                return Err(CliError::config("variable2 must differ from variable"));
            }
            let (s2, e2, n2) = match (args.start2, args.stop2, args.steps2) {
                (Some(s), Some(e), Some(n)) => (s, e, n),
                _ => {
                    return Err(CliError::config(
                        "variable2 requires start2, stop2, and steps2",
                    ))
                }
            };
            Some((var2, axis_grid(var2, s2, e2, n2, args.log2)?))
        }
        None => None,
    };

    // Grid-order point list; the parallel map preserves this order.
    let points: Vec<(f64, Option<f64>)> = match &secondary {
        Some((_, g2)) => primary
            .iter()
            .flat_map(|&a| g2.iter().map(move |&b| (a, Some(b))))
            .collect(),
        None => primary.iter().map(|&a| (a, None)).collect(),
    };

    let pool = scenario_io::thread_pool(args.common.jobs)?;
    let var1 = args.axis.variable;
    let rows: Vec<Vec<String>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, b)| {
                let point = apply_point(&sc, var1, a)
                    .and_then(|s1| match (&secondary, b) {
                        (Some((var2, _)), Some(vb)) => apply_point(&s1, *var2, vb),
                        _ => Ok(s1),
                    })
                    .map_err(|e| e.to_string())
                    .and_then(|si| {
                        rydoa_core::qcrb_with_diag(&si.scene, &si.bias, &si.ladders(), si.nu)
                            .map_err(|e| e.to_string())
                    });
                let mut row = vec![fmt_f64(a)];
                if let Some(vb) = b {
                    row.push(fmt_f64(vb));
                }
                row.extend(point_cells(point));
                row
            })
            .collect()
    });

    let mut columns: Vec<&str> = vec![var1.name()];
    if let Some((var2, _)) = &secondary {
        columns.push(var2.name());
    }
    columns.extend(COLUMNS);

    let doc = output::csv_document(&prov, &columns, &rows);
    output::emit(args.common.out.as_deref(), &doc)?;
    if args.plot_script {
        if let Some(out) = &args.common.out {
            output::write_plot_stub(out, true)?;
        }
    }
    Ok(())
}
