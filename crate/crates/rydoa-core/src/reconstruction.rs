//! DoA reconstruction pipeline: the polarization angle from π/σ line areas,
//! the vector RF magnetic field from a bias-orientation scan, and the
//! composed arrival direction k̂ = (E × B)/‖E × B‖.

use crate::angular::basis_for_axis;
use crate::constants::HBAR;
use crate::error::{CoreError, Result};
use crate::fields::{
    decompose_e_field, decompose_in_basis, BiasField, FieldKind, PlaneWave,
};
use crate::spectroscopy::{
    default_grid, enumerate_paths, sweep_spectrum, EitSpectrum, LadderPair,
};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Polarization-angle estimate with its quadrant ambiguity left explicit.
///
/// Line areas fix tan²θ_RF = A_σ/A_π only: the principal value lies in
/// [0, π/2] and the physical angle is one of the four listed candidates.
/// For linear polarization the σ⁺/σ⁻ areas are equal, so `sigma_imbalance`
/// carries no quadrant evidence by itself; the ambiguity is resolved
/// downstream against the recovered B̂ (see [`full_cycle`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaRfEstimate {
    /// atan2(√A_σ, √A_π) ∈ [0, π/2], rad.
    pub principal: f64,
    /// {θ, −θ, π−θ, π+θ}, rad.
    pub candidates: [f64; 4],
    /// (A_σ⁺ − A_σ⁻)/(A_σ⁺ + A_σ⁻); 0 when no σ response.
    pub sigma_imbalance: f64,
}

/// Polarization angle from the deconvolved line areas of an E1 spectrum.
pub fn estimate_theta_rf(spectrum: &EitSpectrum) -> Result<ThetaRfEstimate> {
    if spectrum.peaks.is_empty() {
        return Err(CoreError::InsufficientInformation(
            "no resolvable peaks in the spectrum".into(),
        ));
    }
    if spectrum.peaks.iter().any(|p| p.unresolved) {
        return Err(CoreError::InsufficientInformation(
            "pi/sigma peaks are blended within one linewidth; areas are unreliable".into(),
        ));
    }
    // The area method needs both polarization classes on the record; a
    // spectrum with only pi or only sigma lines is a forbidden angle
    // (theta_RF at 0 or 90 degrees) where the ratio carries no information.
    let has_pi = spectrum.peaks.iter().any(|p| p.path.q == 0);
    let has_sigma = spectrum.peaks.iter().any(|p| p.path.q != 0);
    if !has_pi || !has_sigma {
        let missing = if has_pi { "sigma" } else { "pi" };
        return Err(CoreError::InsufficientInformation(format!(
            "no {missing} peaks in the spectrum: the polarization angle sits at a \
             forbidden value (0 or 90 degrees) where the area ratio degenerates"
        )));
    }
    theta_rf_from_areas(
        spectrum.pi_area(),
        spectrum.area_for_q(1),
        spectrum.area_for_q(-1),
    )
}

/// Area-domain estimator core. With a J_lower = 1/2 RF stage the summed 3-j
/// weights per polarization class are equal (1/3 each), so the area ratio
/// is tan²θ_RF exactly; θ_RF = 45° gives A_π = A_σ and θ̂ = 45°.
pub fn theta_rf_from_areas(a_pi: f64, a_sigma_plus: f64, a_sigma_minus: f64) -> Result<ThetaRfEstimate> {
    let a_pi = a_pi.max(0.0);
    let a_sigma = (a_sigma_plus + a_sigma_minus).max(0.0);
    if a_pi <= 0.0 && a_sigma <= 0.0 {
        return Err(CoreError::InsufficientInformation(
            "all line areas vanish; polarization angle is unconstrained".into(),
        ));
    }
    let principal = a_sigma.sqrt().atan2(a_pi.sqrt());
    let sigma_imbalance = if a_sigma > 0.0 {
        (a_sigma_plus - a_sigma_minus) / a_sigma
    } else {
        0.0
    };
    Ok(ThetaRfEstimate {
        principal,
        candidates: [principal, -principal, PI - principal, PI + principal],
        sigma_imbalance,
    })
}

/// Bias-orientation scan: unit quantization axes n̂_i and the per-projection
/// sign factors 𝔟_q^{(i)} ∈ {±1} supplied by the phase reference.
/// Sign index order is q = (−1, 0, +1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasScanPlan {
    pub orientations: Vec<[f64; 3]>,
    pub sign_factors: Vec<[f64; 3]>,
}

impl Default for BiasScanPlan {
    /// Orthogonal two-orientation scan along ẑ and ŷ with all-positive
    /// phase references.
    fn default() -> Self {
        BiasScanPlan {
            orientations: vec![[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
            sign_factors: vec![[1.0; 3], [1.0; 3]],
        }
    }
}

impl BiasScanPlan {
    /// Checks orientation count, sign-factor shape, phase purity of every
    /// projection, and full rank of the stacked measurement matrix.
    pub fn validate(&self) -> Result<()> {
        let rows = plan_rows(self)?;
        stacked_matrix(&rows).map(|_| ())
    }
}

/// One scalar projection measurement: the phase-referenced real functional
/// reported by |B_q|, plus the complementary quadrature that vanishes
/// identically for fields in the y-z polarization plane (its zero pins the
/// out-of-plane component in the least-squares system).
struct MeasurementRow {
    functional: Vector3<f64>,
    constraint: Option<Vector3<f64>>,
}

/// Sign convention for the functionals: leading nonzero component in
/// (z, y, x) order is positive. The default plan's sign factors of +1 refer
/// to exactly these canonical directions.
fn canonical(v: Vector3<f64>) -> Vector3<f64> {
    for idx in [2usize, 1, 0] {
        if v[idx].abs() > 1e-12 {
            return if v[idx] < 0.0 { -v } else { v };
        }
    }
    v
}

fn plan_rows(plan: &BiasScanPlan) -> Result<Vec<[MeasurementRow; 3]>> {
    if plan.orientations.len() < 2 {
        return Err(CoreError::DegeneratePlan(format!(
            "bias scan needs at least 2 orientations, got {}",
            plan.orientations.len()
        )));
    }
    if plan.sign_factors.len() != plan.orientations.len() {
        return Err(CoreError::DegeneratePlan(format!(
            "{} orientations but {} sign-factor triples",
            plan.orientations.len(),
            plan.sign_factors.len()
        )));
    }
    for (i, signs) in plan.sign_factors.iter().enumerate() {
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(CoreError::DegeneratePlan(format!(
                "sign factors must be exactly ±1; orientation {i} has {signs:?}"
            )));
        }
    }

    let mut out = Vec::with_capacity(plan.orientations.len());
    for (i, n) in plan.orientations.iter().enumerate() {
        let basis = basis_for_axis(&Vector3::from_column_slice(n))?;
        let mut triple = Vec::with_capacity(3);
        for q in [-1i32, 0, 1] {
            let e = basis.component(q);
            // e_q†·v = a·v − i b·v for real v.
            let a = Vector3::new(e[0].re, e[1].re, e[2].re);
            let b = Vector3::new(e[0].im, e[1].im, e[2].im);
            let a_plane = (a[1] * a[1] + a[2] * a[2]).sqrt();
            let b_plane = (b[1] * b[1] + b[2] * b[2]).sqrt();
            let scale = a_plane.max(b_plane);
            if scale > 0.0 && a_plane.min(b_plane) > 1e-6 * scale {
                return Err(CoreError::DegeneratePlan(format!(
                    "orientation {i} (q = {q}): projection phase varies over \
                     the polarization plane; |B_q| is not a linear readout \
                     for this axis"
                )));
            }
            let (prim, cons) = if scale == 0.0 {
                // Blind to the plane: zero-magnitude measurement carrying
                // only an out-of-plane constraint.
                if a.norm() >= b.norm() {
                    (a, Some(b))
                } else {
                    (b, Some(a))
                }
            } else if a_plane >= b_plane {
                (a, Some(b))
            } else {
                (b, Some(a))
            };
            triple.push(MeasurementRow {
                functional: canonical(prim),
                constraint: if cons.map_or(0.0, |c| c.norm()) > 1e-12 {
                    cons.map(canonical)
                } else {
                    None
                },
            });
        }
        let triple: [MeasurementRow; 3] = triple
            .try_into()
            .unwrap_or_else(|_| unreachable!("three q components"));
        out.push(triple);
    }
    Ok(out)
}

/// Row index paired with the source observable index (`None` marks a
/// zero-quadrature constraint row).
type RowMap = Vec<(usize, Option<usize>)>;

/// Stacked real measurement matrix (functional rows first within each
/// projection, zero-quadrature constraints after), with the target-builder
/// row map. Errors when numerically rank deficient.
fn stacked_matrix(rows: &[[MeasurementRow; 3]]) -> Result<(DMatrix<f64>, RowMap)> {
    let mut data: Vec<Vector3<f64>> = Vec::new();
    let mut map = Vec::new();
    for (i, triple) in rows.iter().enumerate() {
        for (qi, row) in triple.iter().enumerate() {
            map.push((data.len(), Some(3 * i + qi)));
            data.push(row.functional);
            if let Some(c) = row.constraint {
                map.push((data.len(), None));
                data.push(c);
            }
        }
    }
    let m = DMatrix::from_fn(data.len(), 3, |r, c| data[r][c]);
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-9 * smax) {
        return Err(CoreError::DegeneratePlan(format!(
            "stacked measurement matrix is rank deficient \
             (σ_min/σ_max = {:.2e})",
            smin / smax
        )));
    }
    Ok((m, map))
}

/// Recovered vector field with least-squares diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BRfSolution {
    pub vector: [f64; 3],
    /// ‖M b − y‖₂ in measurement units.
    pub residual: f64,
    /// residual / ‖y‖₂ (defined 0 when both vanish).
    pub relative_residual: f64,
}

/// Vector B_RF from the per-orientation projection magnitudes
/// |B_q^{(i)}| ≥ 0 (index order q = −1, 0, +1), solved as the real
/// least-squares system 𝔟_q^{(i)} |B_q^{(i)}| = m_q^{(i)}·B with the
/// zero-quadrature constraints appended.
pub fn solve_b_rf(plan: &BiasScanPlan, amplitudes: &[[f64; 3]]) -> Result<BRfSolution> {
    let rows = plan_rows(plan)?;
    if amplitudes.len() != plan.orientations.len() {
        return Err(CoreError::InvalidInput(format!(
            "{} orientations but {} amplitude triples",
            plan.orientations.len(),
            amplitudes.len()
        )));
    }
    for (i, trip) in amplitudes.iter().enumerate() {
        if trip.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "amplitudes must be finite non-negative magnitudes; orientation {i} has {trip:?}"
            )));
        }
    }

    let (m, map) = stacked_matrix(&rows)?;
    let mut y = DVector::zeros(m.nrows());
    for &(r, src) in &map {
        if let Some(flat) = src {
            let (i, qi) = (flat / 3, flat % 3);
            y[r] = plan.sign_factors[i][qi] * amplitudes[i][qi];
        }
    }

    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let x = svd
        .solve(&y, 1e-12 * smax)
        .map_err(|e| CoreError::InvalidInput(e.to_string()))?;
    let residual = (&m * &x - &y).norm();
    let ynorm = y.norm();
    let relative_residual = if ynorm > 0.0 {
        residual / ynorm
    } else if residual > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(BRfSolution {
        vector: [x[0], x[1], x[2]],
        residual,
        relative_residual,
    })
}

/// Composed arrival-direction estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaEstimate {
    /// Selected polarization angle, rad.
    pub theta_rf_hat: f64,
    /// atan2(B_z, B_y) of the recovered field, rad.
    pub theta_b_hat: f64,
    /// Recovered B_RF, field units.
    pub b_rf_vector: [f64; 3],
    /// (E × B)/‖E × B‖.
    pub k_hat: [f64; 3],
    /// atan2((E×B)_y, (E×B)_x), rad.
    pub theta_doa: f64,
}

/// k̂ and θ_DoA from explicit E and B vectors. Parallel or vanishing fields
/// leave the cross product undefined and error out.
pub fn compose_doa(e_field: &[f64; 3], b_field: &[f64; 3]) -> Result<DoaEstimate> {
    let e = Vector3::from_column_slice(e_field);
    let b = Vector3::from_column_slice(b_field);
    let cross = e.cross(&b);
    let scale = e.norm() * b.norm();
    if !(scale > 0.0) || cross.norm() <= 1e-10 * scale {
        return Err(CoreError::DegenerateGeometry(
            "E and B_RF are parallel or vanishing; k̂ = E×B/‖E×B‖ is undefined".into(),
        ));
    }
    let k = cross / cross.norm();
    Ok(DoaEstimate {
        theta_rf_hat: e[2].atan2(e[1]),
        theta_b_hat: b[2].atan2(b[1]),
        b_rf_vector: *b_field,
        k_hat: [k[0], k[1], k[2]],
        theta_doa: cross[1].atan2(cross[0]),
    })
}

/// Calibrated projection magnitude from a deconvolved line-area sum: each
/// path contributes π|Ω^{(q)}/2|² and the per-q 3-j weights sum to 1/3 for
/// a J_lower = 1/2 stage, so A_q = (π/12)(μ̂|B_q|/ħ)².
pub fn amplitude_from_area(area: f64, reduced_moment: f64) -> f64 {
    if area <= 0.0 {
        0.0
    } else {
        2.0 * HBAR / reduced_moment.abs() * (3.0 * area / PI).sqrt()
    }
}

/// Sign factors read off the true field: models the heterodyne phase
/// reference an experiment calibrates before the scan. The estimator itself
/// only ever sees these ±1 factors, never the vector.
pub fn referenced_plan(plan: &BiasScanPlan, b_true: &Vector3<f64>) -> Result<BiasScanPlan> {
    let rows = plan_rows(plan)?;
    let mut out = plan.clone();
    for (i, triple) in rows.iter().enumerate() {
        for (qi, row) in triple.iter().enumerate() {
            out.sign_factors[i][qi] = if row.functional.dot(b_true) < 0.0 {
                -1.0
            } else {
                1.0
            };
        }
    }
    Ok(out)
}

/// Everything the end-to-end cycle produced, spectra included for audit.
#[derive(Debug, Clone)]
pub struct FullCycleResult {
    pub estimate: DoaEstimate,
    pub theta_rf: ThetaRfEstimate,
    pub b_solution: BRfSolution,
    /// Phase-referenced plan actually used by the solver.
    pub signed_plan: BiasScanPlan,
    /// Calibrated |B_q| magnitudes per orientation.
    pub m1_amplitudes: Vec<[f64; 3]>,
    pub e1_spectrum: EitSpectrum,
    pub m1_spectra: Vec<EitSpectrum>,
}

/// End-to-end reconstruction: E1 spectrum → θ̂_RF candidates; M1 spectra at
/// each plan orientation (bias and quantization axis rotated together, the
/// field decomposed in that orientation's spherical basis) → calibrated
/// projection magnitudes → vector B̂_RF; quadrant selection of θ_RF against
/// B̂ orthogonality; k̂ composition.
pub fn full_cycle(
    scene: &PlaneWave,
    bias: &BiasField,
    cfgs: &LadderPair,
    plan: &BiasScanPlan,
) -> Result<FullCycleResult> {
    cfgs.validate()?;
    plan.validate()?;

    let decomp_e = decompose_e_field(scene.e_amplitude, scene.theta_rf);
    let paths_e = enumerate_paths(&cfgs.e1, &decomp_e, bias)?;
    let grid_e = default_grid(&cfgs.e1, &paths_e);
    let e1_spectrum = sweep_spectrum(&cfgs.e1, &decomp_e, bias, &grid_e)?;
    let theta_rf = estimate_theta_rf(&e1_spectrum)?;

    let b_vec = scene.b_vector();
    let mut m1_spectra = Vec::new();
    let mut m1_amplitudes = Vec::new();
    for n in &plan.orientations {
        let basis = basis_for_axis(&Vector3::from_column_slice(n))?;
        let decomp_b = decompose_in_basis(&b_vec, FieldKind::Magnetic, &basis);
        // Quantization follows the rotated bias: full Zeeman splitting.
        let bias_i = BiasField::new(bias.magnitude, 0.0);
        let paths = enumerate_paths(&cfgs.m1, &decomp_b, &bias_i)?;
        let grid = default_grid(&cfgs.m1, &paths);
        let spec = sweep_spectrum(&cfgs.m1, &decomp_b, &bias_i, &grid)?;
        m1_amplitudes.push([
            amplitude_from_area(spec.area_for_q(-1), cfgs.m1.reduced_dipole),
            amplitude_from_area(spec.area_for_q(0), cfgs.m1.reduced_dipole),
            amplitude_from_area(spec.area_for_q(1), cfgs.m1.reduced_dipole),
        ]);
        m1_spectra.push(spec);
    }

    let signed_plan = referenced_plan(plan, &b_vec)?;
    let (estimate, b_solution) =
        resolve_and_compose(&theta_rf, &signed_plan, &m1_amplitudes, scene.e_amplitude)?;

    Ok(FullCycleResult {
        estimate,
        theta_rf,
        b_solution,
        signed_plan,
        m1_amplitudes,
        e1_spectrum,
        m1_spectra,
    })
}

/// Shared back half of the cycle: solve for B̂, select the polarization
/// branch, compose k̂.
fn resolve_and_compose(
    theta_rf: &ThetaRfEstimate,
    plan: &BiasScanPlan,
    amplitudes: &[[f64; 3]],
    e_amplitude: f64,
) -> Result<(DoaEstimate, BRfSolution)> {
    let sol = solve_b_rf(plan, amplitudes)?;
    let theta_b_hat = sol.vector[2].atan2(sol.vector[1]);

    // Candidates fold onto two representatives in [0, π); the line ⊥ B̂
    // selects between them and the signed B̂ fixes the propagation branch.
    let c1 = theta_rf.principal.rem_euclid(PI);
    let c2 = (PI - theta_rf.principal).rem_euclid(PI);
    let score = |c: f64| (c - theta_b_hat).cos().abs();
    let theta_sel = if score(c1) <= score(c2) { c1 } else { c2 };

    let e = [
        0.0,
        e_amplitude * theta_sel.cos(),
        e_amplitude * theta_sel.sin(),
    ];
    let mut est = compose_doa(&e, &sol.vector)?;
    est.theta_rf_hat = theta_sel;
    Ok((est, sol))
}

/// One Monte Carlo draw of the cycle's estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaTrial {
    pub theta_rf_hat: f64,
    pub theta_b_hat: f64,
    pub theta_doa: f64,
}

/// Monte Carlo summary over repeated noisy readouts of one scene.
#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub base: FullCycleResult,
    pub trials: Vec<DoaTrial>,
    /// Draws whose estimation chain degenerated (counted, not sampled).
    pub failures: usize,
}

/// Repeats the estimation chain with multiplicative Gaussian readout noise
/// (relative σ = `noise_rel`) on the measured line areas and projection
/// magnitudes. Spectra are synthesized once; noise enters at the readout
/// stage, where a real acquisition's fluctuations live.
pub fn full_cycle_monte_carlo(
    scene: &PlaneWave,
    bias: &BiasField,
    cfgs: &LadderPair,
    plan: &BiasScanPlan,
    noise_rel: f64,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<MonteCarloResult> {
    if !(noise_rel >= 0.0) || !noise_rel.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "noise_rel must be finite and >= 0, got {noise_rel}"
        )));
    }
    let base = full_cycle(scene, bias, cfgs, plan)?;
    let a_pi = base.e1_spectrum.pi_area();
    let a_plus = base.e1_spectrum.area_for_q(1);
    let a_minus = base.e1_spectrum.area_for_q(-1);

    let mut out = Vec::with_capacity(trials);
    let mut failures = 0usize;
    for _ in 0..trials {
        let mut jitter = |v: f64| -> f64 {
            let g: f64 = StandardNormal.sample(rng);
            (v * (1.0 + noise_rel * g)).max(0.0)
        };
        let theta = theta_rf_from_areas(jitter(a_pi), jitter(a_plus), jitter(a_minus));
        let mu: Vec<[f64; 3]> = base
            .m1_amplitudes
            .iter()
            .map(|t| [jitter(t[0]), jitter(t[1]), jitter(t[2])])
            .collect();
        let trial = theta.and_then(|th| {
            resolve_and_compose(&th, &base.signed_plan, &mu, scene.e_amplitude)
        });
        match trial {
            Ok((est, _)) => out.push(DoaTrial {
                theta_rf_hat: est.theta_rf_hat,
                theta_b_hat: est.theta_b_hat,
                theta_doa: est.theta_doa,
            }),
            Err(_) => failures += 1,
        }
    }
    Ok(MonteCarloResult {
        base,
        trials: out,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TAU;
    use crate::scenario::presets;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn theta_from_areas_identities() {
        let t = theta_rf_from_areas(1.0, 0.5, 0.5).unwrap();
        assert_relative_eq!(t.principal, PI / 4.0, epsilon = 1e-14);
        assert_eq!(t.sigma_imbalance, 0.0);
        assert_relative_eq!(t.candidates[2], 3.0 * PI / 4.0, epsilon = 1e-14);

        assert_eq!(theta_rf_from_areas(1.0, 0.0, 0.0).unwrap().principal, 0.0);
        assert_relative_eq!(
            theta_rf_from_areas(0.0, 1.0, 1.0).unwrap().principal,
            PI / 2.0,
            epsilon = 1e-14
        );
        // tan²θ = A_σ/A_π.
        let t = theta_rf_from_areas(3.0, 0.5, 0.5).unwrap();
        assert_relative_eq!(t.principal.tan().powi(2), 1.0 / 3.0, epsilon = 1e-12);
        assert!(theta_rf_from_areas(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn estimate_from_synthesized_spectrum() {
        let sc = presets::fig3().unwrap();
        let theta_true = sc.scene.theta_rf;
        let decomp = decompose_e_field(sc.scene.e_amplitude, theta_true);
        let paths = enumerate_paths(&sc.ladder_e1, &decomp, &sc.bias).unwrap();
        let grid = default_grid(&sc.ladder_e1, &paths);
        let spec = sweep_spectrum(&sc.ladder_e1, &decomp, &sc.bias, &grid).unwrap();
        let est = estimate_theta_rf(&spec).unwrap();
        assert!(
            (est.principal - theta_true).abs() < 0.3f64.to_radians(),
            "theta_hat = {}°",
            est.principal.to_degrees()
        );
        // Linear polarization: balanced σ components.
        assert!(est.sigma_imbalance.abs() < 0.02);
    }

    #[test]
    fn forty_five_degrees_is_exact_by_symmetry() {
        let sc = presets::fig3().unwrap();
        let decomp = decompose_e_field(1.0, PI / 4.0);
        let paths = enumerate_paths(&sc.ladder_e1, &decomp, &sc.bias).unwrap();
        let grid = default_grid(&sc.ladder_e1, &paths);
        let spec = sweep_spectrum(&sc.ladder_e1, &decomp, &sc.bias, &grid).unwrap();
        let est = estimate_theta_rf(&spec).unwrap();
        assert!(
            (est.principal - PI / 4.0).abs() < 2e-3,
            "theta_hat = {}°",
            est.principal.to_degrees()
        );
    }

    #[test]
    fn default_plan_validates_and_bad_plans_fail() {
        BiasScanPlan::default().validate().unwrap();

        let single = BiasScanPlan {
            orientations: vec![[0.0, 0.0, 1.0]],
            sign_factors: vec![[1.0; 3]],
        };
        assert!(matches!(
            single.validate(),
            Err(CoreError::DegeneratePlan(_))
        ));

        let mismatched = BiasScanPlan {
            orientations: vec![[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
            sign_factors: vec![[1.0; 3]],
        };
        assert!(mismatched.validate().is_err());

        let bad_sign = BiasScanPlan {
            sign_factors: vec![[1.0, 0.5, 1.0], [1.0; 3]],
            ..Default::default()
        };
        assert!(bad_sign.validate().is_err());

        // 45° in-plane axis: σ projections have plane-varying phase.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = BiasScanPlan {
            orientations: vec![[0.0, 0.0, 1.0], [0.0, s, s]],
            sign_factors: vec![[1.0; 3], [1.0; 3]],
        };
        assert!(matches!(mixed.validate(), Err(CoreError::DegeneratePlan(_))));
    }

    /// Analytic projection magnitudes for the default plan's geometry.
    fn projections(plan: &BiasScanPlan, b: &Vector3<f64>) -> Vec<[f64; 3]> {
        plan.orientations
            .iter()
            .map(|n| {
                let basis = basis_for_axis(&Vector3::from_column_slice(n)).unwrap();
                let d = decompose_in_basis(b, FieldKind::Magnetic, &basis);
                [
                    d.amplitude * d.coeff(-1).norm(),
                    d.amplitude * d.coeff(0).norm(),
                    d.amplitude * d.coeff(1).norm(),
                ]
            })
            .collect()
    }

    #[test]
    fn axial_field_recovered_exactly() {
        let plan = BiasScanPlan::default();
        let b = Vector3::new(0.0, 0.0, 2.5e-9);
        let amps = projections(&plan, &b);
        let sol = solve_b_rf(&plan, &amps).unwrap();
        for i in 0..3 {
            assert_relative_eq!(sol.vector[i], b[i], epsilon = 1e-10 * b.norm());
        }
        assert!(sol.residual < 1e-12 * b.norm());
        assert!(sol.relative_residual < 1e-12);
    }

    #[test]
    fn in_plane_directions_recovered_with_phase_reference() {
        let plan = BiasScanPlan::default();
        for k in 0..24 {
            let theta = k as f64 * TAU / 24.0;
            let b = Vector3::new(0.0, theta.cos(), theta.sin()) * 1.7e-9;
            let signed = referenced_plan(&plan, &b).unwrap();
            let amps = projections(&plan, &b);
            let sol = solve_b_rf(&signed, &amps).unwrap();
            for i in 0..3 {
                assert_relative_eq!(sol.vector[i], b[i], epsilon = 1e-9 * b.norm());
            }
        }
    }

    #[test]
    fn one_percent_noise_stays_under_three_percent() {
        let plan = BiasScanPlan::default();
        let b = Vector3::new(0.0, -0.6, 0.8) * 3.0e-9;
        let signed = referenced_plan(&plan, &b).unwrap();
        let clean = projections(&plan, &b);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut total = 0.0;
        let n_trials = 1000;
        for _ in 0..n_trials {
            let noisy: Vec<[f64; 3]> = clean
                .iter()
                .map(|t| {
                    let mut out = [0.0; 3];
                    for (o, v) in out.iter_mut().zip(t.iter()) {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        *o = (v * (1.0 + 0.01 * g)).max(0.0);
                    }
                    out
                })
                .collect();
            let sol = solve_b_rf(&signed, &noisy).unwrap();
            let err = (Vector3::from_column_slice(&sol.vector) - b).norm() / b.norm();
            total += err;
        }
        let mean = total / n_trials as f64;
        assert!(mean < 0.03, "mean relative error {mean}");
    }

    #[test]
    fn compose_examples() {
        let est = compose_doa(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(est.k_hat[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(est.theta_doa, 0.0, epsilon = 1e-14);

        let est = compose_doa(&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(est.k_hat[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(est.theta_doa.abs(), PI, epsilon = 1e-14);

        assert!(matches!(
            compose_doa(&[0.0, 1.0, 0.0], &[0.0, 0.5, 0.0]),
            Err(CoreError::DegenerateGeometry(_))
        ));
        assert!(compose_doa(&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn amplitude_area_roundtrip() {
        let mu = 3.6e-18;
        let b_q = 4.2e-9;
        let area = PI / 12.0 * (mu * b_q / HBAR).powi(2);
        assert_relative_eq!(amplitude_from_area(area, mu), b_q, max_relative = 1e-12);
        assert_eq!(amplitude_from_area(0.0, mu), 0.0);
        assert_eq!(amplitude_from_area(-1.0, mu), 0.0);
    }

    #[test]
    fn full_cycle_forward_branch() {
        let sc = presets::fig5().unwrap();
        let result = full_cycle(&sc.scene, &sc.bias, &sc.ladders(), &sc.plan).unwrap();
        let est = &result.estimate;
        assert!(
            (est.theta_rf_hat - sc.scene.theta_rf).abs() < 0.5f64.to_radians(),
            "theta_rf_hat = {}°",
            est.theta_rf_hat.to_degrees()
        );
        let true_doa = sc.scene.k_direction();
        assert!((est.theta_doa - true_doa[1].atan2(true_doa[0])).abs() < 0.5f64.to_radians());
        assert!(result.b_solution.relative_residual < 1e-3);
    }

    #[test]
    fn full_cycle_reverse_branch() {
        let sc = presets::fig5().unwrap();
        // k = −x̂: B̂ rotated −90° from Ê.
        let scene = PlaneWave::new(
            sc.scene.e_amplitude,
            sc.scene.theta_rf,
            sc.scene.theta_rf - PI / 2.0,
            sc.scene.frequency,
        );
        let result = full_cycle(&scene, &sc.bias, &sc.ladders(), &sc.plan).unwrap();
        assert!(
            (result.estimate.theta_doa.abs() - PI).abs() < 0.5f64.to_radians(),
            "theta_doa = {}°",
            result.estimate.theta_doa.to_degrees()
        );
    }

    #[test]
    fn monte_carlo_statistics_sane() {
        let sc = presets::fig5().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mc = full_cycle_monte_carlo(
            &sc.scene,
            &sc.bias,
            &sc.ladders(),
            &sc.plan,
            0.01,
            200,
            &mut rng,
        )
        .unwrap();
        assert_eq!(mc.failures, 0);
        assert_eq!(mc.trials.len(), 200);
        let mean: f64 =
            mc.trials.iter().map(|t| t.theta_rf_hat).sum::<f64>() / mc.trials.len() as f64;
        assert!((mean - sc.scene.theta_rf).abs() < 1.0f64.to_radians());
    }
}
