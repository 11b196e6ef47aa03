//! Zeeman-resolved EIT spectroscopy for the E1 and M1 RF ladders: path
//! enumeration with 3-j weights, the RF self-energy, the analytic probe
//! coherence ρ21, and spectrum synthesis with peak extraction.
//!
//! Quadrature convention: the response is Im ρ21 ≥ 0 (absorption proxy).
//! ρ21 here equals i times the form often printed with (Δ + iγ)
//! denominators; the rotation moves absorption from the real to the
//! imaginary part and changes no physics.

use crate::angular::{wigner_3j, HalfInt};
use crate::error::{CoreError, Result};
use crate::fields::{zeeman_shift, BiasField, FieldKind, SphericalDecomposition};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub mod lindblad;
pub use lindblad::{steady_state, DensityMatrix};

/// Which RF transition the ladder addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Electric dipole, n'S_{1/2} → nP_{1/2}.
    E1,
    /// Magnetic dipole, n'P_{1/2} → nP_{3/2}.
    M1,
}

/// Full parameter set of the four-level ladder
/// 5S_{1/2} → 5P_{3/2} → (lower Rydberg) → (upper Rydberg).
///
/// All rates and detunings are angular frequencies, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    /// Probe Rabi frequency Ω_p.
    pub omega_p: f64,
    /// Coupling Rabi frequency Ω_c.
    pub omega_c: f64,
    /// Probe detuning Δ_p.
    pub delta_p: f64,
    /// Coupling detuning Δ_c at the operating point (spectra sweep it).
    pub delta_c: f64,
    /// RF detuning Δ_RF in the scalar four-level picture.
    pub delta_rf: f64,
    /// Inverse lifetimes γ_2, γ_3, γ_4 of the intermediate, lower-Rydberg,
    /// and upper-Rydberg levels.
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Coherence decay rates; γ21 = γ2/2 and γ31 = γ3/2 unless overridden.
    pub gamma21: f64,
    pub gamma31: f64,
    /// RF dephasing rate γ_RF.
    pub gamma_rf: f64,
    /// Bare RF transition frequency ω_0.
    pub omega0: f64,
    /// Signed operating offset Δ̃ (ω_RF = ω_0 + Δ̃; pass a negative value
    /// for the −Δ̃ branch).
    pub delta_tilde: f64,
    pub transition_kind: TransitionKind,
    /// Reduced matrix element: C·m for E1, J/T for M1.
    ///
    /// The bundled presets set the M1 moment to c·d̂ so both stages
    /// respond at the same Rabi scale to the same incident wave; the bare
    /// physical scale would be of order μ_B (four orders weaker) and is
    /// available by explicit override.
    pub reduced_dipole: f64,
    /// Landé factors of the RF-coupled manifolds.
    pub g_lower: f64,
    pub g_upper: f64,
    pub j_lower: HalfInt,
    pub j_upper: HalfInt,
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("gamma21", self.gamma21),
            ("gamma31", self.gamma31),
            ("gamma_rf", self.gamma_rf),
        ] {
            if !(v > 0.0) {
                return Err(CoreError::InvalidInput(format!(
                    "rate {name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.omega_p < 0.0 || self.omega_c < 0.0 {
            return Err(CoreError::InvalidInput(
                "Rabi frequencies must be non-negative".into(),
            ));
        }
        let expect = match self.transition_kind {
            TransitionKind::E1 => (HalfInt::HALF, HalfInt::HALF),
            TransitionKind::M1 => (HalfInt::HALF, HalfInt::THREE_HALVES),
        };
        if (self.j_lower, self.j_upper) != expect {
            return Err(CoreError::InvalidInput(format!(
                "{:?} ladder requires (j_lower, j_upper) = ({}, {}), got ({}, {})",
                self.transition_kind, expect.0, expect.1, self.j_lower, self.j_upper
            )));
        }
        Ok(())
    }

    /// The field kind this ladder couples to.
    pub fn field_kind(&self) -> FieldKind {
        match self.transition_kind {
            TransitionKind::E1 => FieldKind::Electric,
            TransitionKind::M1 => FieldKind::Magnetic,
        }
    }

    /// Effective width of the RF self-energy poles: dephasing plus the
    /// terminal level's radiative broadening (the ground-to-upper coherence
    /// decays at γ_RF + γ4/2 since the ground state is stable).
    pub fn gamma_rf_eff(&self) -> f64 {
        self.gamma_rf + self.gamma4 / 2.0
    }
}

/// The receiver's two ladders: the E1 stage reading θ_RF and the M1 stage
/// reading θ_B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPair {
    pub e1: LadderConfig,
    pub m1: LadderConfig,
}

impl LadderPair {
    pub fn validate(&self) -> Result<()> {
        self.e1.validate()?;
        self.m1.validate()?;
        if self.e1.transition_kind != TransitionKind::E1 {
            return Err(CoreError::InvalidInput(
                "e1 slot holds a non-E1 ladder".into(),
            ));
        }
        if self.m1.transition_kind != TransitionKind::M1 {
            return Err(CoreError::InvalidInput(
                "m1 slot holds a non-M1 ladder".into(),
            ));
        }
        Ok(())
    }
}

/// One allowed Zeeman transition of the RF stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPath {
    /// Spherical polarization index, m_upper − m_lower.
    pub q: i32,
    pub m_lower: HalfInt,
    pub m_upper: HalfInt,
    /// 3-j weight (j_upper 1 j_lower; −m_upper q m_lower), signed.
    pub three_j: f64,
    /// Per-path Rabi frequency Ω^{(q)} ≥ 0, rad/s.
    pub rabi: f64,
    /// Δ^{(q)} = ω_RF − (ω_0 + Δ_Z^{(q)}), rad/s.
    pub detuning: f64,
}

impl TransitionPath {
    /// Zeeman detuning Δ_Z^{(q)} implied by the stored Δ^{(q)} and Δ̃.
    pub fn zeeman(&self, cfg: &LadderConfig) -> f64 {
        cfg.delta_tilde - self.detuning
    }

    /// Coupling-detuning position where this path resonates in a spectrum:
    /// Δ_c* = −Δ_p − Δ^{(q)}.
    pub fn spectral_center(&self, cfg: &LadderConfig) -> f64 {
        -cfg.delta_p - self.detuning
    }
}

/// All RF transition paths with nonzero 3-j weight and nonzero polarization
/// coefficient, each carrying
/// Ω^{(q)} = (amplitude/ħ) |coeff_q · 3j · reduced matrix element|
/// and the Zeeman-shifted detuning Δ^{(q)} = Δ̃ − Δ_Z^{(q)}.
pub fn enumerate_paths(
    cfg: &LadderConfig,
    decomp: &SphericalDecomposition,
    bias: &BiasField,
) -> Result<Vec<TransitionPath>> {
    cfg.validate()?;
    if decomp.kind != cfg.field_kind() {
        return Err(CoreError::InvalidInput(format!(
            "decomposition kind {:?} does not match {:?} ladder",
            decomp.kind, cfg.transition_kind
        )));
    }
    let mut paths = Vec::new();
    let mut tml = -cfg.j_lower.twice();
    while tml <= cfg.j_lower.twice() {
        let m_lower = HalfInt::from_twice(tml);
        for q in [-1i32, 0, 1] {
            let m_upper = HalfInt::from_twice(tml + 2 * q);
            if !cfg.j_upper.admits_projection(m_upper) {
                continue;
            }
            let tj = wigner_3j(
                cfg.j_upper,
                HalfInt::ONE,
                cfg.j_lower,
                -m_upper,
                HalfInt::from_int(q),
                m_lower,
            );
            let coeff = decomp.coeff(q);
            if tj == 0.0 || coeff.norm() == 0.0 {
                continue;
            }
            let rabi = (decomp.amplitude / crate::constants::HBAR)
                * (coeff.norm() * tj.abs() * cfg.reduced_dipole.abs());
            let dz = zeeman_shift(bias, cfg.g_upper, m_upper, cfg.g_lower, m_lower);
            paths.push(TransitionPath {
                q,
                m_lower,
                m_upper,
                three_j: tj,
                rabi,
                detuning: cfg.delta_tilde - dz,
            });
        }
        tml += 2;
    }
    // Deterministic order: by q, then m_lower.
    paths.sort_by_key(|p| (p.q, p.m_lower.twice()));
    Ok(paths)
}

/// Complex second-order shift-and-broadening of the lower Rydberg level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergy {
    /// Σ = Σ_q |Ω^{(q)}|² / (Δ^{(q)} + iγ_RF); Im Σ ≤ 0 for γ_RF > 0.
    pub value: Complex64,
}

/// Self-energy exactly as printed: Σ = Σ_q |Ω^{(q)}|²/(Δ^{(q)} + iγ_RF).
pub fn self_energy(paths: &[TransitionPath], gamma_rf: f64) -> Result<SelfEnergy> {
    if paths.is_empty() {
        return Err(CoreError::InvalidInput("empty path list".into()));
    }
    if !(gamma_rf > 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "gamma_rf must be > 0 (pole on the real axis otherwise), got {gamma_rf}"
        )));
    }
    let value = paths
        .iter()
        .map(|p| Complex64::new(p.rabi * p.rabi, 0.0) / Complex64::new(p.detuning, gamma_rf))
        .sum();
    Ok(SelfEnergy { value })
}

/// Self-energy seen by the swept spectrum: pole structure shifted to the
/// two-photon resonance condition Δ^{(q)} + Δ_p + Δ_c = 0, RWA half-Rabi
/// matrix elements |Ω/2|², and width γ_RF + γ4/2. Printed-quadrature value
/// (Im ≤ 0), ready for [`rho21_analytic`].
pub fn self_energy_at(cfg: &LadderConfig, paths: &[TransitionPath], delta_c: f64) -> SelfEnergy {
    let geff = cfg.gamma_rf_eff();
    let x = cfg.delta_p + delta_c;
    let value = paths
        .iter()
        .map(|p| {
            let half = p.rabi / 2.0;
            Complex64::new(half * half, 0.0) / Complex64::new(p.detuning + x, geff)
        })
        .sum();
    SelfEnergy { value }
}

/// Analytic probe coherence of the four-level chain:
/// ρ21 = i(Ω_p/2) / (γ21 − iΔ_p + (Ω_c/2)² / (γ31 − i(Δ_p + Δ_c) + iΣ)).
///
/// Equivalent to the Δ + iγ denominator form up to an overall factor i
/// (see module docs); Im ρ21 ≥ 0 with the background level Ω_p/(2γ21).
pub fn rho21_analytic(cfg: &LadderConfig, sigma: &SelfEnergy, delta_c: f64) -> Complex64 {
    let i = Complex64::i();
    let d3 = Complex64::new(cfg.gamma31, -(cfg.delta_p + delta_c)) + i * sigma.value;
    let oc2 = cfg.omega_c / 2.0;
    let d2 = Complex64::new(cfg.gamma21, -cfg.delta_p) + Complex64::new(oc2 * oc2, 0.0) / d3;
    i * Complex64::new(cfg.omega_p / 2.0, 0.0) / d2
}

/// One extracted spectral peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Resonance position in Δ_c, rad/s.
    pub center: f64,
    /// Calibrated line weight: the trapezoid area of the deconvolved
    /// coupling-pole absorption profile over this peak's window, rad²/s²
    /// scale; proportional to |Ω^{(q)}/2|² per path. This is the area every
    /// ratio/envelope analysis uses.
    pub area: f64,
    /// Raw trapezoid area of Im ρ21 between adjacent response minima above
    /// a linear baseline (units rad/s) — the uncalibrated, display-domain
    /// measure; blends at strong drive.
    pub area_raw: f64,
    /// Full width at half maximum of the deconvolved line, rad/s.
    pub fwhm: f64,
    /// Nearest enumerated transition path.
    pub path: TransitionPath,
    /// True when a neighboring resonance sits closer than one FWHM, so the
    /// detected line is a blend.
    pub unresolved: bool,
}

/// A synthesized EIT spectrum with peak annotations.
#[derive(Debug, Clone)]
pub struct EitSpectrum {
    /// Δ_c grid, strictly increasing, rad/s.
    pub detuning_grid: Vec<f64>,
    /// Im ρ21 per grid point; non-negative in the passive-medium regime.
    pub response: Vec<f64>,
    pub peaks: Vec<Peak>,
    /// Non-fatal diagnostics (grid coverage, unresolved blends).
    pub warnings: Vec<String>,
}

impl EitSpectrum {
    /// Total calibrated area of peaks whose path has the given q.
    pub fn area_for_q(&self, q: i32) -> f64 {
        self.peaks.iter().filter(|p| p.path.q == q).map(|p| p.area).sum()
    }

    /// Total calibrated π area (q = 0).
    pub fn pi_area(&self) -> f64 {
        self.area_for_q(0)
    }

    /// Total calibrated σ area (q = ±1).
    pub fn sigma_area(&self) -> f64 {
        self.area_for_q(1) + self.area_for_q(-1)
    }
}

/// Evenly spaced grid that covers every Zeeman-shifted resonance of `paths`
/// with 35% margin (at least ±2π·30 MHz), stepped at ≤ γ_RF_eff/3.
pub fn default_grid(cfg: &LadderConfig, paths: &[TransitionPath]) -> Vec<f64> {
    let base = crate::constants::TAU * 30e6;
    let reach = paths
        .iter()
        .map(|p| p.spectral_center(cfg).abs())
        .fold(base, f64::max);
    let span = 1.35 * reach;
    let step_target = cfg.gamma_rf_eff() / 3.0;
    // Forced odd so the grid always carries the zero-detuning sample.
    let n = ((2.0 * span / step_target).ceil() as usize).clamp(2001, 400_001) | 1;
    (0..n)
        .map(|k| -span + 2.0 * span * k as f64 / (n - 1) as f64)
        .collect()
}

/// Synthesize the spectrum over `grid` and extract peaks.
///
/// Peak analysis runs on the deconvolved coupling-pole absorption profile:
/// the analytic response chain is inverted algebraically per grid point
/// (ρ21 → probe denominator → coupling denominator → self-energy), whose
/// real part is an exact sum of Lorentzians, one per transition path, each
/// integrating to π|Ω^{(q)}/2|². Centers, widths, and calibrated areas come
/// from that profile; raw display-domain areas are integrated separately
/// from Im ρ21. Both integrations use the trapezoidal rule between adjacent
/// local minima with linear baseline subtraction.
pub fn sweep_spectrum(
    cfg: &LadderConfig,
    decomp: &SphericalDecomposition,
    bias: &BiasField,
    grid: &[f64],
) -> Result<EitSpectrum> {
    cfg.validate()?;
    if grid.len() < 3 {
        return Err(CoreError::InvalidInput("grid needs at least 3 points".into()));
    }
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(CoreError::InvalidInput("grid must be strictly increasing".into()));
    }
    let paths = enumerate_paths(cfg, decomp, bias)?;
    let mut warnings = Vec::new();

    let (lo, hi) = (grid[0], *grid.last().unwrap());
    for p in &paths {
        let c = p.spectral_center(cfg);
        if c < lo || c > hi {
            warnings.push(format!(
                "resonance of path (q={}, m_lower={}) at {:.3} MHz lies outside the grid",
                p.q,
                p.m_lower,
                c / crate::constants::TAU / 1e6
            ));
        }
    }

    let rho: Vec<Complex64> = grid
        .iter()
        .map(|&dc| rho21_analytic(cfg, &self_energy_at(cfg, &paths, dc), dc))
        .collect();
    let response: Vec<f64> = rho.iter().map(|r| r.im).collect();

    // Deconvolved profile: invert the rational chain back to the
    // self-energy and keep its absorptive part.
    let profile: Vec<f64> = if cfg.omega_p == 0.0 || cfg.omega_c == 0.0 || paths.is_empty() {
        vec![0.0; grid.len()]
    } else {
        let i = Complex64::i();
        let op2 = Complex64::new(cfg.omega_p / 2.0, 0.0);
        let oc2 = cfg.omega_c / 2.0;
        grid.iter()
            .zip(rho.iter())
            .map(|(&dc, r)| {
                let d2 = i * op2 / r;
                let t = d2 - Complex64::new(cfg.gamma21, -cfg.delta_p);
                let d3 = Complex64::new(oc2 * oc2, 0.0) / t;
                let sig_abs = d3 - Complex64::new(cfg.gamma31, -(cfg.delta_p + dc));
                sig_abs.re
            })
            .collect()
    };

    let mut peaks = Vec::new();
    if !paths.is_empty() && cfg.omega_p > 0.0 && cfg.omega_c > 0.0 {
        let prof_peaks = find_peaks(grid, &profile);
        let raw_peaks = find_peaks(grid, &response);
        for pp in &prof_peaks {
            // Nearest path by spectral center.
            let path = *paths
                .iter()
                .min_by(|a, b| {
                    let da = (a.spectral_center(cfg) - pp.center).abs();
                    let db = (b.spectral_center(cfg) - pp.center).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            // Raw-domain area from the nearest response peak, if any.
            let area_raw = raw_peaks
                .iter()
                .min_by(|a, b| {
                    (a.center - pp.center)
                        .abs()
                        .partial_cmp(&(b.center - pp.center).abs())
                        .unwrap()
                })
                .map(|rp| rp.area)
                .unwrap_or(0.0);
            // Blend check: another detected line within one FWHM.
            let unresolved = prof_peaks
                .iter()
                .any(|o| o.center != pp.center && (o.center - pp.center).abs() < pp.fwhm);
            peaks.push(Peak {
                center: pp.center,
                area: pp.area,
                area_raw,
                fwhm: pp.fwhm,
                path,
                unresolved,
            });
        }
        if peaks.iter().any(|p| p.unresolved) {
            warnings.push("overlapping peaks closer than one linewidth; blend flagged".into());
        }
    }

    Ok(EitSpectrum {
        detuning_grid: grid.to_vec(),
        response,
        peaks,
        warnings,
    })
}

struct RawPeak {
    center: f64,
    area: f64,
    fwhm: f64,
}

/// Local maxima with windows between adjacent local minima; trapezoid area
/// above a linear baseline through the window edges; FWHM by half-maximum
/// crossings with linear interpolation; center refined parabolically.
fn find_peaks(grid: &[f64], y: &[f64]) -> Vec<RawPeak> {
    let n = y.len();
    let span = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Vec::new();
    }
    // Prominence floor keeps floating-point ripple out of the peak list.
    let floor = 1e-6 * span;

    let mut maxima = Vec::new();
    for i in 1..n - 1 {
        if y[i] >= y[i - 1] && y[i] > y[i + 1] {
            maxima.push(i);
        }
    }

    // Window boundaries: minima between consecutive maxima, plus the ends.
    let mut bounds = vec![0usize];
    for w in maxima.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = (a..=b)
            .min_by(|&i, &j| y[i].partial_cmp(&y[j]).unwrap())
            .unwrap();
        bounds.push(m);
    }
    bounds.push(n - 1);

    let mut out = Vec::new();
    for (k, &pk) in maxima.iter().enumerate() {
        let (lo, hi) = (bounds[k], bounds[k + 1]);
        // Prominence relative to the higher window edge.
        let edge = y[lo].max(y[hi]);
        if y[pk] - edge < floor {
            continue;
        }
        // Parabolic center refinement.
        let (xl, xp, xr) = (grid[pk - 1], grid[pk], grid[pk + 1]);
        let (yl, yp, yr) = (y[pk - 1], y[pk], y[pk + 1]);
        let denom = yl - 2.0 * yp + yr;
        let center = if denom.abs() > 0.0 {
            let dx = (xr - xl) / 2.0;
            xp + dx * 0.5 * (yl - yr) / denom
        } else {
            xp
        };
        // Area above the linear baseline through (grid[lo], y[lo]) and
        // (grid[hi], y[hi]).
        let base = |x: f64| {
            y[lo] + (y[hi] - y[lo]) * (x - grid[lo]) / (grid[hi] - grid[lo])
        };
        let mut area = 0.0;
        for i in lo..hi {
            let f0 = y[i] - base(grid[i]);
            let f1 = y[i + 1] - base(grid[i + 1]);
            area += 0.5 * (f0 + f1) * (grid[i + 1] - grid[i]);
        }
        // FWHM above the local baseline.
        let half = base(center) + (y[pk] - base(grid[pk])) / 2.0;
        let mut left = grid[lo];
        for i in (lo..pk).rev() {
            if y[i] <= half {
                let t = (half - y[i]) / (y[i + 1] - y[i]);
                left = grid[i] + t * (grid[i + 1] - grid[i]);
                break;
            }
        }
        let mut right = grid[hi];
        for i in pk..hi {
            if y[i + 1] <= half {
                let t = (y[i] - half) / (y[i] - y[i + 1]);
                right = grid[i] + t * (grid[i + 1] - grid[i]);
                break;
            }
        }
        out.push(RawPeak {
            center,
            area,
            fwhm: right - left,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TAU;
    use crate::fields::{decompose_e_field, BiasField};
    use crate::scenario::presets;
    use approx::assert_relative_eq;

    fn fig3() -> (LadderConfig, BiasField) {
        let sc = presets::fig3().unwrap();
        (sc.ladder_e1, sc.bias)
    }

    #[test]
    fn path_enumeration_fig3() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 30f64.to_radians());
        let paths = enumerate_paths(&cfg, &d, &bias).unwrap();
        assert_eq!(paths.len(), 4);
        let n_pi = paths.iter().filter(|p| p.q == 0).count();
        assert_eq!(n_pi, 2);
        // Zeeman detunings: ∓2π·18.6 MHz (π), ±2π·37.4 MHz (σ±).
        for p in &paths {
            let dz = p.zeeman(&cfg) / TAU / 1e6;
            match (p.q, p.m_upper.twice()) {
                (0, 1) => assert_relative_eq!(dz, -18.615, max_relative = 1e-3),
                (0, -1) => assert_relative_eq!(dz, 18.615, max_relative = 1e-3),
                (1, 1) => assert_relative_eq!(dz, 37.370, max_relative = 1e-3),
                (-1, -1) => assert_relative_eq!(dz, -37.370, max_relative = 1e-3),
                other => panic!("unexpected path {other:?}"),
            }
        }
    }

    #[test]
    fn theta_zero_gives_two_pi_paths() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 0.0);
        let paths = enumerate_paths(&cfg, &d, &bias).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths.iter().all(|p| p.q == 0));
    }

    #[test]
    fn kind_mismatch_rejected() {
        let (cfg, bias) = fig3();
        let d = crate::fields::decompose_b_field(1.0, 0.3);
        assert!(enumerate_paths(&cfg, &d, &bias).is_err());
    }

    #[test]
    fn m1_enumeration_six_paths() {
        let sc = presets::fig3().unwrap();
        let (cfg, bias) = (sc.ladder_m1, sc.bias);
        let d = crate::fields::decompose_b_field(3.3e-9, 0.7);
        let paths = enumerate_paths(&cfg, &d, &bias).unwrap();
        assert_eq!(paths.len(), 6);
        // Sum rule per polarization: Σ 3j² = 1/3.
        for q in [-1, 0, 1] {
            let s: f64 = paths
                .iter()
                .filter(|p| p.q == q)
                .map(|p| p.three_j * p.three_j)
                .sum();
            assert_relative_eq!(s, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn self_energy_printed_form() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 30f64.to_radians());
        let paths = enumerate_paths(&cfg, &d, &bias).unwrap();
        // Term-by-term re-evaluation.
        let sig = self_energy(&paths, cfg.gamma_rf).unwrap();
        let manual: Complex64 = paths
            .iter()
            .map(|p| {
                Complex64::new(p.rabi * p.rabi, 0.0)
                    / Complex64::new(p.detuning, cfg.gamma_rf)
            })
            .sum();
        assert_relative_eq!(sig.value.re, manual.re, epsilon = 1e-6);
        assert_relative_eq!(sig.value.im, manual.im, epsilon = 1e-6);
        assert!(sig.value.im <= 0.0);

        // Single on-resonance path: Σ = −i|Ω|²/γ_RF.
        let one = [TransitionPath {
            q: 0,
            m_lower: HalfInt::HALF,
            m_upper: HalfInt::HALF,
            three_j: 0.4,
            rabi: 2.0e6,
            detuning: 0.0,
        }];
        let s = self_energy(&one, 1.0e4).unwrap();
        assert_relative_eq!(s.value.re, 0.0, epsilon = 1e-9);
        assert_relative_eq!(s.value.im, -(2.0e6f64).powi(2) / 1.0e4, max_relative = 1e-12);

        assert!(self_energy(&one, 0.0).is_err());
        assert!(self_energy(&[], 1.0).is_err());
    }

    #[test]
    fn rho21_limits() {
        let (mut cfg, _) = fig3();
        let zero = SelfEnergy { value: Complex64::new(0.0, 0.0) };
        // Ω_p = 0 → ρ21 = 0.
        cfg.omega_p = 0.0;
        assert_eq!(rho21_analytic(&cfg, &zero, 0.0).norm(), 0.0);
        // Bare-EIT dark-state magnitude at Σ = 0, Δ_p = Δ_c = 0.
        cfg.omega_p = TAU * 6e6;
        let r = rho21_analytic(&cfg, &zero, 0.0);
        let oc2 = cfg.omega_c / 2.0;
        let expect = (cfg.omega_p / 2.0) / (cfg.gamma21 + oc2 * oc2 / cfg.gamma31);
        assert_relative_eq!(r.im, expect, max_relative = 1e-12);
        assert_relative_eq!(r.re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_fig3_structure() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 30f64.to_radians());
        let paths = enumerate_paths(&cfg, &d, &bias).unwrap();
        let grid = default_grid(&cfg, &paths);
        let spec = sweep_spectrum(&cfg, &d, &bias, &grid).unwrap();
        assert_eq!(spec.peaks.len(), 4);
        assert!(spec.peaks.iter().all(|p| !p.unresolved));
        assert!(spec.response.iter().all(|&r| r >= 0.0));
        // Mirror symmetry: θ and −θ swap σ+ and σ−.
        let dm = decompose_e_field(1.0, -30f64.to_radians());
        let spec_m = sweep_spectrum(&cfg, &dm, &bias, &grid).unwrap();
        assert_relative_eq!(
            spec.area_for_q(1),
            spec_m.area_for_q(-1),
            max_relative = 1e-6
        );
        assert_relative_eq!(spec.pi_area(), spec_m.pi_area(), max_relative = 1e-6);
        for (a, b) in spec.response.iter().zip(spec_m.response.iter().rev()) {
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn spectrum_degenerate_bias_single_peak() {
        let (cfg, _) = fig3();
        let bias = BiasField::new(0.0, 0.0);
        let d = decompose_e_field(1.0, 30f64.to_radians());
        let paths = enumerate_paths(&cfg, &d, &bias).unwrap();
        let grid = default_grid(&cfg, &paths);
        let spec = sweep_spectrum(&cfg, &d, &bias, &grid).unwrap();
        assert_eq!(spec.peaks.len(), 1);
    }

    #[test]
    fn grid_coverage_warning() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 30f64.to_radians());
        // ±2π·10 MHz misses the ±18.6/±37.4 MHz resonances.
        let span = TAU * 10e6;
        let grid: Vec<f64> = (0..4001)
            .map(|k| -span + 2.0 * span * k as f64 / 4000.0)
            .collect();
        let spec = sweep_spectrum(&cfg, &d, &bias, &grid).unwrap();
        assert!(spec.warnings.iter().any(|w| w.contains("outside the grid")));
    }
}
