//! Lindblad steady-state solver for the Zeeman-expanded ladder.
//!
//! Level layout (index order): ground, intermediate, lower Rydberg manifold
//! by increasing m', upper Rydberg manifold by increasing m — 6 levels for
//! E1 (j_upper = 1/2), 8 for M1 (j_upper = 3/2).
//!
//! The rotating-frame Hamiltonian carries the textbook Zeeman diagonal
//! g·m·(μ_B B/ħ)cosθ_bias on both Rydberg manifolds, so every RF coupling
//! runs at its exact pair detuning Δ^{(q)}. The optical stages are scalar:
//! the probe drives ground → intermediate and the coupling drives the lower
//! manifold symmetrically (1/√2 per sublevel, preserving the aggregate
//! (Ω_c/2)²). When the bias field splits the lower manifold, lock the
//! coupling to one Zeeman component via [`LadderConfig::locked_delta_c`],
//! as an experiment would.

use super::{enumerate_paths, LadderConfig};
use crate::constants::{HBAR, MU_B};
use crate::error::{CoreError, Result};
use crate::fields::{BiasField, SphericalDecomposition};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Validated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wrap and validate: Hermitian and unit trace within 1e-10,
    /// eigenvalues ≥ −1e-10.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(CoreError::InvalidInput("density matrix must be square".into()));
        }
        let herm = (&data - data.adjoint()).norm() / (data.nrows() as f64);
        if herm > 1e-10 {
            return Err(CoreError::DegenerateSteadyState(format!(
                "not Hermitian: deviation {herm:.3e}"
            )));
        }
        let tr: Complex64 = data.diagonal().iter().sum();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(CoreError::DegenerateSteadyState(format!(
                "trace {tr} differs from 1"
            )));
        }
        let eig = data.clone().symmetric_eigen();
        if let Some(min) = eig
            .eigenvalues
            .iter()
            .cloned()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if min < -1e-10 {
                return Err(CoreError::DegenerateSteadyState(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// ρ_ij = ⟨i|ρ|j⟩.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    /// Probe coherence ρ21 = ⟨intermediate|ρ|ground⟩.
    pub fn probe_coherence(&self) -> Complex64 {
        self.data[(1, 0)]
    }
}

/// Number of levels for the ladder: 2 optical + lower manifold + upper
/// manifold.
pub fn level_count(cfg: &LadderConfig) -> usize {
    2 + (cfg.j_lower.twice() + 1) as usize + (cfg.j_upper.twice() + 1) as usize
}

impl LadderConfig {
    /// Coupling detuning that puts the coupling laser on resonance with the
    /// m' = +1/2 lower-manifold Zeeman component. The scalar four-level
    /// picture assumes a resonant coupling stage; with a bias field the
    /// manifold splits, and an experiment locks onto one component.
    pub fn locked_delta_c(&self, bias: &BiasField) -> f64 {
        let larmor = MU_B * bias.magnitude / HBAR * bias.theta_bias.cos();
        larmor * self.g_lower * 0.5
    }
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// RWA Hamiltonian (units rad/s) and collapse operators for the
/// Zeeman-expanded system.
fn build_model(
    cfg: &LadderConfig,
    decomp: &SphericalDecomposition,
    bias: &BiasField,
) -> Result<(DMatrix<Complex64>, Vec<DMatrix<Complex64>>)> {
    let paths = enumerate_paths(cfg, decomp, bias)?;
    let n_lower = (cfg.j_lower.twice() + 1) as usize;
    let n_upper = (cfg.j_upper.twice() + 1) as usize;
    let n = 2 + n_lower + n_upper;
    let lower_idx = |twice_m: i32| 2 + ((twice_m + cfg.j_lower.twice()) / 2) as usize;
    let upper_idx = |twice_m: i32| 2 + n_lower + ((twice_m + cfg.j_upper.twice()) / 2) as usize;

    let larmor = MU_B * bias.magnitude / HBAR * bias.theta_bias.cos();
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    let re = |x: f64| Complex64::new(x, 0.0);

    h[(1, 1)] = re(-cfg.delta_p);
    let two_photon = -(cfg.delta_p + cfg.delta_c);
    let three_photon = two_photon - cfg.delta_tilde;
    let mut tm = -cfg.j_lower.twice();
    while tm <= cfg.j_lower.twice() {
        let i = lower_idx(tm);
        h[(i, i)] = re(two_photon + larmor * cfg.g_lower * tm as f64 / 2.0);
        tm += 2;
    }
    let mut tm = -cfg.j_upper.twice();
    while tm <= cfg.j_upper.twice() {
        let i = upper_idx(tm);
        h[(i, i)] = re(three_photon + larmor * cfg.g_upper * tm as f64 / 2.0);
        tm += 2;
    }

    h[(0, 1)] = re(-cfg.omega_p / 2.0);
    h[(1, 0)] = re(-cfg.omega_p / 2.0);
    let cpl = -cfg.omega_c / 2.0 / (n_lower as f64).sqrt();
    let mut tm = -cfg.j_lower.twice();
    while tm <= cfg.j_lower.twice() {
        let i = lower_idx(tm);
        h[(1, i)] = re(cpl);
        h[(i, 1)] = re(cpl);
        tm += 2;
    }
    for p in &paths {
        let (i, j) = (lower_idx(p.m_lower.twice()), upper_idx(p.m_upper.twice()));
        h[(i, j)] = re(-p.rabi / 2.0);
        h[(j, i)] = re(-p.rabi / 2.0);
    }

    let mut collapse = Vec::new();
    let mut op = DMatrix::<Complex64>::zeros(n, n);
    op[(0, 1)] = re(cfg.gamma2.sqrt());
    collapse.push(op);
    let mut tm = -cfg.j_lower.twice();
    while tm <= cfg.j_lower.twice() {
        let mut op = DMatrix::<Complex64>::zeros(n, n);
        op[(1, lower_idx(tm))] = re(cfg.gamma3.sqrt());
        collapse.push(op);
        tm += 2;
    }
    let mut tm = -cfg.j_upper.twice();
    while tm <= cfg.j_upper.twice() {
        let mut op = DMatrix::<Complex64>::zeros(n, n);
        op[(0, upper_idx(tm))] = re(cfg.gamma4.sqrt());
        collapse.push(op);
        tm += 2;
    }
    // RF dephasing: projector onto the upper manifold at rate 2γ_RF damps
    // every coherence between the upper manifold and the rest at γ_RF,
    // matching the self-energy pole width γ_RF + γ4/2.
    let mut dep = DMatrix::<Complex64>::zeros(n, n);
    let mut tm = -cfg.j_upper.twice();
    while tm <= cfg.j_upper.twice() {
        let i = upper_idx(tm);
        dep[(i, i)] = re((2.0 * cfg.gamma_rf).sqrt());
        tm += 2;
    }
    collapse.push(dep);

    Ok((h, collapse))
}

/// Liouvillian superoperator in column-major vec convention:
/// vec(L[ρ]) = M vec(ρ), an n²×n² complex matrix.
pub fn liouvillian_matrix(
    cfg: &LadderConfig,
    decomp: &SphericalDecomposition,
    bias: &BiasField,
) -> Result<DMatrix<Complex64>> {
    let (h, collapse) = build_model(cfg, decomp, bias)?;
    let n = h.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mi = Complex64::new(0.0, -1.0);
    let mut m = (kron(&id, &h) - kron(&h.transpose(), &id)) * mi;
    for c in &collapse {
        let cdc = c.adjoint() * c;
        m += kron(&c.map(|z| z.conj()), c);
        m -= (kron(&id, &cdc) + kron(&cdc.transpose(), &id)) * Complex64::new(0.5, 0.0);
    }
    Ok(m)
}

/// Steady state of the Lindblad master equation: L[ρ] = 0, tr ρ = 1.
///
/// Solves the trace-replaced linear system by LU; verifies the Liouvillian
/// residual ‖L[ρ]‖_F < 1e-10·‖L‖_F; falls back to null-space extraction by
/// SVD when conditioning is poor, erroring with diagnostics if the kernel
/// is not one-dimensional.
pub fn steady_state(
    cfg: &LadderConfig,
    decomp: &SphericalDecomposition,
    bias: &BiasField,
) -> Result<DensityMatrix> {
    let m = liouvillian_matrix(cfg, decomp, bias)?;
    let n = level_count(cfg);
    let m_norm = m.norm();

    // Trace row replaces the first equation: Σ_k vec-index (k, k) = 1.
    let mut a = m.clone();
    let mut b = DMatrix::<Complex64>::zeros(n * n, 1);
    for j in 0..n * n {
        a[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..n {
        a[(0, k * n + k)] = Complex64::new(1.0, 0.0);
    }
    b[(0, 0)] = Complex64::new(1.0, 0.0);

    let lu_sol = a.lu().solve(&b);
    let vec_rho = match lu_sol {
        Some(x) if relative_residual(&m, &x, m_norm) < 1e-10 => x,
        _ => svd_nullspace(&m, n)?,
    };

    let mut rho = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            rho[(i, j)] = vec_rho[(j * n + i, 0)];
        }
    }
    // Exact Hermitization and trace normalization absorb roundoff.
    rho = (rho.clone() + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr: Complex64 = rho.diagonal().iter().sum();
    if tr.norm() < 1e-14 {
        return Err(CoreError::DegenerateSteadyState(
            "null-space vector has zero trace".into(),
        ));
    }
    rho /= tr;

    let x = {
        let mut v = DMatrix::<Complex64>::zeros(n * n, 1);
        for j in 0..n {
            for i in 0..n {
                v[(j * n + i, 0)] = rho[(i, j)];
            }
        }
        v
    };
    let res = relative_residual(&m, &x, m_norm);
    if res > 1e-10 {
        return Err(CoreError::DegenerateSteadyState(format!(
            "Liouvillian residual {res:.3e} exceeds 1e-10"
        )));
    }
    DensityMatrix::new(rho)
}

fn relative_residual(m: &DMatrix<Complex64>, x: &DMatrix<Complex64>, m_norm: f64) -> f64 {
    let r = m * x;
    r.norm() / (m_norm * x.norm()).max(f64::MIN_POSITIVE)
}

fn svd_nullspace(m: &DMatrix<Complex64>, n: usize) -> Result<DMatrix<Complex64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * (n * n) as f64;
    let kernel: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < tol)
        .map(|(i, _)| i)
        .collect();
    if kernel.len() != 1 {
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return Err(CoreError::DegenerateSteadyState(format!(
            "Liouvillian kernel dimension {} (expected 1); smallest singular values {:?}",
            kernel.len(),
            &sv[..sv.len().min(4)]
        )));
    }
    let col = v_t.row(kernel[0]).adjoint();
    Ok(DMatrix::from_fn(col.nrows(), 1, |i, _| col[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TAU;
    use crate::fields::decompose_e_field;
    use crate::scenario::presets;
    use crate::spectroscopy::{rho21_analytic, SelfEnergy};
    use approx::assert_relative_eq;

    fn fig3() -> (LadderConfig, BiasField) {
        let sc = presets::fig3().unwrap();
        (sc.ladder_e1, sc.bias)
    }

    #[test]
    fn dark_receiver_sits_in_ground_state() {
        let (mut cfg, bias) = fig3();
        cfg.omega_p = 0.0;
        cfg.omega_c = 0.0;
        let d = decompose_e_field(0.0, 0.5);
        let rho = steady_state(&cfg, &d, &bias).unwrap();
        assert_relative_eq!(rho.entry(0, 0).re, 1.0, epsilon = 1e-10);
        for i in 1..rho.dim() {
            assert!(rho.entry(i, i).norm() < 1e-10);
        }
    }

    #[test]
    fn fig3_steady_state_is_physical() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 30f64.to_radians());
        let rho = steady_state(&cfg, &d, &bias).unwrap();
        assert_eq!(rho.dim(), 6);
        let tr: Complex64 = rho.matrix().diagonal().iter().sum();
        assert_relative_eq!(tr.re, 1.0, epsilon = 1e-10);
        assert!(rho.probe_coherence().norm() > 0.0);
    }

    #[test]
    fn m1_steady_state_is_physical() {
        let sc = presets::fig5().unwrap();
        let (cfg, bias) = (sc.ladder_m1, sc.bias);
        let d = crate::fields::decompose_b_field(3.3e-9, 1.0);
        let rho = steady_state(&cfg, &d, &bias).unwrap();
        assert_eq!(rho.dim(), 8);
    }

    #[test]
    fn weak_probe_matches_analytic_three_level() {
        // No RF field, no bias: the system is a textbook EIT ladder and the
        // weak-probe coherence must match the analytic formula with Σ = 0.
        let (mut cfg, _) = fig3();
        cfg.omega_p = cfg.gamma21 * 1e-2;
        let bias = BiasField::new(0.0, 0.0);
        let d = decompose_e_field(0.0, 0.0);
        let zero = SelfEnergy {
            value: Complex64::new(0.0, 0.0),
        };
        for k in 0..7 {
            let dc = TAU * 1e6 * (k as f64 - 3.0);
            let mut c = cfg;
            c.delta_c = dc;
            let rho = steady_state(&c, &d, &bias).unwrap();
            let got = rho.probe_coherence().im;
            let want = rho21_analytic(&c, &zero, dc).im;
            assert_relative_eq!(got, want, max_relative = 2e-2);
        }
    }

    #[test]
    fn locked_coupling_tracks_lower_manifold() {
        let (cfg, _) = fig3();
        let bias = BiasField::new(2e-3, 30f64.to_radians());
        let dc = cfg.locked_delta_c(&bias);
        // g_S = 2, m' = +1/2: shift = Larmor × cos 30°.
        let larmor = MU_B * 2e-3 / HBAR;
        assert_relative_eq!(dc, larmor * 30f64.to_radians().cos(), max_relative = 1e-12);
    }

    #[test]
    fn kernel_uniqueness_holds_at_fig3() {
        let (cfg, bias) = fig3();
        let d = decompose_e_field(1.0, 1.0);
        let m = liouvillian_matrix(&cfg, &d, &bias).unwrap();
        assert_eq!(m.nrows(), 36);
        let svd = m.svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Exactly one vanishing singular value.
        assert!(sv[0] < 1e-8 * sv[sv.len() - 1]);
        assert!(sv[1] > 1e-8 * sv[sv.len() - 1]);
    }
}
