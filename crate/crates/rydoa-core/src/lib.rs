//! Simulation and estimation toolkit for polarization-aware
//! direction-of-arrival detection with a single Rydberg atomic receiver.
//!
//! The pipeline reads the arrival direction of an RF plane wave from the
//! vector structure of its fields instead of from wavefront sampling:
//! Zeeman-resolved EIT lines measure the RF electric polarization angle
//! through an E1 Rydberg transition and the RF magnetic orientation through
//! an M1 transition, and k̂ = (E × B)/‖E × B‖ composes the two. Modules:
//!
//! - [`angular`]: exact 3-j/Clebsch-Gordan algebra, spherical bases.
//! - [`fields`]: plane-wave geometry, spherical decompositions, Zeeman
//!   shifts, link budget.
//! - [`spectroscopy`]: ladder configuration, transition paths, analytic
//!   probe response, Lindblad steady states, spectrum synthesis.
//! - [`reconstruction`]: line areas → angles → vector field → k̂.
//! - [`estimation`]: quantum Fisher information, QCRBs, classical array
//!   baselines.
//! - [`scenario`]: presets and the flat JSON configuration format.

// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// rejects NaN, while the comparison clippy suggests would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod constants;
pub mod error;
pub mod estimation;
pub mod fields;
pub mod reconstruction;
pub mod scenario;
pub mod spectroscopy;

pub use error::{CoreError, Result};

pub use angular::{basis_for_axis, clebsch_gordan, wigner_3j, HalfInt, SphericalBasis};
pub use estimation::{
    crb_ula, crb_vsa, doa_variance, drho_numeric, drho_numeric_with_diag, qcrb, qcrb_with_diag,
    qfim_exact, qfim_snr_approx, rydberg_qcrb_vs_snr, vsa_steering, ArrayKind, ArrayModel,
    DerivParam, FisherResult, QcrbPoint,
};
pub use fields::{
    decompose_b_field, decompose_e_field, decompose_in_basis, effective_aperture,
    received_power, BiasField, FieldKind, LinkBudget, PlaneWave, SphericalDecomposition,
};
pub use reconstruction::{
    compose_doa, estimate_theta_rf, full_cycle, full_cycle_monte_carlo, solve_b_rf,
    BRfSolution, BiasScanPlan, DoaEstimate, DoaTrial, FullCycleResult, MonteCarloResult,
    ThetaRfEstimate,
};
pub use scenario::{load_scenario, presets, Receiver, ScenarioConfig};
pub use spectroscopy::{
    default_grid, enumerate_paths, rho21_analytic, self_energy, steady_state, sweep_spectrum,
    DensityMatrix, EitSpectrum, LadderConfig, LadderPair, Peak, SelfEnergy, TransitionKind,
    TransitionPath,
};
