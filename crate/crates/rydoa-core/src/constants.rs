//! Physical constants, rounded exactly as the rest of the model expects them.
//!
//! Internal units are SI throughout: rad/s for every rate and detuning,
//! tesla, V/m, meters, joules.

/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.6e-19;

/// Bohr radius, m.
pub const A0: f64 = 5.2e-11;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.05457e-34;

/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.2740e-24;

/// Speed of light, m/s.
pub const C_LIGHT: f64 = 2.9979e8;

/// Free-space impedance, ohm.
pub const Z0: f64 = 377.0;

/// Two pi, for rate conversions (`2π · f_Hz` → rad/s).
pub const TAU: f64 = std::f64::consts::TAU;

/// Reduced dipole moment of the E1 Rydberg transition, C m (|−1443.46 e a0|).
pub const D_HAT_E1: f64 = 1443.46 * E_CHARGE * A0;

/// Spectroscopically matched M1 reduced moment, J/T: c · d̂, so that an
/// incident plane wave (B = E/c) drives M1 paths at the same Rabi scale as
/// the E1 paths it drives. The bare physical scale would be ~μ_B, four
/// orders of magnitude weaker; see `LadderConfig::reduced_dipole` docs.
pub const MU_HAT_M1_MATCHED: f64 = C_LIGHT * D_HAT_E1;
