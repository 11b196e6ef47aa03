//! Incident-wave geometry and field bookkeeping: plane-wave construction,
//! spherical-basis decompositions, Zeeman level shifts, and the free-space
//! link budget feeding the receiver.
//!
//! Geometry convention: beams propagate along +x̂; the RF electric field
//! lies in the y-z plane at angle θ_RF from +ŷ; the static bias field lies
//! in the x-z plane at angle θ_bias from +ẑ.

use crate::angular::HalfInt;
use crate::constants::{C_LIGHT, HBAR, MU_B};
use crate::error::{CoreError, Result};
use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Incident RF plane wave. For a free-space wave constructed via
/// [`PlaneWave::from_e_field`], `b_amplitude = e_amplitude / c` and
/// θ_B = θ_RF + π/2 (the k ∥ +x̂ branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    /// E0, V/m.
    pub e_amplitude: f64,
    /// Polarization angle from ŷ in the y-z plane, rad.
    pub theta_rf: f64,
    /// RF magnetic-field orientation in the y-z plane, rad.
    pub theta_b: f64,
    /// Carrier angular frequency ω_RF, rad/s.
    pub frequency: f64,
    /// B_RF, T.
    pub b_amplitude: f64,
}

impl PlaneWave {
    /// Plane wave with independent field orientations; B = E/c.
    pub fn new(e_amplitude: f64, theta_rf: f64, theta_b: f64, frequency: f64) -> Self {
        PlaneWave {
            e_amplitude,
            theta_rf,
            theta_b,
            frequency,
            b_amplitude: e_amplitude / C_LIGHT,
        }
    }

    /// Free-space plane wave with k ∥ +x̂: B̂ is Ê rotated by +90° in the
    /// y-z plane and B = E/c.
    pub fn from_e_field(e_amplitude: f64, theta_rf: f64, frequency: f64) -> Self {
        PlaneWave {
            e_amplitude,
            theta_rf,
            theta_b: theta_rf + std::f64::consts::FRAC_PI_2,
            frequency,
            b_amplitude: e_amplitude / C_LIGHT,
        }
    }

    /// Unit electric-field direction (0, cos θ_RF, sin θ_RF).
    pub fn e_direction(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.theta_rf.cos(), self.theta_rf.sin())
    }

    /// Unit RF magnetic-field direction (0, cos θ_B, sin θ_B).
    pub fn b_direction(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.theta_b.cos(), self.theta_b.sin())
    }

    /// Full B_RF vector, T.
    pub fn b_vector(&self) -> Vector3<f64> {
        self.b_direction() * self.b_amplitude
    }

    /// Propagation direction Ê × B̂, normalized.
    pub fn k_direction(&self) -> Vector3<f64> {
        let k = self.e_direction().cross(&self.b_direction());
        k / k.norm()
    }
}

/// Static bias field defining the quantization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasField {
    /// B_bias, T.
    pub magnitude: f64,
    /// Angle in the x-z plane from +ẑ, rad.
    pub theta_bias: f64,
}

impl BiasField {
    pub fn new(magnitude: f64, theta_bias: f64) -> Self {
        BiasField { magnitude, theta_bias }
    }

    /// Unit axis (sin θ_bias, 0, cos θ_bias).
    pub fn axis(&self) -> Vector3<f64> {
        Vector3::new(self.theta_bias.sin(), 0.0, self.theta_bias.cos())
    }
}

/// Which field a spherical decomposition describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Electric,
    Magnetic,
}

/// Spherical-basis coefficients of a field: amplitude × (c_{−1}, c_0, c_{+1})
/// with Σ|c_q|² = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalDecomposition {
    /// E0 in V/m or B_RF in T, depending on `kind`.
    pub amplitude: f64,
    pub kind: FieldKind,
    pub coeffs: [Complex64; 3],
}

impl SphericalDecomposition {
    /// Coefficient for q ∈ {−1, 0, +1}.
    pub fn coeff(&self, q: i32) -> Complex64 {
        self.coeffs[(q + 1) as usize]
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// π/σ decomposition of the RF electric field:
/// α_0 = cos θ_RF, α_{±1} = ∓ sin θ_RF / √2.
pub fn decompose_e_field(e_amplitude: f64, theta_rf: f64) -> SphericalDecomposition {
    decompose_linear(e_amplitude, theta_rf, FieldKind::Electric)
}

/// Same closed form for the RF magnetic field:
/// β_0 = cos θ_B, β_{±1} = ∓ sin θ_B / √2.
pub fn decompose_b_field(b_amplitude: f64, theta_b: f64) -> SphericalDecomposition {
    decompose_linear(b_amplitude, theta_b, FieldKind::Magnetic)
}

/// Decomposition of an arbitrary real field vector in an explicit spherical
/// basis: amplitude ‖v‖ and coefficients e_q†·v̂. Used when the quantization
/// axis follows a scanned bias orientation rather than the default geometry.
pub fn decompose_in_basis(
    vector: &Vector3<f64>,
    kind: FieldKind,
    basis: &crate::angular::SphericalBasis,
) -> SphericalDecomposition {
    let amplitude = vector.norm();
    if amplitude < f64::MIN_POSITIVE {
        return SphericalDecomposition {
            amplitude: 0.0,
            kind,
            coeffs: [Complex64::new(0.0, 0.0); 3],
        };
    }
    let unit = vector / amplitude;
    SphericalDecomposition {
        amplitude,
        kind,
        coeffs: [
            basis.project(-1, &unit),
            basis.project(0, &unit),
            basis.project(1, &unit),
        ],
    }
}

fn decompose_linear(amplitude: f64, theta: f64, kind: FieldKind) -> SphericalDecomposition {
    let s = theta.sin() / 2f64.sqrt();
    SphericalDecomposition {
        amplitude,
        kind,
        coeffs: [
            Complex64::new(s, 0.0),
            Complex64::new(theta.cos(), 0.0),
            Complex64::new(-s, 0.0),
        ],
    }
}

/// Zeeman shift of one transition path, rad/s:
/// Δ_Z = (μ_B B_bias / ħ)(g_upper m_upper − g_lower m_lower) cos θ_bias.
pub fn zeeman_shift(
    bias: &BiasField,
    g_upper: f64,
    m_upper: HalfInt,
    g_lower: f64,
    m_lower: HalfInt,
) -> f64 {
    (MU_B * bias.magnitude / HBAR)
        * (g_upper * m_upper.value() - g_lower * m_lower.value())
        * bias.theta_bias.cos()
}

/// Free-space link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Transmit power, W.
    pub tx_power: f64,
    /// Transmit gain, linear.
    pub tx_gain: f64,
    /// Distance, m.
    pub distance: f64,
    /// Wavelength, m.
    pub wavelength: f64,
    /// Wave impedance, ohm.
    pub impedance: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tx_power", self.tx_power),
            ("tx_gain", self.tx_gain),
            ("distance", self.distance),
            ("wavelength", self.wavelength),
            ("impedance", self.impedance),
        ] {
            if !(v > 0.0) {
                return Err(CoreError::InvalidInput(format!(
                    "link budget field {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Incident power flux density at the receiver, W/m².
    pub fn flux(&self) -> f64 {
        self.tx_power * self.tx_gain / (4.0 * std::f64::consts::PI * self.distance.powi(2))
    }

    /// Field amplitude at the receiver from the flux: E0 = √(2 Z0 · flux).
    pub fn e_amplitude(&self) -> f64 {
        (2.0 * self.impedance * self.flux()).sqrt()
    }
}

/// Equivalent effective aperture of the atomic receiver, m²:
/// A_eff = 4π Z0 N_atoms d̂² ω_RF T2 / ħ.
pub fn effective_aperture(n_atoms: f64, dipole: f64, omega_rf: f64, t2: f64, z0: f64) -> f64 {
    4.0 * std::f64::consts::PI * z0 * n_atoms * dipole * dipole * omega_rf * t2 / HBAR
}

/// Received power, W: flux × A_eff.
pub fn received_power(link: &LinkBudget, a_eff: f64) -> Result<f64> {
    link.validate()?;
    Ok(link.flux() * a_eff)
}
