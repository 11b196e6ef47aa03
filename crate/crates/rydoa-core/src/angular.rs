//! Exact angular-momentum algebra: Wigner 3-j symbols via the Racah single
//! sum with integer factorials, Clebsch-Gordan conversion, and spherical
//! basis triads for arbitrary quantization axes.
//!
//! Half-integer quantum numbers are stored as doubled integers so selection
//! rules are checked exactly, never through floating-point comparisons.

use crate::error::{CoreError, Result};
use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A half-integer stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };
    pub const THREE_HALVES: HalfInt = HalfInt { twice: 3 };

    /// Construct from a doubled value: `from_twice(3)` is 3/2.
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt { twice: 2 * n }
    }

    pub const fn twice(self) -> i32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// Whether `m` is a legal projection of this angular momentum:
    /// |m| ≤ j and m ≡ j (mod 1).
    pub fn admits_projection(self, m: HalfInt) -> bool {
        m.twice.abs() <= self.twice && (self.twice - m.twice) % 2 == 0
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice + rhs.twice)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_twice(self.twice - rhs.twice)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_twice(-self.twice)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Exact n! as f64; n ≤ 34 stays exactly representable (< 2^128 would not,
/// but every factorial this module needs is ≤ 13! and f64 holds integers
/// exactly up to 2^53, i.e. beyond 18!).
fn factorial(n: i32) -> f64 {
    debug_assert!((0..=18).contains(&n), "factorial range exceeded: {n}");
    let mut acc = 1u64;
    for k in 2..=n as u64 {
        acc *= k;
    }
    acc as f64
}

/// Factorial of a doubled-integer argument, which must be an even
/// non-negative doubling; returns None when the argument is negative
/// (selection-rule failure) so callers can zero out the symbol.
fn fact_twice(twice: i32) -> Option<f64> {
    if twice < 0 {
        return None;
    }
    debug_assert!(twice % 2 == 0, "non-integer factorial argument");
    Some(factorial(twice / 2))
}

fn validate_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.twice < 0 {
        return Err(CoreError::InvalidInput(format!("negative momentum j = {j}")));
    }
    if !j.admits_projection(m) {
        return Err(CoreError::InvalidInput(format!(
            "projection m = {m} not admitted by j = {j}"
        )));
    }
    Ok(())
}

/// Wigner 3-j symbol (j1 j2 j3; m1 m2 m3).
///
/// Lenient variant: malformed projections (|m| > j or parity mismatch)
/// return 0, matching the convention that out-of-range couplings vanish.
/// Use [`wigner_3j_strict`] to get errors instead.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> f64 {
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if j.twice < 0 || !j.admits_projection(m) {
            return 0.0;
        }
    }
    wigner_3j_raw(j1, j2, j3, m1, m2, m3)
}

/// Strict variant of [`wigner_3j`]: rejects malformed quantum numbers.
pub fn wigner_3j_strict(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    validate_pair(j1, m1)?;
    validate_pair(j2, m2)?;
    validate_pair(j3, m3)?;
    Ok(wigner_3j_raw(j1, j2, j3, m1, m2, m3))
}

/// Racah single-sum formula. Inputs are already validated (or zeroed).
fn wigner_3j_raw(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> f64 {
    // m-sum selection rule.
    if m1.twice + m2.twice + m3.twice != 0 {
        return 0.0;
    }
    // Triangle inequality and integer-perimeter rule.
    let (t1, t2, t3) = (j1.twice, j2.twice, j3.twice);
    if t3 < (t1 - t2).abs() || t3 > t1 + t2 || (t1 + t2 + t3) % 2 != 0 {
        return 0.0;
    }

    // Triangle coefficient Δ(j1 j2 j3).
    let delta = {
        let a = fact_twice(t1 + t2 - t3).unwrap();
        let b = fact_twice(t1 - t2 + t3).unwrap();
        let c = fact_twice(-t1 + t2 + t3).unwrap();
        let d = fact_twice(t1 + t2 + t3 + 2).unwrap();
        a * b * c / d
    };

    let pre = {
        let f = |j: HalfInt, m: HalfInt| {
            fact_twice(j.twice + m.twice).unwrap() * fact_twice(j.twice - m.twice).unwrap()
        };
        (delta * f(j1, m1) * f(j2, m2) * f(j3, m3)).sqrt()
    };

    // Sum over k with all six factorial arguments non-negative.
    let a1 = t1 + t2 - t3; // 2(j1+j2-j3)
    let a2 = t1 - m1.twice; // 2(j1-m1)
    let a3 = t2 + m2.twice; // 2(j2+m2)
    let b1 = t3 - t2 + m1.twice; // 2(j3-j2+m1)
    let b2 = t3 - t1 - m2.twice; // 2(j3-j1-m2)
    let k_min = 0.max(-b1).max(-b2);
    let k_max = a1.min(a2).min(a3);
    let mut sum = 0.0;
    let mut k = k_min;
    while k <= k_max {
        debug_assert!(k % 2 == 0);
        let denom = fact_twice(k).unwrap()
            * fact_twice(a1 - k).unwrap()
            * fact_twice(a2 - k).unwrap()
            * fact_twice(a3 - k).unwrap()
            * fact_twice(b1 + k).unwrap()
            * fact_twice(b2 + k).unwrap();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
        k += 2;
    }

    // Phase (−1)^(j1−j2−m3); the exponent is an integer whenever the
    // selection rules above pass.
    let ph = (t1 - t2 - m3.twice) / 2;
    let phase = if ph.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * pre * sum
}

/// Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩ in the Condon-Shortley
/// convention, through the standard 3-j conversion
/// √(2J+1) (−1)^(j1−j2+M) (j1 j2 J; m1 m2 −M).
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    big_j: HalfInt,
    big_m: HalfInt,
) -> f64 {
    let tj = wigner_3j(j1, j2, big_j, m1, m2, -big_m);
    if tj == 0.0 {
        return 0.0;
    }
    let ph = (j1.twice - j2.twice + big_m.twice) / 2;
    let phase = if ph.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * ((big_j.twice + 1) as f64).sqrt() * tj
}

/// Spherical basis triad (e_{−1}, e_0, e_{+1}) about a quantization axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalBasis {
    pub e_minus: Vector3<Complex64>,
    pub e_zero: Vector3<Complex64>,
    pub e_plus: Vector3<Complex64>,
    pub quantization_axis: Vector3<f64>,
}

impl SphericalBasis {
    pub fn component(&self, q: i32) -> &Vector3<Complex64> {
        match q {
            -1 => &self.e_minus,
            0 => &self.e_zero,
            1 => &self.e_plus,
            _ => panic!("spherical index q must be in {{-1,0,+1}}, got {q}"),
        }
    }

    /// Projection coefficient of a real field direction onto component q:
    /// e_q† · v.
    pub fn project(&self, q: i32, v: &Vector3<f64>) -> Complex64 {
        let e = self.component(q);
        e.iter()
            .zip(v.iter())
            .map(|(eq, vi)| eq.conj() * Complex64::new(*vi, 0.0))
            .sum()
    }
}

fn rotate(r: &nalgebra::Matrix3<f64>, v: Vector3<f64>) -> Vector3<Complex64> {
    (r * v).map(|x| Complex64::new(x, 0.0))
}

/// Spherical basis whose e_0 aligns with `axis`, produced by the minimal
/// rotation taking the lab default x̂ (beam propagation axis) onto `axis`.
/// At the antipode (axis ≈ −x̂) a fixed 180° rotation about ẑ is used, the
/// one point where no minimal rotation exists.
pub fn basis_for_axis(axis: &Vector3<f64>) -> Result<SphericalBasis> {
    let n = axis.norm();
    if n < 1e-12 {
        return Err(CoreError::InvalidInput("zero-norm quantization axis".into()));
    }
    if (n - 1.0).abs() > 1e-12 {
        return Err(CoreError::InvalidInput(format!(
            "quantization axis must be unit length, got |axis| = {n}"
        )));
    }
    let a = axis / n;
    let x = Vector3::x();
    let r = if (a + x).norm() < 1e-9 {
        // antipode: 180° about ẑ
        nalgebra::Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0))
    } else {
        let axis_angle = {
            let cross = x.cross(&a);
            let angle = cross.norm().atan2(x.dot(&a));
            if cross.norm() < 1e-15 {
                Vector3::zeros()
            } else {
                cross.normalize() * angle
            }
        };
        nalgebra::Rotation3::from_scaled_axis(axis_angle).into_inner()
    };

    let (ex, ey, ez) = (rotate(&r, Vector3::x()), rotate(&r, Vector3::y()), rotate(&r, Vector3::z()));
    let i = Complex64::i();
    let s = Complex64::new(1.0 / f64::sqrt(2.0), 0.0);
    Ok(SphericalBasis {
        e_minus: (ey - ez.map(|c| c * i)) * s,
        e_zero: ex,
        e_plus: -(ey + ez.map(|c| c * i)) * s,
        quantization_axis: a,
    })
}
