//! Two-level algebra: SU(2) propagators, 2×2 complex matrices and spin-½
//! density matrices.
//!
//! A propagator `exp(-i (θ/2) σ·n̂)` is stored as the real quadruple
//! `(cos θ/2, sin θ/2 · n̂)`, i.e. `U = a·1 − i σ·b`. Products of such
//! quadruples stay exactly in SU(2); a [`ComplexMat2`] is only materialized
//! when a trace against a density matrix is needed.
//!
//! Global phase: a rotation by 2π maps to `−1`. Every observable in this crate
//! is a trace of the form `Tr(U† V† U V ρ)` in which each propagator appears
//! together with its adjoint, so the sign never reaches a result.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

/// Axis norms within this distance of 1 are silently renormalized.
pub const AXIS_RENORMALIZE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Su2Error {
    #[error("rotation axis has norm {norm}, expected 1 (tolerance {AXIS_RENORMALIZE_TOL})")]
    NonUnitAxis { norm: f64 },
    #[error("polarization degree {0} outside [-1, 1]")]
    PolarizationOutOfRange(f64),
    #[error("non-finite input")]
    NonFinite,
}

/// Accepts vectors whose norm is within [`AXIS_RENORMALIZE_TOL`] of 1 and
/// returns them normalized.
pub fn unit_axis(axis: Vec3) -> Result<Vec3, Su2Error> {
    if !axis.is_finite() {
        return Err(Su2Error::NonFinite);
    }
    let norm = axis.norm();
    if (norm - 1.0).abs() > AXIS_RENORMALIZE_TOL {
        return Err(Su2Error::NonUnitAxis { norm });
    }
    Ok(axis * (1.0 / norm))
}

/// A rotation axis paired with an angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    axis: Vec3,
    angle: f64,
}

impl AxisAngle {
    pub fn new(axis: Vec3, angle: f64) -> Result<Self, Su2Error> {
        if !angle.is_finite() {
            return Err(Su2Error::NonFinite);
        }
        Ok(Self {
            axis: unit_axis(axis)?,
            angle,
        })
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Element of SU(2) written as `scalar·1 − i σ·vector` with
/// `scalar² + |vector|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub scalar: f64,
    pub vector: Vec3,
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 {
        scalar: 1.0,
        vector: Vec3::ZERO,
    };

    /// `exp(-i (angle/2) σ·axis)`; `axis` is assumed to be unit length.
    #[inline]
    pub fn rotation(axis: Vec3, angle: f64) -> Su2 {
        let (s, c) = (0.5 * angle).sin_cos();
        Su2 {
            scalar: c,
            vector: axis * s,
        }
    }

    pub fn from_axis_angle(aa: &AxisAngle) -> Su2 {
        Su2::rotation(aa.axis, aa.angle)
    }

    #[inline]
    pub fn adjoint(&self) -> Su2 {
        Su2 {
            scalar: self.scalar,
            vector: -self.vector,
        }
    }

    #[inline]
    pub fn compose(&self, rhs: &Su2) -> Su2 {
        // (a − iσ·b)(c − iσ·d) = (ac − b·d) − iσ·(a d + c b + b×d)
        Su2 {
            scalar: self.scalar * rhs.scalar - self.vector.dot(&rhs.vector),
            vector: rhs.vector * self.scalar + self.vector * rhs.scalar + self.vector.cross(&rhs.vector),
        }
    }

    pub fn to_matrix(&self) -> ComplexMat2 {
        let a = self.scalar;
        let [bx, by, bz] = self.vector.0;
        // a·1 − i(bx σx + by σy + bz σz)
        ComplexMat2([
            [Complex64::new(a, -bz), Complex64::new(-by, -bx)],
            [Complex64::new(by, -bx), Complex64::new(a, bz)],
        ])
    }

    /// Image of a Bloch vector under `ρ ↦ U ρ U†`.
    pub fn rotate_bloch(&self, v: &Vec3) -> Vec3 {
        // Rotation by angle 2·acos(scalar) about vector/|vector|.
        let b = self.vector;
        let a = self.scalar;
        let t = b.cross(v) * 2.0;
        *v + t * a + b.cross(&t)
    }
}

impl Mul for Su2 {
    type Output = Su2;
    fn mul(self, rhs: Su2) -> Su2 {
        self.compose(&rhs)
    }
}

/// Dense 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMat2(pub [[Complex64; 2]; 2]);

impl ComplexMat2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ComplexMat2([[one, zero], [zero, one]])
    }

    pub fn zero() -> Self {
        ComplexMat2([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn pauli_x() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ComplexMat2([[zero, one], [one, zero]])
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let zero = Complex64::new(0.0, 0.0);
        ComplexMat2([[zero, -i], [i, zero]])
    }

    pub fn pauli_z() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ComplexMat2([[one, zero], [zero, -one]])
    }

    /// `σ·v`
    pub fn pauli_dot(v: &Vec3) -> Self {
        Self::pauli_x().scale(v.x().into()) + Self::pauli_y().scale(v.y().into()) + Self::pauli_z().scale(v.z().into())
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let m = self.0;
        ComplexMat2([[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]])
    }

    pub fn adjoint(&self) -> Self {
        let m = self.0;
        ComplexMat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn max_abs_diff(&self, other: &ComplexMat2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    /// Bloch vector `(Tr ρσx, Tr ρσy, Tr ρσz)` of a density matrix.
    pub fn bloch_vector(&self) -> Vec3 {
        Vec3::new(
            (*self * Self::pauli_x()).trace().re,
            (*self * Self::pauli_y()).trace().re,
            (*self * Self::pauli_z()).trace().re,
        )
    }
}

impl Add for ComplexMat2 {
    type Output = ComplexMat2;
    fn add(self, rhs: ComplexMat2) -> ComplexMat2 {
        let (a, b) = (self.0, rhs.0);
        ComplexMat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for ComplexMat2 {
    type Output = ComplexMat2;
    fn sub(self, rhs: ComplexMat2) -> ComplexMat2 {
        self + rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for ComplexMat2 {
    type Output = ComplexMat2;
    fn mul(self, rhs: ComplexMat2) -> ComplexMat2 {
        let (a, b) = (self.0, rhs.0);
        ComplexMat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// `cos(angle/2)·1 − i sin(angle/2)·σ·axis`.
pub fn unitary_from_axis_angle(axis: Vec3, angle: f64) -> Result<ComplexMat2, Su2Error> {
    let aa = AxisAngle::new(axis, angle)?;
    Ok(Su2::from_axis_angle(&aa).to_matrix())
}

/// `ρ = ½·1 + (P/2) σ·m̂`.
pub fn density_from_polarization(degree: f64, direction: Vec3) -> Result<ComplexMat2, Su2Error> {
    if !degree.is_finite() {
        return Err(Su2Error::NonFinite);
    }
    if degree.abs() > 1.0 {
        return Err(Su2Error::PolarizationOutOfRange(degree));
    }
    let m = unit_axis(direction)?;
    let half = Complex64::new(0.5, 0.0);
    Ok(ComplexMat2::identity().scale(half) + ComplexMat2::pauli_dot(&m).scale((0.5 * degree).into()))
}

/// Trace of the ordered product `ms[0]·ms[1]·…`; the empty product is the identity.
pub fn trace_product(ms: &[ComplexMat2]) -> Complex64 {
    ms.iter()
        .fold(ComplexMat2::identity(), |acc, m| acc * *m)
        .trace()
}
