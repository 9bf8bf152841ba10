//! Closed-form exponential and logarithm for rotations.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{skew, unskew};

/// Rotation angles at or beyond `PI - BRANCH_MARGIN` are rejected by [`log`].
pub const BRANCH_MARGIN: f64 = 1e-6;

const SMALL_ANGLE: f64 = 1e-4;

/// Rodrigues' formula.
pub fn exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(w);
    Matrix3::identity() + k * a + k * k * b
}

/// Rotation angle in `[0, PI]`, computed without the precision loss of `acos`.
pub fn angle(r: &Matrix3<f64>) -> f64 {
    let s = unskew(r).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Principal logarithm as a rotation vector.
pub fn log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let theta = angle(r);
    if !theta.is_finite() {
        return Err(Error::NonFinite("so3 log"));
    }
    if theta >= std::f64::consts::PI - BRANCH_MARGIN {
        return Err(Error::BranchCut { angle: theta });
    }
    let axial = unskew(r);
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        // theta / sin(theta) series
        return Ok(axial * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if theta < std::f64::consts::FRAC_PI_2 {
        return Ok(axial * (theta / theta.sin()));
    }
    // Near PI the antisymmetric part vanishes; read the axis from the symmetric part.
    let c = theta.cos();
    let sym = (r + r.transpose()) * 0.5 - Matrix3::identity() * c;
    let scale = 1.0 - c;
    let diag = Vector3::new(sym[(0, 0)], sym[(1, 1)], sym[(2, 2)]);
    let i = diag.imax();
    let mut axis = Vector3::new(sym[(0, i)], sym[(1, i)], sym[(2, i)]) / (diag[i] * scale).sqrt();
    axis /= axis.norm();
    if axis.dot(&axial) < 0.0 {
        axis = -axis;
    }
    Ok(axis * theta)
}

/// Left Jacobian of the rotation exponential.
pub fn left_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        ((1.0 - theta.cos()) / theta2, (theta - theta.sin()) / (theta2 * theta))
    };
    let k = skew(w);
    Matrix3::identity() + k * a + k * k * b
}

/// Inverse of [`left_jacobian`].
pub fn left_jacobian_inverse(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let b = if theta < SMALL_ANGLE {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        1.0 / theta2 - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    let k = skew(w);
    Matrix3::identity() - k * 0.5 + k * k * b
}

/// Rotation about the z axis.
pub fn rot_z(theta: f64) -> Matrix3<f64> {
    exp(&Vector3::new(0.0, 0.0, theta))
}
