//! Closed-form exponential and logarithm for rigid-body motions.
//!
//! Algebra coordinates are ordered `(ω, v)`: rotation first, translation second.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector6};

use super::so3;
use crate::error::Result;

pub fn exp(xi: &Vector6<f64>) -> Matrix4<f64> {
    let w = Vector3::new(xi[0], xi[1], xi[2]);
    let v = Vector3::new(xi[3], xi[4], xi[5]);
    let r = so3::exp(&w);
    let t = so3::left_jacobian(&w) * v;
    assemble(&r, &t)
}

pub fn log(m: &Matrix4<f64>) -> Result<Vector6<f64>> {
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
    let t: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into();
    let w = so3::log(&r)?;
    let v = so3::left_jacobian_inverse(&w) * t;
    Ok(Vector6::new(w.x, w.y, w.z, v.x, v.y, v.z))
}

pub fn assemble(r: &Matrix3<f64>, t: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    m
}

pub fn inverse(m: &Matrix4<f64>) -> Matrix4<f64> {
    let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
    let t: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into();
    let rt = r.transpose();
    assemble(&rt, &(-(rt * t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_translation() {
        let m = exp(&Vector6::new(0.0, 0.0, 0.0, 1.0, 2.0, 3.0));
        assert_eq!(m[(0, 3)], 1.0);
        assert_eq!(m[(1, 3)], 2.0);
        assert_eq!(m[(2, 3)], 3.0);
    }

    #[test]
    fn roundtrip() {
        let xi = Vector6::new(0.3, -0.2, 1.1, 0.5, -1.0, 2.0);
        assert!((log(&exp(&xi)).unwrap() - xi).norm() < 1e-12);
        assert!((exp(&xi) * inverse(&exp(&xi)) - Matrix4::identity()).norm() < 1e-12);
    }
}
