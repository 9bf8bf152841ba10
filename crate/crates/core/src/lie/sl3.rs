//! Series-based exponential and logarithm for the special linear group.
//!
//! `exp` is scaling-and-squaring around an order-12 Taylor polynomial; `log` is
//! inverse scaling-and-squaring: repeated Denman–Beavers square roots until the
//! matrix is close to the identity, then the Mercator series.

use nalgebra::Matrix3;

use crate::error::{Error, Result};

pub const TAYLOR_ORDER: usize = 12;

fn norm1(m: &Matrix3<f64>) -> f64 {
    (0..3).map(|j| m.column(j).abs().sum()).fold(0.0, f64::max)
}

pub fn exp(a: &Matrix3<f64>) -> Matrix3<f64> {
    let n = norm1(a);
    let mut squarings = 0u32;
    if n > 0.5 {
        squarings = (n / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = Matrix3::identity();
    let mut sum = Matrix3::identity();
    for k in 1..=TAYLOR_ORDER {
        term = term * scaled / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

fn sqrt_denman_beavers(a: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let mut y = *a;
    let mut z = Matrix3::identity();
    for _ in 0..100 {
        let y_inv = y.try_inverse().ok_or(Error::NoPrincipalLog("singular iterate"))?;
        let z_inv = z.try_inverse().ok_or(Error::NoPrincipalLog("singular iterate"))?;
        let y_next = (y + z_inv) * 0.5;
        let z_next = (z + y_inv) * 0.5;
        let delta = norm1(&(y_next - y));
        y = y_next;
        z = z_next;
        if !y.iter().all(|x| x.is_finite()) {
            return Err(Error::NoPrincipalLog("square root iteration diverged"));
        }
        if delta <= 1e-15 * norm1(&y) {
            return Ok(y);
        }
    }
    Err(Error::NoPrincipalLog("square root iteration did not converge"))
}

pub fn log(a: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let mut m = *a;
    let mut roots = 0i32;
    while norm1(&(m - Matrix3::identity())) > 0.25 {
        if roots >= 40 {
            return Err(Error::NoPrincipalLog("too many square roots"));
        }
        m = sqrt_denman_beavers(&m)?;
        roots += 1;
    }
    let x = m - Matrix3::identity();
    let mut power = x;
    let mut sum = Matrix3::zeros();
    for k in 1..=60 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += power * (sign / k as f64);
        power *= x;
        if norm1(&power) < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(roots))
}
