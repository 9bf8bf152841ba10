//! Kinematic models: an azimuth/elevation rate sensor that loses rank at the poles,
//! removing a redundant input by kernel reduction, and a drift-plus-control system.

use std::sync::Arc;

use eqobs::catalog::s2_duplicated_gyro;
use eqobs::kinematics::{
    azimuth_elevation_output, check_completeness, compute_kernel, eval_system, make_affine_system, reduce_by_kernel,
    VectorFieldFn,
};
use eqobs::linalg::{from_vector3, to_vector3};
use eqobs::manifold::{Manifold, ManifoldPoint};
use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> eqobs::Result<()> {
    let g = azimuth_elevation_output();
    let r = 0.5f64.sqrt();
    for (label, p) in [
        ("equator", [1.0, 0.0, 0.0]),
        ("45 deg", [0.0, r, r]),
        ("north pole", [0.0, 0.0, 1.0]),
    ] {
        let c = check_completeness(&g, &ManifoldPoint::sphere(p[0], p[1], p[2])?)?;
        println!(
            "az/el at {label:<10} sigma_min {:.3e} complete {}",
            c.sigma_min, c.complete
        );
    }

    let f = s2_duplicated_gyro();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pts: Vec<_> = (0..6).map(|_| Manifold::Sphere2.random_point(&mut rng)).collect();
    let kernel = compute_kernel(&f, &pts)?;
    let (reduced, _) = reduce_by_kernel(&f, &kernel);
    println!(
        "duplicated gyro: {} inputs, kernel dim {}, reduced to {}",
        f.input_dim(),
        kernel.len(),
        reduced.input_dim()
    );

    // spin about e3 as drift, one control field about e1
    let drift: Arc<VectorFieldFn> = Arc::new(|xi| from_vector3(&to_vector3(&xi.coords).cross(&Vector3::z())));
    let ctrl: Arc<VectorFieldFn> = Arc::new(|xi| from_vector3(&to_vector3(&xi.coords).cross(&Vector3::x())));
    let affine = make_affine_system(Manifold::Sphere2, vec![drift, ctrl]);
    let xi = ManifoldPoint::sphere(0.6, 0.0, 0.8)?;
    let out = eval_system(&affine, &xi, &DVector::from_vec(vec![1.0, 0.5]))?;
    println!("affine field at (0.6, 0, 0.8) with u = 0.5: {:?}", out.vec.as_slice());
    Ok(())
}
