use std::sync::Arc;

use eqobs::catalog::{s2_direction, s2_duplicated_gyro, s2_truncated};
use eqobs::equivariance::{
    build_equivariant_lift, check_equivariant_lift, check_input_closure, check_lift, construct_origin_lift, OriginLift,
};
use eqobs::error::Error;
use eqobs::homogeneous::stabilizer_sample;
use eqobs::kinematics::{compute_kernel, eval_system, reduce_by_kernel};
use eqobs::lie::{random_element, AlgebraElement};
use eqobs::manifold::{Manifold, ManifoldPoint};
use eqobs::observer::random_input;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere_points(seed: u64, n: usize) -> Vec<ManifoldPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Manifold::Sphere2.random_point(&mut rng)).collect()
}

#[test]
fn duplicated_gyro_kernel_and_reduction() {
    let f = s2_duplicated_gyro();
    let pts = sphere_points(3, 8);
    let kernel = compute_kernel(&f, &pts).unwrap();
    assert_eq!(kernel.len(), 3);
    for k in &kernel {
        // kernel vectors have the form (w, −w)
        assert!((k.rows(0, 3) + k.rows(3, 3)).norm() < 1e-10);
    }
    let (reduced, q) = reduce_by_kernel(&f, &kernel);
    assert_eq!(reduced.input_dim(), 3);
    // reducing twice changes nothing
    let again = compute_kernel(&reduced, &pts).unwrap();
    assert!(again.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in &pts {
        let w = random_input(3, &mut rng);
        let a = eval_system(&reduced, p, &w).unwrap().vec;
        let b = eval_system(&f, p, &(&q * &w)).unwrap().vec;
        assert!((a - b).norm() < 1e-14);
    }
}

#[test]
fn closure_separates_full_and_truncated_inputs() {
    let sys = s2_direction().unwrap();
    let pts = sphere_points(1, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let transforms: Vec<_> = (0..10)
        .map(|_| (random_element(sys.group(), &mut rng), random_input(3, &mut rng)))
        .collect();
    let full = check_input_closure(sys.action(), &sys.symmetry.f, &pts, &transforms).unwrap();
    assert!(full.closed, "{}", full.max_residual);

    let (action, f) = s2_truncated();
    let transforms: Vec<_> = transforms
        .into_iter()
        .map(|(z, v)| (z, v.rows(0, 1).into_owned()))
        .collect();
    let trunc = check_input_closure(action.as_ref(), &f, &pts, &transforms).unwrap();
    assert!(!trunc.closed);
    assert!(trunc.witness.is_some());
}

#[test]
fn averaged_origin_lift_extends_to_an_equivariant_lift() {
    let sys = s2_direction().unwrap();
    let ol = construct_origin_lift(&sys.symmetry, sys.origin.clone(), 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let stabs = stabilizer_sample(sys.action(), &sys.origin, &mut rng, 20).unwrap();
    let inputs: Vec<_> = (0..20).map(|_| random_input(3, &mut rng)).collect();
    let lift = build_equivariant_lift(ol, sys.symmetry.psi.clone(), sys.section.clone(), &stabs, &inputs)
        .unwrap()
        .to_lift();
    for _ in 0..50 {
        let xi = Manifold::Sphere2.random_point(&mut rng);
        let v = random_input(3, &mut rng);
        let x = random_element(sys.group(), &mut rng);
        assert!(check_lift(sys.action(), &sys.symmetry.f, &lift, &xi, &v).unwrap() < 1e-9);
        assert!(check_equivariant_lift(&sys.symmetry, &lift, &x, &xi, &v).unwrap() < 1e-9);
    }
}

#[test]
fn incompatible_origin_lift_is_rejected_with_witness() {
    let sys = s2_direction().unwrap();
    let g = sys.group().clone();
    let gg = g.clone();
    // adds a stabilizer component that depends on the input in a non-rotational way
    let bad = OriginLift::new(sys.origin.clone(), g, move |v| {
        let mut c = v.clone();
        c[2] += v[0];
        AlgebraElement::new(&gg, c).unwrap()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let stabs = stabilizer_sample(sys.action(), &sys.origin, &mut rng, 10).unwrap();
    let inputs: Vec<_> = (0..10).map(|_| random_input(3, &mut rng)).collect();
    match build_equivariant_lift(bad, sys.symmetry.psi.clone(), sys.section.clone(), &stabs, &inputs) {
        Err(Error::StabilizerIncompatible {
            residual,
            witness_stabilizer,
            witness_input,
        }) => {
            assert!(residual > 1e-3);
            assert_eq!(witness_stabilizer.len(), 9);
            assert_eq!(witness_input.len(), 3);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn catalog_fields_are_tangent(seed in any::<u64>()) {
        let sys = s2_direction().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = Manifold::Sphere2.random_point(&mut rng);
        let v = random_input(3, &mut rng);
        let out = eval_system(&sys.symmetry.f, &xi, &v).unwrap();
        prop_assert!(out.tangency_residual() < 1e-12);
    }

    #[test]
    fn input_action_composes(seed in any::<u64>(), ki in 0usize..3) {
        let sys = eqobs::catalog::SystemKind::ALL[ki].build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (random_element(sys.group(), &mut rng), random_element(sys.group(), &mut rng));
        let v = random_input(sys.input_dim(), &mut rng);
        let psi = &sys.symmetry.psi;
        let lhs = psi.apply(&y, &psi.apply(&x, &v).unwrap()).unwrap();
        let rhs = psi.apply(&x.compose(&y).unwrap(), &v).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-9);
        let lin = psi.apply(&x, &(&v * 3.0)).unwrap() - psi.apply(&x, &v).unwrap() * 3.0;
        prop_assert!(lin.norm() < 1e-9);
    }
}

#[test]
fn affine_system_from_public_field_type() {
    let drift: Arc<eqobs::kinematics::VectorFieldFn> = Arc::new(|xi| xi.coords.clone() * 0.0);
    let f = eqobs::kinematics::make_affine_system(Manifold::Sphere2, vec![drift]);
    let xi = ManifoldPoint::sphere(0.0, 1.0, 0.0).unwrap();
    assert_eq!(
        eval_system(&f, &xi, &DVector::from_element(1, 1.0)).unwrap().vec.norm(),
        0.0
    );
}
