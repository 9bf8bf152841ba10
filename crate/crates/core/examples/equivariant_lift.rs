//! Builds a lift for the sphere system from an origin lift and a section, then checks
//! that it projects to the system and is equivariant. A deliberately broken origin lift
//! is rejected with a witness.

use eqobs::catalog::s2_direction;
use eqobs::equivariance::{
    build_equivariant_lift, check_equivariant_lift, check_lift, construct_origin_lift, OriginLift,
};
use eqobs::homogeneous::stabilizer_sample;
use eqobs::lie::{random_element, AlgebraElement};
use eqobs::manifold::Manifold;
use eqobs::observer::random_input;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> eqobs::Result<()> {
    let sys = s2_direction()?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stabs = stabilizer_sample(sys.action(), &sys.origin, &mut rng, 16)?;
    let inputs: Vec<_> = (0..16).map(|_| random_input(3, &mut rng)).collect();

    let origin_lift = construct_origin_lift(&sys.symmetry, sys.origin.clone(), 16)?;
    let lift = build_equivariant_lift(
        origin_lift,
        sys.symmetry.psi.clone(),
        sys.section.clone(),
        &stabs,
        &inputs,
    )?;
    let lift = lift.to_lift();
    let (mut proj, mut equi) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let xi = Manifold::Sphere2.random_point(&mut rng);
        let v = random_input(3, &mut rng);
        let x = random_element(sys.group(), &mut rng);
        proj = proj.max(check_lift(sys.action(), &sys.symmetry.f, &lift, &xi, &v)?);
        equi = equi.max(check_equivariant_lift(&sys.symmetry, &lift, &x, &xi, &v)?);
    }
    println!("constructed lift: projection {proj:.2e}, equivariance {equi:.2e}");

    let g = sys.group().clone();
    let gg = g.clone();
    let bad = OriginLift::new(sys.origin.clone(), g, move |v| {
        let mut c = v.clone();
        c[2] += v[0];
        AlgebraElement::new(&gg, c).expect("three coordinates")
    });
    match build_equivariant_lift(bad, sys.symmetry.psi.clone(), sys.section.clone(), &stabs, &inputs) {
        Err(e) => println!("broken origin lift rejected: {e}"),
        Ok(_) => println!("broken origin lift unexpectedly accepted"),
    }
    Ok(())
}
