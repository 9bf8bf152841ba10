//! SO(3) acting on the sphere: the action law, closed-form vs finite-difference
//! differentials, the stabilizer and the rank of `dφ_ξ`.

use eqobs::homogeneous::{
    act, check_commutation, stabilizer_sample, transitivity_rank, DifferentialMode, GroupAction, SphereRotation,
};
use eqobs::lie::{random_algebra, random_element};
use eqobs::manifold::{Manifold, ManifoldPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> eqobs::Result<()> {
    let action = SphereRotation::new();
    let g = action.group().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xi = Manifold::Sphere2.random_point(&mut rng);
    let (x, y) = (random_element(&g, &mut rng), random_element(&g, &mut rng));

    let lhs = act(&action, &y, &act(&action, &x, &xi)?)?;
    let rhs = act(&action, &x.compose(&y)?, &xi)?;
    println!("action law residual      {:.2e}", (lhs.coords - rhs.coords).norm());

    let origin = ManifoldPoint::sphere(0.0, 0.0, 1.0)?;
    let u = random_algebra(&g, &mut rng, 1.0);
    for mode in [DifferentialMode::Analytic, DifferentialMode::FiniteDifference] {
        let r = check_commutation(&action, &origin, &x, &u, mode)?;
        println!("commutation {mode:?}: {r:.2e}");
    }

    let stab = stabilizer_sample(&action, &xi, &mut rng, 5)?;
    let drift = stab
        .iter()
        .map(|s| act(&action, s, &xi).map(|p| (p.coords - &xi.coords).norm()))
        .collect::<eqobs::Result<Vec<_>>>()?;
    println!(
        "stabilizer moves xi by at most {:.2e}",
        drift.into_iter().fold(0.0, f64::max)
    );
    println!("rank of dphi_xi: {} (manifold dim 2)", transitivity_rank(&action, &xi)?);
    Ok(())
}
