//! Exponential, logarithm, adjoint and bracket on SO(3), SE(3) and SL(3).

use eqobs::lie::{random_algebra, random_element, LieGroupDescriptor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> eqobs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in [
        LieGroupDescriptor::so3(),
        LieGroupDescriptor::se3(),
        LieGroupDescriptor::sl3(),
    ] {
        let u = random_algebra(&d, &mut rng, 0.8);
        let x = u.exp();
        let back = x.log()?;
        let a = random_element(&d, &mut rng);
        let v = random_algebra(&d, &mut rng, 1.0);
        // Ad_A [u, v] = [Ad_A u, Ad_A v]
        let lhs = a.adjoint(&u.bracket(&v)?)?;
        let rhs = a.adjoint(&u)?.bracket(&a.adjoint(&v)?)?;
        println!(
            "{:<6} dim {}  |log(exp u) - u| = {:.1e}  |Ad[u,v] - [Ad u, Ad v]| = {:.1e}  membership {:.1e}",
            d.name(),
            d.group_dim(),
            (back.coords() - u.coords()).norm(),
            (lhs.coords() - rhs.coords()).norm(),
            x.membership_residual()
        );
    }
    Ok(())
}
