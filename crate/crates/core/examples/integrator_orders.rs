//! Convergence orders of Lie–Euler and RKMK4 on SO(3), and the order lost when the
//! `dexp⁻¹` series is cut after its first bracket.

use eqobs::integrators::{step_rkmk4_first_bracket, Integrator, IntegratorConfig, Method};
use eqobs::lie::{AlgebraElement, GroupElement, LieGroupDescriptor};

fn field(t: f64, x: &GroupElement) -> eqobs::Result<AlgebraElement> {
    AlgebraElement::from_slice(x.descriptor(), &[(2.0 * t).sin(), 0.5 + t.cos(), 0.3 * (3.0 * t).cos()])
}

fn run(method: Option<Method>, h: f64) -> eqobs::Result<GroupElement> {
    let x0 = GroupElement::identity(&LieGroupDescriptor::so3());
    let n = (1.0 / h).round() as usize;
    match method {
        Some(m) => Integrator::new(IntegratorConfig::new(m, h)?).integrate(&field, 0.0, &x0, n),
        None => (0..n).try_fold(x0, |x, k| step_rkmk4_first_bracket(h, &field, k as f64 * h, &x)),
    }
}

fn main() -> eqobs::Result<()> {
    let reference = run(Some(Method::Rkmk4), 1e-4)?;
    for (label, m) in [
        ("lie_euler", Some(Method::LieEuler)),
        ("rkmk4", Some(Method::Rkmk4)),
        ("rkmk4, one bracket", None),
    ] {
        let err = |h| -> eqobs::Result<f64> { Ok(run(m, h)?.inverse().compose(&reference)?.distance_to_identity()) };
        let (a, b) = (err(0.1)?, err(0.05)?);
        println!("{label:<20} error {a:.3e} -> {b:.3e}, ratio {:.2}", a / b);
    }
    Ok(())
}
