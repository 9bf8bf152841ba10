//! Closed-loop observer on the sphere from a 90 degree initial error. With zero input
//! the error angle obeys `tan(θ/2) = tan(θ₀/2)·e^{−kt}`, which the printout compares against.

use eqobs::scenario::{run_simulation, Scenario};

const SCENARIO: &str = r#"
system = "s2_direction"
t_end = 10.0
dt = 0.01
[observer]
gain = 1.0
perturbation = [1.5707963267948966, 0.0, 0.0]
"#;

fn main() -> eqobs::Result<()> {
    let rec = run_simulation(&Scenario::from_toml(SCENARIO)?)?;
    let theta0 = rec.rows[0].error_metric;
    println!("{:>5} {:>14} {:>14}", "t", "angle", "closed form");
    for r in rec.rows.iter().step_by(100) {
        let law = 2.0 * ((theta0 / 2.0).tan() * (-r.t).exp()).atan();
        println!("{:>5.1} {:>14.6e} {:>14.6e}", r.t, r.error_metric, law);
    }
    Ok(())
}
