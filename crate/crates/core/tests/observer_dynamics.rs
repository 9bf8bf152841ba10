use eqobs::catalog::{s2_direction, SystemKind};
use eqobs::integrators::{step_group, Integrator, IntegratorConfig, Method};
use eqobs::lie::{random_element, AlgebraElement, GroupElement, LieGroupDescriptor};
use eqobs::observer::{
    check_error_invariance, group_error, group_error_rhs, lifted_velocity, project_state, random_input, state_error,
    Innovation,
};
use eqobs::scenario::{run_simulation, Scenario};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn input(t: f64) -> DVector<f64> {
    DVector::from_vec(vec![0.7 * t.sin(), 0.4, 0.9 * (0.5 * t).cos()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_error_is_invariant(seed in any::<u64>(), ki in 0usize..3) {
        let sys = SystemKind::ALL[ki].build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x_hat = random_element(sys.group(), &mut rng);
        let z = random_element(sys.group(), &mut rng);
        let xi = sys.action().manifold().random_point(&mut rng);
        prop_assert!(check_error_invariance(&sys, &x_hat, &xi, &z).unwrap() < 1e-9);
    }
}

/// Without correction and with `X̂(0) = S·X(0)` for `S` fixing the origin,
/// the estimate still tracks the truth exactly.
#[test]
fn internal_model_tracks_without_correction() {
    let sys = s2_direction().unwrap();
    let zero = Innovation::zero(sys.group());
    let cfg = IntegratorConfig::new(Method::Rkmk4, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut x = random_element(sys.group(), &mut rng);
    let twist = AlgebraElement::from_slice(sys.group(), &[0.0, 0.0, 1.1]).unwrap().exp();
    let mut x_hat = twist.compose(&x).unwrap();
    let (mut ti, mut oi) = (Integrator::new(cfg), Integrator::new(cfg));
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let t = k as f64 * 0.01;
        let xi = project_state(&sys, &x).unwrap();
        let y = sys.output(&xi).unwrap();
        let e = state_error(&sys, &x_hat, &xi).unwrap();
        worst = worst.max((e.coords - &sys.origin.coords).norm());
        // same zero-order hold as the observer
        let truth = |_: f64, g: &GroupElement| lifted_velocity(&sys, g, &input(t));
        x = ti.step_group(&truth, t, &x).unwrap();
        x_hat = oi.step_observer(&sys, &zero, t, &x_hat, &input(t), &y).unwrap();
    }
    assert!(worst < 1e-6, "error drifted to {worst}");
}

fn time_to_one_degree(gain: f64) -> f64 {
    let text = format!(
        "system = \"s2_direction\"\nt_end = 8.0\ndt = 0.001\nseed = 3\n[observer]\ngain = {gain}\nperturbation = [1.2, 0.0, 0.0]\n"
    );
    let rec = run_simulation(&Scenario::from_toml(&text).unwrap()).unwrap();
    rec.rows
        .iter()
        .find(|r| r.error_metric < 1f64.to_radians())
        .map(|r| r.t)
        .expect("reaches one degree")
}

#[test]
fn doubling_gain_halves_settling_time() {
    let ratio = time_to_one_degree(1.0) / time_to_one_degree(2.0);
    assert!((ratio - 2.0).abs() < 0.01, "ratio {ratio}");
}

#[test]
fn group_error_derivative_matches_forward_difference() {
    let sys = SystemKind::So3Attitude.build().unwrap();
    let inn = SystemKind::So3Attitude.reference_innovation(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = random_element(sys.group(), &mut rng);
    let x_hat = random_element(sys.group(), &mut rng);
    let v = random_input(3, &mut rng);
    let rhs = group_error_rhs(&sys, &inn, 0.0, &x_hat, &x, &v).unwrap();
    let e0 = group_error(&x_hat, &x).unwrap();
    let mismatch = |h: f64| {
        let cfg = IntegratorConfig::new(Method::LieEuler, h).unwrap();
        let truth = |_: f64, g: &GroupElement| lifted_velocity(&sys, g, &v);
        let x1 = step_group(&cfg, &truth, 0.0, &x).unwrap();
        let y = sys.output(&project_state(&sys, &x).unwrap()).unwrap();
        let xh1 = eqobs::integrators::step_observer(&cfg, &sys, &inn, 0.0, &x_hat, &v, &y).unwrap();
        let e1 = group_error(&xh1, &x1).unwrap();
        ((e1.matrix() - e0.matrix()) / h - &rhs.mat).norm()
    };
    let ratio = mismatch(1e-3) / mismatch(5e-4);
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn renormalization_keeps_states_on_the_group() {
    for desc in [LieGroupDescriptor::so3(), LieGroupDescriptor::se3()] {
        let m = desc.group_dim();
        let field = |t: f64, x: &GroupElement| {
            AlgebraElement::new(
                x.descriptor(),
                DVector::from_fn(m, |i, _| (t * (i as f64 + 1.0)).sin() + 0.3),
            )
        };
        let mut integ = Integrator::new(IntegratorConfig::new(Method::LieEuler, 0.01).unwrap());
        let x = integ
            .integrate(&field, 0.0, &GroupElement::identity(&desc), 100_000)
            .unwrap();
        assert!(
            x.membership_residual() < 1e-6,
            "{}: {}",
            desc.name(),
            x.membership_residual()
        );
    }
}

#[test]
fn simulated_truth_stays_on_its_manifold() {
    for file in ["s2_sinusoid.toml", "so3_attitude_noisy.toml", "se3_pose.toml"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("scenarios")
            .join(file);
        let sc = Scenario::load(&path).unwrap();
        let sys = sc.kind().unwrap().build().unwrap();
        let rec = run_simulation(&sc).unwrap();
        let manifold = sys.action().manifold().clone();
        for r in &rec.rows {
            let coords = DVector::from_column_slice(&r.truth);
            let res = match &manifold {
                eqobs::manifold::Manifold::Sphere2 => (coords.norm() - 1.0).abs(),
                _ => continue_residual(&sys, &r.truth),
            };
            assert!(res < 1e-8, "{file} t={} residual {res}", r.t);
        }
    }
}

fn continue_residual(sys: &eqobs::observer::EquivariantSystem, flat: &[f64]) -> f64 {
    // CSV writes matrices row-major
    let n = sys.group().matrix_size();
    let m = nalgebra::DMatrix::from_row_slice(n, n, flat);
    GroupElement::from_matrix_unchecked(sys.group().clone(), m).membership_residual()
}
