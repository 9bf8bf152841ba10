//! Scenario files, closed-loop simulation and CSV output.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! system = "s2_direction"     # s2_direction | so3_attitude | se3_pose
//! t_end = 10.0
//! dt = 0.01
//! seed = 1                    # optional; falls back to EQOBS_SEED, then 0
//!
//! [integrator]                # optional
//! method = "rkmk4"            # lie_euler | rkmk4 (default rkmk4)
//! renorm_every = 100
//!
//! [truth]
//! point = [1.0, 0.0, 0.0]     # sphere systems: initial unit vector (default: origin)
//! # log = [...]               # group systems: X(0) = exp(log) (default: identity)
//!
//! [velocity]
//! profile = "sinusoid"        # constant | sinusoid
//! value = [0.0, 0.0, 0.0]     # constant
//! amplitude = [0.5, 0.3, 0.8] # sinusoid: offset + amplitude * sin(2π f t + phase)
//! frequency_hz = 0.1
//! phase = 0.0
//! offset = [0.0, 0.0, 0.0]
//!
//! [observer]
//! innovation = "reference"    # reference | zero
//! gain = 1.0
//! perturbation = [0.5, 0.0, 0.0]  # X̂(0) = exp(perturbation)·X(0)
//! # initial_log = [...]       # or an absolute X̂(0) = exp(initial_log)
//!
//! [noise]
//! velocity_std = 0.0
//! output_std = 0.0
//! ```
//!
//! Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::catalog::SystemKind;
use crate::error::{Error, Result};
use crate::integrators::{Integrator, IntegratorConfig, Method, DEFAULT_RENORM_EVERY};
use crate::kinematics::OutputSpace;
use crate::lie::{AlgebraElement, GroupElement};
use crate::manifold::{Manifold, ManifoldPoint};
use crate::observer::{lifted_velocity, project_state, state_error, EquivariantSystem, Innovation};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: String,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub truth: TruthSection,
    #[serde(default)]
    pub velocity: VelocitySection,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub noise: NoiseSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_renorm")]
    pub renorm_every: u64,
}

fn default_method() -> Method {
    Method::Rkmk4
}

fn default_renorm() -> u64 {
    DEFAULT_RENORM_EVERY
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            method: default_method(),
            renorm_every: default_renorm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub point: Option<Vec<f64>>,
    pub log: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Constant,
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocitySection {
    #[serde(default)]
    pub profile: Profile,
    pub value: Option<Vec<f64>>,
    pub amplitude: Option<Vec<f64>>,
    #[serde(default)]
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase: f64,
    pub offset: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationChoice {
    #[default]
    Reference,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default)]
    pub innovation: InnovationChoice,
    #[serde(default = "default_gain")]
    pub gain: f64,
    pub perturbation: Option<Vec<f64>>,
    pub initial_log: Option<Vec<f64>>,
}

fn default_gain() -> f64 {
    1.0
}

impl Default for ObserverSection {
    fn default() -> Self {
        ObserverSection {
            innovation: InnovationChoice::Reference,
            gain: default_gain(),
            perturbation: None,
            initial_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub velocity_std: f64,
    #[serde(default)]
    pub output_std: f64,
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn check_len(field: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(config_err(field, format!("expected {n} entries, got {}", v.len())));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(config_err(field, "entries must be finite"));
    }
    Ok(())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| config_err("<document>", e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn kind(&self) -> Result<SystemKind> {
        self.system.parse().map_err(|_| {
            config_err(
                "system",
                format!(
                    "unknown system `{}` (expected s2_direction, so3_attitude or se3_pose)",
                    self.system
                ),
            )
        })
    }

    /// Field-level validation; dimension checks need the system's group and input sizes.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config_err("dt", "must be positive"));
        }
        if !(self.t_end > self.dt && self.t_end.is_finite()) {
            return Err(config_err("t_end", "must be finite and greater than dt"));
        }
        if self.integrator.renorm_every == 0 {
            return Err(config_err("integrator.renorm_every", "must be at least 1"));
        }
        let (m, gdim) = match kind {
            SystemKind::S2Direction | SystemKind::So3Attitude => (3, 3),
            SystemKind::Se3Pose => (6, 6),
        };
        let sphere = kind == SystemKind::S2Direction;
        match (&self.truth.point, &self.truth.log) {
            (Some(_), Some(_)) => return Err(config_err("truth", "give either `point` or `log`, not both")),
            (Some(p), None) => {
                if !sphere {
                    return Err(config_err("truth.point", "only sphere systems take a point; use `log`"));
                }
                check_len("truth.point", p, 3)?;
                let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-9 {
                    return Err(config_err("truth.point", format!("must be a unit vector, norm is {n}")));
                }
            }
            (None, Some(l)) => check_len("truth.log", l, gdim)?,
            (None, None) => {}
        }
        let v = &self.velocity;
        match v.profile {
            Profile::Constant => {
                if let Some(val) = &v.value {
                    check_len("velocity.value", val, m)?;
                }
                if v.amplitude.is_some() || v.offset.is_some() {
                    return Err(config_err(
                        "velocity",
                        "amplitude/offset belong to the sinusoid profile",
                    ));
                }
            }
            Profile::Sinusoid => {
                let a = v
                    .amplitude
                    .as_ref()
                    .ok_or_else(|| config_err("velocity.amplitude", "required for sinusoid"))?;
                check_len("velocity.amplitude", a, m)?;
                if let Some(o) = &v.offset {
                    check_len("velocity.offset", o, m)?;
                }
                if v.value.is_some() {
                    return Err(config_err("velocity.value", "belongs to the constant profile"));
                }
                if !(v.frequency_hz.is_finite() && v.frequency_hz >= 0.0) {
                    return Err(config_err("velocity.frequency_hz", "must be finite and non-negative"));
                }
            }
        }
        let o = &self.observer;
        if !(o.gain.is_finite() && o.gain >= 0.0) {
            return Err(config_err("observer.gain", "must be finite and non-negative"));
        }
        match (&o.perturbation, &o.initial_log) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "observer",
                    "give either `perturbation` or `initial_log`, not both",
                ))
            }
            (Some(p), None) => check_len("observer.perturbation", p, gdim)?,
            (None, Some(l)) => check_len("observer.initial_log", l, gdim)?,
            (None, None) => {}
        }
        for (name, s) in [
            ("noise.velocity_std", self.noise.velocity_std),
            ("noise.output_std", self.noise.output_std),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(config_err(name, "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Number of steps; the record has one more row.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt * (1.0 + 1e-12)).floor() as usize
    }

    /// Input at time `t`.
    pub fn velocity_at(&self, t: f64, m: usize) -> DVector<f64> {
        let v = &self.velocity;
        let vec = |o: &Option<Vec<f64>>| {
            o.as_ref()
                .map(|x| DVector::from_column_slice(x))
                .unwrap_or_else(|| DVector::zeros(m))
        };
        match v.profile {
            Profile::Constant => vec(&v.value),
            Profile::Sinusoid => {
                let s = (std::f64::consts::TAU * v.frequency_hz * t + v.phase).sin();
                vec(&v.offset) + vec(&v.amplitude) * s
            }
        }
    }
}

/// One sampled instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    pub error: Vec<f64>,
    pub error_metric: f64,
    pub innovation_norm: f64,
}

impl TrajectoryRow {
    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.t)
            .chain(self.truth.iter().copied())
            .chain(self.estimate.iter().copied())
            .chain(self.error.iter().copied())
            .chain([self.error_metric, self.innovation_norm])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub system: String,
    /// Names of the state coordinates, shared by truth, estimate and error columns.
    pub coord_names: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for prefix in ["truth", "est", "err"] {
            h.extend(self.coord_names.iter().map(|c| format!("{prefix}_{c}")));
        }
        h.push("error_metric".into());
        h.push("innovation_norm".into());
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row.values() {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format_g17(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Coordinate names: `x, y, z` on the sphere, `mIJ` (row-major) for matrices.
pub fn coord_names(m: &Manifold) -> Vec<String> {
    match m {
        Manifold::Sphere2 => vec!["x".into(), "y".into(), "z".into()],
        Manifold::Group(d) => {
            let n = d.matrix_size();
            (0..n).flat_map(|i| (0..n).map(move |j| format!("m{i}{j}"))).collect()
        }
    }
}

/// State coordinates in CSV order (row-major for matrices).
pub fn csv_coords(p: &ManifoldPoint) -> Vec<f64> {
    match p.as_matrix() {
        Some(m) => (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect(),
        None => p.coords.iter().copied().collect(),
    }
}

/// `%.17g`: 17 significant digits, exponent form outside `[1e-4, 1e17)`, trailing
/// zeros removed.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        strip(&format!("{x:.decimals$}"))
    } else {
        let mut s = strip(mantissa);
        let _ = write!(s, "e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
        s
    }
}

pub fn write_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    std::fs::write(path, record.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Seed from the scenario, else `EQOBS_SEED`, else 0.
pub fn resolve_seed(scenario: &Scenario) -> Result<u64> {
    if let Some(s) = scenario.seed {
        return Ok(s);
    }
    match std::env::var("EQOBS_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| config_err("EQOBS_SEED", format!("not an unsigned integer: `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn perturb_output(space: &OutputSpace, y: DVector<f64>, noise: &[f64]) -> DVector<f64> {
    match space {
        OutputSpace::Sphere2 => {
            let z = y + DVector::from_column_slice(&noise[..3]);
            let n = z.norm();
            z / n
        }
        OutputSpace::Manifold(Manifold::Group(d)) => {
            let n = d.matrix_size();
            let k = d.group_dim();
            let u = AlgebraElement::from_slice(d, &noise[..k]).expect("noise sized to the algebra");
            crate::linalg::mat_to_vec(&(u.exp().matrix() * crate::linalg::vec_to_mat(&y, n)))
        }
        _ => {
            let n = y.len();
            y + DVector::from_column_slice(&noise[..n])
        }
    }
}

fn noise_len(space: &OutputSpace) -> usize {
    match space {
        OutputSpace::Manifold(Manifold::Group(d)) => d.group_dim(),
        other => other.ambient_dim(),
    }
}

fn initial_states(sc: &Scenario, sys: &EquivariantSystem) -> Result<(GroupElement, GroupElement)> {
    let g = sys.group();
    let x0 = match (&sc.truth.point, &sc.truth.log) {
        (Some(p), _) => sys
            .section
            .eval(&ManifoldPoint::new(Manifold::Sphere2, DVector::from_column_slice(p))?)?,
        (None, Some(l)) => AlgebraElement::from_slice(g, l)?.exp(),
        (None, None) => GroupElement::identity(g),
    };
    let x_hat0 = match (&sc.observer.perturbation, &sc.observer.initial_log) {
        (Some(p), _) => AlgebraElement::from_slice(g, p)?.exp().compose(&x0)?,
        (None, Some(l)) => AlgebraElement::from_slice(g, l)?.exp(),
        (None, None) => x0.clone(),
    };
    Ok((x0, x_hat0))
}

/// Truth is integrated on the group through the lifted system and projected; the
/// observer sees the input and output (optionally perturbed) held over each step.
pub fn run_simulation(sc: &Scenario) -> Result<TrajectoryRecord> {
    sc.validate()?;
    let kind = sc.kind()?;
    let sys = kind.build()?;
    let innovation = match sc.observer.innovation {
        InnovationChoice::Reference => kind.reference_innovation(sc.observer.gain),
        InnovationChoice::Zero => Innovation::zero(sys.group()),
    };
    let cfg = IntegratorConfig::with_renorm(sc.integrator.method, sc.dt, sc.integrator.renorm_every)?;
    let mut truth_int = Integrator::new(cfg);
    let mut obs_int = Integrator::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(sc)?);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let m = sys.input_dim();
    let space = sys.h.space().clone();
    let manifold = sys.action().manifold().clone();

    let (mut x, mut x_hat) = initial_states(sc, &sys)?;
    let n = sc.steps();
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * sc.dt;
        let xi = project_state(&sys, &x)?;
        let xi_hat = project_state(&sys, &x_hat)?;
        let e = state_error(&sys, &x_hat, &xi)?;
        let mut y = sys.output(&xi)?;
        if sc.noise.output_std > 0.0 {
            let noise: Vec<f64> = (0..noise_len(&space))
                .map(|_| sc.noise.output_std * std_normal.sample(&mut rng))
                .collect();
            y = perturb_output(&space, y, &noise);
        }
        let delta = innovation.eval(t, &x_hat, &y).map_err(|err| Error::Integration {
            t,
            source: Box::new(err),
        })?;
        rows.push(TrajectoryRow {
            t,
            truth: csv_coords(&xi),
            estimate: csv_coords(&xi_hat),
            error: csv_coords(&e),
            error_metric: manifold.distance(&e.coords, &sys.origin.coords),
            innovation_norm: delta.norm(),
        });
        if k == n {
            break;
        }
        let truth_field = |s: f64, g: &GroupElement| lifted_velocity(&sys, g, &sc.velocity_at(s, m));
        x = truth_int.step_group(&truth_field, t, &x)?;
        let mut v = sc.velocity_at(t, m);
        if sc.noise.velocity_std > 0.0 {
            v += DVector::from_fn(m, |_, _| sc.noise.velocity_std * std_normal.sample(&mut rng));
        }
        x_hat = obs_int
            .step_observer(&sys, &innovation, t, &x_hat, &v, &y)
            .map_err(|err| match err {
                e @ Error::Integration { .. } => e,
                other => Error::Integration {
                    t,
                    source: Box::new(other),
                },
            })?;
    }
    Ok(TrajectoryRecord {
        system: kind.id().into(),
        coord_names: coord_names(&manifold),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(0.00012), "0.00012");
        assert_eq!(format_g17(1e16), "10000000000000000");
        assert_eq!(format_g17(1.5e17), "1.5e+17");
        assert_eq!(format_g17(-0.0), "-0");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::from_toml("system = \"s2_direction\"\nt_end = 1.0\ndt = 0.1\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn field_names_in_validation_errors() {
        let err =
            Scenario::from_toml("system = \"s2_direction\"\nt_end = 1.0\ndt = 0.1\n[truth]\npoint = [0.0, 0.0, 2.0]\n")
                .unwrap_err();
        assert!(
            matches!(err, Error::Config { ref field, .. } if field == "truth.point"),
            "{err}"
        );
        let err = Scenario::from_toml("system = \"s2_direction\"\nt_end = 0.05\ndt = 0.1\n").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref field, .. } if field == "t_end"),
            "{err}"
        );
    }

    #[test]
    fn row_count_matches_steps() {
        let sc = Scenario::from_toml("system = \"s2_direction\"\nt_end = 1.0\ndt = 0.1\n").unwrap();
        let rec = run_simulation(&sc).unwrap();
        assert_eq!(rec.rows.len(), 11);
        assert!(rec.rows.iter().all(|r| r.error_metric == 0.0));
    }
}
