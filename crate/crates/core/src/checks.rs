//! Seeded property sweeps over the catalog.
//!
//! Each sample draws from its own generator, seeded from `(seed, system, property,
//! index)`, and results are combined with max/min. Serial and parallel runs therefore
//! report the same numbers.

use std::fmt;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{s2_truncated, SystemKind};
use crate::equivariance::{
    build_equivariant_lift, check_equivariance, check_equivariant_lift, check_input_closure, check_lift,
    check_stabilizer_compatibility, field_action_law_residual, field_bracket_fd, induced_field_action,
    lift_from_pseudoinverse, OriginLift,
};
use crate::error::{Error, Result};
use crate::homogeneous::{act, check_commutation, DifferentialMode, GroupAction};
use crate::kinematics::{check_compatibility, check_completeness, eval_system};
use crate::lie::{random_algebra, random_element, AlgebraElement, GroupElement};
use crate::linalg::singular_values;
use crate::manifold::{ManifoldPoint, TangentVector};
use crate::observer::{
    check_error_invariance, error_dynamics_rhs, error_dynamics_rhs_plain, group_error, lifted_field,
    naive_error_invariance, observer_velocity, project_state, random_input, state_error, EquivariantSystem,
};

/// Which systems a run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    All,
    System(SystemKind),
    /// The sphere system with input restricted to one axis; expected to fail closure.
    Truncated,
}

pub const TRUNCATED_ID: &str = "s2_truncated";

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Target::All),
            TRUNCATED_ID => Ok(Target::Truncated),
            other => other.parse().map(Target::System),
        }
    }
}

/// Pass criterion for one property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// Every sample at most this (reported value: max).
    AtMost(f64),
    /// Every sample at least this (reported value: min).
    AllAtLeast(f64),
    /// Some sample at least this (reported value: max).
    SomeAtLeast(f64),
}

impl Bound {
    fn holds(self, value: f64) -> bool {
        match self {
            Bound::AtMost(t) => value <= t,
            Bound::AllAtLeast(t) | Bound::SomeAtLeast(t) => value >= t,
        }
    }

    fn wants_min(self) -> bool {
        matches!(self, Bound::AllAtLeast(_))
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(t) => write!(f, "max <= {t:.0e}"),
            Bound::AllAtLeast(t) => write!(f, "min >= {t:.0e}"),
            Bound::SomeAtLeast(t) => write!(f, "max >= {t:.0e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub system: String,
    pub property: &'static str,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
    pub witness: Option<String>,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<14} {:<32} {:>12.3e}  ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.system,
            self.property,
            self.value,
            self.bound
        )?;
        if let Some(w) = &self.witness {
            write!(f, "  witness: {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub results: Vec<PropertyResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn get(&self, system: &str, property: &str) -> Option<&PropertyResult> {
        self.results
            .iter()
            .find(|r| r.system == system && r.property == property)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub samples: usize,
    /// Replaces every `AtMost` bound when set.
    pub tol: Option<f64>,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            samples: 100,
            tol: None,
            seed: 0,
            parallel: true,
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for sample `index` of `property` on `system`.
pub fn sample_rng(seed: u64, system: &str, property: &str, index: usize) -> ChaCha8Rng {
    let key = splitmix(splitmix(seed) ^ fnv1a(system)) ^ splitmix(fnv1a(property) ^ index as u64);
    ChaCha8Rng::seed_from_u64(key)
}

struct Runner<'a> {
    opts: &'a CheckOptions,
    system: String,
    results: Vec<PropertyResult>,
}

impl Runner<'_> {
    fn bound(&self, b: Bound) -> Bound {
        match (b, self.opts.tol) {
            (Bound::AtMost(_), Some(t)) => Bound::AtMost(t),
            _ => b,
        }
    }

    /// Sweeps `samples` draws of `f`; an error aborts the property with its message.
    fn sweep<F>(&mut self, property: &'static str, bound: Bound, f: F)
    where
        F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
    {
        let bound = self.bound(bound);
        let eval = |i: usize| {
            let mut rng = sample_rng(self.opts.seed, &self.system, property, i);
            f(&mut rng).map(|v| (v, i))
        };
        let n = self.opts.samples;
        let values: Vec<Result<(f64, usize)>> = if self.opts.parallel {
            (0..n).into_par_iter().map(eval).collect()
        } else {
            (0..n).map(eval).collect()
        };
        let mut best: Option<(f64, usize)> = None;
        for r in values {
            match r {
                Ok((v, i)) => {
                    let better = match best {
                        None => true,
                        Some((b, _)) if v.is_nan() => !b.is_nan(),
                        Some((b, _)) if bound.wants_min() => v < b,
                        Some((b, _)) => v > b,
                    };
                    if better {
                        best = Some((v, i));
                    }
                }
                Err(e) => {
                    self.push(property, f64::NAN, bound, Some(e.to_string()));
                    return;
                }
            }
        }
        let (value, index) = best.unwrap_or((0.0, 0));
        let witness = (!bound.holds(value)).then(|| format!("sample {index}"));
        self.push(property, value, bound, witness);
    }

    fn push(&mut self, property: &'static str, value: f64, bound: Bound, witness: Option<String>) {
        self.results.push(PropertyResult {
            system: self.system.clone(),
            property,
            value,
            passed: bound.holds(value),
            bound,
            witness,
        });
    }
}

fn sample_point(sys: &EquivariantSystem, rng: &mut ChaCha8Rng) -> ManifoldPoint {
    sys.action().manifold().random_point(rng)
}

fn field_of<'a>(
    sys: &'a EquivariantSystem,
    v: &'a DVector<f64>,
) -> impl Fn(&ManifoldPoint) -> Result<DVector<f64>> + Copy + 'a {
    move |p| eval_system(&sys.symmetry.f, p, v).map(|t| t.vec)
}

/// Number of points used to test input closure.
pub const CLOSURE_POINTS: usize = 6;

fn closure_property(runner: &mut Runner<'_>, action: &dyn GroupAction, f: &crate::kinematics::SystemFunction) {
    let opts = runner.opts;
    let sys_id = runner.system.clone();
    let mut rng = sample_rng(opts.seed, &sys_id, "input_closure", usize::MAX);
    let points: Vec<ManifoldPoint> = (0..CLOSURE_POINTS)
        .map(|_| action.manifold().random_point(&mut rng))
        .collect();
    let transforms: Vec<(GroupElement, DVector<f64>)> = (0..opts.samples)
        .map(|i| {
            let mut r = sample_rng(opts.seed, &sys_id, "input_closure", i);
            (
                random_element(action.group(), &mut r),
                random_input(f.input_dim(), &mut r),
            )
        })
        .collect();
    let bound = runner.bound(Bound::AtMost(crate::equivariance::REJECT_TOL));
    match check_input_closure(action, f, &points, &transforms) {
        Ok(rep) => {
            let witness = (!bound.holds(rep.max_residual)).then(|| {
                let (z, v) = rep.witness.unwrap_or_default();
                format!("Z = {z:.4?}, v = {v:.4?}")
            });
            runner.push("input_closure", rep.max_residual, bound, witness);
        }
        Err(e) => runner.push("input_closure", f64::NAN, bound, Some(e.to_string())),
    }
}

fn system_checks(kind: SystemKind, opts: &CheckOptions) -> Result<Vec<PropertyResult>> {
    let sys = kind.build()?;
    let mut r = Runner {
        opts,
        system: kind.id().to_string(),
        results: Vec::new(),
    };
    let s = &sys;
    let action = s.action();
    let group = s.group().clone();
    let m = s.input_dim();

    r.sweep("action_axioms", Bound::AtMost(1e-9), |rng| {
        let (a, b) = (random_element(&group, rng), random_element(&group, rng));
        let xi = sample_point(s, rng);
        let two = act(action, &a, &act(action, &b, &xi)?)?;
        let one = act(action, &b.compose(&a)?, &xi)?;
        let id = act(action, &GroupElement::identity(&group), &xi)?;
        Ok((two.coords - one.coords).norm().max((id.coords - &xi.coords).norm()))
    });
    r.sweep("commutation_fd", Bound::AtMost(1e-6), |rng| {
        let x = random_element(&group, rng);
        let u = random_algebra(&group, rng, 1.0);
        check_commutation(action, &s.origin, &x, &u, DifferentialMode::FiniteDifference)
    });
    r.sweep("commutation_analytic", Bound::AtMost(1e-9), |rng| {
        let x = random_element(&group, rng);
        let u = random_algebra(&group, rng, 1.0);
        check_commutation(action, &s.origin, &x, &u, DifferentialMode::Analytic)
    });
    r.sweep("compatibility", Bound::AtMost(1e-9), |rng| {
        let xi = sample_point(s, rng);
        let eta = action.manifold().random_tangent(&xi, rng, 1.0);
        check_compatibility(&s.symmetry.f, &s.g, &eta)
    });
    r.sweep("completeness_sigma_min", Bound::AllAtLeast(1e-3), |rng| {
        Ok(check_completeness(&s.g, &sample_point(s, rng))?.sigma_min)
    });
    r.sweep("psi_axioms", Bound::AtMost(1e-9), |rng| {
        let psi = &s.symmetry.psi;
        let (a, b) = (random_element(&group, rng), random_element(&group, rng));
        let (v, w) = (random_input(m, rng), random_input(m, rng));
        let id = (psi.apply(&GroupElement::identity(&group), &v)? - &v).norm();
        let comp = (psi.apply(&a, &psi.apply(&b, &v)?)? - psi.apply(&b.compose(&a)?, &v)?).norm();
        let lin =
            (psi.apply(&a, &(&v * 2.0 - &w * 0.5))? - (psi.apply(&a, &v)? * 2.0 - psi.apply(&a, &w)? * 0.5)).norm();
        Ok(id.max(comp).max(lin))
    });
    r.sweep("equivariance", Bound::AtMost(1e-9), |rng| {
        let x = random_element(&group, rng);
        let xi = sample_point(s, rng);
        check_equivariance(&s.symmetry, &x, &xi, &random_input(m, rng))
    });
    r.sweep("field_action_law", Bound::AtMost(1e-9), |rng| {
        let (x, y) = (random_element(&group, rng), random_element(&group, rng));
        let xi = sample_point(s, rng);
        let v = random_input(m, rng);
        field_action_law_residual(action, &x, &y, field_of(s, &v), &xi)
    });
    r.sweep("induced_field_is_psi", Bound::AtMost(1e-9), |rng| {
        let z = random_element(&group, rng);
        let xi = sample_point(s, rng);
        let v = random_input(m, rng);
        let lhs = induced_field_action(action, &z, field_of(s, &v), &xi)?;
        let rhs = eval_system(&s.symmetry.f, &xi, &s.symmetry.psi.apply(&z, &v)?)?;
        Ok((lhs.vec - rhs.vec).norm())
    });
    r.sweep("bracket_homomorphism_fd", Bound::AtMost(1e-5), |rng| {
        let z = random_element(&group, rng);
        let xi = sample_point(s, rng);
        let (v, w) = (random_input(m, rng), random_input(m, rng));
        let (fv, fw) = (field_of(s, &v), field_of(s, &w));
        let h = 1e-5;
        let lhs = induced_field_action(action, &z, |p| field_bracket_fd(fv, fw, p, h), &xi)?;
        let tv = |p: &ManifoldPoint| induced_field_action(action, &z, fv, p).map(|t| t.vec);
        let tw = |p: &ManifoldPoint| induced_field_action(action, &z, fw, p).map(|t| t.vec);
        let rhs = field_bracket_fd(tv, tw, &xi, h)?;
        Ok((lhs.vec - rhs).norm())
    });
    closure_property(&mut r, action, &s.symmetry.f);
    r.sweep("lift_projection", Bound::AtMost(1e-9), |rng| {
        let xi = sample_point(s, rng);
        check_lift(action, &s.symmetry.f, &s.lift, &xi, &random_input(m, rng))
    });
    let pinv = lift_from_pseudoinverse(s.symmetry.action.clone(), s.symmetry.f.clone());
    r.sweep("pseudoinverse_lift_projection", Bound::AtMost(1e-8), |rng| {
        let xi = sample_point(s, rng);
        check_lift(action, &s.symmetry.f, &pinv, &xi, &random_input(m, rng))
    });
    r.sweep("lift_equivariance", Bound::AtMost(1e-9), |rng| {
        let x = random_element(&group, rng);
        let xi = sample_point(s, rng);
        check_equivariant_lift(&s.symmetry, &s.lift, &x, &xi, &random_input(m, rng))
    });
    let origin_lift = OriginLift::from_lift(&s.lift, s.origin.clone());
    r.sweep("stabilizer_compatibility", Bound::AtMost(1e-9), |rng| {
        let stab = crate::homogeneous::stabilizer_sample(action, &s.origin, rng, 1)?;
        let v = random_input(m, rng);
        Ok(check_stabilizer_compatibility(&origin_lift, &s.symmetry.psi, &stab, &[v])?.max_residual)
    });
    let quad = action.stabilizer_quadrature(&s.origin, 16)?;
    let probes: Vec<DVector<f64>> = (0..m)
        .map(|j| DVector::from_fn(m, |i, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    let built = build_equivariant_lift(
        origin_lift.clone(),
        s.symmetry.psi.clone(),
        s.section.clone(),
        &quad,
        &probes,
    );
    match built {
        Ok(built) => {
            let b = &built;
            r.sweep("origin_reconstruction", Bound::AtMost(1e-9), |rng| {
                let xi = sample_point(s, rng);
                let v = random_input(m, rng);
                Ok((b.eval(&xi, &v)?.coords() - s.lift.eval(&xi, &v)?.coords()).norm())
            });
            r.sweep("section_well_definedness", Bound::AtMost(1e-9), |rng| {
                let xi = sample_point(s, rng);
                let v = random_input(m, rng);
                let st = crate::homogeneous::stabilizer_sample(action, &s.origin, rng, 1)?;
                b.well_definedness_residual(&xi, &v, &st[0])
            });
        }
        Err(e) => r.push(
            "origin_reconstruction",
            f64::NAN,
            Bound::AtMost(1e-9),
            Some(e.to_string()),
        ),
    }
    r.sweep("lifted_equivariance", Bound::AtMost(1e-9), |rng| {
        let (x, z) = (random_element(&group, rng), random_element(&group, rng));
        let v = random_input(m, rng);
        let lhs = lifted_field(s, &x, &v)?.mat * z.matrix();
        let rhs = lifted_field(s, &x.compose(&z)?, &s.symmetry.psi.apply(&z, &v)?)?.mat;
        Ok((lhs - rhs).norm())
    });
    r.sweep("error_consistency", Bound::AtMost(1e-9), |rng| {
        let x_hat = random_element(&group, rng);
        let e = state_error(s, &x_hat, &project_state(s, &x_hat)?)?;
        Ok((e.coords - &s.origin.coords).norm())
    });
    r.sweep("error_invariance", Bound::AtMost(1e-9), |rng| {
        let (x_hat, z) = (random_element(&group, rng), random_element(&group, rng));
        check_error_invariance(s, &x_hat, &sample_point(s, rng), &z)
    });
    r.sweep("error_two_sided_inverse", Bound::AtMost(1e-9), |rng| {
        let x_hat = random_element(&group, rng);
        let xi = sample_point(s, rng);
        let back = act(action, &x_hat, &state_error(s, &x_hat, &xi)?)?;
        Ok((back.coords - &xi.coords).norm())
    });
    // X̂ ↦ e(X̂, ξ) must be a submersion: its differential, in a tangent basis at e, has full rank
    r.sweep("error_submersion_sigma_min", Bound::AllAtLeast(1e-3), |rng| {
        let x_hat = random_element(&group, rng);
        let xi = sample_point(s, rng);
        let e = state_error(s, &x_hat, &xi)?;
        let basis = action.manifold().tangent_basis(&e.coords);
        let h = 1e-6;
        let mut cols = Vec::with_capacity(group.group_dim());
        for i in 0..group.group_dim() {
            let u = AlgebraElement::basis(&group, i);
            let plus = state_error(s, &x_hat.compose(&u.scale(h).exp())?, &xi)?;
            let minus = state_error(s, &x_hat.compose(&u.scale(-h).exp())?, &xi)?;
            let d = (plus.coords - minus.coords) / (2.0 * h);
            cols.push(DVector::from_iterator(basis.len(), basis.iter().map(|b| b.dot(&d))));
        }
        let sv = singular_values(&nalgebra::DMatrix::from_columns(&cols));
        Ok(sv.get(basis.len() - 1).copied().unwrap_or(0.0))
    });
    r.sweep("group_error_identities", Bound::AtMost(1e-12), |rng| {
        let (x_hat, x, a) = (
            random_element(&group, rng),
            random_element(&group, rng),
            random_element(&group, rng),
        );
        let e0 = group_error(&x_hat, &x)?;
        let e1 = group_error(&x_hat.compose(&a)?, &x.compose(&a)?)?;
        let self_err = group_error(&x, &x)?.matrix() - GroupElement::identity(&group).matrix();
        Ok((e0.matrix() - e1.matrix()).norm().max(self_err.norm()))
    });
    r.sweep("group_error_projects_to_state_error", Bound::AtMost(1e-9), |rng| {
        let (x_hat, x) = (random_element(&group, rng), random_element(&group, rng));
        let e = state_error(s, &x_hat, &project_state(s, &x)?)?;
        let via = act(action, &group_error(&x_hat, &x)?, &s.origin)?;
        Ok((e.coords - via.coords).norm())
    });
    r.sweep("naive_error_counterexample", Bound::SomeAtLeast(0.1), |rng| {
        let (x_hat, z) = (random_element(&group, rng), random_element(&group, rng));
        naive_error_invariance(s, &x_hat, &sample_point(s, rng), &z)
    });
    let innovation = kind.reference_innovation(1.0);
    let inn = &innovation;
    r.sweep("error_dynamics_plain_vs_equivariant", Bound::AtMost(1e-8), |rng| {
        let x_hat = random_element(&group, rng);
        let e = sample_point(s, rng);
        let v = random_input(m, rng);
        let a = error_dynamics_rhs(s, inn, 0.0, &x_hat, &e, &v)?;
        let b = error_dynamics_rhs_plain(s, inn, 0.0, &x_hat, &e, &v)?;
        Ok((a.vec - b.vec).norm())
    });
    r.sweep("error_dynamics_fd", Bound::AtMost(1e-6), |rng| {
        let x_hat = random_element(&group, rng);
        let xi = sample_point(s, rng);
        let v = random_input(m, rng);
        error_rate_residual(s, inn, &x_hat, &xi, &v, 1e-5)
    });
    Ok(r.results)
}

/// `‖(e(s) − e(−s))/2s − ė‖` where `ξ` and `X̂` follow the system and the observer from
/// the given state, and `ė` is the error-dynamics right-hand side.
pub fn error_rate_residual(
    sys: &EquivariantSystem,
    innovation: &crate::observer::Innovation,
    x_hat: &GroupElement,
    xi: &ManifoldPoint,
    v: &DVector<f64>,
    h: f64,
) -> Result<f64> {
    let y = sys.output(xi)?;
    let lam = sys.lift.eval(xi, v)?;
    let u = observer_velocity(sys, innovation, 0.0, x_hat, v, &y)?;
    let e_at = |s: f64| -> Result<ManifoldPoint> {
        let xi_s = act(sys.action(), &lam.scale(s).exp(), xi)?;
        state_error(sys, &x_hat.compose(&u.scale(s).exp())?, &xi_s)
    };
    let fd = (e_at(h)?.coords - e_at(-h)?.coords) / (2.0 * h);
    let e = state_error(sys, x_hat, xi)?;
    let rhs: TangentVector = error_dynamics_rhs(sys, innovation, 0.0, x_hat, &e, v)?;
    Ok((fd - rhs.vec).norm())
}

fn truncated_checks(opts: &CheckOptions) -> Vec<PropertyResult> {
    let (action, f) = s2_truncated();
    let mut r = Runner {
        opts,
        system: TRUNCATED_ID.to_string(),
        results: Vec::new(),
    };
    closure_property(&mut r, action.as_ref(), &f);
    r.results
}

/// Runs the property suite. `samples == 0` is a usage error.
pub fn run_checks(target: Target, opts: &CheckOptions) -> Result<CheckReport> {
    if opts.samples == 0 {
        return Err(Error::Usage("--samples must be at least 1".into()));
    }
    if let Some(t) = opts.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let mut results = Vec::new();
    match target {
        Target::All => {
            for k in SystemKind::ALL {
                results.extend(system_checks(k, opts)?);
            }
        }
        Target::System(k) => results.extend(system_checks(k, opts)?),
        Target::Truncated => results.extend(truncated_checks(opts)),
    }
    Ok(CheckReport { results })
}
