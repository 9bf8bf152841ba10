//! Lifted systems, the observer, invariant errors and their dynamics.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equivariance::{
    check_equivariance, check_equivariant_lift, check_lift, LiftFunction, Section, SymmetricSystem,
};
use crate::error::{Error, Result};
use crate::homogeneous::{act, d_group_at_identity, GroupAction};
use crate::kinematics::{
    check_compatibility, eval_configuration_output, ConfigurationOutput, InputVector, VelocityOutput,
};
use crate::lie::{random_element, AlgebraElement, GroupElement, GroupTangent, LieGroupDescriptor};
use crate::manifold::{ManifoldPoint, TangentVector};

/// Samples drawn when validating a system at construction.
pub const VALIDATION_SAMPLES: usize = 10;
/// Residual accepted during construction-time validation.
pub const VALIDATION_TOL: f64 = 1e-8;

/// Everything needed to build and analyse an observer for one system.
#[derive(Clone)]
pub struct EquivariantSystem {
    pub id: String,
    pub symmetry: SymmetricSystem,
    pub g: VelocityOutput,
    pub h: ConfigurationOutput,
    pub lift: LiftFunction,
    /// Set when `Λ` satisfies `Ad_{X⁻¹} Λ(ξ, v) = Λ(φ_X ξ, ψ_X v)`.
    pub lift_equivariant: bool,
    pub origin: ManifoldPoint,
    pub section: Section,
}

impl fmt::Debug for EquivariantSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EquivariantSystem({})", self.id)
    }
}

/// Constructor arguments for [`EquivariantSystem::new`].
pub struct SystemParts {
    pub id: String,
    pub symmetry: SymmetricSystem,
    pub g: VelocityOutput,
    pub h: ConfigurationOutput,
    pub lift: LiftFunction,
    pub lift_equivariant: bool,
    pub origin: ManifoldPoint,
    pub section: Section,
}

fn fail(what: &'static str, residual: f64) -> Result<()> {
    if residual > VALIDATION_TOL || residual.is_nan() {
        return Err(Error::Consistency { what, residual });
    }
    Ok(())
}

impl EquivariantSystem {
    /// Builds the system after spot-checking compatibility, equivariance, the lift and
    /// the section at a few seeded samples.
    pub fn new(parts: SystemParts) -> Result<Self> {
        let sys = EquivariantSystem {
            id: parts.id,
            symmetry: parts.symmetry,
            g: parts.g,
            h: parts.h,
            lift: parts.lift,
            lift_equivariant: parts.lift_equivariant,
            origin: parts.origin,
            section: parts.section,
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let action = self.action();
        if self.lift.group().name() != action.group().name()
            || self.symmetry.psi.group().name() != action.group().name()
        {
            return Err(Error::DescriptorMismatch {
                expected: action.group().name().to_string(),
                found: self.lift.group().name().to_string(),
            });
        }
        if self.symmetry.psi.input_dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "input action",
                expected: self.input_dim(),
                found: self.symmetry.psi.input_dim(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let m = action.manifold();
        for _ in 0..VALIDATION_SAMPLES {
            let xi = m.random_point(&mut rng);
            let eta = m.random_tangent(&xi, &mut rng, 1.0);
            let x = random_element(self.group(), &mut rng);
            let v = random_input(self.input_dim(), &mut rng);
            fail("compatibility", check_compatibility(&self.symmetry.f, &self.g, &eta)?)?;
            fail("equivariance", check_equivariance(&self.symmetry, &x, &xi, &v)?)?;
            fail(
                "lift projection",
                check_lift(action, &self.symmetry.f, &self.lift, &xi, &v)?,
            )?;
            if self.lift_equivariant {
                fail(
                    "lift equivariance",
                    check_equivariant_lift(&self.symmetry, &self.lift, &x, &xi, &v)?,
                )?;
            }
            let s = self.section.eval(&xi)?;
            fail("section", (act(action, &s, &self.origin)?.coords - &xi.coords).norm())?;
            eval_configuration_output(&self.h, &xi)?;
        }
        Ok(())
    }

    pub fn action(&self) -> &dyn GroupAction {
        self.symmetry.action.as_ref()
    }

    pub fn group(&self) -> &Arc<LieGroupDescriptor> {
        self.symmetry.action.group()
    }

    pub fn input_dim(&self) -> usize {
        self.symmetry.f.input_dim()
    }

    pub fn output(&self, xi: &ManifoldPoint) -> Result<DVector<f64>> {
        Ok(eval_configuration_output(&self.h, xi)?.coords)
    }
}

/// Uniform input in `[-1, 1]ᵐ`.
pub fn random_input<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> InputVector {
    DVector::from_fn(m, |_, _| rng.random_range(-1.0..=1.0))
}

/// Observer state `X̂` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub x_hat: GroupElement,
    pub t: f64,
}

type InnovationFn = dyn Fn(f64, &GroupElement, &DVector<f64>) -> Result<AlgebraElement> + Send + Sync;

/// `Δ_t(X̂, y)`, applied on the right-translated side of the observer.
#[derive(Clone)]
pub struct Innovation {
    pub name: String,
    pub gain: f64,
    eval: Arc<InnovationFn>,
}

impl fmt::Debug for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Innovation({}, k = {})", self.name, self.gain)
    }
}

impl Innovation {
    pub fn new<F>(name: impl Into<String>, gain: f64, eval: F) -> Self
    where
        F: Fn(f64, &GroupElement, &DVector<f64>) -> Result<AlgebraElement> + Send + Sync + 'static,
    {
        Innovation {
            name: name.into(),
            gain,
            eval: Arc::new(eval),
        }
    }

    pub fn zero(group: &Arc<LieGroupDescriptor>) -> Self {
        let g = group.clone();
        Innovation::new("zero", 0.0, move |_, _, _| Ok(AlgebraElement::zero(&g)))
    }

    pub fn eval(&self, t: f64, x_hat: &GroupElement, y: &DVector<f64>) -> Result<AlgebraElement> {
        (self.eval)(t, x_hat, y)
    }
}

/// Left-trivialized lifted velocity `Λ(φ_ξ̊(X), v)`.
pub fn lifted_velocity(sys: &EquivariantSystem, x: &GroupElement, v: &InputVector) -> Result<AlgebraElement> {
    sys.lift.eval(&project_state(sys, x)?, v)
}

/// `dL_X Λ(φ_ξ̊(X), v) = X·Λ`.
pub fn lifted_field(sys: &EquivariantSystem, x: &GroupElement, v: &InputVector) -> Result<GroupTangent> {
    Ok(GroupTangent::left_trivialized(x, &lifted_velocity(sys, x, v)?))
}

/// `φ_ξ̊(X)`.
pub fn project_state(sys: &EquivariantSystem, x: &GroupElement) -> Result<ManifoldPoint> {
    act(sys.action(), x, &sys.origin)
}

/// `X̂·Λ + Δ·X̂`.
pub fn observer_field(
    sys: &EquivariantSystem,
    innovation: &Innovation,
    t: f64,
    x_hat: &GroupElement,
    v: &InputVector,
    y: &DVector<f64>,
) -> Result<GroupTangent> {
    let lam = lifted_velocity(sys, x_hat, v)?;
    let delta = innovation.eval(t, x_hat, y)?;
    Ok(GroupTangent {
        base: x_hat.clone(),
        mat: x_hat.matrix() * lam.matrix() + delta.matrix() * x_hat.matrix(),
    })
}

/// Observer field in left-trivialized form, `Λ + Ad_{X̂⁻¹} Δ`.
pub fn observer_velocity(
    sys: &EquivariantSystem,
    innovation: &Innovation,
    t: f64,
    x_hat: &GroupElement,
    v: &InputVector,
    y: &DVector<f64>,
) -> Result<AlgebraElement> {
    let lam = lifted_velocity(sys, x_hat, v)?;
    let delta = innovation.eval(t, x_hat, y)?;
    Ok(&lam + &x_hat.try_inverse()?.adjoint(&delta)?)
}

/// `e = φ(X̂⁻¹, ξ)`.
pub fn state_error(sys: &EquivariantSystem, x_hat: &GroupElement, xi: &ManifoldPoint) -> Result<ManifoldPoint> {
    act(sys.action(), &x_hat.try_inverse()?, xi)
}

/// `E = X X̂⁻¹`.
pub fn group_error(x_hat: &GroupElement, x: &GroupElement) -> Result<GroupElement> {
    x.compose(&x_hat.try_inverse()?)
}

/// `ξ − φ_ξ̊(X̂)` in ambient coordinates; not invariant in general.
pub fn naive_error(sys: &EquivariantSystem, x_hat: &GroupElement, xi: &ManifoldPoint) -> Result<DVector<f64>> {
    Ok(&xi.coords - project_state(sys, x_hat)?.coords)
}

/// `‖e(X̂Z, φ_Z ξ) − e(X̂, ξ)‖`.
pub fn check_error_invariance(
    sys: &EquivariantSystem,
    x_hat: &GroupElement,
    xi: &ManifoldPoint,
    z: &GroupElement,
) -> Result<f64> {
    let a = state_error(sys, &x_hat.compose(z)?, &act(sys.action(), z, xi)?)?;
    let b = state_error(sys, x_hat, xi)?;
    Ok((a.coords - b.coords).norm())
}

/// Same residual for [`naive_error`].
pub fn naive_error_invariance(
    sys: &EquivariantSystem,
    x_hat: &GroupElement,
    xi: &ManifoldPoint,
    z: &GroupElement,
) -> Result<f64> {
    let a = naive_error(sys, &x_hat.compose(z)?, &act(sys.action(), z, xi)?)?;
    let b = naive_error(sys, x_hat, xi)?;
    Ok((a - b).norm())
}

/// `ė = dφ_e(Ad_X̂(Λ(φ_X̂(e), v) − Λ(φ_ξ̊(X̂), v)) − Δ(X̂, h(φ_X̂(e))))`.
pub fn error_dynamics_rhs_plain(
    sys: &EquivariantSystem,
    innovation: &Innovation,
    t: f64,
    x_hat: &GroupElement,
    e: &ManifoldPoint,
    v: &InputVector,
) -> Result<TangentVector> {
    let xi = act(sys.action(), x_hat, e)?;
    let diff = &sys.lift.eval(&xi, v)? - &lifted_velocity(sys, x_hat, v)?;
    let delta = innovation.eval(t, x_hat, &sys.output(&xi)?)?;
    let u = &x_hat.adjoint(&diff)? - &delta;
    d_group_at_identity(sys.action(), e, &u)
}

/// `ė = dφ_e(Λ(e, ψ_{X̂⁻¹} v) − Λ(ξ̊, ψ_{X̂⁻¹} v)) − dφ_e Δ(X̂, h(φ_X̂(e)))`; falls back to
/// [`error_dynamics_rhs_plain`] when the lift is not flagged equivariant.
pub fn error_dynamics_rhs(
    sys: &EquivariantSystem,
    innovation: &Innovation,
    t: f64,
    x_hat: &GroupElement,
    e: &ManifoldPoint,
    v: &InputVector,
) -> Result<TangentVector> {
    if !sys.lift_equivariant {
        return error_dynamics_rhs_plain(sys, innovation, t, x_hat, e, v);
    }
    let w = sys.symmetry.psi.apply(&x_hat.try_inverse()?, v)?;
    let diff = &sys.lift.eval(e, &w)? - &sys.lift.eval(&sys.origin, &w)?;
    let xi = act(sys.action(), x_hat, e)?;
    let delta = innovation.eval(t, x_hat, &sys.output(&xi)?)?;
    d_group_at_identity(sys.action(), e, &(&diff - &delta))
}

/// `Ė = E·Ad_X̂(Λ(φ_ξ̊(X), v) − Λ(φ_ξ̊(X̂), v)) − E·Δ`, as a matrix tangent at `E`.
pub fn group_error_rhs(
    sys: &EquivariantSystem,
    innovation: &Innovation,
    t: f64,
    x_hat: &GroupElement,
    x: &GroupElement,
    v: &InputVector,
) -> Result<GroupTangent> {
    let e = group_error(x_hat, x)?;
    let diff = &lifted_velocity(sys, x, v)? - &lifted_velocity(sys, x_hat, v)?;
    let y = sys.output(&project_state(sys, x)?)?;
    let delta = innovation.eval(t, x_hat, &y)?;
    let u = &x_hat.adjoint(&diff)? - &delta;
    Ok(GroupTangent::left_trivialized(&e, &u))
}

/// Kinds of system for which a reference innovation is registered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnovationKind {
    /// Direction on the sphere measured directly: `Δ = k·((X̂y) × ξ̊)^`.
    SphereDirection,
    /// Rotation measured through a body-frame reference direction `r`: `Δ = k·((X̂y) × r)^`.
    AttitudeDirection([f64; 3]),
    /// Full pose measured: `Δ = k·log(y X̂⁻¹)`.
    FullPose,
}

/// Sign of the direction-type corrections; positive makes `1 − ξ̊·e` decrease.
pub const INNOVATION_SIGN: f64 = 1.0;

/// Reference innovation for a system kind with gain `k`.
pub fn reference_innovation(kind: InnovationKind, k: f64) -> Innovation {
    use crate::linalg::{from_vector3, to_vector3};
    match kind {
        InnovationKind::SphereDirection | InnovationKind::AttitudeDirection(_) => {
            let r = match kind {
                InnovationKind::AttitudeDirection(r) => nalgebra::Vector3::from(r),
                _ => nalgebra::Vector3::z(),
            };
            let so3 = LieGroupDescriptor::so3();
            Innovation::new("direction", k, move |_, x_hat, y| {
                if x_hat.descriptor().name() != so3.name() {
                    return Err(Error::DescriptorMismatch {
                        expected: so3.name().to_string(),
                        found: x_hat.descriptor().name().to_string(),
                    });
                }
                let z = x_hat.matrix() * y;
                let w = to_vector3(&z).cross(&r) * (INNOVATION_SIGN * k);
                AlgebraElement::new(&so3, from_vector3(&w))
            })
        }
        InnovationKind::FullPose => {
            let se3 = LieGroupDescriptor::se3();
            Innovation::new("pose", k, move |_, x_hat, y| {
                let n = se3.matrix_size();
                if y.len() != n * n {
                    return Err(Error::DimensionMismatch {
                        what: "pose output",
                        expected: n * n,
                        found: y.len(),
                    });
                }
                let meas = GroupElement::from_matrix_unchecked(se3.clone(), crate::linalg::vec_to_mat(y, n));
                let e = meas.compose(&x_hat.try_inverse()?)?;
                Ok(e.log()?.scale(k))
            })
        }
    }
}
