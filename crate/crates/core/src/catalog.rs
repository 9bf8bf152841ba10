//! Concrete systems: a direction on the sphere, attitude on SO(3), pose on SE(3), plus
//! two deliberately degenerate variants used as counterexamples.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DVector, Vector3};

use crate::equivariance::{InputAction, LiftFunction, Section, SymmetricSystem};
use crate::error::{Error, Result};
use crate::homogeneous::{GroupAction, RightTranslation, SphereRotation};
use crate::kinematics::{ConfigurationOutput, OutputSpace, SystemFunction, VelocityOutput};
use crate::lie::{so3, AlgebraElement, GroupElement, LieGroupDescriptor};
use crate::linalg::{from_vector3, mat_to_vec, to_vector3, vec_to_mat};
use crate::manifold::{Manifold, ManifoldPoint};
use crate::observer::{reference_innovation, EquivariantSystem, Innovation, InnovationKind, SystemParts};

/// Body-frame reference direction measured by the attitude system.
pub const ATTITUDE_REFERENCE: [f64; 3] = [0.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemKind {
    S2Direction,
    So3Attitude,
    Se3Pose,
}

impl SystemKind {
    pub const ALL: [SystemKind; 3] = [SystemKind::S2Direction, SystemKind::So3Attitude, SystemKind::Se3Pose];

    pub fn id(self) -> &'static str {
        match self {
            SystemKind::S2Direction => "s2_direction",
            SystemKind::So3Attitude => "so3_attitude",
            SystemKind::Se3Pose => "se3_pose",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            SystemKind::S2Direction => "unit direction on S2 driven by angular velocity, SO(3) acting by R^T xi",
            SystemKind::So3Attitude => "attitude on SO(3) with gyro input and one body-frame reference direction",
            SystemKind::Se3Pose => "rigid-body pose on SE(3) with body twist input and full pose output",
        }
    }

    pub fn innovation_kind(self) -> InnovationKind {
        match self {
            SystemKind::S2Direction => InnovationKind::SphereDirection,
            SystemKind::So3Attitude => InnovationKind::AttitudeDirection(ATTITUDE_REFERENCE),
            SystemKind::Se3Pose => InnovationKind::FullPose,
        }
    }

    pub fn reference_innovation(self, k: f64) -> Innovation {
        reference_innovation(self.innovation_kind(), k)
    }

    pub fn build(self) -> Result<EquivariantSystem> {
        match self {
            SystemKind::S2Direction => s2_direction(),
            SystemKind::So3Attitude => so3_attitude(),
            SystemKind::Se3Pose => se3_pose(),
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.id())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::Usage(format!("unknown system `{s}`; run `eqobs list`")))
    }
}

fn cross_field(xi: &ManifoldPoint, w: &DVector<f64>) -> DVector<f64> {
    from_vector3(&to_vector3(&xi.coords).cross(&to_vector3(w)))
}

/// Rotation `R` with `R e₃ = ξ` and no twist about `e₃`; `R_x(π)` at the south pole.
pub fn minimal_rotation_from_north(xi: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
    let z = Vector3::z();
    let axis = z.cross(xi);
    let s = axis.norm();
    let c = z.dot(xi);
    if s < 1e-15 {
        return if c > 0.0 {
            nalgebra::Matrix3::identity()
        } else {
            so3::exp(&(Vector3::x() * std::f64::consts::PI))
        };
    }
    so3::exp(&(axis * (s.atan2(c) / s)))
}

/// `ξ̇ = ξ × Ω` on the sphere.
pub fn s2_direction() -> Result<EquivariantSystem> {
    let so3d = LieGroupDescriptor::so3();
    let action: Arc<dyn GroupAction> = Arc::new(SphereRotation::new());
    let f = SystemFunction::new(Manifold::Sphere2, 3, cross_field);
    let psi = InputAction::new(so3d.clone(), 3, |r, w| r.matrix().tr_mul(w));
    let g = VelocityOutput::new(Manifold::Sphere2, 3, |eta| {
        from_vector3(&to_vector3(&eta.vec).cross(&to_vector3(&eta.base.coords)))
    });
    let h = ConfigurationOutput::new(Manifold::Sphere2, OutputSpace::Sphere2, |xi| xi.coords.clone());
    let gl = so3d.clone();
    let lift = LiftFunction::new(so3d.clone(), move |_, w| AlgebraElement::new(&gl, w.clone()));
    let section = Section::new(|xi| {
        let r = minimal_rotation_from_north(&to_vector3(&xi.coords));
        Ok(GroupElement::so3(&r.transpose()))
    });
    EquivariantSystem::new(SystemParts {
        id: SystemKind::S2Direction.id().into(),
        symmetry: SymmetricSystem { action, f, psi },
        g,
        h,
        lift,
        lift_equivariant: true,
        origin: ManifoldPoint::sphere(0.0, 0.0, 1.0)?,
        section,
    })
}

/// A left-invariant system `Ẋ = X û` on a matrix group acting on itself by right
/// translation, with `ψ_X = Ad_{X⁻¹}` and the unique lift `Λ = u`.
fn torsor_system(id: SystemKind, desc: Arc<LieGroupDescriptor>, h: ConfigurationOutput) -> Result<EquivariantSystem> {
    let n = desc.matrix_size();
    let m = desc.group_dim();
    let manifold = Manifold::Group(desc.clone());
    let action: Arc<dyn GroupAction> = Arc::new(RightTranslation::new(desc.clone()));
    let df = desc.clone();
    let f = SystemFunction::new(manifold.clone(), m, move |xi, u| {
        let x = vec_to_mat(&xi.coords, n);
        mat_to_vec(&(x * df.hat(u)))
    });
    let dp = desc.clone();
    let psi = InputAction::new(desc.clone(), m, move |x, u| {
        let a = AlgebraElement::new(&dp, u.clone()).expect("input dimension matches algebra");
        x.inverse()
            .adjoint(&a)
            .map(|b| b.into_coords())
            .unwrap_or_else(|_| DVector::from_element(m, f64::NAN))
    });
    let dg = desc.clone();
    let g = VelocityOutput::new(manifold.clone(), m, move |eta| {
        let x = vec_to_mat(&eta.base.coords, n);
        let w = vec_to_mat(&eta.vec, n);
        let inv = x
            .try_inverse()
            .unwrap_or_else(|| nalgebra::DMatrix::from_element(n, n, f64::NAN));
        dg.project(&(inv * w)).0
    });
    let dl = desc.clone();
    let lift = LiftFunction::new(desc.clone(), move |_, u| AlgebraElement::new(&dl, u.clone()));
    let section = Section::new(|xi| xi.as_group());
    EquivariantSystem::new(SystemParts {
        id: id.id().into(),
        symmetry: SymmetricSystem { action, f, psi },
        g,
        h,
        lift,
        lift_equivariant: true,
        origin: ManifoldPoint::from_group(&GroupElement::identity(&desc)),
        section,
    })
}

/// `Ṙ = R Ω̂` measured through `h(R) = Rᵀr`.
pub fn so3_attitude() -> Result<EquivariantSystem> {
    let desc = LieGroupDescriptor::so3();
    let r = Vector3::from(ATTITUDE_REFERENCE);
    let h = ConfigurationOutput::new(Manifold::Group(desc.clone()), OutputSpace::Sphere2, move |xi| {
        let m = vec_to_mat(&xi.coords, 3);
        m.tr_mul(&from_vector3(&r))
    });
    torsor_system(SystemKind::So3Attitude, desc, h)
}

/// `Ṫ = T û` with the full pose measured.
pub fn se3_pose() -> Result<EquivariantSystem> {
    let desc = LieGroupDescriptor::se3();
    let m = Manifold::Group(desc.clone());
    let h = ConfigurationOutput::new(m.clone(), OutputSpace::Manifold(m), |xi| xi.coords.clone());
    torsor_system(SystemKind::Se3Pose, desc, h)
}

/// The sphere system with its input restricted to rotations about `e₁`. The
/// transformed fields leave the image of `f`, so this `V` is not closed.
pub fn s2_truncated() -> (Arc<dyn GroupAction>, SystemFunction) {
    let f = SystemFunction::new(Manifold::Sphere2, 1, |xi, a| {
        cross_field(xi, &DVector::from_vec(vec![a[0], 0.0, 0.0]))
    });
    (Arc::new(SphereRotation::new()), f)
}

/// Two identical gyros summed: `f(ξ, (v₁, v₂)) = ξ × (v₁ + v₂)`, whose kernel is `{(w, −w)}`.
pub fn s2_duplicated_gyro() -> SystemFunction {
    SystemFunction::new(Manifold::Sphere2, 6, |xi, v| {
        cross_field(xi, &DVector::from_vec(vec![v[0] + v[3], v[1] + v[4], v[2] + v[5]]))
    })
}
