//! Right group actions on homogeneous spaces and their differentials.
//!
//! An action provides `φ(X, ξ)` and, where known, closed-form differentials
//! `dφ_X` (in the state) and `dφ_ξ` (in the group, at the identity). The
//! central-difference versions in this module are kept as independent
//! oracles for the closed forms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, GroupElement, LieGroupDescriptor};
use crate::linalg::{from_vector3, mat_to_vec, min_norm_solve, singular_values, to_vector3, vec_to_mat};
use crate::manifold::{Manifold, ManifoldPoint, TangentVector};

/// Step used by the central-difference differentials.
pub const FD_STEP: f64 = 1e-6;
/// Relative singular-value cutoff for rank decisions on `dφ_ξ`.
pub const RANK_TOL: f64 = 1e-8;

/// A smooth right action `φ(A, φ(B, ξ)) = φ(BA, ξ)`.
pub trait GroupAction: Send + Sync {
    fn group(&self) -> &Arc<LieGroupDescriptor>;

    fn manifold(&self) -> &Manifold;

    /// `φ(X, ξ)` with no compatibility checks; see [`act`].
    fn apply(&self, x: &GroupElement, xi: &ManifoldPoint) -> ManifoldPoint;

    /// Closed-form `dφ_X η`, if the action registers one.
    fn differential_state(&self, _x: &GroupElement, _eta: &TangentVector) -> Option<TangentVector> {
        None
    }

    /// Closed-form `dφ_ξ u`, if the action registers one.
    fn differential_group(&self, _xi: &ManifoldPoint, _u: &AlgebraElement) -> Option<TangentVector> {
        None
    }

    /// `n` random elements of the stabilizer of `xi`.
    fn stabilizer_sample(&self, _xi: &ManifoldPoint, _rng: &mut dyn RngCore, _n: usize) -> Result<Vec<GroupElement>> {
        Err(Error::Unsupported(format!(
            "no stabilizer parameterization registered for {}",
            self.manifold().id()
        )))
    }

    /// Equal-weight quadrature nodes for the Haar measure on the stabilizer of `xi`.
    fn stabilizer_quadrature(&self, _xi: &ManifoldPoint, _nodes: usize) -> Result<Vec<GroupElement>> {
        Err(Error::Unsupported(format!(
            "no stabilizer quadrature registered for {}",
            self.manifold().id()
        )))
    }

    /// Name used in reports.
    fn name(&self) -> String {
        format!("{} on {}", self.group().name(), self.manifold().id())
    }
}

fn check_group(action: &(impl GroupAction + ?Sized), d: &Arc<LieGroupDescriptor>) -> Result<()> {
    if action.group().name() != d.name() {
        return Err(Error::DescriptorMismatch {
            expected: action.group().name().to_string(),
            found: d.name().to_string(),
        });
    }
    Ok(())
}

fn check_manifold(action: &(impl GroupAction + ?Sized), p: &ManifoldPoint) -> Result<()> {
    if action.manifold() != &p.manifold {
        return Err(Error::ManifoldMismatch {
            expected: action.manifold().id(),
            found: p.manifold.id(),
        });
    }
    Ok(())
}

/// Checked `φ(X, ξ)`.
pub fn act<A: GroupAction + ?Sized>(action: &A, x: &GroupElement, xi: &ManifoldPoint) -> Result<ManifoldPoint> {
    check_group(action, x.descriptor())?;
    check_manifold(action, xi)?;
    Ok(action.apply(x, xi))
}

/// `dφ_X η`: closed form when registered, central difference otherwise.
pub fn d_state<A: GroupAction + ?Sized>(action: &A, x: &GroupElement, eta: &TangentVector) -> Result<TangentVector> {
    check_group(action, x.descriptor())?;
    check_manifold(action, &eta.base)?;
    Ok(action
        .differential_state(x, eta)
        .unwrap_or_else(|| d_state_fd(action, x, eta, FD_STEP)))
}

/// `dφ_ξ u = d/dt|₀ φ(exp(tu), ξ)`: closed form when registered, central difference otherwise.
pub fn d_group_at_identity<A: GroupAction + ?Sized>(
    action: &A,
    xi: &ManifoldPoint,
    u: &AlgebraElement,
) -> Result<TangentVector> {
    check_group(action, u.descriptor())?;
    check_manifold(action, xi)?;
    Ok(action
        .differential_group(xi, u)
        .unwrap_or_else(|| d_group_fd(action, xi, u, FD_STEP)))
}

/// Central difference of `φ_X` along a curve on the manifold with initial velocity `η`.
pub fn d_state_fd<A: GroupAction + ?Sized>(action: &A, x: &GroupElement, eta: &TangentVector, h: f64) -> TangentVector {
    let m = &eta.base.manifold;
    let plus = ManifoldPoint::new_unchecked(m.clone(), m.curve(&eta.base.coords, &eta.vec, h));
    let minus = ManifoldPoint::new_unchecked(m.clone(), m.curve(&eta.base.coords, &eta.vec, -h));
    let vec = (action.apply(x, &plus).coords - action.apply(x, &minus).coords) / (2.0 * h);
    TangentVector::new(action.apply(x, &eta.base), vec)
}

/// Central difference of `t ↦ φ(exp(tu), ξ)` at zero.
pub fn d_group_fd<A: GroupAction + ?Sized>(
    action: &A,
    xi: &ManifoldPoint,
    u: &AlgebraElement,
    h: f64,
) -> TangentVector {
    let plus = action.apply(&u.scale(h).exp(), xi);
    let minus = action.apply(&u.scale(-h).exp(), xi);
    TangentVector::new(xi.clone(), (plus.coords - minus.coords) / (2.0 * h))
}

/// Which differentials [`check_commutation`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferentialMode {
    Analytic,
    FiniteDifference,
}

/// Residual of `dφ_X dφ_ξ̊ u = dφ_{φ_X(ξ̊)} Ad_{X⁻¹} u`.
pub fn check_commutation<A: GroupAction + ?Sized>(
    action: &A,
    origin: &ManifoldPoint,
    x: &GroupElement,
    u: &AlgebraElement,
    mode: DifferentialMode,
) -> Result<f64> {
    let moved = act(action, x, origin)?;
    let ad = x.inverse().adjoint(u)?;
    let (lhs, rhs) = match mode {
        DifferentialMode::Analytic => {
            let inner = d_group_at_identity(action, origin, u)?;
            (d_state(action, x, &inner)?, d_group_at_identity(action, &moved, &ad)?)
        }
        DifferentialMode::FiniteDifference => {
            let inner = d_group_fd(action, origin, u, FD_STEP);
            (
                d_state_fd(action, x, &inner, FD_STEP),
                d_group_fd(action, &moved, &ad, FD_STEP),
            )
        }
    };
    Ok((lhs.vec - rhs.vec).norm())
}

/// `n` elements of the stabilizer of `xi`, drawn from the action's registered parameterization.
pub fn stabilizer_sample<A: GroupAction + ?Sized>(
    action: &A,
    xi: &ManifoldPoint,
    rng: &mut dyn RngCore,
    n: usize,
) -> Result<Vec<GroupElement>> {
    check_manifold(action, xi)?;
    action.stabilizer_sample(xi, rng, n)
}

/// Matrix of `dφ_ξ` in algebra coordinates: column i is `dφ_ξ(Bᵢ)` in ambient coordinates.
pub fn differential_matrix<A: GroupAction + ?Sized>(action: &A, xi: &ManifoldPoint) -> Result<DMatrix<f64>> {
    let d = action.group();
    let cols: Vec<DVector<f64>> = (0..d.group_dim())
        .map(|i| d_group_at_identity(action, xi, &AlgebraElement::basis(d, i)).map(|t| t.vec))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Numerical rank of `dφ_ξ`.
pub fn transitivity_rank<A: GroupAction + ?Sized>(action: &A, xi: &ManifoldPoint) -> Result<usize> {
    let s = singular_values(&differential_matrix(action, xi)?);
    let cutoff = RANK_TOL * s.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    Ok(s.iter().filter(|&&x| x > cutoff).count())
}

/// Rank check of `dφ_ξ` at `points` random states; fails on the first rank-deficient one.
pub fn verify_transitivity<A: GroupAction + ?Sized, R: Rng + ?Sized>(
    action: &A,
    rng: &mut R,
    points: usize,
) -> Result<()> {
    let dim = action.manifold().dim();
    for _ in 0..points {
        let xi = action.manifold().random_point(rng);
        let rank = transitivity_rank(action, &xi)?;
        if rank < dim {
            return Err(Error::Transitivity { rank, expected: dim });
        }
    }
    Ok(())
}

/// Minimum-norm `u` with `dφ_ξ u = η`.
pub fn pseudo_right_inverse<A: GroupAction + ?Sized>(
    action: &A,
    xi: &ManifoldPoint,
    eta: &TangentVector,
) -> Result<AlgebraElement> {
    check_manifold(action, xi)?;
    let jac = differential_matrix(action, xi)?;
    let (u, rank) = min_norm_solve(&jac, &eta.vec, RANK_TOL);
    let dim = action.manifold().dim();
    if rank < dim {
        return Err(Error::Transitivity { rank, expected: dim });
    }
    AlgebraElement::new(action.group(), u)
}

/// SO(3) acting on the unit sphere by `φ(R, ξ) = Rᵀξ`.
#[derive(Debug, Clone)]
pub struct SphereRotation {
    group: Arc<LieGroupDescriptor>,
    manifold: Manifold,
}

impl SphereRotation {
    pub fn new() -> Self {
        SphereRotation {
            group: LieGroupDescriptor::so3(),
            manifold: Manifold::Sphere2,
        }
    }

    fn rotation_about(xi: &ManifoldPoint, theta: f64) -> GroupElement {
        let axis = to_vector3(&xi.coords);
        GroupElement::so3(&crate::lie::so3::exp(&(axis * theta)))
    }
}

impl Default for SphereRotation {
    fn default() -> Self {
        Self::new()
    }
}

impl GroupAction for SphereRotation {
    fn group(&self) -> &Arc<LieGroupDescriptor> {
        &self.group
    }

    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn apply(&self, x: &GroupElement, xi: &ManifoldPoint) -> ManifoldPoint {
        ManifoldPoint::new_unchecked(Manifold::Sphere2, x.matrix().tr_mul(&xi.coords))
    }

    fn differential_state(&self, x: &GroupElement, eta: &TangentVector) -> Option<TangentVector> {
        Some(TangentVector::new(
            self.apply(x, &eta.base),
            x.matrix().tr_mul(&eta.vec),
        ))
    }

    fn differential_group(&self, xi: &ManifoldPoint, u: &AlgebraElement) -> Option<TangentVector> {
        let w = to_vector3(u.coords());
        let v = to_vector3(&xi.coords).cross(&w);
        Some(TangentVector::new(xi.clone(), from_vector3(&v)))
    }

    fn stabilizer_sample(&self, xi: &ManifoldPoint, rng: &mut dyn RngCore, n: usize) -> Result<Vec<GroupElement>> {
        Ok((0..n)
            .map(|_| Self::rotation_about(xi, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
            .collect())
    }

    fn stabilizer_quadrature(&self, xi: &ManifoldPoint, nodes: usize) -> Result<Vec<GroupElement>> {
        let step = std::f64::consts::TAU / nodes as f64;
        Ok((0..nodes).map(|k| Self::rotation_about(xi, k as f64 * step)).collect())
    }
}

/// A group acting on itself by right translation `φ(X, P) = P·X` (free and transitive).
#[derive(Debug, Clone)]
pub struct RightTranslation {
    group: Arc<LieGroupDescriptor>,
    manifold: Manifold,
}

impl RightTranslation {
    pub fn new(group: Arc<LieGroupDescriptor>) -> Self {
        RightTranslation {
            manifold: Manifold::Group(group.clone()),
            group,
        }
    }

    fn point_matrix(&self, p: &ManifoldPoint) -> DMatrix<f64> {
        vec_to_mat(&p.coords, self.group.matrix_size())
    }
}

impl GroupAction for RightTranslation {
    fn group(&self) -> &Arc<LieGroupDescriptor> {
        &self.group
    }

    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn apply(&self, x: &GroupElement, xi: &ManifoldPoint) -> ManifoldPoint {
        ManifoldPoint::new_unchecked(self.manifold.clone(), mat_to_vec(&(self.point_matrix(xi) * x.matrix())))
    }

    fn differential_state(&self, x: &GroupElement, eta: &TangentVector) -> Option<TangentVector> {
        let w = vec_to_mat(&eta.vec, self.group.matrix_size());
        Some(TangentVector::new(
            self.apply(x, &eta.base),
            mat_to_vec(&(w * x.matrix())),
        ))
    }

    fn differential_group(&self, xi: &ManifoldPoint, u: &AlgebraElement) -> Option<TangentVector> {
        Some(TangentVector::new(
            xi.clone(),
            mat_to_vec(&(self.point_matrix(xi) * u.matrix())),
        ))
    }

    fn stabilizer_sample(&self, _xi: &ManifoldPoint, _rng: &mut dyn RngCore, n: usize) -> Result<Vec<GroupElement>> {
        Ok(vec![GroupElement::identity(&self.group); n])
    }

    fn stabilizer_quadrature(&self, _xi: &ManifoldPoint, _nodes: usize) -> Result<Vec<GroupElement>> {
        Ok(vec![GroupElement::identity(&self.group)])
    }
}
