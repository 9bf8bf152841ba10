//! State manifolds in a fixed ambient embedding.
//!
//! The unit sphere lives in ℝ³; a group torsor lives in the space of its
//! matrices, flattened column-major. Tangent vectors are ambient vectors at a
//! stated base point.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lie::{random_algebra, random_element, AlgebraElement, GroupElement, LieGroupDescriptor};
use crate::linalg::{mat_to_vec, orthonormalize, vec_to_mat};

/// Constraint residual accepted by checked constructors.
pub const EMBEDDING_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub enum Manifold {
    /// Unit sphere S² ⊂ ℝ³.
    Sphere2,
    /// The group itself, acted on freely (a torsor).
    Group(Arc<LieGroupDescriptor>),
}

impl fmt::Debug for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl Manifold {
    pub fn id(&self) -> String {
        match self {
            Manifold::Sphere2 => "S2".to_string(),
            Manifold::Group(d) => format!("torsor:{}", d.name()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Sphere2 => 2,
            Manifold::Group(d) => d.group_dim(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Sphere2 => 3,
            Manifold::Group(d) => d.matrix_size() * d.matrix_size(),
        }
    }

    pub fn constraint_residual(&self, coords: &DVector<f64>) -> f64 {
        if coords.len() != self.ambient_dim() {
            return f64::INFINITY;
        }
        match self {
            Manifold::Sphere2 => (coords.norm() - 1.0).abs(),
            Manifold::Group(d) => self.as_group_element(d, coords).membership_residual(),
        }
    }

    fn as_group_element(&self, d: &Arc<LieGroupDescriptor>, coords: &DVector<f64>) -> GroupElement {
        GroupElement::from_matrix_unchecked(d.clone(), vec_to_mat(coords, d.matrix_size()))
    }

    /// Distance of `vec` from the tangent space at `base`.
    pub fn tangency_residual(&self, base: &DVector<f64>, vec: &DVector<f64>) -> f64 {
        match self {
            Manifold::Sphere2 => base.dot(vec).abs(),
            Manifold::Group(d) => {
                let x = self.as_group_element(d, base);
                let Ok(inv) = x.try_inverse() else {
                    return f64::INFINITY;
                };
                let w = vec_to_mat(vec, d.matrix_size());
                let (_, r) = d.project(&(inv.matrix() * w));
                r
            }
        }
    }

    /// Orthonormal (ambient metric) basis of the tangent space at `base`.
    pub fn tangent_basis(&self, base: &DVector<f64>) -> Vec<DVector<f64>> {
        match self {
            Manifold::Sphere2 => {
                let candidates: Vec<DVector<f64>> = (0..3)
                    .map(|i| {
                        let mut e = DVector::zeros(3);
                        e[i] = 1.0;
                        &e - base * base.dot(&e)
                    })
                    .collect();
                // start from the axis least aligned with the base point
                let mut order: Vec<usize> = (0..3).collect();
                order.sort_by(|&a, &b| base[a].abs().total_cmp(&base[b].abs()));
                let sorted: Vec<DVector<f64>> = order.iter().map(|&i| candidates[i].clone()).collect();
                let mut out = orthonormalize(&sorted, 1e-8);
                out.truncate(2);
                out
            }
            Manifold::Group(d) => {
                let x = vec_to_mat(base, d.matrix_size());
                let vs: Vec<DVector<f64>> = d.algebra_basis().iter().map(|b| mat_to_vec(&(&x * b))).collect();
                orthonormalize(&vs, 1e-10)
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space.
    pub fn project_tangent(&self, base: &DVector<f64>, vec: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Sphere2 => vec - base * base.dot(vec),
            Manifold::Group(_) => {
                let mut out = DVector::zeros(vec.len());
                for q in self.tangent_basis(base) {
                    out += &q * q.dot(vec);
                }
                out
            }
        }
    }

    /// A curve on the manifold through `base` with initial velocity `vec`:
    /// great circles on the sphere, `X exp(t X⁻¹W)` on a group.
    pub fn curve(&self, base: &DVector<f64>, vec: &DVector<f64>, t: f64) -> DVector<f64> {
        match self {
            Manifold::Sphere2 => {
                let speed = vec.norm();
                if speed == 0.0 {
                    return base.clone();
                }
                let a = speed * t;
                base * a.cos() + vec * (a.sin() / speed)
            }
            Manifold::Group(d) => {
                let x = self.as_group_element(d, base);
                let w = vec_to_mat(vec, d.matrix_size());
                let inv = x.inverse();
                let (coords, _) = d.project(&(inv.matrix() * w));
                let u = AlgebraElement::new(d, coords * t).expect("coordinate length");
                mat_to_vec(&(x.matrix() * u.exp().matrix()))
            }
        }
    }

    /// Geodesic distance on the sphere; `distance_to_identity(a⁻¹b)` on a group.
    pub fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self {
            Manifold::Sphere2 => {
                let a3 = Vector3::new(a[0], a[1], a[2]);
                let b3 = Vector3::new(b[0], b[1], b[2]);
                a3.cross(&b3).norm().atan2(a3.dot(&b3))
            }
            Manifold::Group(d) => {
                let x = self.as_group_element(d, a);
                let y = self.as_group_element(d, b);
                x.inverse().compose(&y).expect("same group").distance_to_identity()
            }
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ManifoldPoint {
        let coords = match self {
            Manifold::Sphere2 => {
                use rand_distr::StandardNormal;
                let v = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
                .normalize();
                DVector::from_column_slice(v.as_slice())
            }
            Manifold::Group(d) => mat_to_vec(random_element(d, rng).matrix()),
        };
        ManifoldPoint {
            manifold: self.clone(),
            coords,
        }
    }

    /// Random tangent vector with components of order `scale`.
    pub fn random_tangent<R: Rng + ?Sized>(&self, base: &ManifoldPoint, rng: &mut R, scale: f64) -> TangentVector {
        let vec = match self {
            Manifold::Sphere2 => {
                let v = DVector::from_fn(3, |_, _| rng.random_range(-scale..=scale));
                self.project_tangent(&base.coords, &v)
            }
            Manifold::Group(d) => {
                let u = random_algebra(d, rng, scale);
                mat_to_vec(&(vec_to_mat(&base.coords, d.matrix_size()) * u.matrix()))
            }
        };
        TangentVector {
            base: base.clone(),
            vec,
        }
    }
}

/// Point of a manifold in its ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    pub manifold: Manifold,
    pub coords: DVector<f64>,
}

impl ManifoldPoint {
    pub fn new(manifold: Manifold, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                what: "manifold point",
                expected: manifold.ambient_dim(),
                found: coords.len(),
            });
        }
        let r = manifold.constraint_residual(&coords);
        if r > EMBEDDING_TOL {
            return Err(Error::Consistency {
                what: "manifold embedding constraint",
                residual: r,
            });
        }
        Ok(ManifoldPoint { manifold, coords })
    }

    pub fn new_unchecked(manifold: Manifold, coords: DVector<f64>) -> Self {
        ManifoldPoint { manifold, coords }
    }

    pub fn sphere(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Manifold::Sphere2, DVector::from_vec(vec![x, y, z]))
    }

    /// Point of a group torsor.
    pub fn from_group(x: &GroupElement) -> Self {
        ManifoldPoint {
            manifold: Manifold::Group(x.descriptor().clone()),
            coords: mat_to_vec(x.matrix()),
        }
    }

    /// Reads a torsor point back as a group element.
    pub fn as_group(&self) -> Result<GroupElement> {
        match &self.manifold {
            Manifold::Group(d) => Ok(GroupElement::from_matrix_unchecked(
                d.clone(),
                vec_to_mat(&self.coords, d.matrix_size()),
            )),
            other => Err(Error::Unsupported(format!("{} is not a group torsor", other.id()))),
        }
    }

    pub fn as_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.manifold {
            Manifold::Group(d) => Some(vec_to_mat(&self.coords, d.matrix_size())),
            Manifold::Sphere2 => None,
        }
    }

    pub fn constraint_residual(&self) -> f64 {
        self.manifold.constraint_residual(&self.coords)
    }

    pub fn zero_tangent(&self) -> TangentVector {
        TangentVector {
            base: self.clone(),
            vec: DVector::zeros(self.coords.len()),
        }
    }
}

/// Tangent vector in ambient coordinates, based at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ManifoldPoint,
    pub vec: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: ManifoldPoint, vec: DVector<f64>) -> Self {
        TangentVector { base, vec }
    }

    pub fn tangency_residual(&self) -> f64 {
        self.base.manifold.tangency_residual(&self.base.coords, &self.vec)
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_tangent_basis_is_orthonormal_and_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = Manifold::Sphere2.random_point(&mut rng);
            let b = Manifold::Sphere2.tangent_basis(&p.coords);
            assert_eq!(b.len(), 2);
            assert!(b[0].dot(&b[1]).abs() < 1e-14);
            for q in &b {
                assert!((q.norm() - 1.0).abs() < 1e-14);
                assert!(p.coords.dot(q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn curves_stay_on_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in [Manifold::Sphere2, Manifold::Group(LieGroupDescriptor::se3())] {
            let p = m.random_point(&mut rng);
            let v = m.random_tangent(&p, &mut rng, 1.0);
            assert!(v.tangency_residual() < 1e-12);
            let q = m.curve(&p.coords, &v.vec, 0.3);
            assert!(m.constraint_residual(&q) < 1e-12);
        }
    }

    #[test]
    fn unit_check_rejects_off_sphere_points() {
        assert!(ManifoldPoint::sphere(0.0, 0.0, 1.1).is_err());
        assert!(ManifoldPoint::sphere(0.0, 0.0, 1.0).is_ok());
    }
}
