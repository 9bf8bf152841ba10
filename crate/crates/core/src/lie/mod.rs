//! Matrix Lie groups and their Lie algebras.
//!
//! Every group is represented by square matrices and every algebra element by
//! coordinates against a fixed basis of matrices, so conjugation, brackets and
//! translations share one code path. Supported groups are SO(3), SE(3), SL(3)
//! and block-diagonal direct products of these.
//!
//! Pure operations never re-orthonormalise; long integrations call
//! [`GroupElement::renormalized`] explicitly.

pub mod se3;
pub mod sl3;
pub mod so3;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, UnitQuaternion, Vector3, Vector6};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{from_matrix3, mat_to_vec, polar_rotation, skew, to_matrix3};

/// Group membership residual accepted by checked constructors.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Relative residual allowed when projecting a matrix onto the algebra span.
pub const SPAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    So3,
    Se3,
    Sl3,
    /// Block-diagonal direct product.
    Product(Vec<Arc<LieGroupDescriptor>>),
}

/// Static description of a matrix Lie group and the basis of its algebra.
pub struct LieGroupDescriptor {
    name: String,
    kind: GroupKind,
    matrix_size: usize,
    basis: Vec<DMatrix<f64>>,
    // pseudo-inverse of the stacked (vectorised) basis; maps vec(m) to coordinates
    coord_map: DMatrix<f64>,
}

impl fmt::Debug for LieGroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieGroupDescriptor")
            .field("name", &self.name)
            .field("group_dim", &self.basis.len())
            .field("matrix_size", &self.matrix_size)
            .finish()
    }
}

impl PartialEq for LieGroupDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

fn so3_basis() -> Vec<DMatrix<f64>> {
    (0..3)
        .map(|i| {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            from_matrix3(&skew(&e))
        })
        .collect()
}

fn se3_basis() -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(6);
    for b in so3_basis() {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (3, 3)).copy_from(&b);
        out.push(m);
    }
    for i in 0..3 {
        let mut m = DMatrix::zeros(4, 4);
        m[(i, 3)] = 1.0;
        out.push(m);
    }
    out
}

fn sl3_basis() -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(8);
    for (i, j) in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)] {
        let mut m = DMatrix::zeros(3, 3);
        m[(i, j)] = 1.0;
        out.push(m);
    }
    out.push(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0])));
    out.push(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, -1.0])));
    out
}

impl LieGroupDescriptor {
    fn build(name: String, kind: GroupKind, matrix_size: usize, basis: Vec<DMatrix<f64>>) -> Self {
        let n2 = matrix_size * matrix_size;
        let stacked = DMatrix::from_fn(n2, basis.len(), |r, c| basis[c].as_slice()[r]);
        let coord_map = stacked.pseudo_inverse(1e-12).expect("basis pseudo-inverse exists");
        LieGroupDescriptor {
            name,
            kind,
            matrix_size,
            basis,
            coord_map,
        }
    }

    pub fn so3() -> Arc<Self> {
        static CELL: OnceLock<Arc<LieGroupDescriptor>> = OnceLock::new();
        CELL.get_or_init(|| Arc::new(Self::build("SO(3)".into(), GroupKind::So3, 3, so3_basis())))
            .clone()
    }

    pub fn se3() -> Arc<Self> {
        static CELL: OnceLock<Arc<LieGroupDescriptor>> = OnceLock::new();
        CELL.get_or_init(|| Arc::new(Self::build("SE(3)".into(), GroupKind::Se3, 4, se3_basis())))
            .clone()
    }

    pub fn sl3() -> Arc<Self> {
        static CELL: OnceLock<Arc<LieGroupDescriptor>> = OnceLock::new();
        CELL.get_or_init(|| Arc::new(Self::build("SL(3)".into(), GroupKind::Sl3, 3, sl3_basis())))
            .clone()
    }

    /// Direct product, represented block-diagonally in the order given.
    pub fn product(factors: Vec<Arc<LieGroupDescriptor>>) -> Arc<Self> {
        assert!(!factors.is_empty(), "product of zero groups");
        let matrix_size: usize = factors.iter().map(|f| f.matrix_size).sum();
        let name = factors.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(" x ");
        let mut basis = Vec::new();
        let mut offset = 0;
        for f in &factors {
            for b in &f.basis {
                let mut m = DMatrix::zeros(matrix_size, matrix_size);
                m.view_mut((offset, offset), (f.matrix_size, f.matrix_size))
                    .copy_from(b);
                basis.push(m);
            }
            offset += f.matrix_size;
        }
        Arc::new(Self::build(name, GroupKind::Product(factors), matrix_size, basis))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    /// Dimension of the group (and of its algebra).
    pub fn group_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.matrix_size
    }

    pub fn algebra_basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Coordinates of the projection of `m` onto the algebra, plus the Frobenius
    /// norm of the part of `m` outside the span.
    pub fn project(&self, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let coords = &self.coord_map * mat_to_vec(m);
        let back = self.hat(&coords);
        let resid = (m - back).norm();
        (coords, resid)
    }

    /// Matrix `Σ cᵢ Bᵢ` of a coordinate vector.
    pub fn hat(&self, coords: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.matrix_size, self.matrix_size);
        for (c, b) in coords.iter().zip(&self.basis) {
            if *c != 0.0 {
                m += b * *c;
            }
        }
        m
    }

    fn block_ranges(&self) -> Vec<(usize, Arc<LieGroupDescriptor>)> {
        match &self.kind {
            GroupKind::Product(factors) => {
                let mut offset = 0;
                factors
                    .iter()
                    .map(|f| {
                        let r = (offset, f.clone());
                        offset += f.matrix_size;
                        r
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Residual of the structural checks: basis independence and closure of
    /// the span under commutators (max residual over all basis pairs).
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                let c = a * b - b * a;
                let (_, r) = self.project(&c);
                worst = worst.max(r);
            }
        }
        worst
    }

    pub fn basis_rank(&self) -> usize {
        let n2 = self.matrix_size * self.matrix_size;
        let stacked = DMatrix::from_fn(n2, self.basis.len(), |r, c| self.basis[c].as_slice()[r]);
        stacked.rank(1e-12)
    }
}

fn same_group(a: &Arc<LieGroupDescriptor>, b: &Arc<LieGroupDescriptor>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.name == b.name {
        Ok(())
    } else {
        Err(Error::DescriptorMismatch {
            expected: a.name.clone(),
            found: b.name.clone(),
        })
    }
}

/// Element of a matrix Lie group.
#[derive(Clone, PartialEq)]
pub struct GroupElement {
    desc: Arc<LieGroupDescriptor>,
    mat: DMatrix<f64>,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement<{}>{}", self.desc.name, self.mat)
    }
}

fn rotation_residual(r: &Matrix3<f64>) -> f64 {
    let orth = (r.transpose() * r - Matrix3::identity()).norm();
    orth.max((r.determinant() - 1.0).abs())
}

fn membership_residual_of(desc: &LieGroupDescriptor, m: &DMatrix<f64>) -> f64 {
    match &desc.kind {
        GroupKind::So3 => rotation_residual(&to_matrix3(m)),
        GroupKind::Se3 => {
            let r = Matrix3::from_fn(|i, j| m[(i, j)]);
            let bottom = (m[(3, 0)].powi(2) + m[(3, 1)].powi(2) + m[(3, 2)].powi(2) + (m[(3, 3)] - 1.0).powi(2)).sqrt();
            rotation_residual(&r).max(bottom)
        }
        GroupKind::Sl3 => (to_matrix3(m).determinant() - 1.0).abs(),
        GroupKind::Product(_) => {
            let mut worst: f64 = 0.0;
            let mut off = m.clone();
            for (offset, f) in desc.block_ranges() {
                let n = f.matrix_size;
                let block = m.view((offset, offset), (n, n)).into_owned();
                worst = worst.max(membership_residual_of(&f, &block));
                off.view_mut((offset, offset), (n, n)).fill(0.0);
            }
            worst.max(off.norm())
        }
    }
}

impl GroupElement {
    /// Checked constructor: size and membership residual must hold.
    pub fn new(desc: Arc<LieGroupDescriptor>, mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != desc.matrix_size || mat.ncols() != desc.matrix_size {
            return Err(Error::DimensionMismatch {
                what: "group matrix",
                expected: desc.matrix_size,
                found: mat.nrows().max(mat.ncols()),
            });
        }
        if !mat.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("group matrix"));
        }
        let residual = membership_residual_of(&desc, &mat);
        if residual > MEMBERSHIP_TOL {
            return Err(Error::Consistency {
                what: "group membership",
                residual,
            });
        }
        Ok(GroupElement { desc, mat })
    }

    /// Wraps a matrix without checking membership (used by integrators whose
    /// drift is audited separately).
    pub fn from_matrix_unchecked(desc: Arc<LieGroupDescriptor>, mat: DMatrix<f64>) -> Self {
        debug_assert_eq!(mat.nrows(), desc.matrix_size);
        GroupElement { desc, mat }
    }

    pub fn identity(desc: &Arc<LieGroupDescriptor>) -> Self {
        GroupElement {
            desc: desc.clone(),
            mat: DMatrix::identity(desc.matrix_size, desc.matrix_size),
        }
    }

    pub fn so3(r: &Matrix3<f64>) -> Self {
        Self::from_matrix_unchecked(LieGroupDescriptor::so3(), from_matrix3(r))
    }

    pub fn se3(m: &Matrix4<f64>) -> Self {
        Self::from_matrix_unchecked(LieGroupDescriptor::se3(), DMatrix::from_fn(4, 4, |i, j| m[(i, j)]))
    }

    pub fn descriptor(&self) -> &Arc<LieGroupDescriptor> {
        &self.desc
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn membership_residual(&self) -> f64 {
        membership_residual_of(&self.desc, &self.mat)
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        same_group(&self.desc, &other.desc)?;
        Ok(GroupElement {
            desc: self.desc.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    pub fn try_inverse(&self) -> Result<GroupElement> {
        let mat = match &self.desc.kind {
            GroupKind::So3 => self.mat.transpose(),
            GroupKind::Se3 => {
                let m = Matrix4::from_fn(|i, j| self.mat[(i, j)]);
                let inv = se3::inverse(&m);
                DMatrix::from_fn(4, 4, |i, j| inv[(i, j)])
            }
            GroupKind::Sl3 | GroupKind::Product(_) => {
                self.mat.clone().try_inverse().ok_or(Error::Singular("group element"))?
            }
        };
        Ok(GroupElement {
            desc: self.desc.clone(),
            mat,
        })
    }

    /// Group inverse.
    ///
    /// # Panics
    /// If the matrix is singular, which only happens for corrupted elements;
    /// use [`GroupElement::try_inverse`] to handle that case.
    pub fn inverse(&self) -> GroupElement {
        self.try_inverse().expect("group element is invertible")
    }

    /// Principal logarithm.
    pub fn log(&self) -> Result<AlgebraElement> {
        let coords = log_coords(&self.desc, &self.mat)?;
        Ok(AlgebraElement {
            desc: self.desc.clone(),
            coords,
        })
    }

    /// `Ad_X(u) = X u X⁻¹`, re-expressed in algebra coordinates.
    pub fn adjoint(&self, u: &AlgebraElement) -> Result<AlgebraElement> {
        same_group(&self.desc, &u.desc)?;
        let inv = self.try_inverse()?;
        let conj = &self.mat * u.matrix() * &inv.mat;
        AlgebraElement::vee(&self.desc, &conj, "adjoint")
    }

    /// Nearest group element: polar projection of rotation blocks, determinant
    /// rescaling for SL(3).
    pub fn renormalized(&self) -> GroupElement {
        GroupElement {
            desc: self.desc.clone(),
            mat: renormalize_matrix(&self.desc, &self.mat),
        }
    }

    /// Distance-like size of the element: rotation angle for SO(3), the norm of
    /// (angle, translation) for SE(3) and `‖log‖` otherwise (Frobenius distance
    /// to identity as fallback when no principal log exists).
    pub fn distance_to_identity(&self) -> f64 {
        match &self.desc.kind {
            GroupKind::So3 => so3::angle(&to_matrix3(&self.mat)),
            GroupKind::Se3 => {
                let r = Matrix3::from_fn(|i, j| self.mat[(i, j)]);
                let t = Vector3::new(self.mat[(0, 3)], self.mat[(1, 3)], self.mat[(2, 3)]);
                so3::angle(&r).hypot(t.norm())
            }
            _ => match self.log() {
                Ok(u) => u.coords.norm(),
                Err(_) => (&self.mat - DMatrix::identity(self.mat.nrows(), self.mat.ncols())).norm(),
            },
        }
    }
}

fn renormalize_matrix(desc: &LieGroupDescriptor, m: &DMatrix<f64>) -> DMatrix<f64> {
    match &desc.kind {
        GroupKind::So3 => from_matrix3(&polar_rotation(&to_matrix3(m))),
        GroupKind::Se3 => {
            let r = polar_rotation(&Matrix3::from_fn(|i, j| m[(i, j)]));
            let mut out = m.clone();
            out.view_mut((0, 0), (3, 3)).copy_from(&from_matrix3(&r));
            out[(3, 0)] = 0.0;
            out[(3, 1)] = 0.0;
            out[(3, 2)] = 0.0;
            out[(3, 3)] = 1.0;
            out
        }
        GroupKind::Sl3 => {
            let d = to_matrix3(m).determinant();
            m / d.cbrt()
        }
        GroupKind::Product(_) => {
            let mut out = DMatrix::zeros(m.nrows(), m.ncols());
            for (offset, f) in desc.block_ranges() {
                let n = f.matrix_size;
                let block = m.view((offset, offset), (n, n)).into_owned();
                out.view_mut((offset, offset), (n, n))
                    .copy_from(&renormalize_matrix(&f, &block));
            }
            out
        }
    }
}

fn exp_matrix(desc: &LieGroupDescriptor, coords: &DVector<f64>) -> DMatrix<f64> {
    match &desc.kind {
        GroupKind::So3 => from_matrix3(&so3::exp(&Vector3::new(coords[0], coords[1], coords[2]))),
        GroupKind::Se3 => {
            let xi = Vector6::from_iterator(coords.iter().copied());
            let m = se3::exp(&xi);
            DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
        }
        GroupKind::Sl3 => from_matrix3(&sl3::exp(&to_matrix3(&desc.hat(coords)))),
        GroupKind::Product(factors) => {
            let mut out = DMatrix::zeros(desc.matrix_size, desc.matrix_size);
            let mut offset = 0;
            let mut c_off = 0;
            for f in factors {
                let n = f.matrix_size;
                let sub = coords.rows(c_off, f.group_dim()).into_owned();
                out.view_mut((offset, offset), (n, n)).copy_from(&exp_matrix(f, &sub));
                offset += n;
                c_off += f.group_dim();
            }
            out
        }
    }
}

fn log_coords(desc: &LieGroupDescriptor, m: &DMatrix<f64>) -> Result<DVector<f64>> {
    match &desc.kind {
        GroupKind::So3 => {
            let w = so3::log(&to_matrix3(m))?;
            Ok(DVector::from_column_slice(w.as_slice()))
        }
        GroupKind::Se3 => {
            let xi = se3::log(&Matrix4::from_fn(|i, j| m[(i, j)]))?;
            Ok(DVector::from_column_slice(xi.as_slice()))
        }
        GroupKind::Sl3 => {
            let l = sl3::log(&to_matrix3(m))?;
            let (coords, _) = desc.project(&from_matrix3(&l));
            Ok(coords)
        }
        GroupKind::Product(factors) => {
            let mut out = DVector::zeros(desc.group_dim());
            let mut offset = 0;
            let mut c_off = 0;
            for f in factors {
                let n = f.matrix_size;
                let block = m.view((offset, offset), (n, n)).into_owned();
                out.rows_mut(c_off, f.group_dim()).copy_from(&log_coords(f, &block)?);
                offset += n;
                c_off += f.group_dim();
            }
            Ok(out)
        }
    }
}

/// Element of the Lie algebra, stored as coordinates against the descriptor's basis.
#[derive(Clone, PartialEq)]
pub struct AlgebraElement {
    desc: Arc<LieGroupDescriptor>,
    coords: DVector<f64>,
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgebraElement<{}>{:?}", self.desc.name, self.coords.as_slice())
    }
}

impl AlgebraElement {
    pub fn new(desc: &Arc<LieGroupDescriptor>, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != desc.group_dim() {
            return Err(Error::DimensionMismatch {
                what: "algebra coordinates",
                expected: desc.group_dim(),
                found: coords.len(),
            });
        }
        Ok(AlgebraElement {
            desc: desc.clone(),
            coords,
        })
    }

    pub fn from_slice(desc: &Arc<LieGroupDescriptor>, coords: &[f64]) -> Result<Self> {
        Self::new(desc, DVector::from_column_slice(coords))
    }

    pub fn zero(desc: &Arc<LieGroupDescriptor>) -> Self {
        AlgebraElement {
            desc: desc.clone(),
            coords: DVector::zeros(desc.group_dim()),
        }
    }

    /// i-th basis element.
    pub fn basis(desc: &Arc<LieGroupDescriptor>, i: usize) -> Self {
        let mut coords = DVector::zeros(desc.group_dim());
        coords[i] = 1.0;
        AlgebraElement {
            desc: desc.clone(),
            coords,
        }
    }

    /// Projects a matrix onto the algebra. Fails when more than a relative
    /// `SPAN_TOL` of it lies outside the span of the basis.
    pub fn vee(desc: &Arc<LieGroupDescriptor>, m: &DMatrix<f64>, what: &'static str) -> Result<Self> {
        let (coords, residual) = desc.project(m);
        if residual > SPAN_TOL * m.norm().max(1.0) {
            return Err(Error::Consistency { what, residual });
        }
        Ok(AlgebraElement {
            desc: desc.clone(),
            coords,
        })
    }

    pub fn descriptor(&self) -> &Arc<LieGroupDescriptor> {
        &self.desc
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    /// Matrix form `Σ cᵢ Bᵢ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.desc.hat(&self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn exp(&self) -> GroupElement {
        GroupElement {
            desc: self.desc.clone(),
            mat: exp_matrix(&self.desc, &self.coords),
        }
    }

    /// Matrix commutator `[u, v] = uv − vu`.
    pub fn bracket(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        same_group(&self.desc, &other.desc)?;
        let a = self.matrix();
        let b = other.matrix();
        AlgebraElement::vee(&self.desc, &(&a * &b - &b * &a), "bracket")
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        AlgebraElement {
            desc: self.desc.clone(),
            coords: &self.coords * s,
        }
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        debug_assert!(same_group(&self.desc, &rhs.desc).is_ok());
        AlgebraElement {
            desc: self.desc.clone(),
            coords: &self.coords + &rhs.coords,
        }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        debug_assert!(same_group(&self.desc, &rhs.desc).is_ok());
        AlgebraElement {
            desc: self.desc.clone(),
            coords: &self.coords - &rhs.coords,
        }
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, s: f64) -> AlgebraElement {
        self.scale(s)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Tangent vector to a matrix group, stored as an ambient matrix at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTangent {
    pub base: GroupElement,
    pub mat: DMatrix<f64>,
}

impl GroupTangent {
    /// The tangent `dL_X u = X·u` at `X`.
    pub fn left_trivialized(x: &GroupElement, u: &AlgebraElement) -> Self {
        GroupTangent {
            base: x.clone(),
            mat: x.matrix() * u.matrix(),
        }
    }

    /// Recovers `X⁻¹ W`.
    pub fn left_trivialization(&self) -> Result<AlgebraElement> {
        let inv = self.base.try_inverse()?;
        AlgebraElement::vee(
            self.base.descriptor(),
            &(inv.matrix() * &self.mat),
            "left trivialization",
        )
    }
}

/// Differential of left (`A·W`, based at `AB`) or right (`W·A`, based at `BA`) translation.
pub fn translate_tangent(side: Side, a: &GroupElement, w: &GroupTangent) -> Result<GroupTangent> {
    same_group(a.descriptor(), w.base.descriptor())?;
    Ok(match side {
        Side::Left => GroupTangent {
            base: a.compose(&w.base)?,
            mat: a.matrix() * &w.mat,
        },
        Side::Right => GroupTangent {
            base: w.base.compose(a)?,
            mat: &w.mat * a.matrix(),
        },
    })
}

/// Random group element: Haar-uniform rotations, translations uniform in
/// `[-1, 1]³`, SL(3) elements as exponentials of algebra elements of scale 0.5.
pub fn random_element<R: Rng + ?Sized>(desc: &Arc<LieGroupDescriptor>, rng: &mut R) -> GroupElement {
    let mat = random_matrix(desc, rng);
    GroupElement {
        desc: desc.clone(),
        mat,
    }
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    use rand_distr::StandardNormal;
    let q = nalgebra::Quaternion::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

fn random_matrix<R: Rng + ?Sized>(desc: &Arc<LieGroupDescriptor>, rng: &mut R) -> DMatrix<f64> {
    match &desc.kind {
        GroupKind::So3 => from_matrix3(&random_rotation(rng)),
        GroupKind::Se3 => {
            let r = random_rotation(rng);
            let t = Vector3::new(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            );
            let m = se3::assemble(&r, &t);
            DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
        }
        GroupKind::Sl3 => random_algebra(desc, rng, 0.5).exp().mat,
        GroupKind::Product(factors) => {
            let mut out = DMatrix::zeros(desc.matrix_size, desc.matrix_size);
            let mut offset = 0;
            for f in factors {
                let n = f.matrix_size;
                out.view_mut((offset, offset), (n, n)).copy_from(&random_matrix(f, rng));
                offset += n;
            }
            out
        }
    }
}

/// Algebra element with coordinates i.i.d. uniform in `[-scale, scale]`.
pub fn random_algebra<R: Rng + ?Sized>(desc: &Arc<LieGroupDescriptor>, rng: &mut R, scale: f64) -> AlgebraElement {
    let coords = DVector::from_fn(desc.group_dim(), |_, _| {
        if scale == 0.0 {
            0.0
        } else {
            rng.random_range(-scale..=scale)
        }
    });
    AlgebraElement {
        desc: desc.clone(),
        coords,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn rz(theta: f64) -> GroupElement {
        GroupElement::so3(&so3::rot_z(theta))
    }

    #[test]
    fn quarter_turns_compose_to_half_turn() {
        let half = rz(FRAC_PI_2).compose(&rz(FRAC_PI_2)).unwrap();
        assert!((half.matrix() - rz(std::f64::consts::PI).matrix()).norm() < 1e-15);
    }

    #[test]
    fn compose_rejects_mixed_groups() {
        let a = GroupElement::identity(&LieGroupDescriptor::so3());
        let b = GroupElement::identity(&LieGroupDescriptor::sl3());
        assert!(matches!(a.compose(&b), Err(Error::DescriptorMismatch { .. })));
    }

    #[test]
    fn inverse_of_rotation_about_z() {
        let inv = rz(0.7).inverse();
        assert!((inv.matrix() - rz(-0.7).matrix()).norm() < 1e-15);
        let id = GroupElement::identity(&LieGroupDescriptor::se3());
        assert_eq!(id.inverse(), id);
    }

    #[test]
    fn exp_quarter_turn_maps_e1_to_e2() {
        let u = AlgebraElement::from_slice(&LieGroupDescriptor::so3(), &[0.0, 0.0, FRAC_PI_2]).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let out = u.exp().matrix() * e1;
        assert!((out - DVector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-15);
        let zero = AlgebraElement::zero(&LieGroupDescriptor::sl3());
        assert_eq!(zero.exp(), GroupElement::identity(&LieGroupDescriptor::sl3()));
    }

    #[test]
    fn so3_structure_constants() {
        let d = LieGroupDescriptor::so3();
        let e1 = AlgebraElement::basis(&d, 0);
        let e2 = AlgebraElement::basis(&d, 1);
        let e3 = AlgebraElement::basis(&d, 2);
        assert!((e1.bracket(&e2).unwrap().coords() - e3.coords()).norm() < 1e-15);
        assert_eq!(e1.bracket(&e1).unwrap().norm(), 0.0);
    }

    #[test]
    fn descriptors_are_closed_and_independent() {
        let prod = LieGroupDescriptor::product(vec![LieGroupDescriptor::so3(), LieGroupDescriptor::se3()]);
        for d in [
            LieGroupDescriptor::so3(),
            LieGroupDescriptor::se3(),
            LieGroupDescriptor::sl3(),
            prod,
        ] {
            assert_eq!(d.basis_rank(), d.group_dim(), "{}", d.name());
            assert!(d.closure_residual() < 1e-12, "{}", d.name());
        }
    }

    #[test]
    fn product_exp_log_is_blockwise() {
        let d = LieGroupDescriptor::product(vec![LieGroupDescriptor::so3(), LieGroupDescriptor::sl3()]);
        assert_eq!(d.group_dim(), 11);
        assert_eq!(d.matrix_size(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_algebra(&d, &mut rng, 0.4);
        let x = u.exp();
        assert!(x.membership_residual() < 1e-12);
        assert!((x.log().unwrap().coords() - u.coords()).norm() < 1e-11);
        let rot = so3::exp(&Vector3::new(u.coords()[0], u.coords()[1], u.coords()[2]));
        assert!((x.matrix().view((0, 0), (3, 3)) - from_matrix3(&rot)).norm() < 1e-15);
    }

    #[test]
    fn membership_rejects_reflection() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        assert!(GroupElement::new(LieGroupDescriptor::so3(), m).is_err());
    }

    #[test]
    fn scale_zero_is_zero_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for d in [
            LieGroupDescriptor::so3(),
            LieGroupDescriptor::se3(),
            LieGroupDescriptor::sl3(),
        ] {
            let u = random_algebra(&d, &mut rng, 0.0);
            assert_eq!(u.norm(), 0.0);
            assert_eq!(u.exp(), GroupElement::identity(&d));
        }
    }

    #[test]
    fn renormalization_restores_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [
            LieGroupDescriptor::so3(),
            LieGroupDescriptor::se3(),
            LieGroupDescriptor::sl3(),
        ] {
            let x = random_element(&d, &mut rng);
            let noisy = GroupElement::from_matrix_unchecked(d.clone(), x.matrix() * 1.0001);
            assert!(noisy.membership_residual() > 1e-5);
            assert!(noisy.renormalized().membership_residual() < 1e-12);
        }
    }
}
