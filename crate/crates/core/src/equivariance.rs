//! Input actions, the induced action on vector fields, lifts and the origin-lift
//! construction.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::homogeneous::{act, d_group_at_identity, d_state, pseudo_right_inverse, GroupAction};
use crate::kinematics::{eval_system, InputVector, SystemFunction};
use crate::lie::{AlgebraElement, GroupElement, LieGroupDescriptor};
use crate::linalg::min_norm_solve;
use crate::manifold::{ManifoldPoint, TangentVector};

/// Residual above which an extension or stabilizer test is declared failed.
pub const REJECT_TOL: f64 = 1e-6;

type PsiFn = dyn Fn(&GroupElement, &InputVector) -> InputVector + Send + Sync;
type LiftFn = dyn Fn(&ManifoldPoint, &InputVector) -> Result<AlgebraElement> + Send + Sync;
type OriginFn = dyn Fn(&InputVector) -> AlgebraElement + Send + Sync;
type SectionFn = dyn Fn(&ManifoldPoint) -> Result<GroupElement> + Send + Sync;

/// Linear right action `ψ` of the group on the input space.
#[derive(Clone)]
pub struct InputAction {
    group: Arc<LieGroupDescriptor>,
    input_dim: usize,
    apply: Arc<PsiFn>,
}

impl fmt::Debug for InputAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InputAction({}, m = {})", self.group.name(), self.input_dim)
    }
}

impl InputAction {
    pub fn new<F>(group: Arc<LieGroupDescriptor>, input_dim: usize, apply: F) -> Self
    where
        F: Fn(&GroupElement, &InputVector) -> InputVector + Send + Sync + 'static,
    {
        InputAction {
            group,
            input_dim,
            apply: Arc::new(apply),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn group(&self) -> &Arc<LieGroupDescriptor> {
        &self.group
    }

    pub fn apply(&self, x: &GroupElement, v: &InputVector) -> Result<InputVector> {
        if x.descriptor().name() != self.group.name() {
            return Err(Error::DescriptorMismatch {
                expected: self.group.name().to_string(),
                found: x.descriptor().name().to_string(),
            });
        }
        if v.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "input action",
                expected: self.input_dim,
                found: v.len(),
            });
        }
        Ok((self.apply)(x, v))
    }
}

/// A group action together with a system function and an input action.
#[derive(Clone)]
pub struct SymmetricSystem {
    pub action: Arc<dyn GroupAction>,
    pub f: SystemFunction,
    pub psi: InputAction,
}

impl fmt::Debug for SymmetricSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SymmetricSystem({}, {:?}, {:?})",
            self.action.name(),
            self.f,
            self.psi
        )
    }
}

/// `Λ : M × V → 𝔤`.
#[derive(Clone)]
pub struct LiftFunction {
    group: Arc<LieGroupDescriptor>,
    eval: Arc<LiftFn>,
}

impl fmt::Debug for LiftFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LiftFunction({})", self.group.name())
    }
}

impl LiftFunction {
    pub fn new<F>(group: Arc<LieGroupDescriptor>, eval: F) -> Self
    where
        F: Fn(&ManifoldPoint, &InputVector) -> Result<AlgebraElement> + Send + Sync + 'static,
    {
        LiftFunction {
            group,
            eval: Arc::new(eval),
        }
    }

    pub fn group(&self) -> &Arc<LieGroupDescriptor> {
        &self.group
    }

    pub fn eval(&self, xi: &ManifoldPoint, v: &InputVector) -> Result<AlgebraElement> {
        (self.eval)(xi, v)
    }
}

/// Value of a lift at the origin, `Λ_ξ̊ : V → 𝔤`.
#[derive(Clone)]
pub struct OriginLift {
    pub origin: ManifoldPoint,
    group: Arc<LieGroupDescriptor>,
    eval: Arc<OriginFn>,
}

impl fmt::Debug for OriginLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "OriginLift({} at {:?})",
            self.group.name(),
            self.origin.coords.as_slice()
        )
    }
}

impl OriginLift {
    pub fn new<F>(origin: ManifoldPoint, group: Arc<LieGroupDescriptor>, eval: F) -> Self
    where
        F: Fn(&InputVector) -> AlgebraElement + Send + Sync + 'static,
    {
        OriginLift {
            origin,
            group,
            eval: Arc::new(eval),
        }
    }

    /// Restriction of a full lift to the origin.
    pub fn from_lift(lift: &LiftFunction, origin: ManifoldPoint) -> Self {
        let l = lift.clone();
        let o = origin.clone();
        OriginLift::new(origin, lift.group.clone(), move |v| {
            l.eval(&o, v).unwrap_or_else(|_| AlgebraElement::zero(&l.group))
        })
    }

    pub fn eval(&self, v: &InputVector) -> AlgebraElement {
        (self.eval)(v)
    }
}

/// Section `ξ ↦ X` with `φ(X, ξ̊) = ξ`.
#[derive(Clone)]
pub struct Section(Arc<SectionFn>);

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Section")
    }
}

impl Section {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&ManifoldPoint) -> Result<GroupElement> + Send + Sync + 'static,
    {
        Section(Arc::new(f))
    }

    pub fn eval(&self, xi: &ManifoldPoint) -> Result<GroupElement> {
        (self.0)(xi)
    }
}

/// `‖dφ_X f(ξ, v) − f(φ_X ξ, ψ_X v)‖`.
pub fn check_equivariance(sys: &SymmetricSystem, x: &GroupElement, xi: &ManifoldPoint, v: &InputVector) -> Result<f64> {
    let lhs = d_state(sys.action.as_ref(), x, &eval_system(&sys.f, xi, v)?)?;
    let moved = act(sys.action.as_ref(), x, xi)?;
    let rhs = eval_system(&sys.f, &moved, &sys.psi.apply(x, v)?)?;
    Ok((lhs.vec - rhs.vec).norm())
}

/// `(d⋆φ_Z F)(ξ) = dφ_Z F(φ_{Z⁻¹} ξ)` for a vector field `F` given pointwise.
pub fn induced_field_action<A, F>(action: &A, z: &GroupElement, field: F, xi: &ManifoldPoint) -> Result<TangentVector>
where
    A: GroupAction + ?Sized,
    F: Fn(&ManifoldPoint) -> Result<DVector<f64>>,
{
    let back = act(action, &z.inverse(), xi)?;
    let at_back = TangentVector::new(back.clone(), field(&back)?);
    d_state(action, z, &at_back)
}

/// Residual of the action law `d⋆φ_Y d⋆φ_X F = d⋆φ_{XY} F` at `ξ`.
pub fn field_action_law_residual<A, F>(
    action: &A,
    x: &GroupElement,
    y: &GroupElement,
    field: F,
    xi: &ManifoldPoint,
) -> Result<f64>
where
    A: GroupAction + ?Sized,
    F: Fn(&ManifoldPoint) -> Result<DVector<f64>> + Copy,
{
    let inner = |p: &ManifoldPoint| induced_field_action(action, x, field, p).map(|t| t.vec);
    let lhs = induced_field_action(action, y, inner, xi)?;
    let rhs = induced_field_action(action, &x.compose(y)?, field, xi)?;
    Ok((lhs.vec - rhs.vec).norm())
}

/// Lie bracket `[F, G] = D_F G − D_G F` of two vector fields on the manifold, using
/// central differences along manifold curves.
pub fn field_bracket_fd<F, G>(f: F, g: G, xi: &ManifoldPoint, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&ManifoldPoint) -> Result<DVector<f64>>,
    G: Fn(&ManifoldPoint) -> Result<DVector<f64>>,
{
    let m = &xi.manifold;
    let along = |dir: &DVector<f64>, field: &dyn Fn(&ManifoldPoint) -> Result<DVector<f64>>| -> Result<DVector<f64>> {
        let p = ManifoldPoint::new_unchecked(m.clone(), m.curve(&xi.coords, dir, h));
        let q = ManifoldPoint::new_unchecked(m.clone(), m.curve(&xi.coords, dir, -h));
        Ok((field(&p)? - field(&q)?) / (2.0 * h))
    };
    let fv = f(xi)?;
    let gv = g(xi)?;
    let dg = along(&fv, &g)?;
    let df = along(&gv, &f)?;
    Ok(m.project_tangent(&xi.coords, &(dg - df)))
}

/// Outcome of [`check_input_closure`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub closed: bool,
    pub max_residual: f64,
    /// `(Z, v)` attaining the maximum, as matrix entries and input coordinates.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Tests whether each transformed field `d⋆φ_Z f_v` is again `f_w` for a single `w`,
/// jointly over the sample points.
pub fn check_input_closure<A: GroupAction + ?Sized>(
    action: &A,
    f: &SystemFunction,
    points: &[ManifoldPoint],
    transforms: &[(GroupElement, InputVector)],
) -> Result<ClosureReport> {
    let rows = f.manifold().ambient_dim();
    let mut stacked = DMatrix::zeros(rows * points.len(), f.input_dim());
    for (k, p) in points.iter().enumerate() {
        stacked
            .view_mut((k * rows, 0), (rows, f.input_dim()))
            .copy_from(&f.matrix_at(p));
    }
    let mut worst = 0.0;
    let mut witness = None;
    for (z, v) in transforms {
        let mut target = DVector::zeros(rows * points.len());
        for (k, p) in points.iter().enumerate() {
            let t = induced_field_action(action, z, |q| eval_system(f, q, v).map(|t| t.vec), p)?;
            target.rows_mut(k * rows, rows).copy_from(&t.vec);
        }
        let (w, _) = min_norm_solve(&stacked, &target, 1e-12);
        let r = (&stacked * w - target).norm();
        if r > worst || witness.is_none() {
            worst = r;
            witness = Some((z.matrix().iter().copied().collect(), v.iter().copied().collect()));
        }
    }
    Ok(ClosureReport {
        closed: worst <= REJECT_TOL,
        max_residual: worst,
        witness,
    })
}

/// `Λ(ξ, v) = dφ_ξ⁺ f(ξ, v)` with the minimum-norm right inverse.
pub fn lift_from_pseudoinverse(action: Arc<dyn GroupAction>, f: SystemFunction) -> LiftFunction {
    let group = action.group().clone();
    LiftFunction::new(group, move |xi, v| {
        let target = eval_system(&f, xi, v)?;
        pseudo_right_inverse(action.as_ref(), xi, &target)
    })
}

/// `‖dφ_ξ Λ(ξ, v) − f(ξ, v)‖`.
pub fn check_lift<A: GroupAction + ?Sized>(
    action: &A,
    f: &SystemFunction,
    lift: &LiftFunction,
    xi: &ManifoldPoint,
    v: &InputVector,
) -> Result<f64> {
    let u = lift.eval(xi, v)?;
    let lhs = d_group_at_identity(action, xi, &u)?;
    Ok((lhs.vec - eval_system(f, xi, v)?.vec).norm())
}

/// `‖Ad_{X⁻¹} Λ(ξ, v) − Λ(φ_X ξ, ψ_X v)‖` in algebra coordinates.
pub fn check_equivariant_lift(
    sys: &SymmetricSystem,
    lift: &LiftFunction,
    x: &GroupElement,
    xi: &ManifoldPoint,
    v: &InputVector,
) -> Result<f64> {
    let lhs = x.inverse().adjoint(&lift.eval(xi, v)?)?;
    let rhs = lift.eval(&act(sys.action.as_ref(), x, xi)?, &sys.psi.apply(x, v)?)?;
    Ok((lhs.coords() - rhs.coords()).norm())
}

/// Worst stabilizer-compatibility residual and where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerReport {
    pub max_residual: f64,
    pub witness_stabilizer: Vec<f64>,
    pub witness_input: Vec<f64>,
}

impl StabilizerReport {
    fn into_error(self) -> Error {
        Error::StabilizerIncompatible {
            residual: self.max_residual,
            witness_stabilizer: self.witness_stabilizer,
            witness_input: self.witness_input,
        }
    }
}

/// `max ‖Ad_{S⁻¹} Λ_ξ̊(v) − Λ_ξ̊(ψ_S v)‖` over the given stabilizer elements and inputs.
pub fn check_stabilizer_compatibility(
    origin_lift: &OriginLift,
    psi: &InputAction,
    stabilizers: &[GroupElement],
    inputs: &[InputVector],
) -> Result<StabilizerReport> {
    let mut report = StabilizerReport {
        max_residual: 0.0,
        witness_stabilizer: Vec::new(),
        witness_input: Vec::new(),
    };
    for s in stabilizers {
        let s_inv = s.inverse();
        for v in inputs {
            let lhs = s_inv.adjoint(&origin_lift.eval(v))?;
            let rhs = origin_lift.eval(&psi.apply(s, v)?);
            let r = (lhs.coords() - rhs.coords()).norm();
            if r > report.max_residual || report.witness_stabilizer.is_empty() {
                report = StabilizerReport {
                    max_residual: r,
                    witness_stabilizer: s.matrix().iter().copied().collect(),
                    witness_input: v.iter().copied().collect(),
                };
            }
        }
    }
    Ok(report)
}

/// Origin lift obtained by averaging the minimum-norm lift at `ξ̊` over a quadrature of
/// the stabilizer, `Λ_ξ̊(v) = avg_S Ad_S L₀(ψ_S v)`. Averaging makes it stabilizer
/// compatible while keeping the projection property, provided the system is equivariant.
pub fn construct_origin_lift(sys: &SymmetricSystem, origin: ManifoldPoint, nodes: usize) -> Result<OriginLift> {
    let stab = sys.action.stabilizer_quadrature(&origin, nodes)?;
    let group = sys.action.group().clone();
    let action = sys.action.clone();
    let f = sys.f.clone();
    let psi = sys.psi.clone();
    let o = origin.clone();
    let g = group.clone();
    // fail now rather than inside the closure
    pseudo_right_inverse(action.as_ref(), &o, &o.zero_tangent())?;
    Ok(OriginLift::new(origin, group, move |v| {
        let mut acc = AlgebraElement::zero(&g);
        for s in &stab {
            let w = psi.apply(s, v).expect("stabilizer from the same group");
            let fw = eval_system(&f, &o, &w).expect("input dimension checked by caller");
            let l0 = pseudo_right_inverse(action.as_ref(), &o, &fw).expect("transitive at origin");
            acc = &acc + &s.adjoint(&l0).expect("adjoint stays in the algebra");
        }
        acc.scale(1.0 / stab.len() as f64)
    }))
}

/// A lift assembled from an origin lift and a section.
#[derive(Clone, Debug)]
pub struct EquivariantLift {
    pub origin_lift: OriginLift,
    pub psi: InputAction,
    pub section: Section,
}

impl EquivariantLift {
    /// `Ad_{X⁻¹} Λ_ξ̊(ψ_{X⁻¹} v)` for a given `X` with `φ_X(ξ̊) = ξ`.
    pub fn eval_with(&self, x: &GroupElement, v: &InputVector) -> Result<AlgebraElement> {
        let x_inv = x.try_inverse()?;
        x_inv.adjoint(&self.origin_lift.eval(&self.psi.apply(&x_inv, v)?))
    }

    pub fn eval(&self, xi: &ManifoldPoint, v: &InputVector) -> Result<AlgebraElement> {
        self.eval_with(&self.section.eval(xi)?, v)
    }

    /// Difference between evaluating through the section `X` and through `S·X`.
    pub fn well_definedness_residual(&self, xi: &ManifoldPoint, v: &InputVector, s: &GroupElement) -> Result<f64> {
        let x = self.section.eval(xi)?;
        let a = self.eval_with(&x, v)?;
        let b = self.eval_with(&s.compose(&x)?, v)?;
        Ok((a.coords() - b.coords()).norm())
    }

    pub fn to_lift(&self) -> LiftFunction {
        let me = self.clone();
        LiftFunction::new(self.origin_lift.group.clone(), move |xi, v| me.eval(xi, v))
    }
}

/// Extends an origin lift to all of `M` through a section; rejected with a witness if the
/// origin lift is not stabilizer compatible on `stabilizers × inputs`.
pub fn build_equivariant_lift(
    origin_lift: OriginLift,
    psi: InputAction,
    section: Section,
    stabilizers: &[GroupElement],
    inputs: &[InputVector],
) -> Result<EquivariantLift> {
    let report = check_stabilizer_compatibility(&origin_lift, &psi, stabilizers, inputs)?;
    if report.max_residual > REJECT_TOL {
        return Err(report.into_error());
    }
    Ok(EquivariantLift {
        origin_lift,
        psi,
        section,
    })
}
