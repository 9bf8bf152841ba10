//! Linear system functions, velocity and configuration outputs.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{null_space, orthonormalize, singular_values};
use crate::manifold::{Manifold, ManifoldPoint, TangentVector};

/// Input coordinates in `V` (or an extension of it).
pub type InputVector = DVector<f64>;

/// Smallest singular value that still counts as injective.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Relative cutoff used when extracting null spaces.
pub const KERNEL_TOL: f64 = 1e-9;

type FieldFn = dyn Fn(&ManifoldPoint, &InputVector) -> DVector<f64> + Send + Sync;
/// A vector field given pointwise in ambient coordinates.
pub type VectorFieldFn = dyn Fn(&ManifoldPoint) -> DVector<f64> + Send + Sync;
type OutputFn = dyn Fn(&TangentVector) -> DVector<f64> + Send + Sync;
type ConfigFn = dyn Fn(&ManifoldPoint) -> DVector<f64> + Send + Sync;

/// `v ↦ f_v`, linear in `v`; the closure returns an ambient tangent vector at `ξ`.
#[derive(Clone)]
pub struct SystemFunction {
    manifold: Manifold,
    input_dim: usize,
    eval: Arc<FieldFn>,
}

impl fmt::Debug for SystemFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SystemFunction({:?}, m = {})", self.manifold, self.input_dim)
    }
}

impl SystemFunction {
    pub fn new<F>(manifold: Manifold, input_dim: usize, eval: F) -> Self
    where
        F: Fn(&ManifoldPoint, &InputVector) -> DVector<f64> + Send + Sync + 'static,
    {
        SystemFunction {
            manifold,
            input_dim,
            eval: Arc::new(eval),
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Unchecked evaluation.
    pub fn raw(&self, xi: &ManifoldPoint, v: &InputVector) -> DVector<f64> {
        (self.eval)(xi, v)
    }

    /// Matrix of `v ↦ f(ξ, v)` in ambient coordinates.
    pub fn matrix_at(&self, xi: &ManifoldPoint) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..self.input_dim)
            .map(|j| {
                self.raw(
                    xi,
                    &DVector::from_fn(self.input_dim, |i, _| if i == j { 1.0 } else { 0.0 }),
                )
            })
            .collect();
        if cols.is_empty() {
            return DMatrix::zeros(self.manifold.ambient_dim(), 0);
        }
        DMatrix::from_columns(&cols)
    }
}

/// Fibre-linear map `g : TM → ℝᵖ`.
#[derive(Clone)]
pub struct VelocityOutput {
    manifold: Manifold,
    output_dim: usize,
    eval: Arc<OutputFn>,
}

impl fmt::Debug for VelocityOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VelocityOutput({:?}, p = {})", self.manifold, self.output_dim)
    }
}

impl VelocityOutput {
    pub fn new<F>(manifold: Manifold, output_dim: usize, eval: F) -> Self
    where
        F: Fn(&TangentVector) -> DVector<f64> + Send + Sync + 'static,
    {
        VelocityOutput {
            manifold,
            output_dim,
            eval: Arc::new(eval),
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn eval(&self, eta: &TangentVector) -> Result<InputVector> {
        if eta.base.manifold != self.manifold {
            return Err(Error::ManifoldMismatch {
                expected: self.manifold.id(),
                found: eta.base.manifold.id(),
            });
        }
        Ok((self.eval)(eta))
    }
}

/// Output space of a configuration output.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputSpace {
    /// Unit vectors in ℝ³.
    Sphere2,
    /// A state manifold reused as output (e.g. full pose).
    Manifold(Manifold),
    Euclidean(usize),
}

impl OutputSpace {
    pub fn ambient_dim(&self) -> usize {
        match self {
            OutputSpace::Sphere2 => 3,
            OutputSpace::Manifold(m) => m.ambient_dim(),
            OutputSpace::Euclidean(n) => *n,
        }
    }

    pub fn constraint_residual(&self, y: &DVector<f64>) -> f64 {
        match self {
            OutputSpace::Sphere2 => Manifold::Sphere2.constraint_residual(y),
            OutputSpace::Manifold(m) => m.constraint_residual(y),
            OutputSpace::Euclidean(n) if y.len() == *n => 0.0,
            OutputSpace::Euclidean(_) => f64::INFINITY,
        }
    }
}

/// Value of a configuration output.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPoint {
    pub space: OutputSpace,
    pub coords: DVector<f64>,
}

/// Smooth map `h : M → N`.
#[derive(Clone)]
pub struct ConfigurationOutput {
    manifold: Manifold,
    space: OutputSpace,
    eval: Arc<ConfigFn>,
}

impl fmt::Debug for ConfigurationOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConfigurationOutput({:?} -> {:?})", self.manifold, self.space)
    }
}

impl ConfigurationOutput {
    pub fn new<F>(manifold: Manifold, space: OutputSpace, eval: F) -> Self
    where
        F: Fn(&ManifoldPoint) -> DVector<f64> + Send + Sync + 'static,
    {
        ConfigurationOutput {
            manifold,
            space,
            eval: Arc::new(eval),
        }
    }

    pub fn space(&self) -> &OutputSpace {
        &self.space
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }
}

fn same_manifold(expected: &Manifold, found: &Manifold) -> Result<()> {
    if expected != found {
        return Err(Error::ManifoldMismatch {
            expected: expected.id(),
            found: found.id(),
        });
    }
    Ok(())
}

/// `f(ξ, v)` with dimension and finiteness checks.
pub fn eval_system(f: &SystemFunction, xi: &ManifoldPoint, v: &InputVector) -> Result<TangentVector> {
    same_manifold(&f.manifold, &xi.manifold)?;
    if v.len() != f.input_dim {
        return Err(Error::DimensionMismatch {
            what: "system input",
            expected: f.input_dim,
            found: v.len(),
        });
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("system input"));
    }
    Ok(TangentVector::new(xi.clone(), f.raw(xi, v)))
}

/// `‖f(ξ, g(η)) − η‖`.
pub fn check_compatibility(f: &SystemFunction, g: &VelocityOutput, eta: &TangentVector) -> Result<f64> {
    let v = g.eval(eta)?;
    let back = eval_system(f, &eta.base, &v)?;
    Ok((back.vec - &eta.vec).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completeness {
    pub complete: bool,
    pub sigma_min: f64,
}

/// Injectivity of `g` on `T_ξM`, judged by the smallest singular value of `g`
/// restricted to an orthonormal tangent basis.
pub fn check_completeness(g: &VelocityOutput, xi: &ManifoldPoint) -> Result<Completeness> {
    same_manifold(&g.manifold, &xi.manifold)?;
    let basis = xi.manifold.tangent_basis(&xi.coords);
    let cols: Vec<DVector<f64>> = basis
        .iter()
        .map(|q| g.eval(&TangentVector::new(xi.clone(), q.clone())))
        .collect::<Result<_>>()?;
    let sigma_min = if g.output_dim < basis.len() || cols.is_empty() {
        0.0
    } else {
        let s = singular_values(&DMatrix::from_columns(&cols));
        s.get(basis.len() - 1).copied().unwrap_or(0.0)
    };
    Ok(Completeness {
        complete: sigma_min > COMPLETENESS_TOL,
        sigma_min,
    })
}

/// Orthonormal basis of the inputs that produce the zero field at every sample point.
pub fn compute_kernel(f: &SystemFunction, points: &[ManifoldPoint]) -> Result<Vec<DVector<f64>>> {
    let needed = 3 * f.manifold.dim();
    if points.len() < needed {
        return Err(Error::Usage(format!(
            "kernel estimation needs at least {needed} sample points, got {}",
            points.len()
        )));
    }
    let rows = f.manifold.ambient_dim();
    let mut stacked = DMatrix::zeros(rows * points.len(), f.input_dim);
    for (k, p) in points.iter().enumerate() {
        same_manifold(&f.manifold, &p.manifold)?;
        stacked
            .view_mut((k * rows, 0), (rows, f.input_dim))
            .copy_from(&f.matrix_at(p));
    }
    Ok(null_space(&stacked, KERNEL_TOL))
}

/// Restricts `f` to the orthogonal complement of `kernel`; the new input coordinates
/// are taken against an orthonormal basis `Q` of that complement, `f'(ξ, w) = f(ξ, Qw)`.
pub fn reduce_by_kernel(f: &SystemFunction, kernel: &[DVector<f64>]) -> (SystemFunction, DMatrix<f64>) {
    let m = f.input_dim;
    let mut all: Vec<DVector<f64>> = kernel.to_vec();
    all.extend((0..m).map(|j| DVector::from_fn(m, |i, _| if i == j { 1.0 } else { 0.0 })));
    let basis = orthonormalize(&all, 1e-10);
    let complement: Vec<DVector<f64>> = basis.into_iter().skip(kernel.len()).collect();
    let q = if complement.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&complement)
    };
    let inner = f.clone();
    let qc = q.clone();
    let reduced = SystemFunction::new(f.manifold.clone(), q.ncols(), move |xi, w| inner.raw(xi, &(&qc * w)));
    (reduced, q)
}

/// `f_u(ξ) = Σⱼ fⱼ(ξ) uⱼ` for a drift `f₀` and control fields `f₁..f_m`; `u₀ ≡ 1` recovers
/// the affine system.
pub fn make_affine_system(manifold: Manifold, fields: Vec<Arc<VectorFieldFn>>) -> SystemFunction {
    let n = manifold.ambient_dim();
    let m = fields.len();
    SystemFunction::new(manifold, m, move |xi, u| {
        fields
            .iter()
            .zip(u.iter())
            .fold(DVector::zeros(n), |acc, (fj, &uj)| acc + fj(xi) * uj)
    })
}

/// `h(ξ)`, with the output constraint enforced.
pub fn eval_configuration_output(h: &ConfigurationOutput, xi: &ManifoldPoint) -> Result<OutputPoint> {
    same_manifold(&h.manifold, &xi.manifold)?;
    let coords = (h.eval)(xi);
    let r = h.space.constraint_residual(&coords);
    if r > 1e-9 {
        return Err(Error::Consistency {
            what: "configuration output constraint",
            residual: r,
        });
    }
    Ok(OutputPoint {
        space: h.space.clone(),
        coords,
    })
}

/// Two-channel azimuth/elevation rate sensor on the sphere, written in the smooth form
/// `(x ẏ − y ẋ, ż)` (the angle rates scaled by `cos²(elevation)` and `cos(elevation)`).
/// Its rank drops to zero at the poles.
pub fn azimuth_elevation_output() -> VelocityOutput {
    VelocityOutput::new(Manifold::Sphere2, 2, |eta| {
        let p = &eta.base.coords;
        let d = &eta.vec;
        DVector::from_vec(vec![p[0] * d[1] - p[1] * d[0], d[2]])
    })
}
