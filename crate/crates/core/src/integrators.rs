//! Geometric time stepping for left-trivialized group ODEs `Ẋ = X·u(t, X)`.

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, GroupElement};
use crate::observer::{observer_velocity, EquivariantSystem, Innovation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LieEuler,
    Rkmk4,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lie_euler" => Ok(Method::LieEuler),
            "rkmk4" => Ok(Method::Rkmk4),
            other => Err(Error::Config {
                field: "integrator.method".into(),
                reason: format!("unknown method `{other}` (expected lie_euler or rkmk4)"),
            }),
        }
    }
}

pub const DEFAULT_RENORM_EVERY: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub h: f64,
    pub renorm_every: u64,
}

impl IntegratorConfig {
    pub fn new(method: Method, h: f64) -> Result<Self> {
        Self::with_renorm(method, h, DEFAULT_RENORM_EVERY)
    }

    pub fn with_renorm(method: Method, h: f64, renorm_every: u64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config {
                field: "integrator.h".into(),
                reason: format!("step must be positive and finite, got {h}"),
            });
        }
        if renorm_every == 0 {
            return Err(Error::Config {
                field: "integrator.renorm_every".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(IntegratorConfig {
            method,
            h,
            renorm_every,
        })
    }
}

/// `dexp⁻¹_{−θ}(u) = u + ½[θ, u] + (1/12)[θ, [θ, u]]`, which is what the left-trivialized
/// update `X exp(θ)` needs. Keeping only the first bracket costs one order of accuracy.
pub fn dexpinv(theta: &AlgebraElement, u: &AlgebraElement) -> Result<AlgebraElement> {
    let b1 = theta.bracket(u)?;
    let b2 = theta.bracket(&b1)?;
    Ok(&(u + &b1.scale(0.5)) + &b2.scale(1.0 / 12.0))
}

/// The same series cut after the first bracket.
pub fn dexpinv_first_order(theta: &AlgebraElement, u: &AlgebraElement) -> Result<AlgebraElement> {
    Ok(u + &theta.bracket(u)?.scale(0.5))
}

fn wrap(t: f64, r: Result<AlgebraElement>) -> Result<AlgebraElement> {
    let u = r.map_err(|e| Error::Integration { t, source: Box::new(e) })?;
    if !u.coords().iter().all(|c| c.is_finite()) {
        return Err(Error::Integration {
            t,
            source: Box::new(Error::NonFinite("velocity field")),
        });
    }
    Ok(u)
}

type Dexpinv = fn(&AlgebraElement, &AlgebraElement) -> Result<AlgebraElement>;

fn rkmk4_with<F>(field: &F, h: f64, t: f64, x: &GroupElement, dinv: Dexpinv) -> Result<GroupElement>
where
    F: Fn(f64, &GroupElement) -> Result<AlgebraElement> + ?Sized,
{
    let at = |s: f64, theta: &AlgebraElement| -> Result<AlgebraElement> {
        let y = x.compose(&theta.exp())?;
        let u = wrap(t + s, field(t + s, &y))?;
        Ok(dinv(theta, &u)?.scale(h))
    };
    let k1 = wrap(t, field(t, x))?.scale(h);
    let k2 = at(0.5 * h, &k1.scale(0.5))?;
    let k3 = at(0.5 * h, &k2.scale(0.5))?;
    let k4 = at(h, &k3)?;
    let sum = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
    x.compose(&sum.scale(1.0 / 6.0).exp())
}

/// One step of `Ẋ = X·u(t, X)` without renormalization.
pub fn step_group<F>(config: &IntegratorConfig, field: &F, t: f64, x: &GroupElement) -> Result<GroupElement>
where
    F: Fn(f64, &GroupElement) -> Result<AlgebraElement> + ?Sized,
{
    match config.method {
        Method::LieEuler => {
            let u = wrap(t, field(t, x))?;
            x.compose(&u.scale(config.h).exp())
        }
        Method::Rkmk4 => rkmk4_with(field, config.h, t, x, dexpinv),
    }
}

/// RKMK4 step with `dexp⁻¹` cut after the first bracket; kept for order comparisons.
pub fn step_rkmk4_first_bracket<F>(h: f64, field: &F, t: f64, x: &GroupElement) -> Result<GroupElement>
where
    F: Fn(f64, &GroupElement) -> Result<AlgebraElement> + ?Sized,
{
    rkmk4_with(field, h, t, x, dexpinv_first_order)
}

/// One observer step: integrates `Λ(φ_ξ̊(X̂), v) + Ad_{X̂⁻¹} Δ_t(X̂, y)` with `v`, `y`
/// held over the step.
pub fn step_observer(
    config: &IntegratorConfig,
    sys: &EquivariantSystem,
    innovation: &Innovation,
    t: f64,
    x_hat: &GroupElement,
    v: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<GroupElement> {
    let field = |s: f64, x: &GroupElement| observer_velocity(sys, innovation, s, x, v, y);
    step_group(config, &field, t, x_hat)
}

/// Stateful stepper applying the renormalization policy.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub config: IntegratorConfig,
    steps: u64,
}

impl Integrator {
    pub fn new(config: IntegratorConfig) -> Self {
        Integrator { config, steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn finish(&mut self, x: GroupElement) -> GroupElement {
        self.steps += 1;
        if self.steps.is_multiple_of(self.config.renorm_every) {
            x.renormalized()
        } else {
            x
        }
    }

    pub fn step_group<F>(&mut self, field: &F, t: f64, x: &GroupElement) -> Result<GroupElement>
    where
        F: Fn(f64, &GroupElement) -> Result<AlgebraElement> + ?Sized,
    {
        let next = step_group(&self.config, field, t, x)?;
        Ok(self.finish(next))
    }

    pub fn step_observer(
        &mut self,
        sys: &EquivariantSystem,
        innovation: &Innovation,
        t: f64,
        x_hat: &GroupElement,
        v: &DVector<f64>,
        y: &DVector<f64>,
    ) -> Result<GroupElement> {
        let next = step_observer(&self.config, sys, innovation, t, x_hat, v, y)?;
        Ok(self.finish(next))
    }

    /// Integrates `n` steps from `(t0, x0)`.
    pub fn integrate<F>(&mut self, field: &F, t0: f64, x0: &GroupElement, n: usize) -> Result<GroupElement>
    where
        F: Fn(f64, &GroupElement) -> Result<AlgebraElement> + ?Sized,
    {
        let mut x = x0.clone();
        for k in 0..n {
            x = self.step_group(field, t0 + k as f64 * self.config.h, &x)?;
        }
        Ok(x)
    }
}
