//! Built-in transport problems: advection field, initial data, exact
//! solution, domain, and default horizon for each test case.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, SldgError};
use crate::velocity::VelocityField;

pub type SpaceFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
pub type SpaceTimeFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// How the reference solution is known.
#[derive(Clone)]
pub enum ExactSolution {
    /// Closed form at any time.
    Closed(Arc<SpaceTimeFn>),
    /// The flow returns the initial data at the stated horizon (and only
    /// there): `U(x, y, T) = U_0(x, y)`.
    RecurrenceAt(f64),
}

/// A registered problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub velocity: VelocityField,
    pub initial: Arc<SpaceFn>,
    pub exact: ExactSolution,
    /// Domain `[ax, bx] x [ay, by]`.
    pub domain: (f64, f64, f64, f64),
    pub horizon: f64,
    /// True when each split sub-equation is itself divergence-free
    /// (`a` independent of `x` and `b` independent of `y`), in which case
    /// every sweep preserves constants exactly.
    pub sweeps_divergence_free: bool,
    /// Extra half-widths `(pad_x, pad_y)` of resolved halo the solver must
    /// carry around the domain. Needed when the velocity is not periodic:
    /// characteristics through the domain then swing outside it, and the
    /// solution there must be evolved (not wrapped) for the in-window
    /// solution to be correct. Errors are always measured on the domain.
    pub halo: Option<(f64, f64)>,
}

impl ProblemSpec {
    /// Exact solution at `(x, y, t)`, if known there.
    pub fn exact_at(&self, x: f64, y: f64, t: f64) -> Option<f64> {
        match &self.exact {
            ExactSolution::Closed(f) => Some(f(x, y, t)),
            ExactSolution::RecurrenceAt(horizon) => {
                if (t - horizon).abs() <= 1e-12 * horizon.max(1.0) || t.abs() <= 1e-300 {
                    Some((self.initial)(x, y))
                } else {
                    None
                }
            }
        }
    }
}

fn constant_advection() -> ProblemSpec {
    let velocity = VelocityField::new(|_, _, _| 1.0, |_, _, _| 1.0)
        .with_divergence(|_, _, _| 0.0)
        .with_divergence_bound(0.0)
        .with_flow_2d(|x, y, t0, t1| (x + (t1 - t0), y + (t1 - t0)))
        .with_axis_flows(|x, _, t0, t1| x + (t1 - t0), |y, _, t0, t1| y + (t1 - t0));
    ProblemSpec {
        name: "constant",
        velocity,
        initial: Arc::new(|x, y| (x - y).cos()),
        exact: ExactSolution::Closed(Arc::new(|x, y, _| (x - y).cos())),
        domain: (-PI, PI, -PI, PI),
        horizon: PI,
        sweeps_divergence_free: true,
        halo: None,
    }
}

fn constant_advection_sin() -> ProblemSpec {
    let base = constant_advection();
    ProblemSpec {
        name: "constant_sin",
        velocity: base.velocity,
        initial: Arc::new(|x, y| (x + y).sin()),
        exact: ExactSolution::Closed(Arc::new(|x, y, t| (x + y - 2.0 * t).sin())),
        domain: base.domain,
        horizon: PI,
        sweeps_divergence_free: true,
        halo: None,
    }
}

fn rigid_body() -> ProblemSpec {
    let c = 2.0f64.sqrt();
    // dx/dt = -4*sqrt(2) y, dy/dt = 2*sqrt(2) x: elliptic rotation with
    // angular frequency 4, hence period pi/2.
    let rotate = move |x0: f64, y0: f64, t0: f64, t1: f64| {
        let th = 4.0 * (t1 - t0);
        let (s, co) = th.sin_cos();
        (x0 * co - c * y0 * s, x0 / c * s + y0 * co)
    };
    let velocity = VelocityField::new(
        move |_, y, _| -4.0 * c * y,
        move |x, _, _| 2.0 * c * x,
    )
    .with_divergence(|_, _, _| 0.0)
    .with_divergence_bound(0.0)
    .with_flow_2d(rotate)
    .with_axis_flows(
        move |x, y0, t0, t1| x - 4.0 * c * y0 * (t1 - t0),
        move |y, x0, t0, t1| y + 2.0 * c * x0 * (t1 - t0),
    );
    ProblemSpec {
        name: "rigid",
        velocity,
        initial: Arc::new(|x, y| (-x * x - 5.0 * y * y).exp()),
        exact: ExactSolution::Closed(Arc::new(move |x, y, t| {
            let (x0, y0) = rotate(x, y, t, 0.0);
            (-x0 * x0 - 5.0 * y0 * y0).exp()
        })),
        domain: (-1.5, 1.5, -0.75, 0.75),
        horizon: PI / 2.0,
        sweeps_divergence_free: true,
        // Orbits x^2 + 2 y^2 = c through the domain reach |x| = 1.84 and
        // |y| = 1.30; the pad covers that sweep plus the coarse-mesh
        // excursion of the staged shear path.
        halo: Some((0.75, 0.85)),
    }
}

fn swirling() -> ProblemSpec {
    const T: f64 = 1.5;
    let g = |t: f64| 2.0 * PI * (PI * t / T).cos();
    let velocity = VelocityField::new(
        move |x, y, t| -(0.5 * x).cos().powi(2) * y.sin() * g(t),
        move |x, y, t| x.sin() * (0.5 * y).cos().powi(2) * g(t),
    )
    // a_x and b_y cancel pointwise.
    .with_divergence(|_, _, _| 0.0)
    .with_divergence_bound(0.0);
    let r0 = 0.3 * PI;
    let (x0, y0) = (0.3 * PI, 0.0);
    ProblemSpec {
        name: "swirling",
        velocity,
        initial: Arc::new(move |x, y| {
            let r = ((x - x0).powi(2) + (y - y0).powi(2)).sqrt();
            if r < r0 {
                r0 * (r * PI / (2.0 * r0)).cos().powi(6)
            } else {
                0.0
            }
        }),
        exact: ExactSolution::RecurrenceAt(T),
        domain: (-PI, PI, -PI, PI),
        horizon: T,
        sweeps_divergence_free: false,
        halo: None,
    }
}

/// All built-in problems.
pub fn registry() -> Vec<ProblemSpec> {
    vec![constant_advection(), constant_advection_sin(), rigid_body(), swirling()]
}

/// Look up a problem by name.
pub fn by_name(name: &str) -> Result<ProblemSpec> {
    registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| SldgError::Config(format!("unknown problem {name:?}")))
}
