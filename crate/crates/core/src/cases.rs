//! Registry of the benchmark problems.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::constraints::{euler_positivity_set, ConstraintSet, Quantity, DEFAULT_P_MIN, DEFAULT_RHO_MIN};
use crate::error::{Error, Result};
use crate::limiter::LimiterConfig;
use crate::mesh::{BoundaryKind, Mesh};
use crate::solver::{AdvectionField, EquationSet, Solver, SolverConfig, StateFn};
use crate::stabilize::IndicatorConfig;

/// Exact solution `u(x, t)`.
pub type ExactFn = Arc<dyn Fn(&[f64; 2], f64) -> Vec<f64> + Send + Sync>;

pub const CASE_NAMES: [&str; 6] = [
    "advect-waveforms",
    "solid-body-rotation",
    "burgers-compression",
    "euler-pulse",
    "leblanc",
    "sedov",
];

/// Sedov blast energy in the center element.
pub const SEDOV_E0: f64 = 0.244816;

#[derive(Clone)]
pub struct CaseDefinition {
    pub name: &'static str,
    pub eq: EquationSet,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub boundary: BoundaryKind,
    pub constraints: ConstraintSet,
    pub default_order: usize,
    /// Elements per axis.
    pub default_n: usize,
    pub t_final: f64,
    pub stabilizer: bool,
    /// Component measured by error norms.
    pub error_component: usize,
    pub exact: Option<ExactFn>,
    ic: fn(&Mesh) -> StateFn,
}

impl std::fmt::Debug for CaseDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseDefinition")
            .field("name", &self.name)
            .field("eq", &self.eq)
            .field("default_order", &self.default_order)
            .field("default_n", &self.default_n)
            .field("t_final", &self.t_final)
            .finish()
    }
}

impl CaseDefinition {
    pub fn mesh(&self, n: usize) -> Result<Mesh> {
        if self.eq.dim() == 1 {
            Mesh::interval(n, self.lo[0], self.hi[0], self.boundary)
        } else {
            Mesh::cartesian(n, n, self.lo, self.hi, self.boundary)
        }
    }

    /// Initial condition on a given mesh (some problems depend on it).
    pub fn initial_condition(&self, mesh: &Mesh) -> StateFn {
        (self.ic)(mesh)
    }

    pub fn indicator_quantity(&self) -> Quantity {
        match self.eq {
            EquationSet::Euler { .. } => Quantity::Density,
            _ => Quantity::Component(0),
        }
    }

    /// Largest CFL number for which the forward-Euler mean update stays a
    /// convex combination of Gauss–Lobatto point values, capped at 0.5.
    pub fn recommended_cfl(&self, order: usize) -> f64 {
        let p = order as f64;
        (0.9 * (2.0 * p + 1.0) / (p * (p + 1.0))).min(0.5)
    }

    pub fn solver_config(&self, order: usize, limiter: LimiterConfig) -> SolverConfig {
        let q = self.indicator_quantity();
        SolverConfig {
            cfl: self.recommended_cfl(order),
            limiter,
            stabilizer: if self.stabilizer {
                IndicatorConfig::new(q)
            } else {
                IndicatorConfig::disabled(q)
            },
        }
    }

    pub fn build_solver(&self, order: usize, n: usize, cfg: SolverConfig) -> Result<Solver> {
        let mesh = self.mesh(n)?;
        let ic = self.initial_condition(&mesh);
        Solver::new(mesh, order, self.eq, self.constraints.clone(), cfg, ic)
    }
}

pub fn get_case(name: &str) -> Result<CaseDefinition> {
    let unit_interval = || ConstraintSet::scalar_interval(0.0, 1.0);
    let c = match name {
        "advect-waveforms" => CaseDefinition {
            name: "advect-waveforms",
            eq: EquationSet::Advection {
                dim: 1,
                field: AdvectionField::Constant([1.0, 0.0]),
            },
            lo: [0.0, 0.0],
            hi: [1.0, 0.0],
            boundary: BoundaryKind::Periodic,
            constraints: unit_interval()?,
            default_order: 2,
            default_n: 20,
            t_final: 1.0,
            stabilizer: false,
            error_component: 0,
            exact: Some(Arc::new(|x, t| vec![waveforms(wrap(x[0] - t, 0.0, 1.0))])),
            ic: |_| Arc::new(|x, _| vec![waveforms(x[0])]),
        },
        "solid-body-rotation" => CaseDefinition {
            name: "solid-body-rotation",
            eq: EquationSet::Advection {
                dim: 2,
                field: AdvectionField::Rotation {
                    center: [0.5, 0.5],
                    omega: 2.0 * PI,
                },
            },
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            boundary: BoundaryKind::Periodic,
            constraints: unit_interval()?,
            default_order: 2,
            default_n: 32,
            t_final: 1.0,
            stabilizer: false,
            error_component: 0,
            exact: Some(Arc::new(|x, t| {
                let (s, c) = (-2.0 * PI * t).sin_cos();
                let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
                vec![rotation_shapes(0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy)]
            })),
            ic: |_| Arc::new(|x, _| vec![rotation_shapes(x[0], x[1])]),
        },
        "burgers-compression" => CaseDefinition {
            name: "burgers-compression",
            eq: EquationSet::Burgers,
            lo: [0.0, 0.0],
            hi: [1.0, 0.0],
            boundary: BoundaryKind::Periodic,
            constraints: unit_interval()?,
            default_order: 3,
            default_n: 24,
            t_final: 0.5,
            stabilizer: false,
            error_component: 0,
            exact: None,
            ic: |_| Arc::new(|x, _| vec![(1.0 - 2.0 * x[0]).max(2.0 * x[0] - 1.0)]),
        },
        "euler-pulse" => {
            let gamma = 1.4;
            CaseDefinition {
                name: "euler-pulse",
                eq: EquationSet::Euler { dim: 1, gamma },
                lo: [-0.5, 0.0],
                hi: [0.5, 0.0],
                boundary: BoundaryKind::Periodic,
                constraints: euler_positivity_set(DEFAULT_RHO_MIN, DEFAULT_P_MIN, gamma)?,
                default_order: 3,
                default_n: 20,
                t_final: 1.0,
                stabilizer: false,
                error_component: 0,
                exact: Some(Arc::new(move |x, t| pulse(wrap(x[0] - t, -0.5, 0.5), gamma))),
                ic: |_| Arc::new(|x, _| pulse(x[0], 1.4)),
            }
        }
        "leblanc" => {
            let gamma = 5.0 / 3.0;
            CaseDefinition {
                name: "leblanc",
                eq: EquationSet::Euler { dim: 1, gamma },
                lo: [0.0, 0.0],
                hi: [9.0, 0.0],
                boundary: BoundaryKind::Dirichlet,
                constraints: euler_positivity_set(DEFAULT_RHO_MIN, DEFAULT_P_MIN, gamma)?,
                default_order: 3,
                default_n: 1200,
                t_final: 6.0,
                stabilizer: true,
                error_component: 0,
                exact: None,
                ic: |_| {
                    Arc::new(|x, _| {
                        let g1 = 5.0 / 3.0 - 1.0;
                        if x[0] <= 3.0 {
                            primitive_1d(1.0, 0.0, g1 * 1e-1, 5.0 / 3.0)
                        } else {
                            primitive_1d(1e-3, 0.0, g1 * 1e-10, 5.0 / 3.0)
                        }
                    })
                },
            }
        }
        "sedov" => {
            let gamma = 1.4;
            CaseDefinition {
                name: "sedov",
                eq: EquationSet::Euler { dim: 2, gamma },
                lo: [-1.2, -1.2],
                hi: [1.2, 1.2],
                boundary: BoundaryKind::Periodic,
                constraints: euler_positivity_set(DEFAULT_RHO_MIN, DEFAULT_P_MIN, gamma)?,
                default_order: 2,
                default_n: 257,
                t_final: 1.0,
                stabilizer: true,
                error_component: 0,
                exact: None,
                ic: sedov_ic,
            }
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown case '{name}'; available: {}",
                CASE_NAMES.join(", ")
            )))
        }
    };
    Ok(c)
}

/// Map `x` into the periodic cell `[lo, hi)`.
pub fn wrap(x: f64, lo: f64, hi: f64) -> f64 {
    lo + (x - lo).rem_euclid(hi - lo)
}

/// Slack on closed-interval tests so node coordinates that land on an
/// interval end up to rounding count as inside.
const EDGE_SLACK: f64 = 1e-12;

/// Gaussian, square, and semi-ellipse on `[0, 1]`.
pub fn waveforms(x: f64) -> f64 {
    let s = 2.0 * x;
    if (s - 0.3).abs() <= 0.25 + EDGE_SLACK {
        (-300.0 * (s - 0.3).powi(2)).exp()
    } else if (s - 0.9).abs() <= 0.2 + EDGE_SLACK {
        1.0
    } else if (s - 1.6).abs() <= 0.2 + EDGE_SLACK {
        (1.0 - ((s - 1.6) / 0.2).powi(2)).max(0.0).sqrt()
    } else {
        0.0
    }
}

/// Notched cylinder, smooth hump and cone on the unit square.
pub fn rotation_shapes(x: f64, y: f64) -> f64 {
    let r0 = 0.15;
    let dist = |cx: f64, cy: f64| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
    if dist(0.5, 0.75) <= r0 {
        let notch = (x - 0.5).abs() <= 0.025 && (0.6..=0.85).contains(&y);
        return if notch { 0.0 } else { 1.0 };
    }
    let r = dist(0.25, 0.5);
    if r <= r0 {
        return 0.25 * (1.0 + (PI * r / r0).cos());
    }
    let r = dist(0.5, 0.25);
    if r <= r0 {
        return 1.0 - r / r0;
    }
    0.0
}

/// Conserved state from density, velocity and pressure.
pub fn primitive_1d(rho: f64, v: f64, p: f64, gamma: f64) -> Vec<f64> {
    vec![rho, rho * v, p / (gamma - 1.0) + 0.5 * rho * v * v]
}

fn pulse(x: f64, gamma: f64) -> Vec<f64> {
    let rho = (-200.0 * x * x).exp() + 2.0 * DEFAULT_RHO_MIN;
    primitive_1d(rho, 1.0, 2.0 * DEFAULT_P_MIN, gamma)
}

fn sedov_ic(mesh: &Mesh) -> StateFn {
    let gamma = 1.4;
    let center = mesh.element_at(mesh.nx / 2, mesh.ny / 2);
    let v0 = mesh.volume(center);
    let p0 = 4.0 * (gamma - 1.0) * SEDOV_E0 / v0;
    let pa = 1e-6;
    Arc::new(move |_, e| {
        let p = if e == center { p0 } else { pa };
        vec![1.0, 0.0, 0.0, p / (gamma - 1.0)]
    })
}
