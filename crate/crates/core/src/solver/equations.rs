//! Physical fluxes, wave speeds and interface fluxes.

use crate::error::{Error, Result};

/// Advection velocity `c(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AdvectionField {
    Constant([f64; 2]),
    /// Rigid rotation `ω (-(y - y_c), x - x_c)`.
    Rotation { center: [f64; 2], omega: f64 },
}

impl AdvectionField {
    #[inline]
    pub fn velocity(&self, x: &[f64; 2]) -> [f64; 2] {
        match *self {
            AdvectionField::Constant(c) => c,
            AdvectionField::Rotation { center, omega } => [-omega * (x[1] - center[1]), omega * (x[0] - center[0])],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EquationSet {
    /// `u_t + ∇·(c(x) u) = 0`.
    Advection { dim: usize, field: AdvectionField },
    /// `u_t + (u²/2)_x = 0`.
    Burgers,
    /// `u = (ρ, m, E)`.
    Euler { dim: usize, gamma: f64 },
}

impl EquationSet {
    pub fn dim(&self) -> usize {
        match *self {
            EquationSet::Advection { dim, .. } | EquationSet::Euler { dim, .. } => dim,
            EquationSet::Burgers => 1,
        }
    }

    pub fn ncomp(&self) -> usize {
        match *self {
            EquationSet::Euler { dim, .. } => dim + 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EquationSet::Advection { .. } => "linear-advection",
            EquationSet::Burgers => "burgers",
            EquationSet::Euler { dim: 1, .. } => "euler-1d",
            EquationSet::Euler { .. } => "euler-2d",
        }
    }

    /// Flux component along `axis` at physical point `x`.
    #[inline]
    pub fn flux(&self, u: &[f64], x: &[f64; 2], axis: usize, out: &mut [f64]) {
        match *self {
            EquationSet::Advection { field, .. } => out[0] = field.velocity(x)[axis] * u[0],
            EquationSet::Burgers => out[0] = 0.5 * u[0] * u[0],
            EquationSet::Euler { dim, gamma } => {
                let rho = u[0];
                let vk = u[1 + axis] / rho;
                let p = pressure(u, dim, gamma);
                out[0] = u[1 + axis];
                for j in 0..dim {
                    out[1 + j] = u[1 + j] * vk;
                }
                out[1 + axis] += p;
                out[dim + 1] = (u[dim + 1] + p) * vk;
            }
        }
    }

    /// Sum over axes of the largest signal speed; used for the time step.
    #[inline]
    pub fn max_speed(&self, u: &[f64], x: &[f64; 2]) -> f64 {
        match *self {
            EquationSet::Advection { dim, field } => {
                let c = field.velocity(x);
                c[..dim].iter().map(|v| v.abs()).sum()
            }
            EquationSet::Burgers => u[0].abs(),
            EquationSet::Euler { dim, gamma } => {
                let a = sound_speed(u, dim, gamma);
                (0..dim).map(|k| (u[1 + k] / u[0]).abs() + a).sum()
            }
        }
    }

    /// Interface flux in the `+axis` direction between left state `ul` and
    /// right state `ur`: upwind for advection, Rusanov otherwise.
    #[inline]
    pub fn numerical_flux(&self, ul: &[f64], ur: &[f64], x: &[f64; 2], axis: usize, out: &mut [f64]) -> Result<()> {
        match *self {
            EquationSet::Advection { field, .. } => {
                let cn = field.velocity(x)[axis];
                out[0] = upwind_flux(ul[0], ur[0], cn);
                Ok(())
            }
            EquationSet::Burgers => {
                let s = ul[0].abs().max(ur[0].abs());
                out[0] = 0.25 * (ul[0] * ul[0] + ur[0] * ur[0]) - 0.5 * s * (ur[0] - ul[0]);
                Ok(())
            }
            EquationSet::Euler { dim, gamma } => rusanov_euler(ul, ur, x, axis, dim, gamma, out),
        }
    }
}

/// `(c·n) u⁻` when `c·n >= 0`, else `(c·n) u⁺`.
#[inline]
pub fn upwind_flux(u_minus: f64, u_plus: f64, cn: f64) -> f64 {
    if cn >= 0.0 {
        cn * u_minus
    } else {
        cn * u_plus
    }
}

#[inline]
fn pressure(u: &[f64], dim: usize, gamma: f64) -> f64 {
    let mut mm = 0.0;
    for k in 0..dim {
        mm += u[1 + k] * u[1 + k];
    }
    (gamma - 1.0) * (u[dim + 1] - 0.5 * mm / u[0])
}

#[inline]
fn sound_speed(u: &[f64], dim: usize, gamma: f64) -> f64 {
    (gamma * pressure(u, dim, gamma) / u[0]).max(0.0).sqrt()
}

fn rusanov_euler(ul: &[f64], ur: &[f64], x: &[f64; 2], axis: usize, dim: usize, gamma: f64, out: &mut [f64]) -> Result<()> {
    let eq = EquationSet::Euler { dim, gamma };
    let mut s: f64 = 0.0;
    for (side, u) in [("left", ul), ("right", ur)] {
        let p = pressure(u, dim, gamma);
        if !(u[0] > 0.0 && p > 0.0) {
            return Err(Error::InadmissibleState {
                location: format!("face x = {:?}, axis {axis}, {side} state", &x[..dim]),
                detail: format!("density {:e}, pressure {:e}", u[0], p),
            });
        }
        s = s.max((u[1 + axis] / u[0]).abs() + (gamma * p / u[0]).sqrt());
    }
    let n = dim + 2;
    let mut fl = [0.0; 4];
    let mut fr = [0.0; 4];
    eq.flux(ul, x, axis, &mut fl[..n]);
    eq.flux(ur, x, axis, &mut fr[..n]);
    for c in 0..n {
        out[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * s * (ur[c] - ul[c]);
    }
    Ok(())
}
