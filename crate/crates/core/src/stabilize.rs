//! A posteriori subcell stabilization: a first-order finite-volume candidate on
//! the Gauss–Lobatto subcell grid, a relaxed discrete maximum principle check,
//! and the switch between the two candidates.

use crate::constraints::Quantity;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndicatorConfig {
    pub enabled: bool,
    /// Relaxation of the low-order extrema.
    pub eps_d: f64,
    /// Indicator variable (density for Euler, `u` for scalars).
    pub quantity: Quantity,
}

impl IndicatorConfig {
    pub fn new(quantity: Quantity) -> Self {
        IndicatorConfig {
            enabled: true,
            eps_d: 1e-2,
            quantity,
        }
    }

    pub fn disabled(quantity: Quantity) -> Self {
        IndicatorConfig {
            enabled: false,
            ..Self::new(quantity)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_d > 0.0) {
            return Err(Error::Config(format!("indicator relaxation must be > 0, got {}", self.eps_d)));
        }
        Ok(())
    }
}

/// First-order subcell update along one line of nodes, accumulated into `rate`.
///
/// `u` holds `n` node states (`ncomp` each), `weights` the Gauss–Lobatto
/// weights; subcell `i` has width `weights[i] * h / 2`. Interior subcell
/// interfaces use `flux(u_i, u_{i+1}, i, out)`; the element faces use the
/// supplied DG interface fluxes, so the subcell means telescope to the DG mean
/// update. `stride` addresses node `i` as `i * stride` within `u` / `rate`.
#[allow(clippy::too_many_arguments)]
pub fn subcell_line_rate<F>(
    u: &[f64],
    rate: &mut [f64],
    n: usize,
    stride: usize,
    ncomp: usize,
    weights: &[f64],
    h: f64,
    f_left: &[f64],
    f_right: &[f64],
    mut flux: F,
) -> Result<()>
where
    F: FnMut(&[f64], &[f64], usize, &mut [f64]) -> Result<()>,
{
    let mut prev = [0.0; 8];
    let mut next = [0.0; 8];
    prev[..ncomp].copy_from_slice(&f_left[..ncomp]);
    for i in 0..n {
        if i + 1 < n {
            let a = i * stride * ncomp;
            let b = (i + 1) * stride * ncomp;
            flux(&u[a..a + ncomp], &u[b..b + ncomp], i, &mut next[..ncomp])?;
        } else {
            next[..ncomp].copy_from_slice(&f_right[..ncomp]);
        }
        let inv = 2.0 / (weights[i] * h);
        let o = i * stride * ncomp;
        for c in 0..ncomp {
            rate[o + c] -= inv * (next[c] - prev[c]);
        }
        prev = next;
    }
    Ok(())
}

/// Forward-Euler low-order candidate for a 1D element: `u + dt * rate`.
#[allow(clippy::too_many_arguments)]
pub fn low_order_update<F>(
    u: &[f64],
    ncomp: usize,
    weights: &[f64],
    h: f64,
    f_left: &[f64],
    f_right: &[f64],
    dt: f64,
    flux: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &[f64], usize, &mut [f64]) -> Result<()>,
{
    let n = weights.len();
    let mut rate = vec![0.0; u.len()];
    subcell_line_rate(u, &mut rate, n, 1, ncomp, weights, h, f_left, f_right, flux)?;
    Ok(u.iter().zip(&rate).map(|(a, r)| a + dt * r).collect())
}

/// Relaxed discrete maximum principle: `true` (use the low-order candidate)
/// when any high-order value leaves `[(1-ε)min μ_L, (1+ε)max μ_L]`.
pub fn dmp_indicator(mu_low: &[f64], mu_high: &[f64], eps_d: f64) -> bool {
    let lo = mu_low.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mu_low.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = ((1.0 - eps_d) * lo, (1.0 + eps_d) * hi);
    mu_high.iter().any(|&m| !(m >= lo && m <= hi))
}

/// Indicator on node-major element states.
pub fn element_indicator(u_low: &[f64], u_high: &[f64], ncomp: usize, cfg: &IndicatorConfig) -> bool {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in u_low.chunks_exact(ncomp) {
        let m = cfg.quantity.eval(s);
        lo = lo.min(m);
        hi = hi.max(m);
    }
    let (lo, hi) = ((1.0 - cfg.eps_d) * lo, (1.0 + cfg.eps_d) * hi);
    u_high.chunks_exact(ncomp).any(|s| {
        let m = cfg.quantity.eval(s);
        !(m >= lo && m <= hi)
    })
}

/// `u_L` when `pi` is set, else `u_H`.
pub fn select<'a>(u_high: &'a [f64], u_low: &'a [f64], pi: bool) -> &'a [f64] {
    if pi {
        u_low
    } else {
        u_high
    }
}
