//! Constraint functionals `g(u) >= 0` and the admissible sets used by the cases.

use crate::error::{Error, Result};

/// The quantity `μ(u)` a bound is placed on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Component(usize),
    /// Euler density (component 0).
    Density,
    /// Euler pressure for `u = (ρ, m_1..m_d, E)`.
    Pressure { gamma: f64 },
}

impl Quantity {
    pub fn is_linear(&self) -> bool {
        !matches!(self, Quantity::Pressure { .. })
    }

    /// `μ(u)`. Pressure at zero density is NaN here; see [`Quantity::try_eval`].
    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        match *self {
            Quantity::Component(i) => u[i],
            Quantity::Density => u[0],
            Quantity::Pressure { gamma } => pressure(u, gamma),
        }
    }

    pub fn try_eval(&self, u: &[f64]) -> Result<f64> {
        if let Quantity::Pressure { gamma } = *self {
            euler_pressure(u, gamma)
        } else {
            Ok(self.eval(u))
        }
    }

    pub fn name(&self) -> String {
        match self {
            Quantity::Component(i) => format!("u{i}"),
            Quantity::Density => "density".into(),
            Quantity::Pressure { .. } => "pressure".into(),
        }
    }
}

#[inline]
fn pressure(u: &[f64], gamma: f64) -> f64 {
    let rho = u[0];
    let n = u.len();
    let mut mm = 0.0;
    for m in &u[1..n - 1] {
        mm += m * m;
    }
    (gamma - 1.0) * (u[n - 1] - 0.5 * mm / rho)
}

/// `P = (γ-1)(E - |m|²/2ρ)` for `u = (ρ, m.., E)`.
pub fn euler_pressure(u: &[f64], gamma: f64) -> Result<f64> {
    if u.len() < 3 {
        return Err(Error::Usage(format!("Euler state needs at least 3 components, got {}", u.len())));
    }
    if u[0] == 0.0 {
        return Err(Error::Numerical("pressure evaluated at zero density".into()));
    }
    Ok(pressure(u, gamma))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundSide {
    /// `g = μ - c`
    Lower,
    /// `g = c - μ`
    Upper,
}

/// A quasiconcave constraint functional `g(u)`; admissible states have `g >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintFunctional {
    pub name: String,
    pub quantity: Quantity,
    pub side: BoundSide,
    pub bound: f64,
}

impl ConstraintFunctional {
    pub fn is_linear(&self) -> bool {
        self.quantity.is_linear()
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        let mu = self.quantity.eval(u);
        match self.side {
            BoundSide::Lower => mu - self.bound,
            BoundSide::Upper => self.bound - mu,
        }
    }

    pub fn try_eval(&self, u: &[f64]) -> Result<f64> {
        let mu = self.quantity.try_eval(u)?;
        Ok(match self.side {
            BoundSide::Lower => mu - self.bound,
            BoundSide::Upper => self.bound - mu,
        })
    }
}

/// `g(u) = μ(u) - c`.
pub fn min_principle(quantity: Quantity, c: f64) -> ConstraintFunctional {
    ConstraintFunctional {
        name: format!("{}>={c:e}", quantity.name()),
        quantity,
        side: BoundSide::Lower,
        bound: c,
    }
}

/// `g1 = μ - a`, `g2 = b - μ`.
pub fn interval_bounds(quantity: Quantity, a: f64, b: f64) -> Result<(ConstraintFunctional, ConstraintFunctional)> {
    if !(b > a) {
        return Err(Error::Config(format!("interval bounds need b > a, got [{a}, {b}]")));
    }
    let upper = ConstraintFunctional {
        name: format!("{}<={b:e}", quantity.name()),
        quantity,
        side: BoundSide::Upper,
        bound: b,
    };
    Ok((min_principle(quantity, a), upper))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApplicationMode {
    /// Every α from the unlimited solution; the largest is applied once.
    IndependentMax,
    /// Limit constraint by constraint in declared order.
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub constraints: Vec<ConstraintFunctional>,
    pub mode: ApplicationMode,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<ConstraintFunctional>, mode: ApplicationMode) -> Self {
        ConstraintSet { constraints, mode }
    }

    /// Scalar interval `[a, b]` on component 0, limited independently.
    pub fn scalar_interval(a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = interval_bounds(Quantity::Component(0), a, b)?;
        Ok(ConstraintSet::new(vec![lo, hi], ApplicationMode::IndependentMax))
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

pub const DEFAULT_RHO_MIN: f64 = 1e-11;
pub const DEFAULT_P_MIN: f64 = 1e-11;

/// Density then pressure lower bounds, limited sequentially.
pub fn euler_positivity_set(rho_min: f64, p_min: f64, gamma: f64) -> Result<ConstraintSet> {
    if !(rho_min > 0.0 && p_min > 0.0) {
        return Err(Error::Config(format!("positivity bounds must be > 0, got rho_min={rho_min}, p_min={p_min}")));
    }
    Ok(ConstraintSet::new(
        vec![
            min_principle(Quantity::Density, rho_min),
            min_principle(Quantity::Pressure { gamma }, p_min),
        ],
        ApplicationMode::Sequential,
    ))
}

/// Largest shortfall `min(g(a), g(b)) - g(θa + (1-θ)b)` over `n` interior points
/// of the segment; positive values witness a quasiconcavity violation.
pub fn quasiconcavity_defect(g: &ConstraintFunctional, ua: &[f64], ub: &[f64], n: usize) -> f64 {
    let floor = g.eval(ua).min(g.eval(ub));
    let mut u = vec![0.0; ua.len()];
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=n {
        let t = k as f64 / (n + 1) as f64;
        for ((ui, a), b) in u.iter_mut().zip(ua).zip(ub) {
            *ui = t * a + (1.0 - t) * b;
        }
        worst = worst.max(floor - g.eval(&u));
    }
    worst
}
