//! Squeeze limiting `û = (1-α)u + αū` with α chosen from the minimum of the
//! modified functional `h` over the whole element.
//!
//! The minimum is searched by a few Newton / projected gradient-descent
//! iterations started from the best solution node, then corrected downwards by
//! `Δh = ‖J‖‖Δx‖` so the returned value `h**` is a lower bound in practice.
//! Running zero iterations reproduces classical node-based limiting.

use crate::basis::{gauss_legendre, ElementBasis, ModalSolution, MonomialBasis, MAX_ORDER};
use crate::constraints::{ApplicationMode, BoundSide, ConstraintFunctional, ConstraintSet, Quantity};
use crate::error::{Error, Result};
use crate::reference::{ElementKind, RefPoint, ReferenceElement, DEFAULT_TOL};

/// Largest number of solution components handled on the stack.
pub const MAX_COMPONENTS: usize = 6;
/// Largest constraint count per set.
pub const MAX_CONSTRAINTS: usize = 4;
const MAX_MODES: usize = (MAX_ORDER + 1) * (MAX_ORDER + 1);
/// Upper bound on the initial sample count (quad lattice of both point sets).
const MAX_SAMPLES: usize = (2 * MAX_ORDER + 2) * (2 * MAX_ORDER + 2);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimiterMode {
    None,
    Discrete,
    Continuous,
}

impl LimiterMode {
    pub fn name(self) -> &'static str {
        match self {
            LimiterMode::None => "none",
            LimiterMode::Discrete => "discrete",
            LimiterMode::Continuous => "continuous",
        }
    }
}

impl std::str::FromStr for LimiterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(LimiterMode::None),
            "discrete" => Ok(LimiterMode::Discrete),
            "continuous" => Ok(LimiterMode::Continuous),
            _ => Err(Error::Config(format!(
                "unknown limiter mode `{s}` (expected none, discrete or continuous)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimiterConfig {
    pub mode: LimiterMode,
    pub n_iters: usize,
    pub fd_step: f64,
    pub eps: f64,
    pub max_backtracks: usize,
    pub armijo_c: f64,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        LimiterConfig {
            mode: LimiterMode::Continuous,
            n_iters: 3,
            fd_step: 1e-4,
            eps: 1e-12,
            max_backtracks: 5,
            armijo_c: 0.5,
        }
    }
}

impl LimiterConfig {
    pub fn discrete() -> Self {
        LimiterConfig {
            mode: LimiterMode::Discrete,
            ..Default::default()
        }
    }

    /// Optimizer iterations actually run; discrete mode is the zero-iteration path.
    pub fn iterations(&self) -> usize {
        match self.mode {
            LimiterMode::Continuous => self.n_iters,
            _ => 0,
        }
    }

    /// Initial line-search length, roughly the mean node spacing.
    pub fn beta0(order: usize) -> f64 {
        2.0 / (order as f64 + 1.0)
    }
}

/// Modified functional: `g/g_mean` for `g >= 0`, `g/(g_mean - g)` otherwise.
#[inline]
pub fn eval_h(g: f64, g_mean: f64) -> f64 {
    if g >= 0.0 {
        g / g_mean
    } else {
        g / (g_mean - g)
    }
}

/// Centered-difference gradient.
pub fn fd_jacobian<F: Fn(&RefPoint) -> f64>(f: F, x: &RefPoint, dx: f64, dim: usize) -> [f64; 2] {
    let mut j = [0.0; 2];
    for (k, jk) in j.iter_mut().enumerate().take(dim) {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += dx;
        xm[k] -= dx;
        *jk = (f(&xp) - f(&xm)) / (2.0 * dx);
    }
    j
}

/// Centered-difference Hessian (3-point diagonal, 4-point cross term).
pub fn fd_hessian<F: Fn(&RefPoint) -> f64>(f: F, x: &RefPoint, dx: f64, dim: usize) -> [[f64; 2]; 2] {
    let mut s = Stencil::default();
    s.fill(&f, x, dx, dim, &mut |_, _| {});
    s.hess
}

#[derive(Clone, Copy, Debug, Default)]
struct Stencil {
    h0: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

impl Stencil {
    /// Gradient and Hessian from one 3-point (1D) or 9-point (2D) stencil.
    /// `seen` receives every stencil point and value.
    fn fill<F: Fn(&RefPoint) -> f64>(
        &mut self,
        f: &F,
        x: &RefPoint,
        dx: f64,
        dim: usize,
        seen: &mut impl FnMut(&RefPoint, f64),
    ) {
        let mut at = |ox: f64, oy: f64| {
            let p = [x[0] + ox, x[1] + oy];
            let v = f(&p);
            seen(&p, v);
            v
        };
        let c = at(0.0, 0.0);
        self.h0 = c;
        let xp = at(dx, 0.0);
        let xm = at(-dx, 0.0);
        self.grad = [(xp - xm) / (2.0 * dx), 0.0];
        self.hess = [[(xp - 2.0 * c + xm) / (dx * dx), 0.0], [0.0, 0.0]];
        if dim == 2 {
            let yp = at(0.0, dx);
            let ym = at(0.0, -dx);
            let pp = at(dx, dx);
            let pm = at(dx, -dx);
            let mp = at(-dx, dx);
            let mm = at(-dx, -dx);
            self.grad[1] = (yp - ym) / (2.0 * dx);
            self.hess[1][1] = (yp - 2.0 * c + ym) / (dx * dx);
            let cross = (pp - pm - mp + mm) / (4.0 * dx * dx);
            self.hess[0][1] = cross;
            self.hess[1][0] = cross;
        }
    }
}

/// Outcome of the bounded search for `min h` on one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Optimum {
    /// Minimum of `h` over the initial samples alone.
    pub h_sample: f64,
    /// Minimum over every evaluated point inside the element.
    pub h_star: f64,
    /// Corrected lower bound `max(-1, h* - Δh)`.
    pub h_starstar: f64,
    pub delta_h: f64,
    pub x_star: RefPoint,
    pub iterations: usize,
    /// At least one gradient-descent step was taken instead of Newton.
    pub fallback: bool,
}

struct HField<'a> {
    mono: &'a MonomialBasis,
    coeffs: &'a [f64],
    ncomp: usize,
    g: &'a ConstraintFunctional,
    g_mean: f64,
}

impl HField<'_> {
    #[inline]
    fn state(&self, x: &RefPoint, out: &mut [f64; MAX_COMPONENTS]) {
        let n = self.mono.len();
        let mut psi = [0.0; MAX_MODES];
        self.mono.eval_into(x, &mut psi[..n]);
        for (c, o) in out.iter_mut().enumerate().take(self.ncomp) {
            let cf = &self.coeffs[c * n..(c + 1) * n];
            let mut s = 0.0;
            for (a, b) in cf.iter().zip(&psi[..n]) {
                s += a * b;
            }
            *o = s;
        }
    }

    #[inline]
    fn eval(&self, x: &RefPoint) -> f64 {
        if let Some((comp, sign)) = self.linear_part() {
            // g(u(x)) = g(ū) ± (μ(x) - μ̄): summing only the non-constant modes
            // keeps the rounding relative to the variation, not to ū
            let n = self.mono.len();
            let mut psi = [0.0; MAX_MODES];
            self.mono.eval_into(x, &mut psi[..n]);
            let cf = &self.coeffs[comp * n..(comp + 1) * n];
            let mut dev = 0.0;
            for k in 1..n {
                dev += cf[k] * (psi[k] - self.mono.mean_weights[k]);
            }
            return eval_h(self.g_mean + sign * dev, self.g_mean);
        }
        let mut u = [0.0; MAX_COMPONENTS];
        self.state(x, &mut u);
        eval_h(self.g.eval(&u[..self.ncomp]), self.g_mean)
    }

    #[inline]
    fn linear_part(&self) -> Option<(usize, f64)> {
        let comp = match self.g.quantity {
            Quantity::Component(c) => c,
            Quantity::Density => 0,
            Quantity::Pressure { .. } => return None,
        };
        let sign = match self.g.side {
            BoundSide::Lower => 1.0,
            BoundSide::Upper => -1.0,
        };
        Some((comp, sign))
    }
}

#[inline]
fn norm(v: &[f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// Largest number of starting points per search.
pub const MAX_STARTS: usize = 16;
/// Searches with fewer local minima are topped up with the lowest samples.
const MIN_STARTS: usize = 4;

/// Neighbor lists used to pick descent starts. On segments and quads two
/// samples are neighbors when their coordinates are adjacent (or equal) in the
/// sorted list of distinct coordinates along every axis; on triangles when
/// they lie within half the initial line-search length.
pub fn sample_neighbors(kind: ElementKind, points: &[RefPoint], order: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    if kind == ElementKind::Triangle {
        let radius = 0.5 * LimiterConfig::beta0(order);
        return (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && norm(&[points[j][0] - points[i][0], points[j][1] - points[i][1]]) <= radius)
                    .collect()
            })
            .collect();
    }
    let rank = |axis: usize| -> Vec<usize> {
        let mut c: Vec<f64> = points.iter().map(|p| p[axis]).collect();
        c.sort_by(f64::total_cmp);
        c.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        points
            .iter()
            .map(|p| c.iter().position(|v| (v - p[axis]).abs() <= 1e-12).unwrap_or(0))
            .collect()
    };
    let rx = rank(0);
    let ry = rank(1);
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && rx[i].abs_diff(rx[j]) <= 1 && ry[i].abs_diff(ry[j]) <= 1)
                .collect()
        })
        .collect()
}

/// Sample adjacency plus, for samples on a face of a 2D element, the
/// neighbors sharing that face.
#[derive(Clone, Debug)]
pub struct SampleGraph {
    pub neighbors: Vec<Vec<usize>>,
    pub along_face: Vec<Option<Vec<usize>>>,
}

impl SampleGraph {
    pub fn new(reference: &ReferenceElement, points: &[RefPoint], order: usize) -> Self {
        let neighbors = sample_neighbors(reference.kind, points, order);
        let along_face = if reference.dim() == 1 {
            vec![None; points.len()]
        } else {
            let faces: Vec<Vec<usize>> = points.iter().map(|p| reference.active_faces(p, DEFAULT_TOL)).collect();
            (0..points.len())
                .map(|i| {
                    if faces[i].is_empty() {
                        return None;
                    }
                    Some(neighbors[i].iter().copied().filter(|&j| faces[j].iter().any(|f| faces[i].contains(f))).collect())
                })
                .collect()
        };
        SampleGraph { neighbors, along_face }
    }
}

#[inline]
fn no_larger(samples: &[f64], i: usize, others: &[usize]) -> bool {
    let v = samples[i];
    others.iter().all(|&j| v < samples[j] || (v == samples[j] && i < j))
}

/// Descent starts, in order: samples no larger than any neighbor, then (2D)
/// samples on a face no larger than their neighbors on that face, each group
/// lowest first and at most [`MAX_STARTS`] in total; then the lowest remaining
/// samples until at least four are taken. The global argmin always comes first.
fn starting_points(samples: &[f64], graph: &SampleGraph, out: &mut Vec<usize>) {
    out.clear();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]).then(a.cmp(&b)));
    for &i in &order {
        if no_larger(samples, i, &graph.neighbors[i]) {
            out.push(i);
        }
    }
    for &i in &order {
        if let Some(f) = &graph.along_face[i] {
            if !out.contains(&i) && no_larger(samples, i, f) {
                out.push(i);
            }
        }
    }
    out.truncate(MAX_STARTS);
    for &i in &order {
        if out.len() >= MIN_STARTS {
            break;
        }
        if !out.contains(&i) {
            out.push(i);
        }
    }
}

/// One local descent: `(h*, x*, Δh, iterations, fallback)`, or `None` when a
/// non-finite value was met.
fn descend(
    field: &HField<'_>,
    reference: &ReferenceElement,
    x0: RefPoint,
    h0: f64,
    order: usize,
    cfg: &LimiterConfig,
) -> Option<(f64, RefPoint, f64, usize, bool)> {
    let dim = reference.dim();
    let mut x = x0;
    let mut h_cur = h0;
    let mut h_star = h0;
    let mut x_star = x;
    let mut j_last = [0.0; 2];
    let mut dx_last = [0.0; 2];
    let mut iterations = 0;
    let mut fallback = false;
    let beta0 = LimiterConfig::beta0(order);
    let tol = DEFAULT_TOL;

    let mut stencil = Stencil::default();
    for _ in 0..cfg.iterations() {
        iterations += 1;
        let mut bad = false;
        stencil.fill(&|p: &RefPoint| field.eval(p), &x, cfg.fd_step, dim, &mut |p, v| {
            if !v.is_finite() {
                bad = true;
            } else if v < h_star && reference.contains_point(p, tol) {
                h_star = v;
                x_star = *p;
            }
        });
        let jac = stencil.grad;
        let hs = stencil.hess;
        if bad || !jac.iter().chain(hs.iter().flatten()).all(|v| v.is_finite()) {
            return None;
        }

        // a face that blocks the descent direction turns the search into a 1D
        // one along that face; plain projection of the full step converges
        // very slowly there
        let blocked = if dim == 2 { blocking_face(reference, &x, &jac, tol) } else { Blocked::None };
        let (newton, raw) = match blocked {
            Blocked::Corner => {
                j_last = jac;
                dx_last = [0.0; 2];
                break;
            }
            Blocked::Face(t) => {
                let jt = jac[0] * t[0] + jac[1] * t[1];
                let ht = t[0] * (hs[0][0] * t[0] + hs[0][1] * t[1]) + t[1] * (hs[1][0] * t[0] + hs[1][1] * t[1]);
                if jt == 0.0 {
                    j_last = jac;
                    dx_last = [0.0; 2];
                    break;
                }
                if ht > cfg.eps {
                    (true, [-jt / ht * t[0], -jt / ht * t[1]])
                } else {
                    fallback = true;
                    let s = -beta0 * jt.signum();
                    (false, [s * t[0], s * t[1]])
                }
            }
            Blocked::None => match free_step(&jac, &hs, dim, beta0, cfg) {
                Some((nt, raw)) => {
                    fallback |= !nt;
                    (nt, raw)
                }
                None => {
                    j_last = jac;
                    dx_last = [0.0; 2];
                    break;
                }
            },
        };
        // backtracking on either direction: a Newton step only has to
        // decrease h, a gradient step has to pass the Armijo test
        let c = if newton { 0.0 } else { cfg.armijo_c };
        let mut s = reference.project_step_unchecked(&x, &raw, tol);
        let mut h_new = f64::NAN;
        for k in 0..=cfg.max_backtracks {
            if k > 0 {
                s = [0.5 * s[0], 0.5 * s[1]];
            }
            let xn = [x[0] + s[0], x[1] + s[1]];
            h_new = field.eval(&xn);
            if !h_new.is_finite() {
                break;
            }
            if h_new < h_star {
                h_star = h_new;
                x_star = xn;
            }
            if h_new <= h_cur + c * (jac[0] * s[0] + jac[1] * s[1]) {
                break;
            }
        }
        let step = s;
        if !h_new.is_finite() {
            return None;
        }
        x = [x[0] + step[0], x[1] + step[1]];
        h_cur = h_new;
        if h_new < h_star {
            h_star = h_new;
            x_star = x;
        }
        j_last = jac;
        dx_last = step;
        if step == [0.0, 0.0] {
            // stuck against the boundary: further iterations repeat this one
            break;
        }
    }
    Some((h_star, x_star, norm(&j_last) * norm(&dx_last), iterations, fallback))
}

enum Blocked {
    None,
    /// Unit tangent of the single face the descent direction leaves through.
    Face(RefPoint),
    Corner,
}

fn blocking_face(reference: &ReferenceElement, x: &RefPoint, jac: &[f64; 2], tol: f64) -> Blocked {
    let mut out = Blocked::None;
    for f in &reference.faces {
        let d = f.normal[0] * x[0] + f.normal[1] * x[1] - f.offset;
        if d.abs() <= tol && -(f.normal[0] * jac[0] + f.normal[1] * jac[1]) > 0.0 {
            out = match out {
                Blocked::None => Blocked::Face([-f.normal[1], f.normal[0]]),
                _ => Blocked::Corner,
            };
        }
    }
    out
}

/// Unconstrained Newton step when the Hessian is positive definite, else the
/// normalized gradient step; `None` for a zero gradient.
fn free_step(jac: &[f64; 2], hs: &[[f64; 2]; 2], dim: usize, beta0: f64, cfg: &LimiterConfig) -> Option<(bool, RefPoint)> {
    let newton = if dim == 1 {
        hs[0][0] > cfg.eps
    } else {
        let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
        det > cfg.eps && hs[0][0] + hs[1][1] > 0.0
    };
    if newton {
        let raw = if dim == 1 {
            [-jac[0] / hs[0][0], 0.0]
        } else {
            let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
            [
                -(hs[1][1] * jac[0] - hs[0][1] * jac[1]) / det,
                -(-hs[1][0] * jac[0] + hs[0][0] * jac[1]) / det,
            ]
        };
        return Some((true, raw));
    }
    let gnorm = norm(jac);
    if gnorm == 0.0 {
        return None;
    }
    Some((false, [-beta0 * jac[0] / gnorm, -beta0 * jac[1] / gnorm]))
}

/// Search for the minimum of `h` from precomputed sample values.
///
/// `samples[i]` holds `h` at `points[i]`. Descents start from the points
/// picked by [`starting_points`]; the one reaching the lowest `h*` supplies
/// `h*` and `Δh`. Non-finite values anywhere force `h** = -1`.
fn search(
    field: &HField<'_>,
    reference: &ReferenceElement,
    points: &[RefPoint],
    samples: &[f64],
    graph: &SampleGraph,
    order: usize,
    cfg: &LimiterConfig,
) -> Optimum {
    let mut best = 0;
    let mut finite = true;
    for (i, &v) in samples.iter().enumerate() {
        if !v.is_finite() {
            finite = false;
        } else if v < samples[best] || !samples[best].is_finite() {
            best = i;
        }
    }
    let h_sample = samples[best];
    let mut out = Optimum {
        h_sample,
        h_star: h_sample,
        h_starstar: h_sample,
        delta_h: 0.0,
        x_star: points[best],
        iterations: 0,
        fallback: false,
    };
    if !finite {
        out.delta_h = f64::INFINITY;
        out.h_starstar = -1.0;
        return out;
    }
    if cfg.iterations() == 0 {
        return out;
    }

    let mut starts = Vec::with_capacity(samples.len());
    starting_points(samples, graph, &mut starts);
    let mut lowest = f64::INFINITY;
    for &i in &starts {
        match descend(field, reference, points[i], samples[i], order, cfg) {
            Some((h_star, x_star, delta_h, iterations, fallback)) => {
                out.iterations += iterations;
                out.fallback |= fallback;
                if h_star < lowest {
                    lowest = h_star;
                    out.h_star = h_star;
                    out.delta_h = delta_h;
                    out.x_star = x_star;
                }
            }
            None => {
                out.delta_h = f64::INFINITY;
                out.h_starstar = -1.0;
                return out;
            }
        }
    }
    out.h_starstar = (out.h_star - out.delta_h).max(-1.0);
    out
}

/// Bounded minimization of `h` for one constraint.
///
/// `samples` is the initial point set (typically the solution nodes).
pub fn optimize_h(
    modal: &ModalSolution,
    g: &ConstraintFunctional,
    g_mean: f64,
    basis: &ElementBasis,
    samples: &[RefPoint],
    cfg: &LimiterConfig,
) -> Result<Optimum> {
    if !(g_mean >= cfg.eps) {
        return Err(Error::Usage(format!(
            "optimize_h needs g(mean) >= {:e}, got {g_mean:e}; use alpha = 1 instead",
            cfg.eps
        )));
    }
    if samples.is_empty() {
        return Err(Error::Usage("optimize_h needs at least one sample point".into()));
    }
    if modal.ncomp > MAX_COMPONENTS {
        return Err(Error::Usage(format!("at most {MAX_COMPONENTS} components supported")));
    }
    let field = HField {
        mono: &basis.monomial,
        coeffs: &modal.coeffs,
        ncomp: modal.ncomp,
        g,
        g_mean,
    };
    let values: Vec<f64> = samples.iter().map(|x| field.eval(x)).collect();
    let graph = SampleGraph::new(&basis.reference, samples, basis.order());
    Ok(search(&field, &basis.reference, samples, &values, &graph, basis.order(), cfg))
}

/// Node-based squeeze factor `max(0, g*/(g* - g_mean))`.
pub fn discrete_alpha(g_nodes: &[f64], g_mean: f64) -> f64 {
    let g_min = g_nodes.iter().copied().fold(f64::INFINITY, f64::min);
    if g_min >= 0.0 {
        0.0
    } else {
        (g_min / (g_min - g_mean)).max(0.0)
    }
}

/// Contract coefficient storage in place toward `mean` (monomial basis: the
/// constant mode is mode 0).
#[inline]
pub fn squeeze_coeffs(coeffs: &mut [f64], n_modes: usize, mean: &[f64], alpha: f64) {
    if alpha == 0.0 {
        return;
    }
    for (c, m) in mean.iter().enumerate() {
        let cf = &mut coeffs[c * n_modes..(c + 1) * n_modes];
        for v in cf.iter_mut() {
            *v *= 1.0 - alpha;
        }
        cf[0] += alpha * m;
    }
}

/// `û = (1-α)u + αū`.
pub fn apply_limit(modal: &ModalSolution, mean: &[f64], alpha: f64) -> Result<ModalSolution> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Usage(format!("squeeze factor {alpha} outside [0, 1]")));
    }
    let mut out = modal.clone();
    let n = out.n_modes();
    squeeze_coeffs(&mut out.coeffs, n, mean, alpha);
    Ok(out)
}

/// Per-constraint audit of one limiting decision.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstraintRecord {
    pub g_mean: f64,
    /// Factor applied for this constraint.
    pub alpha: f64,
    /// Node-based factor on the same input.
    pub alpha_discrete: f64,
    pub h_star: f64,
    pub h_starstar: f64,
    pub delta_h: f64,
    pub x_star: RefPoint,
    pub iterations: usize,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimiterReport {
    pub element: usize,
    pub records: Vec<ConstraintRecord>,
    /// Net factor: `û = (1-α)u + αū` with this α reproduces the limited solution.
    pub alpha: f64,
}

/// Limiter for one element type, constraint set and configuration.
#[derive(Clone, Debug)]
pub struct ElementLimiter<'a> {
    pub basis: &'a ElementBasis,
    pub set: &'a ConstraintSet,
    pub cfg: LimiterConfig,
    pub samples: Vec<RefPoint>,
    graph: SampleGraph,
}

impl<'a> ElementLimiter<'a> {
    /// Samples are the solution nodes (which already include the face
    /// quadrature points for Gauss–Lobatto tensor nodes) plus the
    /// Gauss–Legendre points; see [`initial_samples`].
    pub fn new(basis: &'a ElementBasis, set: &'a ConstraintSet, cfg: LimiterConfig) -> Result<Self> {
        if set.len() > MAX_CONSTRAINTS {
            return Err(Error::Config(format!("at most {MAX_CONSTRAINTS} constraints supported")));
        }
        let samples = initial_samples(basis);
        let graph = SampleGraph::new(&basis.reference, &samples, basis.order());
        Ok(ElementLimiter {
            basis,
            set,
            cfg,
            samples,
            graph,
        })
    }

    /// Limit `coeffs` (component-major monomial coefficients) in place.
    ///
    /// Writes one record per constraint into `records` and returns the net α.
    pub fn limit_coeffs(
        &self,
        element: usize,
        coeffs: &mut [f64],
        ncomp: usize,
        records: &mut [ConstraintRecord],
    ) -> Result<f64> {
        if self.cfg.mode == LimiterMode::None {
            for r in records.iter_mut().take(self.set.len()) {
                *r = ConstraintRecord::default();
            }
            return Ok(0.0);
        }
        if ncomp > MAX_COMPONENTS {
            return Err(Error::Usage(format!("at most {MAX_COMPONENTS} components supported")));
        }
        let mono = &self.basis.monomial;
        let n = mono.len();
        let mut mean = [0.0; MAX_COMPONENTS];
        for (c, m) in mean.iter_mut().enumerate().take(ncomp) {
            *m = coeffs[c * n..(c + 1) * n]
                .iter()
                .zip(&mono.mean_weights)
                .map(|(a, w)| a * w)
                .sum();
        }
        let mean = &mean[..ncomp];
        let sequential = self.set.mode == ApplicationMode::Sequential;
        let mut keep = 1.0; // Π (1 - α_k)
        let mut alpha_max: f64 = 0.0;
        let mut hvals = [0.0; MAX_SAMPLES];
        let nodes = self.basis.num_nodes();
        // discrete limiting looks at the solution nodes only
        let ns = if self.cfg.iterations() == 0 { nodes } else { self.samples.len() };

        for (k, g) in self.set.constraints.iter().enumerate() {
            let g_mean = g.eval(mean);
            if g_mean < -self.cfg.eps || g_mean.is_nan() {
                return Err(Error::InadmissibleMean {
                    element,
                    constraint: g.name.clone(),
                    value: g_mean,
                    time: f64::NAN,
                });
            }
            let rec = &mut records[k];
            *rec = ConstraintRecord {
                g_mean,
                ..Default::default()
            };
            let alpha = if g_mean < self.cfg.eps {
                rec.alpha_discrete = 1.0;
                rec.h_star = f64::NAN;
                rec.h_starstar = -1.0;
                1.0
            } else {
                let field = HField {
                    mono,
                    coeffs: &*coeffs,
                    ncomp,
                    g,
                    g_mean,
                };
                for (v, x) in hvals.iter_mut().zip(&self.samples[..ns]) {
                    *v = field.eval(x);
                }
                let opt = search(&field, &self.basis.reference, &self.samples[..ns], &hvals[..ns], &self.graph, self.basis.order(), &self.cfg);
                let h_nodes = hvals[..nodes].iter().copied().fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.min(b) });
                rec.alpha_discrete = if h_nodes.is_finite() { (-h_nodes).max(0.0) } else { 1.0 };
                rec.h_star = opt.h_star;
                rec.h_starstar = opt.h_starstar;
                rec.delta_h = opt.delta_h;
                rec.x_star = opt.x_star;
                rec.iterations = opt.iterations;
                rec.fallback = opt.fallback;
                (-opt.h_starstar).clamp(0.0, 1.0)
            };
            rec.alpha = alpha;
            if sequential {
                squeeze_coeffs(coeffs, n, mean, alpha);
                keep *= 1.0 - alpha;
            } else {
                alpha_max = alpha_max.max(alpha);
            }
        }
        if sequential {
            Ok(1.0 - keep)
        } else {
            squeeze_coeffs(coeffs, n, mean, alpha_max);
            Ok(alpha_max)
        }
    }

    pub fn limit_element(&self, modal: &ModalSolution) -> Result<(ModalSolution, LimiterReport)> {
        let mut out = modal.clone();
        let mut records = [ConstraintRecord::default(); MAX_CONSTRAINTS];
        let alpha = self.limit_coeffs(modal.element, &mut out.coeffs, modal.ncomp, &mut records)?;
        let report = LimiterReport {
            element: modal.element,
            records: records[..self.set.len()].to_vec(),
            alpha,
        };
        Ok((out, report))
    }
}

/// Starting points for the minimum search: the solution nodes first, then
/// `2p + 2` Gauss–Legendre points. On quads the extra points fill
/// the tensor lattice of all line coordinates; on triangles the Gauss–Legendre
/// tensor points are collapsed onto the triangle.
pub fn initial_samples(basis: &ElementBasis) -> Vec<RefPoint> {
    let mut pts = basis.nodal.nodes.clone();
    let (g, _) = gauss_legendre(2 * basis.order() + 2);
    let is_new = |pts: &[RefPoint], q: &RefPoint| !pts.iter().any(|p| (p[0] - q[0]).abs() <= 1e-12 && (p[1] - q[1]).abs() <= 1e-12);
    match basis.kind() {
        ElementKind::Segment => {
            for &a in &g {
                if is_new(&pts, &[a, 0.0]) {
                    pts.push([a, 0.0]);
                }
            }
        }
        ElementKind::Quad => {
            let mut line = basis.nodal.line_nodes.clone();
            line.extend(&g);
            line.sort_by(f64::total_cmp);
            line.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
            for &b in &line {
                for &a in &line {
                    if is_new(&pts, &[a, b]) {
                        pts.push([a, b]);
                    }
                }
            }
        }
        ElementKind::Triangle => {
            for &b in &g {
                for &a in &g {
                    pts.push([0.5 * (1.0 + a) * (1.0 - b) - 1.0, b]);
                }
            }
        }
    }
    pts
}

/// Convenience wrapper building a one-off [`ElementLimiter`].
pub fn limit_element(
    modal: &ModalSolution,
    set: &ConstraintSet,
    basis: &ElementBasis,
    cfg: &LimiterConfig,
) -> Result<(ModalSolution, LimiterReport)> {
    ElementLimiter::new(basis, set, *cfg)?.limit_element(modal)
}
