//! Collocated flux-reconstruction DG on Gauss–Lobatto nodes, SSP-RK3 time
//! stepping, and per-stage stabilization and limiting.
//!
//! Nodal states are stored node-major per element:
//! `u[(e * n_nodes + i) * ncomp + c]`. Tensor nodes of a quad are numbered
//! `j * (p + 1) + i` with `i` along x.

pub mod equations;

use std::sync::Arc;

use rayon::prelude::*;

pub use equations::{upwind_flux, AdvectionField, EquationSet};

use crate::basis::{legendre_derivs, nodal_to_modal_into, ElementBasis};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::limiter::{ConstraintRecord, ElementLimiter, LimiterConfig, MAX_COMPONENTS, MAX_CONSTRAINTS};
use crate::mesh::{BoundaryKind, Mesh};
use crate::reference::ElementKind;
use crate::stabilize::{element_indicator, subcell_line_rate, IndicatorConfig};

/// State rule evaluated at a physical point of a given element, e.g. an
/// initial condition. Most rules ignore the element index.
pub type StateFn = Arc<dyn Fn(&[f64; 2], usize) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub limiter: LimiterConfig,
    pub stabilizer: IndicatorConfig,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::Config(format!("CFL must be positive, got {}", self.cfl)));
        }
        self.stabilizer.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub u: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

/// Limiter and stabilizer activity over one or more stages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    /// Element-stage pairs with α > 0.
    pub limited: usize,
    pub max_alpha: f64,
    /// Element-constraint pairs where gradient descent replaced Newton.
    pub fallbacks: usize,
    pub optimizer_iterations: usize,
    /// Smallest `α_continuous - α_discrete` seen on limited elements.
    pub min_alpha_gap: f64,
    /// Element-stage pairs that took the low-order candidate.
    pub subcell: usize,
}

impl Default for StepStats {
    fn default() -> Self {
        StepStats {
            limited: 0,
            max_alpha: 0.0,
            fallbacks: 0,
            optimizer_iterations: 0,
            min_alpha_gap: f64::INFINITY,
            subcell: 0,
        }
    }
}

impl StepStats {
    pub fn merge(mut self, o: StepStats) -> StepStats {
        self.limited += o.limited;
        self.max_alpha = self.max_alpha.max(o.max_alpha);
        self.fallbacks += o.fallbacks;
        self.optimizer_iterations += o.optimizer_iterations;
        self.min_alpha_gap = self.min_alpha_gap.min(o.min_alpha_gap);
        self.subcell += o.subcell;
        self
    }
}

/// Boundary states frozen from the initial condition (Dirichlet meshes).
#[derive(Clone, Debug, Default)]
struct Ghost {
    xlo: Vec<f64>,
    xhi: Vec<f64>,
    ylo: Vec<f64>,
    yhi: Vec<f64>,
}

/// Mesh, basis and the precomputed FR operators.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub basis: ElementBasis,
    pub eq: EquationSet,
    /// Nodes per line (`p + 1`).
    pub np: usize,
    /// Nodes per element.
    pub nn: usize,
    pub ncomp: usize,
    /// `diff[a * np + b] = ℓ_b'(ξ_a)`.
    diff: Vec<f64>,
    /// Derivatives of the left / right DG correction functions at the nodes.
    corr_l: Vec<f64>,
    corr_r: Vec<f64>,
    /// Reference coordinates of the interior subcell interfaces.
    sub_faces: Vec<f64>,
    /// Physical coordinates of every node.
    pub node_x: Vec<[f64; 2]>,
    ghost: Ghost,
}

/// Lagrange differentiation matrix on `nodes`.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let lambda: Vec<f64> = (0..n)
        .map(|b| 1.0 / (0..n).filter(|&k| k != b).map(|k| nodes[b] - nodes[k]).product::<f64>())
        .collect();
    let mut d = vec![0.0; n * n];
    for a in 0..n {
        let mut diag = 0.0;
        for b in 0..n {
            if a != b {
                let v = lambda[b] / lambda[a] / (nodes[a] - nodes[b]);
                d[a * n + b] = v;
                diag -= v;
            }
        }
        d[a * n + a] = diag;
    }
    d
}

/// Derivatives at `nodes` of the DG-recovering correction functions
/// `g_R = (P_p + P_{p+1})/2` and `g_L(ξ) = g_R(-ξ)`; returns `(g_L', g_R')`.
pub fn correction_derivatives(p: usize, nodes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gr = |x: f64| {
        let d = legendre_derivs(p + 1, x);
        0.5 * (d[p] + d[p + 1])
    };
    let right: Vec<f64> = nodes.iter().map(|&x| gr(x)).collect();
    let left: Vec<f64> = nodes.iter().map(|&x| -gr(-x)).collect();
    (left, right)
}

impl Discretization {
    pub fn new(mesh: Mesh, order: usize, eq: EquationSet, ic: &StateFn) -> Result<Self> {
        let kind = mesh.kind;
        if kind == ElementKind::Triangle {
            return Err(Error::Config("the PDE solver supports segments and quads only".into()));
        }
        if eq.dim() != mesh.dim() {
            return Err(Error::Config(format!(
                "{} equations are {}-dimensional but the mesh is {}-dimensional",
                eq.name(),
                eq.dim(),
                mesh.dim()
            )));
        }
        if eq.ncomp() > MAX_COMPONENTS {
            return Err(Error::Config(format!("at most {MAX_COMPONENTS} components supported")));
        }
        let basis = ElementBasis::new(kind, order)?;
        let np = order + 1;
        let nn = basis.num_nodes();
        let ncomp = eq.ncomp();
        let line = &basis.nodal.line_nodes;
        let diff = differentiation_matrix(line);
        let (corr_l, corr_r) = correction_derivatives(order, line);
        let mut acc = -1.0;
        let sub_faces = basis.nodal.line_weights[..order]
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let mut node_x = Vec::with_capacity(mesh.num_elements() * nn);
        for e in 0..mesh.num_elements() {
            for x in &basis.nodal.nodes {
                node_x.push(mesh.to_physical(e, x));
            }
        }
        let mut disc = Discretization {
            mesh,
            basis,
            eq,
            np,
            nn,
            ncomp,
            diff,
            corr_l,
            corr_r,
            sub_faces,
            node_x,
            ghost: Ghost::default(),
        };
        if disc.mesh.boundary == BoundaryKind::Dirichlet {
            disc.ghost = disc.build_ghost(ic)?;
        }
        Ok(disc)
    }

    fn npf(&self) -> usize {
        if self.mesh.dim() == 1 {
            1
        } else {
            self.np
        }
    }

    /// Physical coordinate of point `q` on x-face `i` of element row `j`.
    #[inline]
    fn xface_point(&self, i: usize, j: usize, q: usize) -> [f64; 2] {
        let m = &self.mesh;
        let h = m.spacing();
        let x = m.lo[0] + i as f64 * h[0];
        if m.dim() == 1 {
            [x, 0.0]
        } else {
            let cy = m.lo[1] + (j as f64 + 0.5) * h[1];
            [x, cy + 0.5 * h[1] * self.basis.nodal.line_nodes[q]]
        }
    }

    #[inline]
    fn yface_point(&self, i: usize, j: usize, q: usize) -> [f64; 2] {
        let m = &self.mesh;
        let h = m.spacing();
        let cx = m.lo[0] + (i as f64 + 0.5) * h[0];
        [cx + 0.5 * h[0] * self.basis.nodal.line_nodes[q], m.lo[1] + j as f64 * h[1]]
    }

    fn build_ghost(&self, ic: &StateFn) -> Result<Ghost> {
        let (nx, ny) = (self.mesh.nx, self.mesh.ny);
        let npf = self.npf();
        let check = |x: [f64; 2], e: usize| -> Result<Vec<f64>> {
            let v = ic(&x, e);
            if v.len() != self.ncomp {
                return Err(Error::Config(format!("initial condition returned {} components, expected {}", v.len(), self.ncomp)));
            }
            Ok(v)
        };
        let mut g = Ghost::default();
        for j in 0..ny {
            for q in 0..npf {
                g.xlo.extend(check(self.xface_point(0, j, q), self.mesh.element_at(0, j))?);
                g.xhi.extend(check(self.xface_point(nx, j, q), self.mesh.element_at(nx - 1, j))?);
            }
        }
        if self.mesh.dim() == 2 {
            for i in 0..nx {
                for q in 0..self.np {
                    g.ylo.extend(check(self.yface_point(i, 0, q), self.mesh.element_at(i, 0))?);
                    g.yhi.extend(check(self.yface_point(i, ny, q), self.mesh.element_at(i, ny - 1))?);
                }
            }
        }
        Ok(g)
    }

    pub fn dof_len(&self) -> usize {
        self.mesh.num_elements() * self.nn * self.ncomp
    }

    /// Sample a point-wise rule at every node.
    pub fn interpolate(&self, f: &StateFn) -> Result<Vec<f64>> {
        let mut u = Vec::with_capacity(self.dof_len());
        for (k, x) in self.node_x.iter().enumerate() {
            let v = f(x, k / self.nn);
            if v.len() != self.ncomp {
                return Err(Error::Config(format!("state rule returned {} components, expected {}", v.len(), self.ncomp)));
            }
            u.extend(v);
        }
        Ok(u)
    }

    #[inline]
    fn node_state<'a>(&self, u: &'a [f64], e: usize, node: usize) -> &'a [f64] {
        let o = (e * self.nn + node) * self.ncomp;
        &u[o..o + self.ncomp]
    }

    fn xface_len(&self) -> usize {
        (self.mesh.nx + 1) * self.mesh.ny * self.npf() * self.ncomp
    }

    fn yface_len(&self) -> usize {
        if self.mesh.dim() == 2 {
            (self.mesh.ny + 1) * self.mesh.nx * self.np * self.ncomp
        } else {
            0
        }
    }

    /// Interface fluxes in `+x` / `+y` direction, one per face point.
    pub fn face_fluxes(&self, u: &[f64], fx: &mut [f64], fy: &mut [f64]) -> Result<()> {
        let (nx, ny) = (self.mesh.nx, self.mesh.ny);
        let npf = self.npf();
        let nc = self.ncomp;
        let p = self.np - 1;
        let periodic = self.mesh.boundary == BoundaryKind::Periodic;
        let t = |i: usize, j: usize| j * self.np + i;

        fx.par_chunks_mut(npf * nc).enumerate().try_for_each(|(f, out)| -> Result<()> {
            let (i, j) = (f % (nx + 1), f / (nx + 1));
            for q in 0..npf {
                let node_r = if npf == 1 { 0 } else { t(0, q) };
                let node_l = if npf == 1 { p } else { t(p, q) };
                let gidx = (j * npf + q) * nc;
                let left: &[f64] = if i > 0 {
                    self.node_state(u, self.mesh.element_at(i - 1, j), node_l)
                } else if periodic {
                    self.node_state(u, self.mesh.element_at(nx - 1, j), node_l)
                } else {
                    &self.ghost.xlo[gidx..gidx + nc]
                };
                let right: &[f64] = if i < nx {
                    self.node_state(u, self.mesh.element_at(i, j), node_r)
                } else if periodic {
                    self.node_state(u, self.mesh.element_at(0, j), node_r)
                } else {
                    &self.ghost.xhi[gidx..gidx + nc]
                };
                let x = self.xface_point(i, j, q);
                self.eq.numerical_flux(left, right, &x, 0, &mut out[q * nc..(q + 1) * nc])?;
            }
            Ok(())
        })?;

        if self.mesh.dim() == 2 {
            fy.par_chunks_mut(self.np * nc).enumerate().try_for_each(|(f, out)| -> Result<()> {
                let (i, j) = (f % nx, f / nx);
                for q in 0..self.np {
                    let gidx = (i * self.np + q) * nc;
                    let below: &[f64] = if j > 0 {
                        self.node_state(u, self.mesh.element_at(i, j - 1), t(q, p))
                    } else if periodic {
                        self.node_state(u, self.mesh.element_at(i, ny - 1), t(q, p))
                    } else {
                        &self.ghost.ylo[gidx..gidx + nc]
                    };
                    let above: &[f64] = if j < ny {
                        self.node_state(u, self.mesh.element_at(i, j), t(q, 0))
                    } else if periodic {
                        self.node_state(u, self.mesh.element_at(i, 0), t(q, 0))
                    } else {
                        &self.ghost.yhi[gidx..gidx + nc]
                    };
                    let x = self.yface_point(i, j, q);
                    self.eq.numerical_flux(below, above, &x, 1, &mut out[q * nc..(q + 1) * nc])?;
                }
                Ok(())
            })?;
        }
        Ok(())
    }

    #[inline]
    fn xface<'a>(&self, fx: &'a [f64], i: usize, j: usize, q: usize) -> &'a [f64] {
        let o = ((j * (self.mesh.nx + 1) + i) * self.npf() + q) * self.ncomp;
        &fx[o..o + self.ncomp]
    }

    #[inline]
    fn yface<'a>(&self, fy: &'a [f64], i: usize, j: usize, q: usize) -> &'a [f64] {
        let o = ((j * self.mesh.nx + i) * self.np + q) * self.ncomp;
        &fy[o..o + self.ncomp]
    }

    /// FR residual `du/dt` given precomputed interface fluxes.
    pub fn residual_from_faces(&self, u: &[f64], fx: &[f64], fy: &[f64], r: &mut [f64]) {
        let (np, nn, nc) = (self.np, self.nn, self.ncomp);
        let dim = self.mesh.dim();
        let h = self.mesh.spacing();
        r.par_chunks_mut(nn * nc).enumerate().for_each(|(e, re)| {
            let (ei, ej) = self.mesh.ij(e);
            let ue = &u[e * nn * nc..(e + 1) * nn * nc];
            let xs = &self.node_x[e * nn..(e + 1) * nn];
            let mut f = [0.0; 81 * MAX_COMPONENTS];
            re.fill(0.0);
            for axis in 0..dim {
                for (k, x) in xs.iter().enumerate() {
                    self.eq.flux(&ue[k * nc..(k + 1) * nc], x, axis, &mut f[k * nc..(k + 1) * nc]);
                }
                let scale = -2.0 / h[axis];
                for q in 0..(if dim == 1 { 1 } else { np }) {
                    // node index of position `a` along the line
                    let node = |a: usize| if axis == 0 { q * np + a } else { a * np + q };
                    let (fl, fr) = if axis == 0 {
                        (self.xface(fx, ei, ej, q), self.xface(fx, ei + 1, ej, q))
                    } else {
                        (self.yface(fy, ei, ej, q), self.yface(fy, ei, ej + 1, q))
                    };
                    let n0 = node(0);
                    let np_ = node(np - 1);
                    for a in 0..np {
                        let na = node(a);
                        let drow = &self.diff[a * np..(a + 1) * np];
                        for c in 0..nc {
                            let mut d = 0.0;
                            for (b, db) in drow.iter().enumerate() {
                                d += db * f[node(b) * nc + c];
                            }
                            d += (fl[c] - f[n0 * nc + c]) * self.corr_l[a] + (fr[c] - f[np_ * nc + c]) * self.corr_r[a];
                            re[na * nc + c] += scale * d;
                        }
                    }
                }
            }
        });
    }

    /// First-order subcell rate on every element, using the same interface fluxes.
    pub fn low_order_rate(&self, u: &[f64], fx: &[f64], fy: &[f64], r: &mut [f64]) -> Result<()> {
        let (np, nn, nc) = (self.np, self.nn, self.ncomp);
        let dim = self.mesh.dim();
        let h = self.mesh.spacing();
        let w = &self.basis.nodal.line_weights;
        r.par_chunks_mut(nn * nc).enumerate().try_for_each(|(e, re)| -> Result<()> {
            let (ei, ej) = self.mesh.ij(e);
            let ue = &u[e * nn * nc..(e + 1) * nn * nc];
            re.fill(0.0);
            for axis in 0..dim {
                for q in 0..(if dim == 1 { 1 } else { np }) {
                    let (offset, stride) = if axis == 0 { (q * np * nc, 1) } else { (q * nc, np) };
                    let (fl, fr) = if axis == 0 {
                        (self.xface(fx, ei, ej, q), self.xface(fx, ei + 1, ej, q))
                    } else {
                        (self.yface(fy, ei, ej, q), self.yface(fy, ei, ej + 1, q))
                    };
                    let xn = self.node_x[e * nn + if axis == 0 { q * np } else { q }];
                    let center = self.mesh.center(e);
                    let eq = &self.eq;
                    let sub = &self.sub_faces;
                    subcell_line_rate(&ue[offset..], &mut re[offset..], np, stride, nc, w, h[axis], fl, fr, |a, b, i, out| {
                        let mut x = xn;
                        x[axis] = center[axis] + 0.5 * h[axis] * sub[i];
                        eq.numerical_flux(a, b, &x, axis, out)
                    })?;
                }
            }
            Ok(())
        })
    }

    /// `du/dt` at every degree of freedom.
    pub fn residual(&self, u: &[f64], r: &mut [f64]) -> Result<()> {
        let mut fx = vec![0.0; self.xface_len()];
        let mut fy = vec![0.0; self.yface_len()];
        self.face_fluxes(u, &mut fx, &mut fy)?;
        self.residual_from_faces(u, &fx, &fy, r);
        Ok(())
    }

    /// Largest `|d ū/dt - (surface formula)|` over elements.
    pub fn mean_update_defect(&self, u: &[f64]) -> Result<f64> {
        let mut fx = vec![0.0; self.xface_len()];
        let mut fy = vec![0.0; self.yface_len()];
        self.face_fluxes(u, &mut fx, &mut fy)?;
        let mut r = vec![0.0; u.len()];
        self.residual_from_faces(u, &fx, &fy, &mut r);
        let (nn, nc, np) = (self.nn, self.ncomp, self.np);
        let w = &self.basis.nodal.weights;
        let lw = &self.basis.nodal.line_weights;
        let measure = self.basis.reference.measure();
        let h = self.mesh.spacing();
        let mut worst: f64 = 0.0;
        for e in 0..self.mesh.num_elements() {
            let (i, j) = self.mesh.ij(e);
            for c in 0..nc {
                let vol: f64 = (0..nn).map(|k| w[k] * r[(e * nn + k) * nc + c]).sum::<f64>() / measure;
                let surf = if self.mesh.dim() == 1 {
                    -(self.xface(&fx, i + 1, j, 0)[c] - self.xface(&fx, i, j, 0)[c]) / h[0]
                } else {
                    let mut s = 0.0;
                    for q in 0..np {
                        s -= lw[q] * (self.xface(&fx, i + 1, j, q)[c] - self.xface(&fx, i, j, q)[c]) / (2.0 * h[0]);
                        s -= lw[q] * (self.yface(&fy, i, j + 1, q)[c] - self.yface(&fy, i, j, q)[c]) / (2.0 * h[1]);
                    }
                    s
                };
                worst = worst.max((vol - surf).abs());
            }
        }
        Ok(worst)
    }

    /// `Σ_e ∫ u` per component.
    pub fn totals(&self, u: &[f64]) -> Vec<f64> {
        let (nn, nc) = (self.nn, self.ncomp);
        let jac = self.mesh.jacobian();
        let w = &self.basis.nodal.weights;
        let mut t = vec![0.0; nc];
        for e in 0..self.mesh.num_elements() {
            for k in 0..nn {
                for c in 0..nc {
                    t[c] += w[k] * jac * u[(e * nn + k) * nc + c];
                }
            }
        }
        t
    }

    /// `CFL · min_e h / ((2p + 1) λ_e)`; infinite when nothing moves.
    pub fn compute_dt(&self, u: &[f64], cfl: f64) -> f64 {
        let (nn, nc) = (self.nn, self.ncomp);
        let p = (self.np - 1) as f64;
        let hmin = self.mesh.min_width();
        let lambda = (0..self.mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                (0..nn)
                    .map(|k| {
                        let o = (e * nn + k) * nc;
                        self.eq.max_speed(&u[o..o + nc], &self.node_x[e * nn + k])
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        if lambda > 0.0 {
            cfl * hmin / ((2.0 * p + 1.0) * lambda)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Scratch {
    u0: Vec<f64>,
    r: Vec<f64>,
    rl: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
}

/// A running simulation: discretization, constraints, configuration and state.
pub struct Solver {
    pub disc: Discretization,
    pub constraints: ConstraintSet,
    pub cfg: SolverConfig,
    pub state: SimulationState,
    /// Limiter activity of the initial limiting pass.
    pub initial_stats: StepStats,
    scratch: Scratch,
}

impl Solver {
    /// Interpolate `ic` to the nodes and limit once so the initial polynomial
    /// already satisfies the constraints.
    pub fn new(mesh: Mesh, order: usize, eq: EquationSet, constraints: ConstraintSet, cfg: SolverConfig, ic: StateFn) -> Result<Self> {
        cfg.validate()?;
        if constraints.len() > MAX_CONSTRAINTS {
            return Err(Error::Config(format!("at most {MAX_CONSTRAINTS} constraints supported")));
        }
        let disc = Discretization::new(mesh, order, eq, &ic)?;
        let u = disc.interpolate(&ic)?;
        let scratch = Scratch {
            u0: vec![0.0; u.len()],
            r: vec![0.0; u.len()],
            rl: vec![0.0; u.len()],
            fx: vec![0.0; disc.xface_len()],
            fy: vec![0.0; disc.yface_len()],
        };
        let mut solver = Solver {
            disc,
            constraints,
            cfg,
            state: SimulationState { u, t: 0.0, step: 0 },
            initial_stats: StepStats::default(),
            scratch,
        };
        let mut u = std::mem::take(&mut solver.state.u);
        let stats = solver.limit_all(&mut u);
        solver.state.u = u;
        solver.initial_stats = stats?;
        Ok(solver)
    }

    pub fn ncomp(&self) -> usize {
        self.disc.ncomp
    }

    /// Limit every element of `u` in place.
    pub fn limit_all(&self, u: &mut [f64]) -> Result<StepStats> {
        let limiter = ElementLimiter::new(&self.disc.basis, &self.constraints, self.cfg.limiter)?;
        let (nn, nc) = (self.disc.nn, self.disc.ncomp);
        let n_modes = self.disc.basis.monomial.len();
        let nset = self.constraints.len();
        let mono = &self.disc.basis.monomial;
        let nodal = &self.disc.basis.nodal;
        let time = self.state.t;
        u.par_chunks_mut(nn * nc)
            .enumerate()
            .map(|(e, ue)| -> Result<StepStats> {
                let mut coeffs = [0.0; 81 * MAX_COMPONENTS];
                let coeffs = &mut coeffs[..n_modes * nc];
                nodal_to_modal_into(ue, nc, nodal, coeffs);
                let mut mean = [0.0; MAX_COMPONENTS];
                for (c, m) in mean.iter_mut().enumerate().take(nc) {
                    *m = coeffs[c * n_modes..(c + 1) * n_modes]
                        .iter()
                        .zip(&mono.mean_weights)
                        .map(|(a, w)| a * w)
                        .sum();
                }
                let mut records = [ConstraintRecord::default(); MAX_CONSTRAINTS];
                let alpha = limiter.limit_coeffs(e, coeffs, nc, &mut records).map_err(|err| match err {
                    Error::InadmissibleMean {
                        element,
                        constraint,
                        value,
                        ..
                    } => Error::InadmissibleMean {
                        element,
                        constraint,
                        value,
                        time,
                    },
                    other => other,
                })?;
                let mut st = StepStats::default();
                if alpha > 0.0 {
                    for s in ue.chunks_exact_mut(nc) {
                        for c in 0..nc {
                            s[c] = (1.0 - alpha) * s[c] + alpha * mean[c];
                        }
                    }
                    st.limited = 1;
                    st.max_alpha = alpha;
                }
                for r in &records[..nset] {
                    st.fallbacks += r.fallback as usize;
                    st.optimizer_iterations += r.iterations;
                    if r.alpha > 0.0 || r.alpha_discrete > 0.0 {
                        st.min_alpha_gap = st.min_alpha_gap.min(r.alpha - r.alpha_discrete);
                    }
                }
                Ok(st)
            })
            .try_reduce(StepStats::default, |a, b| Ok(a.merge(b)))
    }

    /// `u ← a0·u0 + a1·(u + dt·L(u))`, then stabilize and limit.
    fn stage(&mut self, a0: f64, a1: f64, dt: f64) -> Result<StepStats> {
        let disc = &self.disc;
        let sc = &mut self.scratch;
        let u = &mut self.state.u;
        disc.face_fluxes(u, &mut sc.fx, &mut sc.fy)?;
        disc.residual_from_faces(u, &sc.fx, &sc.fy, &mut sc.r);
        let stab = self.cfg.stabilizer;
        let mut stats = StepStats::default();
        if stab.enabled {
            disc.low_order_rate(u, &sc.fx, &sc.fy, &mut sc.rl)?;
            let (nn, nc) = (disc.nn, disc.ncomp);
            let chunk = nn * nc;
            stats.subcell = u
                .par_chunks_mut(chunk)
                .zip(sc.u0.par_chunks(chunk))
                .zip(sc.r.par_chunks(chunk).zip(sc.rl.par_chunks(chunk)))
                .map(|((ue, u0), (rh, rl))| {
                    let mut hi = [0.0; 81 * MAX_COMPONENTS];
                    let mut lo = [0.0; 81 * MAX_COMPONENTS];
                    for k in 0..chunk {
                        hi[k] = a0 * u0[k] + a1 * (ue[k] + dt * rh[k]);
                        lo[k] = a0 * u0[k] + a1 * (ue[k] + dt * rl[k]);
                    }
                    let pi = element_indicator(&lo[..chunk], &hi[..chunk], nc, &stab);
                    ue.copy_from_slice(if pi { &lo[..chunk] } else { &hi[..chunk] });
                    pi as usize
                })
                .sum();
        } else {
            u.par_iter_mut()
                .zip(sc.u0.par_iter())
                .zip(sc.r.par_iter())
                .for_each(|((v, v0), r)| *v = a0 * v0 + a1 * (*v + dt * r));
        }
        let mut u = std::mem::take(&mut self.state.u);
        let lim = self.limit_all(&mut u);
        self.state.u = u;
        Ok(stats.merge(lim?))
    }

    /// One SSP-RK3 step.
    pub fn step(&mut self, dt: f64) -> Result<StepStats> {
        self.scratch.u0.copy_from_slice(&self.state.u);
        let t0 = self.state.t;
        let mut stats = self.stage(0.0, 1.0, dt)?;
        self.state.t = t0 + dt;
        stats = stats.merge(self.stage(0.75, 0.25, dt)?);
        self.state.t = t0 + 0.5 * dt;
        stats = stats.merge(self.stage(1.0 / 3.0, 2.0 / 3.0, dt)?);
        self.state.t = t0 + dt;
        self.state.step += 1;
        if !self.state.u.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state after step {} (t = {:e})", self.state.step, self.state.t)));
        }
        Ok(stats)
    }

    pub fn compute_dt(&self) -> f64 {
        self.disc.compute_dt(&self.state.u, self.cfg.cfl)
    }

    /// Step until `t_final`, calling `observer` after every step.
    pub fn advance_to<F>(&mut self, t_final: f64, mut observer: F) -> Result<StepStats>
    where
        F: FnMut(&Solver, &StepStats) -> Result<()>,
    {
        let mut total = StepStats::default();
        while self.state.t < t_final * (1.0 - 1e-14) {
            let mut dt = self.compute_dt();
            let remaining = t_final - self.state.t;
            if dt >= remaining {
                dt = remaining;
            } else if !dt.is_finite() || dt <= 0.0 {
                return Err(Error::Numerical(format!("invalid time step {dt:e} at t = {:e}", self.state.t)));
            }
            let st = self.step(dt)?;
            if self.state.t > t_final {
                self.state.t = t_final;
            }
            observer(self, &st)?;
            total = total.merge(st);
        }
        self.state.t = t_final.max(self.state.t);
        Ok(total)
    }
}
