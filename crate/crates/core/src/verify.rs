//! Auditing: dense oversampled constraint minima, certified monomial bounds,
//! error norms and convergence rates.

use rayon::prelude::*;

use crate::basis::{build_basis, ElementBasis, ModalSolution, MonomialBasis};
use crate::constraints::{ConstraintFunctional, ConstraintSet};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::reference::{ElementKind, RefPoint};

/// Default samples per dimension for oversampled audits.
pub const DEFAULT_OVERSAMPLE: usize = 100;

/// Equispaced evaluation of nodal fields, `n` points per dimension including
/// both reference endpoints. Tensor-product elements are handled as two 1D
/// contractions with the line interpolation matrix.
#[derive(Clone, Debug)]
pub struct Oversampler {
    pub n: usize,
    pub dim: usize,
    np: usize,
    /// Reference coordinates of the samples along a line.
    pub line: Vec<f64>,
    /// `interp[s * np + i]`: weight of line node `i` at sample `s`.
    interp: Vec<f64>,
}

impl Oversampler {
    pub fn new(basis: &ElementBasis, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("oversampling needs at least 2 points per dimension, got {n}")));
        }
        if basis.kind() == ElementKind::Triangle {
            return Err(Error::Usage("tensor oversampling needs a segment or quad basis".into()));
        }
        let p = basis.order();
        let np = p + 1;
        let (seg, mono) = build_basis(ElementKind::Segment, p)?;
        let inv = seg.inverse_vandermonde();
        let line: Vec<f64> = (0..n).map(|s| -1.0 + 2.0 * s as f64 / (n - 1) as f64).collect();
        let mut interp = vec![0.0; n * np];
        let mut psi = vec![0.0; np];
        for (s, &x) in line.iter().enumerate() {
            mono.eval_into(&[x, 0.0], &mut psi);
            for i in 0..np {
                interp[s * np + i] = (0..np).map(|j| psi[j] * inv[j * np + i]).sum();
            }
        }
        Ok(Oversampler {
            n,
            dim: basis.kind().dim(),
            np,
            line,
            interp,
        })
    }

    pub fn points_per_element(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Reference coordinate of sample `k` (x index fastest).
    pub fn point(&self, k: usize) -> RefPoint {
        if self.dim == 1 {
            [self.line[k], 0.0]
        } else {
            [self.line[k % self.n], self.line[k / self.n]]
        }
    }

    /// Sample states of one element (node-major input), written sample-major.
    pub fn sample(&self, ue: &[f64], ncomp: usize, out: &mut Vec<f64>) {
        let (n, np) = (self.n, self.np);
        out.clear();
        out.resize(self.points_per_element() * ncomp, 0.0);
        if self.dim == 1 {
            for s in 0..n {
                let w = &self.interp[s * np..(s + 1) * np];
                for c in 0..ncomp {
                    out[s * ncomp + c] = (0..np).map(|i| w[i] * ue[i * ncomp + c]).sum();
                }
            }
        } else {
            // contract along x for every node row, then along y
            let mut tmp = vec![0.0; np * n * ncomp];
            for j in 0..np {
                for s in 0..n {
                    let w = &self.interp[s * np..(s + 1) * np];
                    for c in 0..ncomp {
                        tmp[(j * n + s) * ncomp + c] = (0..np).map(|i| w[i] * ue[(j * np + i) * ncomp + c]).sum();
                    }
                }
            }
            for sy in 0..n {
                let w = &self.interp[sy * np..(sy + 1) * np];
                for sx in 0..n {
                    for c in 0..ncomp {
                        out[(sy * n + sx) * ncomp + c] = (0..np).map(|j| w[j] * tmp[(j * n + sx) * ncomp + c]).sum();
                    }
                }
            }
        }
    }
}

/// Global minimum of one constraint at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintMin {
    pub value: f64,
    pub element: usize,
    pub x_ref: RefPoint,
}

impl ConstraintMin {
    fn none() -> Self {
        ConstraintMin {
            value: f64::INFINITY,
            element: usize::MAX,
            x_ref: [0.0; 2],
        }
    }

    fn min(self, o: ConstraintMin) -> ConstraintMin {
        // ties resolve to the lower element index so reductions are order independent
        if o.value < self.value || (o.value == self.value && o.element < self.element) {
            o
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub t: f64,
    pub per_constraint: Vec<ConstraintMin>,
}

impl AuditEntry {
    /// The minimum of the per-constraint minima.
    pub fn overall(&self) -> f64 {
        self.per_constraint.iter().map(|m| m.value).fold(f64::INFINITY, f64::min)
    }
}

/// Oversampled minimum of every constraint over all elements. Non-finite
/// constraint values count as `-inf`.
pub fn oversample_min(
    mesh: &Mesh,
    sampler: &Oversampler,
    u: &[f64],
    ncomp: usize,
    set: &ConstraintSet,
    t: f64,
) -> AuditEntry {
    let nn = sampler.np.pow(sampler.dim as u32);
    let nc = set.len();
    let per = (0..mesh.num_elements())
        .into_par_iter()
        .fold(
            || (Vec::new(), vec![ConstraintMin::none(); nc]),
            |(mut buf, mut acc), e| {
                sampler.sample(&u[e * nn * ncomp..(e + 1) * nn * ncomp], ncomp, &mut buf);
                for (k, s) in buf.chunks_exact(ncomp).enumerate() {
                    for (ci, g) in set.constraints.iter().enumerate() {
                        let mut v = g.eval(s);
                        if !v.is_finite() {
                            v = f64::NEG_INFINITY;
                        }
                        if v < acc[ci].value {
                            acc[ci] = ConstraintMin {
                                value: v,
                                element: e,
                                x_ref: sampler.point(k),
                            };
                        }
                    }
                }
                (buf, acc)
            },
        )
        .map(|(_, acc)| acc)
        .reduce(
            || vec![ConstraintMin::none(); nc],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.min(y)).collect(),
        );
    AuditEntry { t, per_constraint: per }
}

/// Time series of audits with a non-increasing running minimum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditRecord {
    pub entries: Vec<AuditEntry>,
    pub running_min: Vec<f64>,
}

impl AuditRecord {
    pub fn push(&mut self, entry: AuditEntry) {
        if self.running_min.len() != entry.per_constraint.len() {
            self.running_min = vec![f64::INFINITY; entry.per_constraint.len()];
        }
        for (r, m) in self.running_min.iter_mut().zip(&entry.per_constraint) {
            *r = r.min(m.value);
        }
        self.entries.push(entry);
    }

    /// Spatio-temporal minimum over all constraints.
    pub fn overall_min(&self) -> f64 {
        self.running_min.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Range of `x^q` for `x ∈ [a, b]`.
fn power_range(a: f64, b: f64, q: usize) -> (f64, f64) {
    if q == 0 {
        return (1.0, 1.0);
    }
    let (pa, pb) = (a.powi(q as i32), b.powi(q as i32));
    if q % 2 == 1 {
        (pa, pb)
    } else if a < 0.0 && b > 0.0 {
        (0.0, pa.max(pb))
    } else {
        (pa.min(pb), pa.max(pb))
    }
}

/// Certified per-component `(lower, upper)` bounds of a modal solution over
/// the box `[x1, x2] × [y1, y2]` from per-monomial extremes.
pub fn monomial_bounds(modal: &ModalSolution, mono: &MonomialBasis, bx: [[f64; 2]; 2]) -> Result<Vec<(f64, f64)>> {
    let dim = mono.kind.dim();
    if mono.kind == ElementKind::Triangle {
        return Err(Error::Usage("monomial bounds need a segment or quad basis".into()));
    }
    for (k, iv) in bx.iter().enumerate().take(dim) {
        if !(iv[0] <= iv[1] && iv[0] >= -1.0 && iv[1] <= 1.0) {
            return Err(Error::Usage(format!("box axis {k} [{}, {}] is not inside [-1, 1]", iv[0], iv[1])));
        }
    }
    let by = if dim == 1 { [0.0, 0.0] } else { bx[1] };
    let n = mono.len();
    let mut out = Vec::with_capacity(modal.ncomp);
    for c in 0..modal.ncomp {
        let cf = &modal.coeffs[c * n..(c + 1) * n];
        let (mut lo, mut hi) = (0.0, 0.0);
        for (coef, q) in cf.iter().zip(&mono.exponents) {
            let (xl, xh) = power_range(bx[0][0], bx[0][1], q[0] as usize);
            let (yl, yh) = power_range(by[0], by[1], q[1] as usize);
            let corners = [xl * yl, xl * yh, xh * yl, xh * yh];
            let tl = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let th = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if *coef >= 0.0 {
                lo += coef * tl;
                hi += coef * th;
            } else {
                lo += coef * th;
                hi += coef * tl;
            }
        }
        out.push((lo, hi));
    }
    Ok(out)
}

/// Lower bound of a quasiconcave `g` over a component box: the minimum over
/// its `2^m` corners.
pub fn concave_g_bound(bounds: &[(f64, f64)], g: &ConstraintFunctional) -> f64 {
    let m = bounds.len();
    let mut u = vec![0.0; m];
    let mut best = f64::INFINITY;
    for mask in 0..(1usize << m) {
        for (k, (lo, hi)) in bounds.iter().enumerate() {
            u[k] = if mask >> k & 1 == 1 { *hi } else { *lo };
        }
        let v = g.eval(&u);
        best = best.min(if v.is_nan() { f64::NEG_INFINITY } else { v });
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    LInf,
}

/// Error of component `comp` against `exact`: L1 by nodal quadrature times the
/// element Jacobian, L∞ as the largest nodal deviation.
pub fn lp_error<F>(mesh: &Mesh, basis: &ElementBasis, u: &[f64], ncomp: usize, comp: usize, exact: F, norm: Norm) -> f64
where
    F: Fn(&[f64; 2]) -> f64 + Sync,
{
    let nn = basis.num_nodes();
    let w = &basis.nodal.weights;
    let jac = mesh.jacobian();
    let per: Vec<f64> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut acc: f64 = 0.0;
            for (k, x) in basis.nodal.nodes.iter().enumerate() {
                let d = (u[(e * nn + k) * ncomp + comp] - exact(&mesh.to_physical(e, x))).abs();
                match norm {
                    Norm::L1 => acc += w[k] * jac * d,
                    Norm::LInf => acc = acc.max(d),
                }
            }
            acc
        })
        .collect();
    match norm {
        Norm::L1 => per.iter().sum(),
        Norm::LInf => per.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RocMethod {
    /// Least-squares slope over every row.
    LeastSquares,
    /// Slope between the last two rows.
    LastPair,
}

/// Observed order: slope of `log(error)` against `log(1/N)`.
pub fn rate_of_convergence(errors: &[f64], ns: &[usize], method: RocMethod) -> Result<f64> {
    if errors.len() != ns.len() || errors.len() < 2 {
        return Err(Error::Usage(format!(
            "need at least two (N, error) pairs of equal length, got {} and {}",
            errors.len(),
            ns.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Numerical(format!("errors must be positive and finite, got {e}")));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (xs, ys) = match method {
        RocMethod::LeastSquares => (&xs[..], &ys[..]),
        RocMethod::LastPair => (&xs[xs.len() - 2..], &ys[ys.len() - 2..]),
    };
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Usage("rate of convergence needs distinct N values".into()));
    }
    Ok(sxy / sxx)
}
