//! Nodal and monomial bases on reference elements.
//!
//! The solver stores nodal values at Gauss–Lobatto points (tensor products on
//! quads). The limiter works on the monomial expansion
//! `u(x̂) = Σ_i ũ_i x̂^{q_i}`, which is cheap to evaluate anywhere.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::reference::{ElementKind, RefPoint, ReferenceElement};

pub const MIN_ORDER: usize = 1;
pub const MAX_ORDER: usize = 8;
/// Vandermonde matrices worse than this are rejected at build time.
pub const MAX_CONDITION: f64 = 1e12;

/// Legendre polynomials `P_0..=P_n` at `x`.
pub(crate) fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

/// Derivatives `P'_0..=P'_n` at `x`, from `P'_{k+1} = P'_{k-1} + (2k+1) P_k`.
pub(crate) fn legendre_derivs(n: usize, x: f64) -> Vec<f64> {
    let p = legendre_all(n, x);
    let mut d = vec![0.0; n + 1];
    for k in 0..n {
        let prev = if k >= 1 { d[k - 1] } else { 0.0 };
        d[k + 1] = prev + (2.0 * k as f64 + 1.0) * p[k];
    }
    d
}

/// Gauss–Lobatto nodes (ascending) and weights on `[-1, 1]` with `p + 1` points.
pub fn gauss_lobatto(p: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1, "Gauss-Lobatto rule needs at least two points");
    let n = p;
    let mut x: Vec<f64> = (0..=n)
        .map(|i| -(std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let mut pn = vec![0.0; n + 1];
    for _ in 0..100 {
        let mut change: f64 = 0.0;
        for i in 0..=n {
            let leg = legendre_all(n, x[i]);
            pn[i] = leg[n];
            let xi = x[i] - (x[i] * leg[n] - leg[n - 1]) / ((n as f64 + 1.0) * leg[n]);
            change = change.max((xi - x[i]).abs());
            x[i] = xi;
        }
        if change < 1e-16 {
            break;
        }
    }
    for i in 0..=n {
        pn[i] = legendre_all(n, x[i])[n];
    }
    let nf = n as f64;
    let w = pn.iter().map(|v| 2.0 / (nf * (nf + 1.0) * v * v)).collect();
    (x, w)
}

/// Gauss–Legendre nodes and weights with `n` points (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let d = legendre_derivs(n, z)[n];
            let dz = legendre_all(n, z)[n] / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let d = legendre_derivs(n, z)[n];
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * d * d);
    }
    (x, w)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn segment_power_integral(q: usize) -> f64 {
    if q % 2 == 0 {
        2.0 / (q as f64 + 1.0)
    } else {
        0.0
    }
}

/// Exact integral of `x^a y^b` over the reference element.
pub fn monomial_integral(kind: ElementKind, a: usize, b: usize) -> f64 {
    match kind {
        ElementKind::Segment => {
            if b == 0 {
                segment_power_integral(a)
            } else {
                0.0
            }
        }
        ElementKind::Quad => segment_power_integral(a) * segment_power_integral(b),
        ElementKind::Triangle => {
            // x = 2s - 1, y = 2t - 1 over the unit simplex; ∫ s^i t^j = i! j! / (i + j + 2)!
            let mut total = 0.0;
            for i in 0..=a {
                let ci = binomial(a, i) * 2f64.powi(i as i32) * if (a - i) % 2 == 0 { 1.0 } else { -1.0 };
                for j in 0..=b {
                    let cj = binomial(b, j) * 2f64.powi(j as i32) * if (b - j) % 2 == 0 { 1.0 } else { -1.0 };
                    total += ci * cj * factorial(i) * factorial(j) / factorial(i + j + 2);
                }
            }
            4.0 * total
        }
    }
}

/// Monomial (power) basis: exponent multi-indices sorted by total degree, then
/// lexicographically.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    pub kind: ElementKind,
    pub order: usize,
    pub exponents: Vec<[u8; 2]>,
    /// `∫ ψ_i / |Ω̂|`: the element mean is `Σ_i ũ_i mean_weights[i]`.
    pub mean_weights: Vec<f64>,
}

impl MonomialBasis {
    pub fn new(kind: ElementKind, order: usize) -> Self {
        let mut exponents: Vec<[u8; 2]> = match kind {
            ElementKind::Segment => (0..=order).map(|q| [q as u8, 0]).collect(),
            ElementKind::Quad => (0..=order)
                .flat_map(|a| (0..=order).map(move |b| [a as u8, b as u8]))
                .collect(),
            ElementKind::Triangle => (0..=order)
                .flat_map(|a| (0..=order - a).map(move |b| [a as u8, b as u8]))
                .collect(),
        };
        exponents.sort_by_key(|q| (q[0] as usize + q[1] as usize, q[0], q[1]));
        let measure = ReferenceElement::new(kind).measure();
        let mean_weights = exponents
            .iter()
            .map(|q| monomial_integral(kind, q[0] as usize, q[1] as usize) / measure)
            .collect();
        MonomialBasis {
            kind,
            order,
            exponents,
            mean_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Monomial values `ψ_i(x̂)` written into `out`.
    #[inline]
    pub fn eval_into(&self, x: &RefPoint, out: &mut [f64]) {
        let mut px = [1.0; MAX_ORDER + 1];
        let mut py = [1.0; MAX_ORDER + 1];
        for k in 1..=self.order {
            px[k] = px[k - 1] * x[0];
            py[k] = py[k - 1] * x[1];
        }
        for (o, q) in out.iter_mut().zip(&self.exponents) {
            *o = px[q[0] as usize] * py[q[1] as usize];
        }
    }
}

/// Solution nodes, collocated quadrature weights and the monomial Vandermonde.
#[derive(Clone, Debug)]
pub struct NodalBasis {
    pub kind: ElementKind,
    pub order: usize,
    pub nodes: Vec<RefPoint>,
    pub weights: Vec<f64>,
    /// 1D Gauss–Lobatto nodes/weights for tensor-product kinds.
    pub line_nodes: Vec<f64>,
    pub line_weights: Vec<f64>,
    /// `V[i][j] = ψ_j(x̂_i)`, row-major.
    pub vandermonde: Vec<f64>,
    inverse: Vec<f64>,
    pub condition: f64,
}

impl NodalBasis {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Row-major inverse Vandermonde.
    pub fn inverse_vandermonde(&self) -> &[f64] {
        &self.inverse
    }

    /// Node index of tensor entry `(i, j)`; `i` runs fastest.
    #[inline]
    pub fn tensor_index(&self, i: usize, j: usize) -> usize {
        j * (self.order + 1) + i
    }
}

fn triangle_nodes(p: usize) -> Vec<RefPoint> {
    let h = 2.0 / p as f64;
    let mut nodes = Vec::new();
    for j in 0..=p {
        for i in 0..=p - j {
            nodes.push([-1.0 + h * i as f64, -1.0 + h * j as f64]);
        }
    }
    nodes
}

/// Build the nodal and monomial bases of order `p` on `kind`.
pub fn build_basis(kind: ElementKind, p: usize) -> Result<(NodalBasis, MonomialBasis)> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&p) {
        return Err(Error::Config(format!(
            "polynomial order {p} unsupported (expected {MIN_ORDER}..={MAX_ORDER})"
        )));
    }
    let monomial = MonomialBasis::new(kind, p);
    let (line_nodes, line_weights) = gauss_lobatto(p);
    let (nodes, tensor_weights): (Vec<RefPoint>, Option<Vec<f64>>) = match kind {
        ElementKind::Segment => (
            line_nodes.iter().map(|&x| [x, 0.0]).collect(),
            Some(line_weights.clone()),
        ),
        ElementKind::Quad => {
            let mut nodes = Vec::with_capacity((p + 1) * (p + 1));
            let mut w = Vec::with_capacity((p + 1) * (p + 1));
            for j in 0..=p {
                for i in 0..=p {
                    nodes.push([line_nodes[i], line_nodes[j]]);
                    w.push(line_weights[i] * line_weights[j]);
                }
            }
            (nodes, Some(w))
        }
        ElementKind::Triangle => (triangle_nodes(p), None),
    };
    let n = nodes.len();
    debug_assert_eq!(n, monomial.len());

    let mut vandermonde = vec![0.0; n * n];
    for (i, x) in nodes.iter().enumerate() {
        monomial.eval_into(x, &mut vandermonde[i * n..(i + 1) * n]);
    }
    let v = DMatrix::from_row_slice(n, n, &vandermonde);
    let sv = v.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Numerical(format!(
            "{} order {p} Vandermonde is singular or ill-conditioned (cond = {condition:e})",
            kind.name()
        )));
    }
    let inv = v
        .try_inverse()
        .ok_or_else(|| Error::Numerical(format!("singular Vandermonde (cond = {condition:e})")))?;
    let mut inverse = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            inverse[r * n + c] = inv[(r, c)];
        }
    }

    // Interpolatory weights for simplices: w = V^{-T} ∫ψ.
    let weights = tensor_weights.unwrap_or_else(|| {
        let measure = ReferenceElement::new(kind).measure();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| inverse[j * n + i] * monomial.mean_weights[j] * measure)
                    .sum()
            })
            .collect()
    });

    Ok((
        NodalBasis {
            kind,
            order: p,
            nodes,
            weights,
            line_nodes,
            line_weights,
            vandermonde,
            inverse,
            condition,
        },
        monomial,
    ))
}

/// Bundle of reference element plus both bases, shared read-only by the
/// solver, limiter and auditing code.
#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub reference: ReferenceElement,
    pub nodal: NodalBasis,
    pub monomial: MonomialBasis,
}

impl ElementBasis {
    pub fn new(kind: ElementKind, p: usize) -> Result<Self> {
        let (nodal, monomial) = build_basis(kind, p)?;
        Ok(ElementBasis {
            reference: ReferenceElement::new(kind),
            nodal,
            monomial,
        })
    }

    pub fn kind(&self) -> ElementKind {
        self.reference.kind
    }

    pub fn order(&self) -> usize {
        self.nodal.order
    }

    pub fn num_nodes(&self) -> usize {
        self.nodal.len()
    }
}

/// Monomial coefficients of one element: `coeffs[c * n_modes + j]` is mode `j`
/// of component `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalSolution {
    pub element: usize,
    pub ncomp: usize,
    pub coeffs: Vec<f64>,
}

impl ModalSolution {
    pub fn n_modes(&self) -> usize {
        self.coeffs.len() / self.ncomp
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.n_modes();
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// Evaluate every component at `x` (no containment check; polynomials
    /// extend past the element).
    #[inline]
    pub fn eval_into(&self, mono: &MonomialBasis, x: &RefPoint, out: &mut [f64]) {
        let n = mono.len();
        let mut psi = [0.0; (MAX_ORDER + 1) * (MAX_ORDER + 1)];
        mono.eval_into(x, &mut psi[..n]);
        for (c, o) in out.iter_mut().enumerate().take(self.ncomp) {
            let cf = &self.coeffs[c * n..(c + 1) * n];
            *o = cf.iter().zip(&psi[..n]).map(|(a, b)| a * b).sum();
        }
    }

    pub fn evaluate(&self, mono: &MonomialBasis, x: &RefPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.ncomp];
        self.eval_into(mono, x, &mut out);
        out
    }

    /// Exact element mean per component.
    pub fn element_mean(&self, mono: &MonomialBasis) -> Vec<f64> {
        let mut out = vec![0.0; self.ncomp];
        self.mean_into(mono, &mut out);
        out
    }

    #[inline]
    pub fn mean_into(&self, mono: &MonomialBasis, out: &mut [f64]) {
        let n = mono.len();
        for (c, o) in out.iter_mut().enumerate().take(self.ncomp) {
            *o = self.coeffs[c * n..(c + 1) * n]
                .iter()
                .zip(&mono.mean_weights)
                .map(|(a, w)| a * w)
                .sum();
        }
    }
}

/// Convert node-major nodal values (`values[i * ncomp + c]`) to monomial
/// coefficients.
pub fn nodal_to_modal(values: &[f64], ncomp: usize, element: usize, nodal: &NodalBasis) -> ModalSolution {
    let mut coeffs = vec![0.0; ncomp * nodal.len()];
    nodal_to_modal_into(values, ncomp, nodal, &mut coeffs);
    ModalSolution {
        element,
        ncomp,
        coeffs,
    }
}

#[inline]
pub fn nodal_to_modal_into(values: &[f64], ncomp: usize, nodal: &NodalBasis, coeffs: &mut [f64]) {
    let n = nodal.len();
    debug_assert_eq!(values.len(), n * ncomp);
    let inv = &nodal.inverse;
    for c in 0..ncomp {
        for r in 0..n {
            let row = &inv[r * n..(r + 1) * n];
            let mut s = 0.0;
            for (i, a) in row.iter().enumerate() {
                s += a * values[i * ncomp + c];
            }
            coeffs[c * n + r] = s;
        }
    }
}
