#![allow(dead_code)]

use cbpdg::constraints::{interval_bounds, ConstraintFunctional, Quantity};
use cbpdg::limiter::eval_h;
use cbpdg::{nodal_to_modal, ElementBasis, ElementKind, ModalSolution, RefPoint};
use rand::Rng;

pub const KINDS: [ElementKind; 3] = [ElementKind::Segment, ElementKind::Quad, ElementKind::Triangle];

/// `[0, 1]` bounds on component 0.
pub fn unit_bounds() -> (ConstraintFunctional, ConstraintFunctional) {
    interval_bounds(Quantity::Component(0), 0.0, 1.0).unwrap()
}

/// Random polynomial with mean inside `(0, 1)`: `ū + s (r - r̄)` with nodal
/// `r` uniform in `[-1, 1]` and a log-uniform amplitude `s`, so some draws
/// stay inside the bounds and others overshoot by a lot.
pub fn random_admissible<R: Rng>(basis: &ElementBasis, rng: &mut R) -> ModalSolution {
    let n = basis.num_nodes();
    let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = nodal_to_modal(&r, 1, 0, &basis.nodal);
    let r_mean = m.element_mean(&basis.monomial)[0];
    let target = rng.random_range(0.02..0.98);
    let s = 10f64.powf(rng.random_range(-2.0..0.5));
    let vals: Vec<f64> = r.iter().map(|v| target + s * (v - r_mean)).collect();
    nodal_to_modal(&vals, 1, 0, &basis.nodal)
}

/// 100 points per dimension; triangles keep the lattice points inside.
pub fn dense_points(kind: ElementKind) -> Vec<RefPoint> {
    let n = 100;
    let t = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    match kind {
        ElementKind::Segment => (0..n).map(|i| [t(i), 0.0]).collect(),
        ElementKind::Quad => (0..n).flat_map(|j| (0..n).map(move |i| [t(i), t(j)])).collect(),
        ElementKind::Triangle => (0..n)
            .flat_map(|j| (0..n).map(move |i| [t(i), t(j)]))
            .filter(|p| p[0] + p[1] <= 1e-14)
            .collect(),
    }
}

pub fn dense_min_g(m: &ModalSolution, basis: &ElementBasis, g: &ConstraintFunctional, pts: &[RefPoint]) -> f64 {
    let mut u = [0.0];
    pts.iter()
        .map(|x| {
            m.eval_into(&basis.monomial, x, &mut u);
            g.eval(&u)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn dense_min_h(m: &ModalSolution, basis: &ElementBasis, g: &ConstraintFunctional, g_mean: f64, pts: &[RefPoint]) -> f64 {
    let mut u = [0.0];
    pts.iter()
        .map(|x| {
            m.eval_into(&basis.monomial, x, &mut u);
            eval_h(g.eval(&u), g_mean)
        })
        .fold(f64::INFINITY, f64::min)
}
