//! Reference-element geometry.
//!
//! Every reference element is a convex polytope described by halfspaces
//! `n · x <= b` with unit outward normals. Points are stored as `[f64; 2]`;
//! segments only use the first coordinate and keep the second at zero.

use crate::error::{Error, Result};

/// Default geometric tolerance for containment and face activity.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A point in reference coordinates. Segments leave the second entry at zero.
pub type RefPoint = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Segment,
    Quad,
    Triangle,
}

impl ElementKind {
    pub fn dim(self) -> usize {
        match self {
            ElementKind::Segment => 1,
            ElementKind::Quad | ElementKind::Triangle => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Segment => "segment",
            ElementKind::Quad => "quad",
            ElementKind::Triangle => "triangle",
        }
    }
}

/// A halfspace `normal · x <= offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    pub normal: RefPoint,
    pub offset: f64,
}

impl Face {
    #[inline]
    fn signed_distance(&self, x: &RefPoint) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub kind: ElementKind,
    pub vertices: Vec<RefPoint>,
    pub faces: Vec<Face>,
}

#[inline]
fn dot(a: &RefPoint, b: &RefPoint) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl ReferenceElement {
    /// Segment `[-1, 1]`, quad `[-1, 1]^2`, or the triangle with vertices
    /// `(-1,-1), (1,-1), (-1,1)`.
    ///
    /// Face order: segment `-x, +x`; quad `-x, +x, -y, +y`; triangle
    /// `-y` (bottom), `-x` (left), hypotenuse.
    pub fn new(kind: ElementKind) -> Self {
        let ax = |nx: f64, ny: f64| Face {
            normal: [nx, ny],
            offset: 1.0,
        };
        match kind {
            ElementKind::Segment => ReferenceElement {
                kind,
                vertices: vec![[-1.0, 0.0], [1.0, 0.0]],
                faces: vec![ax(-1.0, 0.0), ax(1.0, 0.0)],
            },
            ElementKind::Quad => ReferenceElement {
                kind,
                vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
                faces: vec![ax(-1.0, 0.0), ax(1.0, 0.0), ax(0.0, -1.0), ax(0.0, 1.0)],
            },
            ElementKind::Triangle => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                ReferenceElement {
                    kind,
                    vertices: vec![[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]],
                    faces: vec![
                        ax(0.0, -1.0),
                        ax(-1.0, 0.0),
                        Face {
                            normal: [s, s],
                            offset: 0.0,
                        },
                    ],
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Lebesgue measure of the reference element.
    pub fn measure(&self) -> f64 {
        match self.kind {
            ElementKind::Segment => 2.0,
            ElementKind::Quad => 4.0,
            ElementKind::Triangle => 2.0,
        }
    }

    pub fn centroid(&self) -> RefPoint {
        match self.kind {
            ElementKind::Segment | ElementKind::Quad => [0.0, 0.0],
            ElementKind::Triangle => [-1.0 / 3.0, -1.0 / 3.0],
        }
    }

    fn to_point(&self, x: &[f64]) -> Result<RefPoint> {
        if x.len() != self.dim() {
            return Err(Error::Usage(format!(
                "{} reference element expects {}-dimensional coordinates, got {}",
                self.kind.name(),
                self.dim(),
                x.len()
            )));
        }
        Ok(if x.len() == 1 { [x[0], 0.0] } else { [x[0], x[1]] })
    }

    /// Checked containment test: `n · x <= b + tol` for every face.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let p = self.to_point(x)?;
        Ok(self.contains_point(&p, tol))
    }

    #[inline]
    pub fn contains_point(&self, x: &RefPoint, tol: f64) -> bool {
        self.faces.iter().all(|f| f.signed_distance(x) <= tol)
    }

    /// Indices of the faces `x` lies on (within `tol`), in face order.
    pub fn active_faces(&self, x: &RefPoint, tol: f64) -> Vec<usize> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.signed_distance(x).abs() <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest `eta` in `[0, 1]` keeping `x + eta * step` inside every face.
    fn boundary_fraction(&self, x: &RefPoint, step: &RefPoint) -> f64 {
        let mut eta: f64 = 1.0;
        for f in &self.faces {
            let rate = dot(&f.normal, step);
            if rate > 0.0 {
                let room = (f.offset - dot(&f.normal, x)).max(0.0);
                eta = eta.min(room / rate);
            }
        }
        eta.clamp(0.0, 1.0)
    }

    /// Project an optimizer step so that `x + step'` stays inside the element.
    ///
    /// A step that stays inside is returned unchanged. From the interior, an
    /// exiting step is shortened along its own direction until it hits the
    /// boundary. From a face, the outward normal component of each active face
    /// is removed first (general form `d - (n·d) n`, in face order) and the
    /// remainder is shortened as above if it still exits. Anything that still
    /// fails the containment check collapses to the zero step.
    pub fn project_step(&self, x: &RefPoint, step: &RefPoint, tol: f64) -> Result<RefPoint> {
        if !self.contains_point(x, tol) {
            return Err(Error::Usage(format!(
                "project_step: start point {:?} lies outside the {} reference element",
                &x[..self.dim()],
                self.kind.name()
            )));
        }
        Ok(self.project_step_unchecked(x, step, tol))
    }

    pub(crate) fn project_step_unchecked(&self, x: &RefPoint, step: &RefPoint, tol: f64) -> RefPoint {
        let trial = [x[0] + step[0], x[1] + step[1]];
        if self.contains_point(&trial, tol) {
            return *step;
        }
        let mut d = *step;
        for f in &self.faces {
            if f.signed_distance(x).abs() <= tol {
                let outward = dot(&f.normal, &d);
                if outward > 0.0 {
                    d[0] -= outward * f.normal[0];
                    d[1] -= outward * f.normal[1];
                }
            }
        }
        let trial = [x[0] + d[0], x[1] + d[1]];
        if !self.contains_point(&trial, tol) {
            let eta = self.boundary_fraction(x, &d);
            d = [eta * d[0], eta * d[1]];
        }
        let trial = [x[0] + d[0], x[1] + d[1]];
        if self.contains_point(&trial, tol) {
            d
        } else {
            [0.0, 0.0]
        }
    }
}
