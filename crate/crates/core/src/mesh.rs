//! Uniform structured meshes: 1D intervals and 2D Cartesian quads.
//!
//! Elements are affine images of the reference element, so element means and
//! limiting can be computed entirely in reference space.

use crate::error::{Error, Result};
use crate::reference::{ElementKind, RefPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    Dirichlet,
}

/// What lies across an element face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceLink {
    Interior { element: usize, face: usize },
    Boundary(BoundaryKind),
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub kind: ElementKind,
    pub nx: usize,
    /// 1 for interval meshes.
    pub ny: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub boundary: BoundaryKind,
}

/// Face opposite to `face` in the `-x, +x, -y, +y` numbering.
#[inline]
pub fn opposite_face(face: usize) -> usize {
    face ^ 1
}

impl Mesh {
    pub fn interval(n: usize, x_lo: f64, x_hi: f64, boundary: BoundaryKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("interval mesh needs N >= 2, got {n}")));
        }
        if !(x_hi > x_lo) {
            return Err(Error::Config(format!("empty interval [{x_lo}, {x_hi}]")));
        }
        Ok(Mesh {
            kind: ElementKind::Segment,
            nx: n,
            ny: 1,
            lo: [x_lo, 0.0],
            hi: [x_hi, 0.0],
            boundary,
        })
    }

    pub fn cartesian(nx: usize, ny: usize, lo: [f64; 2], hi: [f64; 2], boundary: BoundaryKind) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("cartesian mesh needs Nx, Ny >= 2, got {nx}x{ny}")));
        }
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(Error::Config(format!("empty box {lo:?} - {hi:?}")));
        }
        Ok(Mesh {
            kind: ElementKind::Quad,
            nx,
            ny,
            lo,
            hi,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_faces(&self) -> usize {
        2 * self.dim()
    }

    /// Element widths per axis.
    pub fn spacing(&self) -> [f64; 2] {
        let dx = (self.hi[0] - self.lo[0]) / self.nx as f64;
        let dy = if self.dim() == 2 {
            (self.hi[1] - self.lo[1]) / self.ny as f64
        } else {
            1.0
        };
        [dx, dy]
    }

    pub fn min_width(&self) -> f64 {
        let h = self.spacing();
        if self.dim() == 1 {
            h[0]
        } else {
            h[0].min(h[1])
        }
    }

    /// `(i, j)` grid position of an element; `i` runs fastest.
    #[inline]
    pub fn ij(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    #[inline]
    pub fn element_at(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, e: usize) -> [f64; 2] {
        let (i, j) = self.ij(e);
        let h = self.spacing();
        let cy = if self.dim() == 2 {
            self.lo[1] + (j as f64 + 0.5) * h[1]
        } else {
            0.0
        };
        [self.lo[0] + (i as f64 + 0.5) * h[0], cy]
    }

    pub fn volume(&self, e: usize) -> f64 {
        let _ = e;
        let h = self.spacing();
        if self.dim() == 1 {
            h[0]
        } else {
            h[0] * h[1]
        }
    }

    /// Physical / reference volume ratio (constant per element).
    pub fn jacobian(&self) -> f64 {
        let h = self.spacing();
        if self.dim() == 1 {
            h[0] / 2.0
        } else {
            h[0] * h[1] / 4.0
        }
    }

    #[inline]
    pub fn to_physical(&self, e: usize, xr: &RefPoint) -> [f64; 2] {
        let c = self.center(e);
        let h = self.spacing();
        if self.dim() == 1 {
            [c[0] + 0.5 * h[0] * xr[0], 0.0]
        } else {
            [c[0] + 0.5 * h[0] * xr[0], c[1] + 0.5 * h[1] * xr[1]]
        }
    }

    pub fn to_reference(&self, e: usize, x: &[f64; 2]) -> RefPoint {
        let c = self.center(e);
        let h = self.spacing();
        if self.dim() == 1 {
            [2.0 * (x[0] - c[0]) / h[0], 0.0]
        } else {
            [2.0 * (x[0] - c[0]) / h[0], 2.0 * (x[1] - c[1]) / h[1]]
        }
    }

    /// Neighbor across `face` (`-x, +x, -y, +y`).
    pub fn neighbor(&self, e: usize, face: usize) -> FaceLink {
        let (i, j) = self.ij(e);
        let (nx, ny) = (self.nx, self.ny);
        let periodic = self.boundary == BoundaryKind::Periodic;
        let target = match face {
            0 => {
                if i > 0 {
                    Some((i - 1, j))
                } else if periodic {
                    Some((nx - 1, j))
                } else {
                    None
                }
            }
            1 => {
                if i + 1 < nx {
                    Some((i + 1, j))
                } else if periodic {
                    Some((0, j))
                } else {
                    None
                }
            }
            2 => {
                if j > 0 {
                    Some((i, j - 1))
                } else if periodic {
                    Some((i, ny - 1))
                } else {
                    None
                }
            }
            3 => {
                if j + 1 < ny {
                    Some((i, j + 1))
                } else if periodic {
                    Some((i, 0))
                } else {
                    None
                }
            }
            _ => panic!("face index {face} out of range"),
        };
        match target {
            Some((ti, tj)) => FaceLink::Interior {
                element: self.element_at(ti, tj),
                face: opposite_face(face),
            },
            None => FaceLink::Boundary(self.boundary),
        }
    }
}
