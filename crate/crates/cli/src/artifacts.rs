//! CSV tables and legacy VTK field dumps. Floats are written with 17
//! significant digits so every value reads back bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cbpdg::basis::nodal_to_modal;
use cbpdg::{rate_of_convergence, AuditEntry, Mesh, RocMethod, Solver, StepStats};

use crate::CliError;

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

/// Keeps free text inside one CSV field.
fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub case: String,
    pub order: usize,
    pub nelems: usize,
    pub mode: String,
    pub n_iters: usize,
    pub t_final: f64,
    pub steps: usize,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    /// Spatio-temporal minimum over every audited constraint.
    pub g_min: f64,
    pub wall_s: f64,
}

pub const SUMMARY_HEADER: &str = "case,order,nelems,mode,n_iters,t_final,steps,l1,linf,g_min,wall_s";

pub fn write_summary(path: &Path, s: &RunSummary) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SUMMARY_HEADER}")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{}",
        s.case,
        s.order,
        s.nelems,
        s.mode,
        s.n_iters,
        fmt_f(s.t_final),
        s.steps,
        fmt_opt(s.l1),
        fmt_opt(s.linf),
        fmt_f(s.g_min),
        fmt_f(s.wall_s)
    )?;
    w.flush()?;
    Ok(())
}

/// Summary of a run that stopped early: the header, then `FAILED` with the
/// step and time reached and the reason.
pub fn write_failed_summary(path: &Path, step: usize, t: f64, reason: &str) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SUMMARY_HEADER}")?;
    writeln!(w, "FAILED,{step},{},{}", fmt_f(t), sanitize(reason))?;
    w.flush()?;
    Ok(())
}

/// `step,t` then min, element and physical location for each constraint.
pub struct AuditWriter {
    w: BufWriter<File>,
}

impl AuditWriter {
    pub fn create(path: &Path, n_constraints: usize) -> Result<Self, CliError> {
        let mut w = BufWriter::new(File::create(path)?);
        let mut header = String::from("step,t");
        for i in 0..n_constraints {
            header.push_str(&format!(",g{i}_min,g{i}_element,g{i}_x,g{i}_y"));
        }
        writeln!(w, "{header}")?;
        Ok(AuditWriter { w })
    }

    pub fn row(&mut self, step: usize, entry: &AuditEntry, mesh: &Mesh) -> Result<(), CliError> {
        let mut line = format!("{step},{}", fmt_f(entry.t));
        for m in &entry.per_constraint {
            let x = if m.element < mesh.num_elements() {
                mesh.to_physical(m.element, &m.x_ref)
            } else {
                [f64::NAN; 2]
            };
            line.push_str(&format!(",{},{},{},{}", fmt_f(m.value), m.element, fmt_f(x[0]), fmt_f(x[1])));
        }
        writeln!(self.w, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush()?;
        Ok(())
    }
}

pub struct LimiterWriter {
    w: BufWriter<File>,
}

impl LimiterWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "step,t,limited,max_alpha,fallbacks,optimizer_iterations,subcell")?;
        Ok(LimiterWriter { w })
    }

    pub fn row(&mut self, step: usize, t: f64, s: &StepStats) -> Result<(), CliError> {
        writeln!(
            self.w,
            "{step},{},{},{},{},{},{}",
            fmt_f(t),
            s.limited,
            fmt_f(s.max_alpha),
            s.fallbacks,
            s.optimizer_iterations,
            s.subcell
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush()?;
        Ok(())
    }
}

/// Legacy ASCII structured-points dump of a 2D solution: each element is
/// split into `(p+1)²` cells holding the solution at the cell centers, one
/// scalar field per component and per constraint.
pub fn write_vtk(path: &Path, solver: &Solver) -> Result<(), CliError> {
    let disc = &solver.disc;
    let mesh = &disc.mesh;
    if mesh.dim() != 2 {
        return Err(CliError::Config("field dumps are only written for 2D meshes".into()));
    }
    let basis = &disc.basis;
    let nc = disc.ncomp;
    let nn = basis.num_nodes();
    let k = basis.order() + 1;
    let (cx, cy) = (mesh.nx * k, mesh.ny * k);
    let h = mesh.spacing();
    let centers: Vec<f64> = (0..k).map(|a| -1.0 + (2 * a + 1) as f64 / k as f64).collect();

    // cell-major states, x index fastest
    let mut states = vec![0.0; cx * cy * nc];
    for e in 0..mesh.num_elements() {
        let m = nodal_to_modal(&solver.state.u[e * nn * nc..(e + 1) * nn * nc], nc, e, &basis.nodal);
        let (i, j) = mesh.ij(e);
        for (b, &y) in centers.iter().enumerate() {
            for (a, &x) in centers.iter().enumerate() {
                let cell = (j * k + b) * cx + i * k + a;
                states[cell * nc..(cell + 1) * nc].copy_from_slice(&m.evaluate(&basis.monomial, &[x, y]));
            }
        }
    }

    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "cbpdg t={}", fmt_f(solver.state.t))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", cx + 1, cy + 1)?;
    writeln!(w, "ORIGIN {} {} 0", fmt_f(mesh.lo[0]), fmt_f(mesh.lo[1]))?;
    writeln!(w, "SPACING {} {} 1", fmt_f(h[0] / k as f64), fmt_f(h[1] / k as f64))?;
    writeln!(w, "CELL_DATA {}", cx * cy)?;
    let mut field = |name: String, f: &dyn Fn(&[f64]) -> f64| -> std::io::Result<()> {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for s in states.chunks_exact(nc) {
            writeln!(w, "{}", fmt_f(f(s)))?;
        }
        Ok(())
    };
    for c in 0..nc {
        field(format!("u{c}"), &|s| s[c])?;
    }
    for (i, g) in solver.constraints.constraints.iter().enumerate() {
        field(format!("g{i}"), &|s| g.eval(s))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l1: f64,
    pub linf: f64,
    pub g_min: f64,
}

/// Rows per N, then a `roc` row with the least-squares rates of both norms.
pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<(f64, f64), CliError> {
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let l1: Vec<f64> = rows.iter().map(|r| r.l1).collect();
    let linf: Vec<f64> = rows.iter().map(|r| r.linf).collect();
    let roc1 = rate_of_convergence(&l1, &ns, RocMethod::LeastSquares)?;
    let roci = rate_of_convergence(&linf, &ns, RocMethod::LeastSquares)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,l1,linf,g_min")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.n, fmt_f(r.l1), fmt_f(r.linf), fmt_f(r.g_min))?;
    }
    writeln!(w, "roc,{},{},", fmt_f(roc1), fmt_f(roci))?;
    w.flush()?;
    Ok((roc1, roci))
}
