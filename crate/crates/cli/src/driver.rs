//! `run`, `convergence` and `audit-bounds`.

use std::fs;
use std::time::Instant;

use cbpdg::verify::{lp_error, monomial_bounds};
use cbpdg::{
    get_case, oversample_min, AuditRecord, ElementBasis, ElementKind, IndicatorConfig, LimiterConfig, ModalSolution, Norm,
    Oversampler, Solver,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifacts::{write_convergence, write_failed_summary, write_summary, write_vtk, AuditWriter, LimiterWriter};
pub use crate::artifacts::{ConvergenceRow, RunSummary};
use crate::config::{AuditCadence, RunConfig};
use crate::CliError;

fn mode_name(cfg: &RunConfig) -> &'static str {
    match cfg.mode {
        cbpdg::LimiterMode::None => "none",
        cbpdg::LimiterMode::Discrete => "discrete",
        cbpdg::LimiterMode::Continuous => "continuous",
    }
}

/// One solve with all artifacts written to `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let t0 = Instant::now();
    let case = get_case(cfg.case.as_deref().unwrap_or_default())?;
    let p = cfg.order.unwrap_or(case.default_order);
    let n = cfg.nelems.unwrap_or(case.default_n);
    let t_final = cfg.t_final.unwrap_or(case.t_final);

    let limiter = LimiterConfig {
        mode: cfg.mode,
        n_iters: cfg.n_iters,
        ..Default::default()
    };
    let mut scfg = case.solver_config(p, limiter);
    if let Some(cfl) = cfg.cfl {
        scfg.cfl = cfl;
    }
    if let Some(on) = cfg.stabilizer {
        let q = case.indicator_quantity();
        scfg.stabilizer = if on { IndicatorConfig::new(q) } else { IndicatorConfig::disabled(q) };
    }

    let dir = &cfg.out;
    fs::create_dir_all(dir)?;
    let summary_path = dir.join("summary.csv");
    let mut solver = match case.build_solver(p, n, scfg) {
        Ok(s) => s,
        Err(e) => {
            let e = CliError::from(e);
            write_failed_summary(&summary_path, 0, 0.0, &e.to_string())?;
            return Err(e);
        }
    };
    let sampler = Oversampler::new(&solver.disc.basis, cfg.oversample)?;
    let two_d = solver.disc.mesh.dim() == 2;

    let mut audit = AuditWriter::create(&dir.join("audit.csv"), solver.constraints.len())?;
    let mut lim = LimiterWriter::create(&dir.join("limiter.csv"))?;
    let mut record = AuditRecord::default();
    let audit_now = |s: &Solver| oversample_min(&s.disc.mesh, &sampler, &s.state.u, s.ncomp(), &s.constraints, s.state.t);

    lim.row(0, 0.0, &solver.initial_stats)?;
    if cfg.audit == AuditCadence::EveryStep {
        let entry = audit_now(&solver);
        audit.row(0, &entry, &solver.disc.mesh)?;
        record.push(entry);
    }
    if two_d {
        write_vtk(&dir.join(vtk_name(0.0)), &solver)?;
    }

    let outcome = solver.advance_to(t_final, |s, stats| {
        let step = s.state.step;
        let io = |e: CliError| cbpdg::Error::Usage(format!("writing artifacts: {e}"));
        lim.row(step, s.state.t, stats).map_err(io)?;
        if cfg.audit == AuditCadence::EveryStep {
            let entry = audit_now(s);
            audit.row(step, &entry, &s.disc.mesh).map_err(io)?;
            record.push(entry);
        }
        if two_d && cfg.field_every > 0 && step % cfg.field_every == 0 {
            write_vtk(&dir.join(vtk_name(s.state.t)), s).map_err(io)?;
        }
        Ok(())
    });
    if let Err(e) = outcome {
        let e = CliError::from(e);
        audit.finish()?;
        lim.finish()?;
        write_failed_summary(&summary_path, solver.state.step, solver.state.t, &e.to_string())?;
        return Err(e);
    }

    let steps = solver.state.step;
    if cfg.audit == AuditCadence::Final {
        let entry = audit_now(&solver);
        audit.row(steps, &entry, &solver.disc.mesh)?;
        record.push(entry);
    }
    audit.finish()?;
    lim.finish()?;
    if two_d && !(cfg.field_every > 0 && steps % cfg.field_every == 0) {
        write_vtk(&dir.join(vtk_name(solver.state.t)), &solver)?;
    }

    let (l1, linf) = match &case.exact {
        Some(ex) => {
            let comp = case.error_component;
            let f = |x: &[f64; 2]| ex(x, t_final)[comp];
            let d = &solver.disc;
            let nc = solver.ncomp();
            (
                Some(lp_error(&d.mesh, &d.basis, &solver.state.u, nc, comp, f, Norm::L1)),
                Some(lp_error(&d.mesh, &d.basis, &solver.state.u, nc, comp, f, Norm::LInf)),
            )
        }
        None => (None, None),
    };
    let summary = RunSummary {
        case: case.name.to_string(),
        order: p,
        nelems: n,
        mode: mode_name(cfg).to_string(),
        n_iters: cfg.n_iters,
        t_final,
        steps,
        l1,
        linf,
        g_min: record.overall_min(),
        wall_s: t0.elapsed().as_secs_f64(),
    };
    write_summary(&summary_path, &summary)?;
    Ok(summary)
}

fn vtk_name(t: f64) -> String {
    format!("field_{t:.6}.vtk")
}

/// Runs every `cfg.ns` entry into `<out>/n<N>/` and tabulates the errors in
/// `<out>/convergence.csv`. Returns the rows and the L1 and L∞ rates.
pub fn convergence(cfg: &RunConfig) -> Result<(Vec<ConvergenceRow>, f64, f64), CliError> {
    cfg.validate()?;
    let case = get_case(cfg.case.as_deref().unwrap_or_default())?;
    if case.exact.is_none() {
        return Err(CliError::Config(format!("case `{}` has no exact solution to converge to", case.name)));
    }
    if cfg.ns.len() < 2 {
        return Err(CliError::Config("convergence needs at least two element counts in ns".into()));
    }
    let mut rows = vec![];
    for &n in &cfg.ns {
        let sub = RunConfig {
            nelems: Some(n),
            out: cfg.out.join(format!("n{n}")),
            ..cfg.clone()
        };
        let s = run(&sub)?;
        rows.push(ConvergenceRow {
            n,
            l1: s.l1.unwrap_or(f64::NAN),
            linf: s.linf.unwrap_or(f64::NAN),
            g_min: s.g_min,
        });
    }
    let (r1, ri) = write_convergence(&cfg.out.join("convergence.csv"), &rows)?;
    Ok((rows, r1, ri))
}

/// Self-check of the certified monomial bounds: random polynomials on random
/// sub-boxes of segments and quads, sampled on a 21-point lattice. Returns
/// `(checked, violations)`.
pub fn audit_bounds(trials: usize, seed: u64) -> Result<(usize, usize), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut bad) = (0, 0);
    for kind in [ElementKind::Segment, ElementKind::Quad] {
        for p in 1..=5 {
            let basis = ElementBasis::new(kind, p)?;
            for _ in 0..trials {
                let coeffs: Vec<f64> = (0..basis.monomial.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let m = ModalSolution {
                    element: 0,
                    ncomp: 1,
                    coeffs,
                };
                let mut bx = [[0.0; 2]; 2];
                for b in bx.iter_mut().take(kind.dim()) {
                    let (a, c): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    *b = [a.min(c), a.max(c)];
                }
                let (lo, hi) = monomial_bounds(&m, &basis.monomial, bx)?[0];
                let k = 20;
                let ny = if kind.dim() == 2 { k } else { 0 };
                for j in 0..=ny {
                    for i in 0..=k {
                        let x = [
                            bx[0][0] + (bx[0][1] - bx[0][0]) * i as f64 / k as f64,
                            bx[1][0] + (bx[1][1] - bx[1][0]) * j as f64 / k as f64,
                        ];
                        let v = m.evaluate(&basis.monomial, &x)[0];
                        checked += 1;
                        if v < lo - 1e-12 || v > hi + 1e-12 {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((checked, bad))
}

