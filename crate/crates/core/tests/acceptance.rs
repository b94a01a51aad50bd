//! Acceptance runs: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every verdict is computed from the runs below; nothing is cached.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use cbpdg::constraints::{euler_positivity_set, ApplicationMode, Quantity};
use cbpdg::limiter::{eval_h, initial_samples, optimize_h, ElementLimiter};
use cbpdg::verify::{lp_error, monomial_bounds, oversample_min, AuditEntry, AuditRecord, Norm, Oversampler, DEFAULT_OVERSAMPLE};
use cbpdg::{
    get_case, rate_of_convergence, AdvectionField, BoundaryKind, ConstraintSet, ElementBasis, ElementKind, EquationSet,
    IndicatorConfig, LimiterConfig, LimiterMode, Mesh, ModalSolution, RocMethod, Solver, SolverConfig, StateFn,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WAVE_NS: [usize; 6] = [20, 40, 60, 80, 100, 120];
const PULSE_NS: [usize; 7] = [10, 15, 20, 25, 30, 35, 40];

/// Continuous-limiter L1 errors and RoC for the advecting waveforms, P2 and P3.
const WAVE_L1: [[f64; 6]; 2] = [
    [7.52e-2, 3.50e-2, 2.16e-2, 1.55e-2, 1.22e-2, 1.01e-2],
    [7.63e-2, 3.24e-2, 2.03e-2, 1.48e-2, 1.16e-2, 9.52e-3],
];
const WAVE_ROC: [f64; 2] = [1.13, 1.16];

#[derive(Clone, Copy, PartialEq)]
enum Audit {
    EveryStep,
    FinalTime,
}

struct Run {
    l1: f64,
    linf: f64,
    record: AuditRecord,
    last: Option<AuditEntry>,
    gap: f64,
    limited: usize,
    steps: usize,
    secs: f64,
}

fn run(case: &str, p: usize, n: usize, mode: LimiterMode, audit: Audit) -> Result<Run, String> {
    let t0 = Instant::now();
    let c = get_case(case).map_err(|e| e.to_string())?;
    let lim = LimiterConfig {
        mode,
        ..Default::default()
    };
    let mut s = c.build_solver(p, n, c.solver_config(p, lim)).map_err(|e| e.to_string())?;
    let sampler = Oversampler::new(&s.disc.basis, DEFAULT_OVERSAMPLE).map_err(|e| e.to_string())?;
    let mut record = AuditRecord::default();
    if audit == Audit::EveryStep {
        record.push(oversample_min(&s.disc.mesh, &sampler, &s.state.u, s.ncomp(), &s.constraints, 0.0));
    }
    let t_final = c.t_final;
    let stats = s
        .advance_to(t_final, |sv, _| {
            if audit == Audit::EveryStep {
                record.push(oversample_min(&sv.disc.mesh, &sampler, &sv.state.u, sv.ncomp(), &sv.constraints, sv.state.t));
            }
            Ok(())
        })
        .map_err(|e| format!("{case} P{p} N={n}: {e}"))?;
    let last = oversample_min(&s.disc.mesh, &sampler, &s.state.u, s.ncomp(), &s.constraints, s.state.t);
    if audit == Audit::FinalTime {
        record.push(last.clone());
    }
    let (mut l1, mut linf) = (f64::NAN, f64::NAN);
    if let Some(ex) = c.exact.clone() {
        let comp = c.error_component;
        let f = |x: &[f64; 2]| ex(x, t_final)[comp];
        l1 = lp_error(&s.disc.mesh, &s.disc.basis, &s.state.u, s.ncomp(), comp, f, Norm::L1);
        linf = lp_error(&s.disc.mesh, &s.disc.basis, &s.state.u, s.ncomp(), comp, f, Norm::LInf);
    }
    Ok(Run {
        l1,
        linf,
        record,
        last: Some(last),
        gap: stats.min_alpha_gap.min(s.initial_stats.min_alpha_gap),
        limited: stats.limited + s.initial_stats.limited,
        steps: s.state.step,
        secs: t0.elapsed().as_secs_f64(),
    })
}

struct Verdict {
    pass: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, lines: vec![] }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "    ok " } else { "    BAD" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("        {line}"));
    }

    fn fail(&mut self, line: String) {
        self.check(false, line);
    }
}

fn sweep(p: usize, mode: LimiterMode, v: &mut Verdict) -> Vec<Run> {
    let mut out = vec![];
    for &n in &WAVE_NS {
        match run("advect-waveforms", p, n, mode, Audit::EveryStep) {
            Ok(r) => out.push(r),
            Err(e) => v.fail(e),
        }
    }
    out
}

fn main() {
    let mut failed = vec![];
    let mut report = |id: usize, title: &str, v: Verdict, secs: f64| {
        println!("criterion {id}: {} {title} ({secs:.1} s)", if v.pass { "PASS" } else { "FAIL" });
        for l in &v.lines {
            println!("{l}");
        }
        if !v.pass {
            failed.push(id);
        }
    };

    // 1-4 share the waveforms sweeps
    let t = Instant::now();
    let mut v1 = Verdict::new();
    let cont: Vec<Vec<Run>> = [2, 3].iter().map(|&p| sweep(p, LimiterMode::Continuous, &mut v1)).collect();
    let cont_secs = t.elapsed().as_secs_f64();
    for (k, runs) in cont.iter().enumerate() {
        let p = k + 2;
        if runs.len() != WAVE_NS.len() {
            continue;
        }
        for (j, r) in runs.iter().enumerate() {
            let rel = r.l1 / WAVE_L1[k][j] - 1.0;
            v1.check(rel.abs() <= 0.30, format!("P{p} N={:3} L1 {:.3e} vs {:.2e} ({:+.1}%)", WAVE_NS[j], r.l1, WAVE_L1[k][j], 100.0 * rel));
        }
        let l1: Vec<f64> = runs.iter().map(|r| r.l1).collect();
        let roc = rate_of_convergence(&l1, &WAVE_NS, RocMethod::LeastSquares).unwrap_or(f64::NAN);
        v1.check((roc - WAVE_ROC[k]).abs() <= 0.15, format!("P{p} RoC {roc:.3} vs {:.2}", WAVE_ROC[k]));
    }
    v1.check(cont_secs < 120.0, format!("sweep runtime {cont_secs:.1} s (< 120 s)"));
    report(1, "waveforms convergence, continuous limiter", v1, cont_secs);

    let mut v2 = Verdict::new();
    for (k, runs) in cont.iter().enumerate() {
        for (j, r) in runs.iter().enumerate() {
            let m = r.record.overall_min();
            v2.check(m >= -1e-12, format!("P{} N={:3} spatio-temporal min g {m:.3e} over {} audits", k + 2, WAVE_NS[j], r.record.entries.len()));
        }
    }
    report(2, "continuous bounds audit", v2, 0.0);

    let t = Instant::now();
    let mut v3 = Verdict::new();
    let disc: Vec<Vec<Run>> = (2..=5).map(|p| sweep(p, LimiterMode::Discrete, &mut v3)).collect();
    for (k, runs) in disc.iter().enumerate() {
        let p = k + 2;
        let mins: Vec<f64> = runs.iter().map(|r| r.record.overall_min()).collect();
        let inside = mins.iter().all(|m| (-0.15..=-0.10).contains(m));
        let line: Vec<String> = mins.iter().map(|m| format!("{m:.5}")).collect();
        v3.check(inside, format!("P{p} minima over N {}", line.join(" ")));
        if let (Some(first), Some(last)) = (mins.first(), mins.last()) {
            v3.check(last.abs() >= 0.95 * first.abs(), format!("P{p} violation at N=120 is {:.1}% of N=20", 100.0 * last / first));
        }
    }
    report(3, "discrete baseline violation", v3, t.elapsed().as_secs_f64());

    let mut v4 = Verdict::new();
    let mut worst = f64::INFINITY;
    let mut limited = 0;
    for r in cont.iter().chain(&disc).flatten() {
        worst = worst.min(r.gap);
        limited += r.limited;
    }
    v4.check(worst >= -1e-14, format!("min (alpha_c - alpha_d) {worst:.3e} over {limited} limited element updates"));
    report(4, "continuous factor bounds the discrete one", v4, 0.0);

    let t = Instant::now();
    let mut v5 = Verdict::new();
    for p in [2usize, 3] {
        let runs: Vec<Run> = PULSE_NS.iter().filter_map(|&n| run("euler-pulse", p, n, LimiterMode::Continuous, Audit::EveryStep).map_err(|e| v5.fail(e)).ok()).collect();
        if runs.len() != PULSE_NS.len() {
            continue;
        }
        let li: Vec<f64> = runs.iter().map(|r| r.linf).collect();
        let l1: Vec<f64> = runs.iter().map(|r| r.l1).collect();
        let roc_i = rate_of_convergence(&li, &PULSE_NS, RocMethod::LeastSquares).unwrap_or(f64::NAN);
        let roc_1 = rate_of_convergence(&l1, &PULSE_NS, RocMethod::LeastSquares).unwrap_or(f64::NAN);
        v5.check(roc_i >= p as f64 + 0.5, format!("P{p} Linf density RoC {roc_i:.3} (needs >= {:.1})", p as f64 + 0.5));
        v5.note(format!("P{p} L1 density RoC {roc_1:.3}; errors N=40: Linf {:.3e}, L1 {:.3e}", li[li.len() - 1], l1[l1.len() - 1]));
        let m = runs.iter().map(|r| r.record.overall_min()).fold(f64::INFINITY, f64::min);
        v5.check(m >= -1e-12, format!("P{p} spatio-temporal min of rho - rho_min, P - P_min {m:.3e}"));
    }
    let secs = t.elapsed().as_secs_f64();
    v5.check(secs < 120.0, format!("runtime {secs:.1} s (< 120 s)"));
    report(5, "near-vacuum pulse", v5, secs);

    let t = Instant::now();
    let mut v6 = Verdict::new();
    for p in [3usize, 6] {
        match run("burgers-compression", p, 24, LimiterMode::Continuous, Audit::EveryStep) {
            Ok(r) => {
                let m = r.record.running_min.clone();
                v6.check(m.iter().all(|v| *v >= -1e-10), format!("P{p} continuous: min u {:.3e}, max u - 1 {:.3e}", m[0], -m[1]));
            }
            Err(e) => v6.fail(e),
        }
        match run("burgers-compression", p, 24, LimiterMode::Discrete, Audit::EveryStep) {
            Ok(r) => {
                let m = r.record.overall_min();
                v6.check(m < 0.0, format!("P{p} discrete: spatio-temporal violation {m:.3e}"));
            }
            Err(e) => v6.fail(e),
        }
    }
    report(6, "Burgers compression", v6, t.elapsed().as_secs_f64());

    let t = Instant::now();
    let mut v7 = Verdict::new();
    match run("leblanc", 3, 1200, LimiterMode::Continuous, Audit::EveryStep) {
        Ok(r) => {
            let m = r.record.running_min[1];
            v7.check(m >= -1e-12, format!("continuous: spatio-temporal min P - P_min {m:.3e} ({} steps, {:.1} s)", r.steps, r.secs));
            if let Some(last) = &r.last {
                v7.note(format!("continuous: at t=6 min P - P_min {:.3e}, min rho - rho_min {:.3e}", last.per_constraint[1].value, last.per_constraint[0].value));
            }
        }
        Err(e) => v7.fail(e),
    }
    match run("leblanc", 3, 1200, LimiterMode::Discrete, Audit::EveryStep) {
        Ok(r) => {
            let p_min = cbpdg::constraints::DEFAULT_P_MIN;
            let m = r.record.running_min[1] + p_min;
            v7.check(m < -1e-7, format!("discrete: spatio-temporal min pressure {m:.3e} ({} steps, {:.1} s)", r.steps, r.secs));
            if let Some(last) = &r.last {
                v7.note(format!("discrete: at t=6 min pressure {:.3e}", last.per_constraint[1].value + p_min));
            }
        }
        Err(e) => v7.fail(e),
    }
    let secs = t.elapsed().as_secs_f64();
    v7.check(secs < 600.0, format!("runtime {secs:.1} s (< 600 s)"));
    report(7, "Leblanc shock tube", v7, secs);

    let t = Instant::now();
    let mut v8 = Verdict::new();
    match run("solid-body-rotation", 2, 32, LimiterMode::Continuous, Audit::FinalTime) {
        Ok(r) => {
            let m = r.record.overall_min();
            v8.check(m >= -1e-12, format!("32^2 P2 final-time min g {m:.3e}, L1 error {:.3e} ({} steps)", r.l1, r.steps));
            v8.check(r.secs < 600.0, format!("runtime {:.1} s (< 600 s)", r.secs));
        }
        Err(e) => v8.fail(e),
    }
    match run("sedov", 2, 65, LimiterMode::Continuous, Audit::FinalTime) {
        Ok(r) => {
            let m = &r.record.running_min;
            v8.check(m.iter().all(|v| *v >= -1e-12), format!("Sedov 65^2 P2 t=1: min rho - rho_min {:.3e}, min P - P_min {:.3e} ({} steps, {:.1} s)", m[0], m[1], r.steps, r.secs));
        }
        Err(e) => v8.fail(e),
    }
    report(8, "solid body rotation (and reduced Sedov property check)", v8, t.elapsed().as_secs_f64());

    let t = Instant::now();
    let v9 = property_suite();
    let secs = t.elapsed().as_secs_f64();
    let mut v9 = v9;
    v9.check(secs < 120.0, format!("runtime {secs:.1} s (< 120 s)"));
    report(9, "limiter property suite", v9, secs);

    let t = Instant::now();
    let v10 = solver_properties();
    report(10, "solver unit properties", v10, t.elapsed().as_secs_f64());

    if failed.is_empty() {
        println!("acceptance: all criteria PASS");
    } else {
        println!("acceptance: FAIL {failed:?}");
        std::process::exit(1);
    }
}

fn property_suite() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (lo, hi) = unit_bounds();
    let set = ConstraintSet::new(vec![lo.clone(), hi.clone()], ApplicationMode::IndependentMax);
    let cfg = LimiterConfig::default();
    let trials = 1000;

    let mut worst_g = f64::INFINITY;
    let mut worst_mean: f64 = 0.0;
    let (mut sound, mut checked) = (0usize, 0usize);
    let mut exceptions = vec![];
    for kind in KINDS {
        let pts = dense_points(kind);
        for p in 2..=4 {
            let basis = ElementBasis::new(kind, p).unwrap();
            let limiter = ElementLimiter::new(&basis, &set, cfg).unwrap();
            let samples = initial_samples(&basis);
            for _ in 0..trials {
                let m = random_admissible(&basis, &mut rng);
                let mean = m.element_mean(&basis.monomial);
                let (out, _) = limiter.limit_element(&m).unwrap();
                for g in [&lo, &hi] {
                    worst_g = worst_g.min(dense_min_g(&out, &basis, g, &pts));
                    let g_mean = g.eval(&mean);
                    let opt = optimize_h(&m, g, g_mean, &basis, &samples, &cfg).unwrap();
                    let dense = dense_min_h(&m, &basis, g, g_mean, &pts);
                    checked += 1;
                    if opt.h_starstar <= dense + 1e-12 {
                        sound += 1;
                    } else {
                        exceptions.push(format!(
                            "{kind:?} P{p}: h** {:.3e} > dense {dense:.3e}; h* from initial samples: {}, iterations {}, fallback {}",
                            opt.h_starstar,
                            opt.h_star == opt.h_sample,
                            opt.iterations,
                            opt.fallback
                        ));
                    }
                }
                worst_mean = worst_mean.max((out.element_mean(&basis.monomial)[0] - mean[0]).abs());
            }
        }
    }
    v.check(worst_g >= -1e-10, format!("(a) post-limit dense min g {worst_g:.3e} over {} draws (segment, quad, triangle; P2-P4)", 9 * trials));
    v.check(worst_mean <= 1e-13, format!("(b) largest mean change {worst_mean:.3e}"));
    let frac = sound as f64 / checked as f64;
    v.check(frac >= 0.995, format!("(c) h** <= dense min h in {sound}/{checked} ({:.2}%)", 100.0 * frac));
    for e in exceptions.iter().take(10) {
        v.note(format!("(c) exception: {e}"));
    }

    // (d) transects of random 1D polynomials through g = 0
    let basis = ElementBasis::new(ElementKind::Segment, 4).unwrap();
    let mut crossings = 0;
    let mut worst_jump: f64 = 0.0;
    for _ in 0..trials {
        let m = random_admissible(&basis, &mut rng);
        let g_mean = lo.eval(&m.element_mean(&basis.monomial));
        let gx = |x: f64| m.evaluate(&basis.monomial, &[x, 0.0])[0];
        for i in 0..200 {
            let (a, b) = (-1.0 + i as f64 / 100.0, -1.0 + (i + 1) as f64 / 100.0);
            if gx(a).signum() == gx(b).signum() {
                continue;
            }
            let (mut a, mut b) = (a, b);
            for _ in 0..80 {
                let c = 0.5 * (a + b);
                if gx(c).signum() == gx(a).signum() {
                    a = c;
                } else {
                    b = c;
                }
            }
            let x0 = 0.5 * (a + b);
            let d = 1e-5;
            let h = |x: f64| eval_h(gx(x), g_mean);
            let right = (h(x0 + d) - h(x0)) / d;
            let left = (h(x0) - h(x0 - d)) / d;
            let scale = right.abs().max(left.abs()).max(1e-300);
            worst_jump = worst_jump.max((right - left).abs() / scale);
            crossings += 1;
        }
    }
    v.check(crossings > 0 && worst_jump <= 1e-2, format!("(d) largest relative slope jump of h across g=0: {worst_jump:.3e} over {crossings} crossings"));

    // (e) interval bounds contain sampled values
    let mut contained = true;
    for k in 0..trials {
        let kind = if k % 2 == 0 { ElementKind::Segment } else { ElementKind::Quad };
        let p = 1 + k % 5;
        let basis = ElementBasis::new(kind, p).unwrap();
        let coeffs: Vec<f64> = (0..basis.monomial.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let m = ModalSolution { element: 0, ncomp: 1, coeffs };
        let mut bx = [[0.0; 2]; 2];
        for axis in 0..kind.dim() {
            let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            bx[axis] = [a.min(b), a.max(b)];
        }
        let (blo, bhi) = monomial_bounds(&m, &basis.monomial, bx).unwrap()[0];
        let n = 30;
        for j in 0..=if kind == ElementKind::Quad { n } else { 0 } {
            for i in 0..=n {
                let x = [
                    bx[0][0] + (bx[0][1] - bx[0][0]) * i as f64 / n as f64,
                    bx[1][0] + (bx[1][1] - bx[1][0]) * j as f64 / n as f64,
                ];
                let u = m.evaluate(&basis.monomial, &x)[0];
                contained &= u >= blo - 1e-12 && u <= bhi + 1e-12;
            }
        }
    }
    v.check(contained, format!("(e) monomial bounds contain every sample on {trials} (polynomial, box) pairs"));
    v
}

fn solver_properties() -> Verdict {
    let mut v = Verdict::new();
    let none = SolverConfig {
        cfl: 0.5,
        limiter: LimiterConfig {
            mode: LimiterMode::None,
            ..Default::default()
        },
        stabilizer: IndicatorConfig::disabled(Quantity::Component(0)),
    };

    let euler = euler_positivity_set(1e-11, 1e-11, 1.4).unwrap();
    let mesh2 = Mesh::cartesian(5, 4, [0.0; 2], [1.0; 2], BoundaryKind::Periodic).unwrap();
    let state = vec![0.8, 0.3, -0.1, 2.7];
    let ic: StateFn = Arc::new(move |_, _| state.clone());
    let s = Solver::new(mesh2.clone(), 3, EquationSet::Euler { dim: 2, gamma: 1.4 }, euler.clone(), none, ic).unwrap();
    let mut r = vec![0.0; s.state.u.len()];
    s.disc.residual(&s.state.u, &mut r).unwrap();
    let fs = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    v.check(fs <= 1e-12, format!("free-stream residual (2D Euler, P3) {fs:.3e}"));

    let ic: StateFn = Arc::new(|x, _| {
        let rho = 1.0 + 0.4 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos();
        let p = 1.0 + 0.2 * (2.0 * PI * (x[0] + x[1])).cos();
        vec![rho, 0.3 * rho, -0.2 * rho, p / 0.4 + 0.5 * rho * 0.13]
    });
    let s = Solver::new(mesh2, 3, EquationSet::Euler { dim: 2, gamma: 1.4 }, euler, none, ic).unwrap();
    let defect = s.disc.mean_update_defect(&s.state.u).unwrap();
    v.check(defect <= 1e-12, format!("mean update vs surface-only formula {defect:.3e}"));

    let mesh = Mesh::interval(10, 0.0, 1.0, BoundaryKind::Periodic).unwrap();
    let eq = EquationSet::Advection {
        dim: 1,
        field: AdvectionField::Constant([1.0, 0.0]),
    };
    let ic: StateFn = Arc::new(|x, _| vec![(2.0 * PI * x[0]).sin()]);
    let set = ConstraintSet::scalar_interval(-2.0, 2.0).unwrap();
    let advance = |n: usize| {
        let mut s = Solver::new(mesh.clone(), 3, eq, set.clone(), none, ic.clone()).unwrap();
        for _ in 0..n {
            s.step(0.2 / n as f64).unwrap();
        }
        s.state.u
    };
    let u: Vec<Vec<f64>> = [40, 80, 160].iter().map(|&n| advance(n)).collect();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let order = (diff(&u[0], &u[1]) / diff(&u[1], &u[2])).log2();
    v.check(order >= 2.9, format!("SSP-RK3 observed temporal order {order:.3}"));
    v
}
