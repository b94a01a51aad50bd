use std::f64::consts::PI;
use std::sync::Arc;

use cbpdg::constraints::{euler_positivity_set, Quantity};
use cbpdg::{
    get_case, AdvectionField, BoundaryKind, ConstraintSet, EquationSet, IndicatorConfig, LimiterConfig, LimiterMode, Mesh, Solver,
    SolverConfig, StateFn,
};

fn unlimited() -> SolverConfig {
    SolverConfig {
        cfl: 0.5,
        limiter: LimiterConfig {
            mode: LimiterMode::None,
            ..Default::default()
        },
        stabilizer: IndicatorConfig::disabled(Quantity::Component(0)),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

#[test]
fn constant_states_are_fixed_points() {
    let euler2 = EquationSet::Euler { dim: 2, gamma: 1.4 };
    let rotation = EquationSet::Advection {
        dim: 2,
        field: AdvectionField::Rotation {
            center: [0.5, 0.5],
            omega: 2.0 * PI,
        },
    };
    let cases: Vec<(Mesh, EquationSet, Vec<f64>, ConstraintSet)> = vec![
        (
            Mesh::interval(8, 0.0, 1.0, BoundaryKind::Periodic).unwrap(),
            EquationSet::Euler { dim: 1, gamma: 1.4 },
            vec![1.0, 0.3, 2.5],
            euler_positivity_set(1e-11, 1e-11, 1.4).unwrap(),
        ),
        (
            Mesh::cartesian(4, 5, [0.0; 2], [1.0; 2], BoundaryKind::Periodic).unwrap(),
            euler2,
            vec![0.7, 0.2, -0.4, 3.0],
            euler_positivity_set(1e-11, 1e-11, 1.4).unwrap(),
        ),
        (
            Mesh::cartesian(6, 6, [0.0; 2], [1.0; 2], BoundaryKind::Periodic).unwrap(),
            rotation,
            vec![0.4],
            ConstraintSet::scalar_interval(0.0, 1.0).unwrap(),
        ),
    ];
    for (mesh, eq, state, set) in cases {
        for p in [2, 3] {
            let st = state.clone();
            let ic: StateFn = Arc::new(move |_, _| st.clone());
            let s = Solver::new(mesh.clone(), p, eq, set.clone(), unlimited(), ic).unwrap();
            let mut r = vec![0.0; s.state.u.len()];
            s.disc.residual(&s.state.u, &mut r).unwrap();
            assert!(max_abs(&r) <= 1e-12, "{} P{p}: {:e}", eq.name(), max_abs(&r));
        }
    }
}

#[test]
fn mean_update_depends_on_interface_fluxes_only() {
    let ic: StateFn = Arc::new(|x, _| {
        let rho = 1.0 + 0.4 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos();
        let (vx, vy) = (0.3 + 0.1 * (2.0 * PI * x[1]).sin(), -0.2);
        let p = 1.0 + 0.2 * (2.0 * PI * (x[0] + x[1])).cos();
        vec![rho, rho * vx, rho * vy, p / 0.4 + 0.5 * rho * (vx * vx + vy * vy)]
    });
    let mesh = Mesh::cartesian(6, 5, [0.0; 2], [1.0; 2], BoundaryKind::Periodic).unwrap();
    let set = euler_positivity_set(1e-11, 1e-11, 1.4).unwrap();
    let s = Solver::new(mesh, 3, EquationSet::Euler { dim: 2, gamma: 1.4 }, set, unlimited(), ic).unwrap();
    assert!(s.disc.mean_update_defect(&s.state.u).unwrap() <= 1e-12);

    let c = get_case("advect-waveforms").unwrap();
    let s = c.build_solver(4, 15, c.solver_config(4, LimiterConfig::default())).unwrap();
    assert!(s.disc.mean_update_defect(&s.state.u).unwrap() <= 1e-12);
}

/// Semi-discrete advection is the linear ODE `du/dt = L u`; with the spatial
/// operator fixed, successive dt-halvings isolate the time-stepping error.
#[test]
fn rk3_is_third_order_in_time() {
    let mesh = Mesh::interval(10, 0.0, 1.0, BoundaryKind::Periodic).unwrap();
    let eq = EquationSet::Advection {
        dim: 1,
        field: AdvectionField::Constant([1.0, 0.0]),
    };
    let ic: StateFn = Arc::new(|x, _| vec![(2.0 * PI * x[0]).sin()]);
    let set = ConstraintSet::scalar_interval(-2.0, 2.0).unwrap();
    let t_end = 0.2;
    let run = |n: usize| {
        let mut s = Solver::new(mesh.clone(), 3, eq, set.clone(), unlimited(), ic.clone()).unwrap();
        for _ in 0..n {
            s.step(t_end / n as f64).unwrap();
        }
        s.state.u
    };
    let runs: Vec<Vec<f64>> = [40, 80, 160].iter().map(|&n| run(n)).collect();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let order = (diff(&runs[0], &runs[1]) / diff(&runs[1], &runs[2])).log2();
    assert!(order >= 2.9, "observed order {order}");
}

#[test]
fn zero_operator_leaves_state_unchanged() {
    let mesh = Mesh::interval(6, 0.0, 1.0, BoundaryKind::Periodic).unwrap();
    let eq = EquationSet::Advection {
        dim: 1,
        field: AdvectionField::Constant([0.0, 0.0]),
    };
    let ic: StateFn = Arc::new(|x, _| vec![0.5 + 0.3 * (2.0 * PI * x[0]).sin()]);
    let set = ConstraintSet::scalar_interval(0.0, 1.0).unwrap();
    let mut s = Solver::new(mesh, 3, eq, set, unlimited(), ic).unwrap();
    let u0 = s.state.u.clone();
    s.step(0.1).unwrap();
    // only the rounding of the stage combinations remains
    let d = s.state.u.iter().zip(&u0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(d <= 1e-15, "{d:e}");
}

#[test]
fn limited_run_conserves_totals() {
    let c = get_case("advect-waveforms").unwrap();
    let mut s = c.build_solver(3, 20, c.solver_config(3, LimiterConfig::default())).unwrap();
    let before = s.disc.totals(&s.state.u)[0];
    let stats = s.advance_to(0.5, |_, _| Ok(())).unwrap();
    assert!(stats.limited > 0);
    let after = s.disc.totals(&s.state.u)[0];
    assert!((after - before).abs() <= 0.5e-11, "{before} -> {after}");
}

#[test]
fn smooth_admissible_profile_needs_no_limiting() {
    let mesh = Mesh::interval(16, 0.0, 1.0, BoundaryKind::Periodic).unwrap();
    let eq = EquationSet::Advection {
        dim: 1,
        field: AdvectionField::Constant([1.0, 0.0]),
    };
    let ic: StateFn = Arc::new(|x, _| vec![0.5 + 0.25 * (2.0 * PI * x[0]).sin()]);
    let set = ConstraintSet::scalar_interval(0.0, 1.0).unwrap();
    let cfg = SolverConfig {
        limiter: LimiterConfig::default(),
        ..unlimited()
    };
    let mut s = Solver::new(mesh, 3, eq, set, cfg, ic).unwrap();
    let stats = s.advance_to(0.25, |_, _| Ok(())).unwrap();
    assert_eq!(stats.limited, 0);
}

#[test]
fn euler_pulse_keeps_positivity() {
    let c = get_case("euler-pulse").unwrap();
    let mut s = c.build_solver(3, 10, c.solver_config(3, LimiterConfig::default())).unwrap();
    s.advance_to(0.1, |_, _| Ok(())).unwrap();
    let rho_min = s.state.u.chunks(3).map(|u| u[0]).fold(f64::INFINITY, f64::min);
    assert!(rho_min > 0.0);
}
