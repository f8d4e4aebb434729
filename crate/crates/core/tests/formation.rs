mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use common::*;
use weakrig::formation::{
    classify_equilibrium, control_law, det_z, e_matrix_three_agent, error_vector,
    exponential_tail_fit, flow_jacobian, is_collinear_three, simulate, EquilibriumKind,
    SimulationConfig, TargetSpec, TerminalStatus, DEFAULT_FD_STEP,
};
use weakrig::io::trace_to_csv;
use weakrig::linalg::symmetric_eigen;
use weakrig::{AngleTriple, Edge, Framework, Graph};

/// `ṗ` at `p`, with `p` flattened.
fn velocity(f: &Framework, t: &TargetSpec, p: &[f64]) -> DVector<f64> {
    control_law(&f.with_positions(p.to_vec()).unwrap(), t).unwrap()
}

fn scenario() -> (Framework, TargetSpec) {
    let f = load("sim_start.json");
    let t = load_targets("sim_targets.json", f.graph());
    (f, t)
}

#[test]
fn scenario_initial_error() {
    let (f, t) = scenario();
    let e = error_vector(&f, &t).unwrap();
    // |p1 - p2|² = 16 + 1, |p1 - p3|² = 4 + 9, cosine from the dot product (4, 1)·(2, -3)
    let cos0 = (4.0 * 2.0 - 3.0) / (17f64.sqrt() * 13f64.sqrt());
    assert_eq!(e.e[0], 9.0);
    assert_eq!(e.e[1], 4.0);
    assert!((e.e[2] - (cos0 - 40f64.to_radians().cos())).abs() < 1e-15);
}

#[test]
fn scenario_error_at_fifty_matches_independent_integrator() {
    // DOP853 with rtol 1e-11 on the same vector field, written separately
    // from this crate, gives this norm at t = 50.
    const REFERENCE: f64 = 9.477_218_050_558_014e-4;
    let (f, t) = scenario();
    let cfg = SimulationConfig {
        t_max: 50.0,
        record_every: 1000,
        ..SimulationConfig::default()
    };
    let tr = simulate(&f, &t, &cfg).unwrap();
    assert_eq!(tr.terminal_status, TerminalStatus::MaxTime);
    assert!(
        rel(tr.final_error_norm(), REFERENCE) < 1e-6,
        "{}",
        tr.final_error_norm()
    );
}

#[test]
fn scenario_converges_exponentially() {
    let (f, t) = scenario();
    let cfg = SimulationConfig {
        t_max: 150.0,
        convergence_eps: 1e-7,
        record_every: 100,
        ..SimulationConfig::default()
    };
    let tr = simulate(&f, &t, &cfg).unwrap();
    assert_eq!(tr.terminal_status, TerminalStatus::Converged);
    assert!(tr.final_error_norm() < 1e-6);
    for w in tr.lyapunov.windows(2) {
        assert!(w[1] <= w[0] + 1e-10);
    }
    let (slope, r2) = exponential_tail_fit(&tr);
    assert!(slope < 0.0 && r2 > 0.99, "slope {slope}, R² {r2}");
    let end = f.with_positions(tr.final_positions().to_vec()).unwrap();
    let eq = classify_equilibrium(&end, &t, 1e-6).unwrap();
    assert_eq!(eq.kind, EquilibriumKind::Desired);
    assert!(!eq.collinear);
}

#[test]
fn collinear_start_stalls_at_unstable_equilibrium() {
    let f = load("collinear_start.json");
    let t = load_targets("sim_targets.json", f.graph());
    let tr = simulate(&f, &t, &SimulationConfig::default()).unwrap();
    assert_eq!(tr.terminal_status, TerminalStatus::IncorrectEquilibrium);
    assert!(tr.det_z.as_ref().unwrap().iter().all(|d| d.abs() < 1e-12));
    let end = f.with_positions(tr.final_positions().to_vec()).unwrap();
    assert!(is_collinear_three(&end));
    let eq = classify_equilibrium(&end, &t, 1e-6).unwrap();
    assert_eq!(eq.kind, EquilibriumKind::Incorrect);
    assert!(eq.min_jacobian_eig.unwrap() < 0.0);
    // both distances are met, only the angle error remains
    let e = error_vector(&end, &t).unwrap();
    assert!(e.e[0].abs() < 1e-6 && e.e[1].abs() < 1e-6);
    assert!((e.e[2] - (1.0 - 40f64.to_radians().cos())).abs() < 1e-12);
}

#[test]
fn trace_csv_rows_parse_back() {
    let (f, t) = scenario();
    let cfg = SimulationConfig {
        t_max: 0.05,
        ..SimulationConfig::default()
    };
    let tr = simulate(&f, &t, &cfg).unwrap();
    let csv = trace_to_csv(&tr);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), tr.len());
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], tr.times[k]);
        assert_eq!(&row[1..7], &tr.positions[k][..]);
        assert_eq!(row[10], tr.lyapunov[k]);
        assert_eq!(row[11], tr.det_z.as_ref().unwrap()[k]);
    }
    assert_eq!(*tr.times.last().unwrap(), 0.05);
}

#[test]
fn realizability_precheck_catches_contradictions() {
    let e = [
        (Edge::new(0, 1), 1.0),
        (Edge::new(0, 2), 1.0),
        (Edge::new(1, 2), 9.0),
    ];
    assert!(TargetSpec::new(&e, &[])
        .unwrap()
        .realizability_precheck()
        .is_err());
    let e = [
        (Edge::new(0, 1), 1.0),
        (Edge::new(0, 2), 1.0),
        (Edge::new(1, 2), 1.0),
    ];
    let good = TargetSpec::new(&e, &[(AngleTriple::new(0, 1, 2), 0.5)]).unwrap();
    assert!(good.realizability_precheck().is_ok());
    let bad = TargetSpec::new(&e, &[(AngleTriple::new(0, 1, 2), 0.0)]).unwrap();
    assert!(bad.realizability_precheck().is_err());
    assert!(TargetSpec::new(&[(Edge::new(0, 1), -1.0)], &[]).is_err());
    assert!(TargetSpec::new(&[], &[(AngleTriple::new(0, 1, 2), 1.5)]).is_err());
}

#[test]
fn desired_configuration_has_three_zero_modes() {
    let mut rng = rng(11);
    for _ in 0..10 {
        let f = random_three_agent(&mut rng);
        let t = TargetSpec::realized_by(&f).unwrap();
        let (eig, _) = symmetric_eigen(&flow_jacobian(&f, &t, DEFAULT_FD_STEP).unwrap());
        let zeros = eig.iter().filter(|x| x.abs() < 1e-6).count();
        assert_eq!(zeros, 3, "{eig:?}");
        assert!(eig.iter().all(|&x| x > -1e-6));
    }
}

#[test]
fn flow_needs_a_matching_target() {
    let (f, _) = scenario();
    let wrong = TargetSpec::new(&[(Edge::new(0, 1), 8.0)], &[]).unwrap();
    assert!(control_law(&f, &wrong).is_err());
    let path = Framework::new(
        Graph::new(3, &[(0, 1), (1, 2)], &[]).unwrap(),
        2,
        &f.points(),
    )
    .unwrap();
    assert!(det_z(&path, &TargetSpec::realized_by(&path).unwrap()).is_err());
}

proptest! {
    #![proptest_config(proptest_config(48))]

    #[test]
    fn error_matrix_reproduces_the_gradient(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let f = random_three_agent(&mut rng);
        let t = random_three_agent_targets(&mut rng, &f);
        let e = e_matrix_three_agent(&f, &t).unwrap();
        let u = control_law(&f, &t).unwrap();
        let p = f.positions();
        for i in 0..3 {
            for d in 0..2 {
                let ep: f64 = (0..3).map(|j| e[(i, j)] * p[2 * j + d]).sum();
                prop_assert!(rel(-u[2 * i + d], ep) < 1e-9);
            }
        }
        prop_assert!((e - e.transpose()).amax() < 1e-12);
    }

    #[test]
    fn lyapunov_never_increases(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let f = random_three_agent(&mut rng);
        let t = random_three_agent_targets(&mut rng, &f);
        let cfg = SimulationConfig { t_max: 3.0, ..SimulationConfig::default() };
        let tr = simulate(&f, &t, &cfg).unwrap();
        for w in tr.lyapunov.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn det_z_obeys_its_rate_equation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let f = random_three_agent(&mut rng);
        let t = random_three_agent_targets(&mut rng, &f);
        let dz = det_z(&f, &t).unwrap();
        let u = control_law(&f, &t).unwrap();
        let h = 1e-6;
        let p = f.positions();
        let det_at = |s: f64| {
            let q: Vec<f64> = p.iter().zip(u.iter()).map(|(x, v)| x + s * v).collect();
            det_z(&f.with_positions(q).unwrap(), &t).unwrap().det
        };
        let rate = (det_at(h) - det_at(-h)) / (2.0 * h);
        let scale = (dz.sigma * dz.det).abs().max(u.amax() * p.iter().fold(0.0_f64, |a, x| a.max(x.abs()))).max(1.0);
        prop_assert!((rate + dz.sigma * dz.det).abs() < 1e-5 * scale,
            "rate {rate}, -sigma det {}", -dz.sigma * dz.det);
    }

    #[test]
    fn flow_commutes_with_translation_and_rotation(seed in any::<u64>(), theta in -3.1..3.1f64,
                                                  tx in -4.0..4.0f64, ty in -4.0..4.0f64) {
        let mut rng = rng(seed);
        let f = random_three_agent(&mut rng);
        let t = random_three_agent_targets(&mut rng, &f);
        let u = control_law(&f, &t).unwrap();
        let (s, c) = theta.sin_cos();
        let moved: Vec<f64> = f.points().iter()
            .flat_map(|q| [c * q[0] - s * q[1] + tx, s * q[0] + c * q[1] + ty]).collect();
        let um = velocity(&f, &t, &moved);
        let scale = u.amax().max(1.0);
        for i in 0..3 {
            let (vx, vy) = (u[2 * i], u[2 * i + 1]);
            prop_assert!((um[2 * i] - (c * vx - s * vy)).abs() < 1e-9 * scale);
            prop_assert!((um[2 * i + 1] - (s * vx + c * vy)).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn flow_jacobian_is_symmetric(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let f = random_three_agent(&mut rng);
        let t = random_three_agent_targets(&mut rng, &f);
        let j = flow_jacobian(&f, &t, DEFAULT_FD_STEP).unwrap();
        prop_assert!(max_abs(&(&j - j.transpose())) < 1e-5);
    }

    #[test]
    fn collinear_states_stay_collinear(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let xs = loop {
            let mut xs: Vec<f64> = (0..3).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
            xs.sort_by(f64::total_cmp);
            if xs[1] - xs[0] > 0.3 && xs[2] - xs[1] > 0.3 { break xs; }
        };
        let g = Graph::new(3, &[(0, 1), (0, 2)], &[(0, 1, 2)]).unwrap();
        let f = Framework::new(g, 2, &xs.iter().map(|&x| vec![x, 0.0]).collect::<Vec<_>>()).unwrap();
        let t = load_targets("sim_targets.json", f.graph());
        let cfg = SimulationConfig { t_max: 20.0, record_every: 50, ..SimulationConfig::default() };
        let tr = simulate(&f, &t, &cfg).unwrap();
        prop_assert!(tr.det_z.as_ref().unwrap().iter().all(|d| d.abs() < 1e-8));
    }
}
