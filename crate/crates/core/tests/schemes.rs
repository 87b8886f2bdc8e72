use std::f64::consts::PI;

use capflow::flow::{run, FlowConfig, FlowMode, Scheme};
use capflow::verify::monotonicity_report;
use capflow::{perturbed_cap, HemisphereGrid};

fn final_state(scheme: Scheme, t_end: f64) -> Vec<f64> {
    let grid = HemisphereGrid::axisym(2, 64).unwrap();
    let mut cfg = FlowConfig::new(FlowMode::Mct, PI / 3.0, grid);
    cfg.scheme = scheme;
    cfg.t_max = t_end;
    cfg.stop_tol = 1e-300;
    let init = perturbed_cap(cfg.theta, 1.0, 0.1, 1, &grid).unwrap();
    match run(&cfg, init) {
        Err(capflow::CapflowError::NotConverged { trajectory, .. }) => trajectory.final_u,
        other => panic!("{:?}", other.map(|r| r.steps)),
    }
}

#[test]
fn explicit_and_imex_agree() {
    let a = final_state(Scheme::ExplicitEuler, 0.05);
    let b = final_state(Scheme::Imex, 0.05);
    let d = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(d < 1e-3, "{d}");
}

#[test]
fn mcf_decreases_w1_and_stays_convex() {
    let grid = HemisphereGrid::axisym(2, 64).unwrap();
    let mut cfg = FlowConfig::new(FlowMode::Mcf, PI / 2.0, grid);
    cfg.scheme = Scheme::Imex;
    cfg.monitor_every = 1;
    cfg.max_steps = Some(300);
    let record = run(&cfg, perturbed_cap(cfg.theta, 1.0, 0.1, 1, &grid).unwrap()).unwrap();
    let rep = monotonicity_report(&record);
    assert_eq!(rep.w1_violations, 0);
    assert!(record.kappa_inf > 0.0);
    let w1 = record.w_series(1);
    assert!(w1.last().unwrap().1 < w1[0].1);
}
