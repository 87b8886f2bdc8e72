use capflow::flow::{run_from, FlowConfig, FlowMode, FlowState, Scheme};
use capflow::io::Checkpoint;
use capflow::{perturbed_cap, HemisphereGrid};

fn config(grid: HemisphereGrid, scheme: Scheme) -> FlowConfig {
    let mut cfg = FlowConfig::new(FlowMode::Mct, 1.1, grid);
    cfg.scheme = scheme;
    cfg.monitor_every = 5;
    cfg.max_steps = Some(40);
    cfg
}

fn resume_matches(grid: HemisphereGrid, scheme: Scheme) {
    let cfg = config(grid, scheme);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.json");
    let start = FlowState::new(perturbed_cap(cfg.theta, 1.0, 0.08, 1, &grid).unwrap(), &cfg)
        .unwrap()
        .guarded(&cfg)
        .unwrap();
    let full = run_from(&cfg, start, |s, _| {
        if s.step_index == 20 {
            Checkpoint::capture(s, &cfg).save(&path).unwrap();
        }
    })
    .unwrap();
    assert_eq!(full.steps, 40);

    let restored = Checkpoint::load(&path).unwrap().restore(&cfg).unwrap();
    assert_eq!(restored.step_index, 20);
    let mut at_40 = None;
    let resumed = run_from(&cfg, restored, |s, _| {
        if s.step_index == 40 {
            at_40 = Some((s.graph.u.clone(), s.graph.t));
        }
    })
    .unwrap();
    let (u, t) = at_40.unwrap();
    assert_eq!(u, full.final_u);
    assert_eq!(t, full.final_t);
    for row in resumed.rows.iter().filter(|r| r.step <= 40) {
        let orig = full.rows.iter().find(|r| r.step == row.step).unwrap();
        assert_eq!(row, orig);
    }
}

#[test]
fn axisym_explicit_resume_is_bitwise() {
    resume_matches(HemisphereGrid::axisym(2, 48).unwrap(), Scheme::ExplicitEuler);
}

#[test]
fn axisym_imex_resume_is_bitwise() {
    resume_matches(HemisphereGrid::axisym(2, 48).unwrap(), Scheme::Imex);
}

#[test]
fn full2d_resume_is_bitwise() {
    resume_matches(HemisphereGrid::full2d(17, 12).unwrap(), Scheme::ExplicitEuler);
}

#[test]
fn higher_dimension_resume_is_bitwise() {
    resume_matches(HemisphereGrid::axisym(3, 40).unwrap(), Scheme::ExplicitEuler);
}
