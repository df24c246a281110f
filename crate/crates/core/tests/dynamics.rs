use sns_core::noise::NoiseSpec;
use sns_core::operators::OperatorVariant;
use sns_core::par::with_threads;
use sns_core::solver::{read_checkpoint, write_checkpoint, Checkpoint, ForcingMode, IntegratorConfig, Model, ModelConfig, Recording};
use sns_core::Error;

fn forced(l: usize, sigma: f64) -> ModelConfig {
    let mut cfg = ModelConfig::quiet(l, 0.2, OperatorVariant::DeltaOnly);
    cfg.omega = 1.0;
    cfg.noise = NoiseSpec::new(sigma, 1.0, l, 4, 0.01);
    cfg.forcing.push(ForcingMode { l: 3, m: 1, re: 1.0, im: -0.5 });
    cfg
}

// d/dt |u|^2 = -2 nu |u|_{V,op}^2 for the unforced deterministic system.
// The trapezoid rule on the recorded a_form closes the ledger up to the
// second-order error of the scheme.
fn ledger_defect(dt: f64) -> f64 {
    let mut cfg = ModelConfig::quiet(10, 0.1, OperatorVariant::DeltaOnly);
    cfg.omega = 2.0;
    let model = Model::new(cfg).unwrap();
    let x = model.random_initial(5, 0, 3.0, 0.5);
    let tr = model.run(&model.path(), &x, &IntegratorConfig::new(dt), 0, 0.5, Recording::Full).unwrap();
    let dissipated: f64 = tr.rows.windows(2).map(|w| 0.1 * (w[1].t - w[0].t) * (w[0].a_form + w[1].a_form)).sum();
    let (first, last) = (tr.rows[0].energy, tr.rows[tr.rows.len() - 1].energy);
    (last - first + dissipated).abs() / first
}

#[test]
fn energy_ledger_closes_at_second_order() {
    let (coarse, fine) = (ledger_defect(2e-3), ledger_defect(1e-3));
    assert!(fine < 1e-4, "{fine:e}");
    assert!(coarse / fine > 3.5, "{coarse:e} {fine:e}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let model = Model::new(forced(10, 1.0)).unwrap();
    let x = model.random_initial(9, 0, 1.0, 1.0);
    let icfg = IntegratorConfig::new(0.01);
    let one = with_threads(Some(1), || model.run(&model.path(), &x, &icfg, -40, 1.0, Recording::Norms(10)).unwrap());
    let many = with_threads(Some(4), || model.run(&model.path(), &x, &icfg, -40, 1.0, Recording::Norms(10)).unwrap());
    assert_eq!(one.u_end, many.u_end);
    assert_eq!(one.rows, many.rows);
}

#[test]
fn checkpoint_restart_matches_continuous_run() {
    let model = Model::new(forced(8, 0.5)).unwrap();
    let icfg = IntegratorConfig::new(0.01);
    let path = model.path();
    let x = model.random_initial(2, 0, 1.0, 1.0);
    let whole = model.run(&path, &x, &icfg, 0, 1.0, Recording::None).unwrap().u_end;
    let half = model.run(&path, &x, &icfg, 0, 0.5, Recording::None).unwrap().u_end;

    let dir = tempfile::tempdir().unwrap();
    let ck = Checkpoint { model: model.config().clone(), path: path.metadata(), t: 0.5, step: 50, spectrum: "u.bin".into() };
    write_checkpoint(dir.path(), &ck, &half).unwrap();
    let (back, u) = read_checkpoint(dir.path()).unwrap();
    assert_eq!(back, ck);
    let restarted = Model::new(back.model).unwrap();
    let resumed = restarted
        .run(&sns_core::noise::NoisePath::from_metadata(&back.path), &u, &icfg, back.step, 0.5, Recording::None)
        .unwrap()
        .u_end;
    assert!(sns_core::solver::h_norm(&whole.sub(&resumed)) < 1e-12);
}

#[test]
fn runaway_forcing_trips_the_guard() {
    let mut cfg = ModelConfig::quiet(6, 1e-3, OperatorVariant::DeltaOnly);
    cfg.forcing.push(ForcingMode { l: 6, m: 3, re: 1e6, im: 0.0 });
    let model = Model::new(cfg).unwrap();
    let x = model.random_initial(1, 0, 1e3, 0.0);
    let err = model.rds_phi(50.0, &model.path(), &x, &IntegratorConfig::new(0.5)).unwrap_err();
    assert!(matches!(err, Error::Blowup { .. }), "{err}");
}

#[test]
fn misconfigured_models_are_rejected() {
    let mut cfg = forced(6, 1.0);
    cfg.noise.truncation = 5;
    assert!(matches!(Model::new(cfg).unwrap_err(), Error::InvalidConfig(_)));
    let mut cfg = forced(6, 1.0);
    cfg.forcing.push(ForcingMode { l: 7, m: 0, re: 1.0, im: 0.0 });
    assert!(Model::new(cfg).is_err());
    let mut cfg = forced(6, 1.0);
    cfg.variant = OperatorVariant::DeltaPlusTwoRic;
    assert!(matches!(Model::new(cfg).unwrap_err(), Error::NonDissipative(_)));
}
