use broadwell::scenario::centroids;
use broadwell::solver::characteristic_foot;
use broadwell::{
    run_physical, run_rescaled, step_physical, step_rescaled, Boundary, Domain, DtMode, Error,
    Field, Interpolation, Monitors, PhysicalStepConfig, RescaledStepConfig, VelocityModel,
};

fn bump(domain: Domain, species: usize, center: [f64; 2], width: f64, amp: f64) -> Field {
    Field::from_fn(domain, 4, |s, x, y| {
        let r2 = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (width * width);
        if s == species {
            amp * (-r2).exp()
        } else {
            0.0
        }
    })
}

#[test]
fn rescaled_bump_follows_characteristics() {
    let domain = Domain::square(3.0, 192, Boundary::Outflow).unwrap();
    let (start, t) = ([0.2, -0.3], 0.5);
    let cubic = RescaledStepConfig {
        dt: 0.01,
        interpolation: Interpolation::Cubic,
        ..Default::default()
    };
    for (species, cfg) in (0..4)
        .map(|s| (s, RescaledStepConfig::default()))
        .chain([(2, cubic)])
    {
        let init = bump(domain, species, start, 0.15, 0.5);
        let out = run_rescaled(&init, &cfg, t, &mut Monitors::new(0.0)).unwrap();
        let c = centroids(&out.field)[species].unwrap();
        // the foot map is affine, so forward images of the start point track the centroid
        let speed = VelocityModel::broadwell2d().speed(species);
        let want = [
            (start[0] + speed[0]) * t.exp() - speed[0],
            (start[1] + speed[1]) * t.exp() - speed[1],
        ];
        let tol = if cfg.interpolation == Interpolation::Cubic {
            1e-3
        } else {
            2e-3
        };
        assert!(
            (c.cx - want[0]).abs() < tol && (c.cy - want[1]).abs() < tol,
            "{species}: {:?} vs {want:?}",
            (c.cx, c.cy)
        );
        let back = characteristic_foot(want, species, t);
        assert!((back[0] - start[0]).abs() < 1e-12 && (back[1] - start[1]).abs() < 1e-12);
    }
}

#[test]
fn rescaled_step_refuses_large_dt() {
    let domain = Domain::square(3.0, 16, Boundary::Outflow).unwrap();
    let f = Field::uniform(domain, &[4.0, 0.0, 0.0, 0.0]);
    let cfg = RescaledStepConfig {
        dt: 0.5,
        ..Default::default()
    };
    match step_rescaled(&f, &cfg) {
        Err(Error::Cfl { required, .. }) => assert!((required - 0.25).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn free_mode_conserves_mass_on_periodic_grid() {
    let domain = Domain::square(1.0, 64, Boundary::Periodic).unwrap();
    let init = Field::random_smoothed(domain, 4, 1.0, 9, 2);
    let cfg = PhysicalStepConfig {
        dt_mode: DtMode::Free,
        dt_max: 0.013,
        ..Default::default()
    };
    let out = run_physical(
        &init,
        &VelocityModel::broadwell2d(),
        &cfg,
        0.5,
        &mut Monitors::new(0.1),
    )
    .unwrap();
    assert!((out.field.time - 0.5).abs() < 1e-12);
    let mass = |f: &Field| (0..4).map(|s| f.total(s)).sum::<f64>();
    assert!((mass(&out.field) - mass(&init)).abs() < 1e-11 * mass(&init));
    assert!(out.field.data().iter().all(|v| *v >= 0.0));
}

#[test]
fn lockstep_full_period_returns_initial_data_without_collisions() {
    let domain = Domain::square(1.0, 32, Boundary::Periodic).unwrap();
    let init = Field::random_smoothed(domain, 4, 1.0, 2, 1);
    let model = VelocityModel::broadwell2d().without_collisions();
    let out = run_physical(
        &init,
        &model,
        &PhysicalStepConfig::default(),
        2.0,
        &mut Monitors::new(0.0),
    )
    .unwrap();
    assert_eq!(out.steps, 32);
    assert_eq!(out.field.sup_distance(&init), 0.0);
}

#[test]
fn free_step_rejects_stiff_dt() {
    let domain = Domain::square(1.0, 8, Boundary::Periodic).unwrap();
    let f = Field::uniform(domain, &[10.0, 0.0, 10.0, 0.0]);
    let cfg = PhysicalStepConfig {
        dt_mode: DtMode::Free,
        ..Default::default()
    };
    assert!(matches!(
        step_physical(&f, &VelocityModel::broadwell2d(), &cfg, 0.1),
        Err(Error::Cfl { .. })
    ));
    assert!(step_physical(&f, &VelocityModel::broadwell2d(), &cfg, 0.04).is_ok());
}
