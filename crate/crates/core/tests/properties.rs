mod common;

use std::f64::consts::PI;

use hygrosim::dimensionless::{to_relative_humidity, unscale_fields, Reference};
use hygrosim::scenario::{Overrides, Scenario, SchemeName};
use hygrosim::signal::{Pulse, Signal};
use hygrosim::tridiag::solve_tridiagonal;
use hygrosim::validation::ErrorReport;
use hygrosim::wall_solver::{
    bootstrap_first_layer, df_step_coupled, df_step_linear, euler_implicit_step, Grid1D, WallField,
};
use hygrosim::zone_model::radiative_flux;
use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn df_stays_bounded_for_smooth_data(lambda in 0.05f64..200.0, amp in 0.01f64..0.5, mode in 1u32..5) {
        let grid = Grid1D::new(31).unwrap();
        let u: Vec<f64> = grid
            .positions()
            .iter()
            .map(|&x| 1.0 + amp * (f64::from(mode) * PI * x).sin())
            .collect();
        let bound = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut f = WallField::from_profiles(u.clone(), u, 0.0).unwrap();
        for _ in 0..2000 {
            f = df_step_linear(&f, lambda);
            prop_assert!(f.max_abs() <= bound * (1.0 + 1e-9), "peak {} > {bound}", f.max_abs());
        }
    }

    #[test]
    fn thomas_solution_has_small_residual(
        rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..40)
    ) {
        let n = rows.len();
        let lower: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let upper: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + lower[i].abs() + upper[i].abs()).collect();
        let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..n {
            let mut r = diag[i] * x[i] - rhs[i];
            if i > 0 {
                r += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                r += upper[i] * x[i + 1];
            }
            prop_assert!(r.abs() < 1e-12, "row {i}: residual {r}");
        }
    }

    #[test]
    fn signal_range_contains_every_value(
        mean in -2.0f64..2.0,
        amplitude in -1.0f64..1.0,
        power in 1i32..4,
        phase in 0.0f64..6.3,
        t in 0.0f64..500.0,
    ) {
        let s = Signal::Sum {
            terms: vec![
                Signal::Sinusoid { mean, amplitude, period: 24.0, phase, power },
                Signal::Schedule {
                    base: 0.1,
                    period: Some(24.0),
                    pulses: vec![Pulse { start: 8.0, end: 12.0, value: amplitude }],
                },
            ],
        };
        let (lo, hi) = s.range();
        let x = s.at(t);
        prop_assert!(lo - 1e-12 <= x && x <= hi + 1e-12, "{x} outside [{lo}, {hi}]");
    }

    #[test]
    fn reference_state_round_trips(t_i in 274.15f64..313.15, phi_i in 0.05f64..1.0) {
        let r = Reference::from_humidity(t_i, phi_i, 3600.0).unwrap();
        let (t, p_v) = unscale_fields(1.0, 1.0, &r);
        prop_assert_eq!(t, t_i);
        prop_assert_eq!(p_v, r.p_vi);
        prop_assert!((to_relative_humidity(1.0, 1.0, &r) - phi_i).abs() < 1e-12);
        prop_assert!((r.phi_i() - phi_i).abs() < 1e-12);
    }

    #[test]
    fn error_metric_is_symmetric(
        samples in prop::collection::vec(prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5), 1..10)
    ) {
        let a: Vec<Vec<f64>> = samples.iter().map(|row| row.iter().map(|p| p.0).collect()).collect();
        let b: Vec<Vec<f64>> = samples.iter().map(|row| row.iter().map(|p| p.1).collect()).collect();
        let ab = ErrorReport::from_samples(&a, &b).unwrap();
        let ba = ErrorReport::from_samples(&b, &a).unwrap();
        prop_assert_eq!(&ab, &ba);
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(ab.eps_global, max(&ab.eps_of_x));
        prop_assert_eq!(ab.eps_global, max(&ab.eps_of_t));
    }

    #[test]
    fn isothermal_enclosure_exchanges_nothing(u in 0.9f64..1.1) {
        let two = Scenario::bundled("two_zone_nonlinear").unwrap().build(&Overrides::default()).unwrap();
        let surfaces: Vec<[f64; 2]> = two.walls.iter().map(|_| [u, u]).collect();
        for z in &two.zones {
            for l in &z.radiation {
                prop_assert_eq!(radiative_flux(&surfaces, l.receiver, &z.radiation, &two.reference), 0.0);
            }
        }
    }
}

#[test]
fn equilibrium_building_stays_at_rest() {
    let scenario = Scenario::from_toml_str(EQUILIBRIUM).unwrap();
    for scheme in [SchemeName::DufortFrankel, SchemeName::EulerExplicit, SchemeName::EulerImplicit] {
        let model = scenario.build(&Overrides { scheme: Some(scheme), ..Default::default() }).unwrap();
        let result = hygrosim::building::run(&model, 0.01).unwrap();
        for s in &result.snapshots {
            for (u, v) in &s.walls {
                assert!(u.iter().chain(v).all(|x| (x - 1.0).abs() < 1e-12), "{} at t* = {}", scheme.label(), s.t_star);
            }
            for z in &s.zones {
                assert!((z.u_a - 1.0).abs() < 1e-12 && (z.v_a - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn df_and_implicit_agree_on_a_linear_wall() {
    let p = coupled_params();
    let faces = forcing();
    let grid = Grid1D::new(101).unwrap();
    let start = WallField::uniform(&grid, 1.0, 1.0);

    let dt = 1e-4;
    let mut df = bootstrap_first_layer(&start, &p, &faces, dt, 1e-12, 50).unwrap();
    for _ in 1..10_000 {
        df = df_step_coupled(&df, &p, &faces, dt);
    }

    // Backward Euler is first order; a ten times finer step brings its own
    // error well below the tolerance.
    let fine = dt / 10.0;
    let mut im = start;
    for _ in 0..100_000 {
        im = euler_implicit_step(&im, &p, &faces, fine, 1e-12, 50).unwrap().0;
    }
    let d = max_diff(&df.u_curr, &im.u_curr).max(max_diff(&df.v_curr, &im.v_curr));
    assert!(d < 1e-4, "DF and implicit differ by {d:.3e} at t* = 1");
}
