use std::f64::consts::PI;

use neckflow::analysis::winding_constant;
use neckflow::cli::{ExperimentConfig, ExperimentKind, MetricSpec, SeedSpec, Tolerances, VariantKind};
use neckflow::flow::*;
use neckflow::metric::*;
use neckflow::rescaled::{front_face_rhs, FrontFace, FrontState};
use neckflow::scaling::ScalingFunction;
use proptest::prelude::*;

fn sf(p: f64) -> ScalingFunction {
    ScalingFunction::power(p).unwrap()
}

fn family(kind: u8, p: f64, delta: f64) -> MetricFamily {
    match kind % 4 {
        0 => MetricFamily::morse_model(2, delta, sf(p)).unwrap(),
        1 => MetricFamily::warped(2, sf(p), CircleMetric::Cosine { amplitude: delta }, 0.0).unwrap(),
        2 => MetricFamily::elliptic(2, delta, sf(p)).unwrap(),
        _ => MetricFamily::warped(2, sf(p), CircleMetric::Flat, -delta).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn scaling_is_one_homogeneous(p in 2.0f64..8.0, eps in 1e-3f64..2.0, z in -3.0f64..3.0, lam in 0.01f64..50.0) {
        let s = sf(p);
        let a = s.w(lam * eps, lam * z).unwrap();
        let b = lam * s.w(eps, z).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn profiles_restrict_the_scaling_function(p in 2.0f64..8.0, eps in 1e-3f64..2.0, z in 1e-3f64..3.0) {
        let s = sf(p);
        let w = s.w(eps, z).unwrap();
        prop_assert!((eps * s.f(z / eps).0 - w).abs() <= 1e-12 * w);
        prop_assert!((z * s.big_f(eps / z).0 - w).abs() <= 1e-12 * w);
        prop_assert!(w >= eps.max(z) * (1.0 - 1e-15));
        prop_assert!(w <= eps + z);
    }

    #[test]
    fn cometric_inverts_metric(kind in 0u8..4, p in 2.0f64..5.0, delta in 0.0f64..0.6,
                               eps in 0.02f64..0.5, z in -0.6f64..0.6, y in 0.0f64..(2.0 * PI)) {
        let fam = family(kind, p, delta);
        let g = fam.metric_jet(eps, z, y).unwrap().g;
        let gs = cometric(&fam, eps, z, y).unwrap();
        let id = g * gs;
        let scale = g.norm() * gs.norm();
        prop_assert!((id - nalgebra::Matrix2::identity()).norm() <= 1e-10 * scale, "{id}");
    }

    #[test]
    fn winding_constant_increases_with_v(v in 0.0f64..0.98, dv in 0.001f64..0.02, p in 2.0f64..6.0) {
        let s = sf(p);
        let a = winding_constant(v, &s, 2).unwrap().value;
        let b = winding_constant((v + dv).min(0.999), &s, 2).unwrap().value;
        prop_assert!(b > a, "C({v}) = {a}, C({}) = {b}", v + dv);
    }

    #[test]
    fn geodesics_keep_unit_speed(kind in 0u8..4, delta in 0.0f64..0.8, eps in 0.03f64..0.5,
                                 y0 in 0.0f64..(2.0 * PI), phi in 0.05f64..1.5) {
        let fam = family(kind, 2.0, delta);
        let st = waist_state_with_angle(&fam, eps, y0, phi).unwrap();
        let tr = integrate_with(&fam, eps, &st, &StopCondition::reach_z(1.5).or_t_max(6.0), &FlowOptions::with_tol(1e-10)).unwrap();
        prop_assert!(tr.max_energy_error <= 1e-8, "{}", tr.max_energy_error);
    }

    #[test]
    fn reversal_retraces_the_geodesic(kind in 0u8..4, delta in 0.0f64..0.8, eps in 0.05f64..0.5,
                                      y0 in 0.0f64..(2.0 * PI), phi in 0.2f64..1.5) {
        let fam = family(kind, 2.0, delta);
        let st = waist_state_with_angle(&fam, eps, y0, phi).unwrap();
        let opts = FlowOptions::with_tol(1e-12);
        let fwd = integrate_with(&fam, eps, &st, &StopCondition::reach_z(1.0), &opts).unwrap();
        let back = integrate_with(&fam, eps, &fwd.final_state.reversed(), &StopCondition::t_max(fwd.final_t), &opts).unwrap();
        let end = back.final_state;
        prop_assert!(end.z.abs() < 1e-7, "{end:?}");
        prop_assert!((end.y - y0).abs() < 1e-7, "{end:?}");
    }

    #[test]
    fn front_face_lyapunov_derivative_is_nonpositive(delta in 0.0f64..0.9, zc in 0.0f64..20.0,
                                                     y in 0.0f64..(2.0 * PI), theta in -3.0f64..3.0) {
        let ff = FrontFace::new(&MetricFamily::morse_model(2, delta, sf(2.0)).unwrap()).unwrap();
        let st = FrontState::at_z(zc, y, theta);
        let d = front_face_rhs(&ff, &st);
        let h = 1e-6;
        let ahead = FrontState::at_z(zc + h * d[0], y + h * d[1], theta + h * d[2]);
        let behind = FrontState::at_z(zc - h * d[0], y - h * d[1], theta - h * d[2]);
        let dg = (ff.lyapunov(&ahead) - ff.lyapunov(&behind)) / (2.0 * h);
        prop_assert!(dg <= 1e-6, "dG/dtau = {dg}");
    }

    #[test]
    fn reduced_angles_lie_in_one_period(y in -1e6f64..1e6) {
        let r = reduce_angle(y);
        prop_assert!((0.0..2.0 * PI).contains(&r));
        let k = ((y - r) / (2.0 * PI)).round();
        prop_assert!((y - r - 2.0 * PI * k).abs() <= 1e-9 * y.abs().max(1.0));
    }

    #[test]
    fn config_echo_round_trips(k in 2u32..4, delta in 0.0f64..0.99, eps in proptest::collection::vec(1e-3f64..0.9, 1..5),
                               count in 1usize..20, theta0 in -1.0f64..1.0, seed in any::<u64>(), ode in 1e-13f64..1e-6) {
        let cfg = ExperimentConfig {
            experiment: ExperimentKind::Focussing,
            metric: MetricSpec { variant: VariantKind::MorseModel, k, kappa: None, delta, p: 2.0, h_amplitude: 0.0, s: 0.0 },
            epsilons: eps,
            seeds: Some(SeedSpec::Equidistributed { count, theta0 }),
            phis: None,
            start_angles: None,
            z1: Some(1.0),
            angular_momenta: None,
            tau_max: None,
            tolerances: Tolerances { ode },
            output_dir: Some("somewhere".into()),
            workers: Some(3),
            seed: Some(seed),
        };
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg.echo()).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(back.clone(), cfg.echo());
        prop_assert_eq!(back.seed_points(), cfg.seed_points());
    }
}
