use gainswitch::optimal::{energy_loss_limit, min_duration_for_slew, slew_parameter};
use gainswitch::quad::simpson;
use gainswitch::{simulate_linear, LaserParams, OptimalProfile};
use proptest::prelude::*;

fn p() -> LaserParams<f64> {
    LaserParams::default_fixture()
}

proptest! {
    #[test]
    fn loss_matches_quadrature(k in 0.05f64..12.0) {
        let p = p();
        let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
        let q = simpson(|t| prof.current_unchecked(t).powi(2), 0.0, prof.duration(), 8193);
        prop_assert!((prof.energy_loss() - q).abs() <= 1e-9 * q);
    }

    #[test]
    fn loss_decreases_and_peak_bounded(k in 0.05f64..15.0, dk in 0.01f64..3.0) {
        let p = p();
        let a = OptimalProfile::new(&p, k * p.tau_n).unwrap();
        let b = OptimalProfile::new(&p, (k + dk) * p.tau_n).unwrap();
        prop_assert!(b.energy_loss() < a.energy_loss());
        prop_assert!(b.peak_current() < a.peak_current());
        let ith = p.threshold_current();
        prop_assert!(a.peak_current() > 2.0 * ith);
        // e^{-2x}/(1-e^{-2x}) <= 2e^{-2x} once e^{-2x} <= 1/2
        let bound = 2.0 * (-2.0 * k).exp();
        if k >= std::f64::consts::LN_2 / 2.0 {
        prop_assert!(a.peak_current() / (2.0 * ith) - 1.0 <= bound * (1.0 + 1e-12));
        prop_assert!(a.energy_loss() / energy_loss_limit(&p) - 1.0 <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn slope_is_largest_at_the_end(k in 0.05f64..10.0, frac in 0.0f64..1.0) {
        let p = p();
        let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
        let t = frac * prof.duration();
        prop_assert!(prof.current_slope(t).unwrap() <= prof.current_slope(prof.duration()).unwrap());
    }

    #[test]
    fn identity_at_t(k in 0.05f64..10.0) {
        let p = p();
        let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
        let lhs = prof.amplitude() * k.exp();
        let rhs = 2.0 * p.threshold_current() / (1.0 - (-2.0 * k).exp());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn linear_model_tracks_the_trajectory(k in 0.1f64..10.0) {
        let p = p();
        let t = k * p.tau_n;
        let prof = OptimalProfile::new(&p, t).unwrap();
        let traj = simulate_linear(&p, &prof.drive(None), t, t / 64.0).unwrap();
        for (i, s) in traj.samples.iter().enumerate().skip(1) {
            let n = prof.carrier_density(traj.time(i).min(t)).unwrap();
            prop_assert!((s.n - n).abs() <= 1e-9 * n);
        }
    }

    #[test]
    fn slew_root_is_exact(log_b in 0.0001f64..5.0) {
        let p = p();
        let unit = p.charge_volume() * p.threshold_density() / (p.tau_n * p.tau_n);
        let b = 2.0 * 10f64.powf(log_b);
        let t = min_duration_for_slew(&p, b * unit).unwrap();
        prop_assert!((slew_parameter(&p, b * unit) - b).abs() <= 1e-12 * b);
        let prof = OptimalProfile::new(&p, t).unwrap();
        prop_assert!((prof.current_slope(t).unwrap() - b * unit).abs() <= 1e-9 * b * unit);
    }
}

#[test]
fn boundary_values_are_exact() {
    let p = p();
    for k in [0.01, 0.5, 1.0, 5.0, 30.0] {
        let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
        assert_eq!(prof.carrier_density(0.0).unwrap(), 0.0);
        assert_eq!(
            prof.carrier_density(prof.duration()).unwrap(),
            p.threshold_density()
        );
    }
}

#[test]
fn long_pulses_do_not_overflow() {
    let p = p();
    let prof = OptimalProfile::new(&p, 1000.0 * p.tau_n).unwrap();
    assert!(prof.amplitude() >= 0.0);
    assert!((prof.peak_current() / (2.0 * p.threshold_current()) - 1.0).abs() < 1e-15);
    assert!(prof.carrier_density(500.0 * p.tau_n).unwrap().is_finite());
}
