use gainswitch::ode::{Control, Dopri5};
use gainswitch::{
    pulse_count, simulate, simulate_linear, simulate_linear_from, simulate_with, DriveWaveform,
    LaserParams, LaserState, OptimalProfile, SimulationOptions,
};
use proptest::prelude::*;

fn p() -> LaserParams<f64> {
    LaserParams::default_fixture()
}

#[test]
fn zero_drive_stays_at_origin() {
    let p = p();
    let traj = simulate(&p, &DriveWaveform::zero(), 10.0 * p.tau_n, p.tau_n / 100.0).unwrap();
    assert_eq!(traj.len(), 1001);
    assert!(traj
        .samples
        .iter()
        .all(|s| s.n == 0.0 && s.s == 0.0 && s.current == 0.0));
    assert_eq!(traj.events.threshold_time, None);
    assert_eq!(traj.events.peak, None);
    assert_eq!(pulse_count(&traj.photon_density(), 0.1).unwrap(), 0);
}

#[test]
fn half_threshold_current_settles_below_threshold() {
    let p = p();
    let i = 0.5 * p.threshold_current();
    let traj = simulate(
        &p,
        &DriveWaveform::constant(i).unwrap(),
        10.0 * p.tau_n,
        p.tau_n / 50.0,
    )
    .unwrap();
    let n_end = traj.samples.last().unwrap().n;
    let target = i * p.tau_n / p.charge_volume();
    assert!(
        (n_end - target).abs() / target < 1e-3,
        "{n_end:e} vs {target:e}"
    );
    assert!((n_end / p.threshold_density() - 0.5).abs() < 1e-3);
    assert!(traj.samples.iter().all(|s| s.n < p.threshold_density()));
    assert_eq!(traj.events.threshold_time, None);
    // spontaneous floor: S ≈ Γβ N τ_P / τ_N / (1 − Γ g0 (N − N_t) τ_P)
    let s_end = traj.samples.last().unwrap().s;
    let floor = p.gamma * p.beta * n_end * p.tau_p
        / p.tau_n
        / (1.0 - p.gamma * p.g0 * (n_end - p.n_t) * p.tau_p);
    assert!(
        (s_end - floor).abs() / floor < 1e-3,
        "{s_end:e} vs {floor:e}"
    );
}

#[test]
fn peak_cutoff_gives_single_pulse_at_threshold() {
    let p = p();
    let t = 5.0 * p.tau_n;
    let prof = OptimalProfile::new(&p, t).unwrap();
    let opts = SimulationOptions {
        cutoff_at_peak: true,
        ..SimulationOptions::default()
    };
    let traj = simulate_with(
        &p,
        &prof.drive(None),
        t + 2.0 * p.tau_n,
        p.tau_n * 5e-4,
        &opts,
    )
    .unwrap();
    let (t_peak, s_peak) = traj.events.peak.unwrap();
    let t_th = traj.events.threshold_time.unwrap();
    assert!(t_th < t_peak);
    assert_eq!(traj.events.drive_cutoff, Some(t_peak));
    assert_eq!(pulse_count(&traj.photon_density(), 0.1).unwrap(), 1);
    let n = traj.carrier_density_at(t_peak).unwrap();
    assert!((n / p.threshold_density() - 1.0).abs() < 0.05);
    assert!(s_peak > 0.0);
    let k_after = ((t_peak / traj.dt).ceil() as usize) + 1;
    assert!(traj.samples[k_after..].iter().all(|s| s.current == 0.0));
    assert_eq!(traj.events.negative_clamps, 0);
}

#[test]
fn linear_free_decay() {
    let p = p();
    let n0 = 2e24;
    let traj = simulate_linear_from(
        &p,
        &DriveWaveform::zero(),
        5.0 * p.tau_n,
        p.tau_n / 10.0,
        n0,
    )
    .unwrap();
    for (k, s) in traj.samples.iter().enumerate() {
        let exact = n0 * (-traj.time(k) / p.tau_n).exp();
        assert!((s.n - exact).abs() <= 1e-12 * exact);
    }
}

#[test]
fn linear_step_response() {
    let p = p();
    let i = 0.01;
    let traj = simulate_linear(
        &p,
        &DriveWaveform::constant(i).unwrap(),
        5.0 * p.tau_n,
        p.tau_n / 10.0,
    )
    .unwrap();
    let n_inf = i * p.tau_n / p.charge_volume();
    for (k, s) in traj.samples.iter().enumerate().skip(1) {
        let exact = n_inf * -(-traj.time(k) / p.tau_n).exp_m1();
        assert!((s.n - exact).abs() <= 1e-12 * exact);
    }
}

#[test]
fn linear_optimal_hits_threshold_at_t() {
    let p = p();
    for k in [0.3, 1.0, 4.0] {
        let t = k * p.tau_n;
        let prof = OptimalProfile::new(&p, t).unwrap();
        let traj = simulate_linear(&p, &prof.drive(None), t, t / 200.0).unwrap();
        let n = traj.samples.last().unwrap().n;
        assert!((n / p.threshold_density() - 1.0).abs() < 1e-9);
        let longer = simulate_linear(&p, &prof.drive(None), 1.01 * t, t / 200.0).unwrap();
        let t_th = longer.events.threshold_time.unwrap();
        assert!((t_th - t).abs() < 1e-6 * t);
    }
}

#[test]
fn sampled_drive_matches_constant_pieces() {
    let p = p();
    let dt = p.tau_n / 10.0;
    let values = vec![0.01, 0.02, 0.0, 0.03];
    let sig = gainswitch::SampledSignal::new(dt, values.clone()).unwrap();
    let traj = simulate_linear(&p, &DriveWaveform::sampled(sig, None), 6.0 * dt, dt).unwrap();
    let mut n = 0.0;
    for (k, s) in traj.samples.iter().enumerate().skip(1) {
        let i = values.get(k - 1).copied().unwrap_or(0.0);
        let decay = (-dt / p.tau_n).exp();
        n = n * decay + i * p.tau_n / p.charge_volume() * (1.0 - decay);
        assert!((s.n - n).abs() <= 1e-12 * n.max(1.0));
    }
}

#[test]
fn custom_drive_matches_closed_form() {
    let p = p();
    let t = 2.0 * p.tau_n;
    let prof = OptimalProfile::new(&p, t).unwrap();
    let custom = DriveWaveform::custom(move |s| prof.current_unchecked(s), None);
    let a = simulate_linear(&p, &custom, t, t / 100.0).unwrap();
    let b = simulate_linear(&p, &prof.drive(None), t, t / 100.0).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples).skip(1) {
        assert!((x.n - y.n).abs() <= 1e-10 * y.n);
    }
}

#[test]
fn linear_and_full_agree_below_threshold() {
    let p = p();
    let drive = DriveWaveform::constant(0.9 * p.threshold_current()).unwrap();
    let full = simulate(&p, &drive, 8.0 * p.tau_n, p.tau_n / 20.0).unwrap();
    let lin = simulate_linear(&p, &drive, 8.0 * p.tau_n, p.tau_n / 20.0).unwrap();
    for (a, b) in full.samples.iter().zip(&lin.samples).skip(1) {
        assert!(a.n < 0.95 * p.threshold_density());
        assert!((a.n - b.n).abs() / b.n < 1e-3);
    }
}

#[test]
fn halving_output_step_keeps_events() {
    let p = p();
    let t = 3.0 * p.tau_n;
    let prof = OptimalProfile::new(&p, t).unwrap();
    let opts = SimulationOptions {
        cutoff_at_peak: true,
        ..SimulationOptions::default()
    };
    let dt = p.tau_n * 1e-3;
    let a = simulate_with(&p, &prof.drive(None), t + p.tau_n, dt, &opts).unwrap();
    let b = simulate_with(&p, &prof.drive(None), t + p.tau_n, dt / 2.0, &opts).unwrap();
    let (ta, tb) = (
        a.events.threshold_time.unwrap(),
        b.events.threshold_time.unwrap(),
    );
    assert!((ta - tb).abs() <= dt);
    assert!((a.events.peak.unwrap().0 - b.events.peak.unwrap().0).abs() <= dt);
}

#[test]
fn step_error_is_second_order() {
    // one accurate step versus forward Euler: the gap shrinks like h²
    let p = p();
    let y0 = [3.5e24, 1e20];
    let i = 0.05;
    let rhs = |_t: f64, y: &[f64; 2]| {
        let (dn, ds) = p.rate_derivatives(LaserState::new(y[0], y[1]), i);
        [dn, ds]
    };
    let f0 = rhs(0.0, &y0);
    let gap = |h: f64| {
        let solver = Dopri5::new(1e-12, [1.0, 1.0]);
        let out = solver
            .integrate(rhs, 0.0, y0, h, None, |_| Control::Continue)
            .unwrap();
        (0..2)
            .map(|k| (out.y[k] - (y0[k] + h * f0[k])).abs() / y0[k])
            .fold(0.0, f64::max)
    };
    let (g1, g2) = (gap(1e-14), gap(5e-15));
    let ratio = g1 / g2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn single_precision_simulation() {
    let p: LaserParams<f32> = LaserParams::default();
    let t = 3.0 * p.tau_n;
    let prof = OptimalProfile::new(&p, t).unwrap();
    let traj = simulate_linear(&p, &prof.drive(None), t, t / 100.0).unwrap();
    let n = traj.samples.last().unwrap().n;
    assert!((n / p.threshold_density() - 1.0).abs() < 1e-4);
}

#[test]
fn rejects_bad_spans() {
    let p = p();
    assert!(simulate(&p, &DriveWaveform::zero(), 0.0, 1e-12).is_err());
    assert!(simulate(&p, &DriveWaveform::zero(), 1e-9, -1e-12).is_err());
    assert!(simulate_linear(&p, &DriveWaveform::zero(), 1e-9, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn densities_stay_nonnegative(level in 0.05f64..10.0, k in 0.2f64..6.0) {
        let p = p();
        let i = level * p.threshold_current();
        let traj = simulate(&p, &DriveWaveform::constant(i).unwrap(), k * p.tau_n, p.tau_n / 200.0).unwrap();
        prop_assert!(traj.samples.iter().all(|s| s.n >= 0.0 && s.s >= 0.0));
        prop_assert_eq!(traj.events.negative_clamps, 0);
        if let (Some(t_th), Some((t_peak, _))) = (traj.events.threshold_time, traj.events.peak) {
            prop_assert!(t_th < t_peak || t_peak == traj.end_time);
        }
    }

    #[test]
    fn threshold_precedes_peak_for_optimal_drive(k in 0.5f64..8.0) {
        let p = p();
        let t = k * p.tau_n;
        let prof = OptimalProfile::new(&p, t).unwrap();
        let opts = SimulationOptions { cutoff_at_peak: true, ..SimulationOptions::default() };
        let traj = simulate_with(&p, &prof.drive(None), t + 2.0 * p.tau_n, p.tau_n * 1e-3, &opts).unwrap();
        let t_th = traj.events.threshold_time.unwrap();
        let (t_peak, _) = traj.events.peak.unwrap();
        prop_assert!(t_th < t_peak);
        prop_assert_eq!(traj.events.negative_clamps, 0);
    }
}

#[test]
fn finely_sampled_drive_tracks_closed_form() {
    // thousands of 1 ps hold segments must not starve the step controller
    let p = p();
    let t = 4.0 * p.tau_n;
    let prof = gainswitch::OptimalProfile::new(&p, t).unwrap();
    let dt = 1e-12;
    let n = (t / dt).round() as usize + 1;
    let values: Vec<f64> = (0..n)
        .map(|k| prof.current_unchecked((k as f64 * dt).min(t)))
        .collect();
    let held = DriveWaveform::sampled(gainswitch::SampledSignal::new(dt, values).unwrap(), None);
    let opts = SimulationOptions {
        cutoff_at_peak: true,
        ..SimulationOptions::default()
    };
    let a = simulate_with(&p, &held, t + 2.0 * p.tau_n, dt, &opts).unwrap();
    let b = simulate_with(
        &p,
        &prof.drive(Some(n as f64 * dt)),
        t + 2.0 * p.tau_n,
        dt,
        &opts,
    )
    .unwrap();
    let (ta, sa) = a.events.peak.unwrap();
    let (tb, sb) = b.events.peak.unwrap();
    assert!((ta - tb).abs() < 2e-12, "{ta:e} {tb:e}");
    assert!((sa / sb - 1.0).abs() < 0.02);
}
