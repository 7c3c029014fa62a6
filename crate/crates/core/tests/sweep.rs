use gainswitch::metrics::DEFAULT_PULSE_THRESHOLD;
use gainswitch::optimal::energy_loss_limit;
use gainswitch::sweep::{simulate_optimal, sweep_duration_with};
use gainswitch::{
    efficiency_eta, pulse_count, sweep_duration, CutoffPolicy, Error, LaserParams, SweepOptions,
};

fn p() -> LaserParams<f64> {
    LaserParams::default_fixture()
}

#[test]
fn loss_column_decays_to_the_limit() {
    let p = p();
    let grid: Vec<f64> = [1.0, 2.0, 4.0, 6.0, 8.0]
        .iter()
        .map(|k| k * p.tau_n)
        .collect();
    let r = sweep_duration(&p, &grid, CutoffPolicy::AtSPeak).unwrap();
    assert_eq!(r.len(), 5);
    assert!(r.loss.windows(2).all(|w| w[1] < w[0]));
    let j_min = energy_loss_limit(&p);
    assert!((r.loss[4] - j_min) / j_min < 0.02);
    assert!(r.eta.iter().all(Option::is_some));
    assert!(r.rho.iter().all(|x| x.is_some_and(|v| v > 0.0)));
    let csv = r.to_csv_string();
    assert_eq!(csv.lines().count(), 6);
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').count(), 5);
        assert!(!line.contains("NA"));
    }
}

#[test]
fn sweep_is_deterministic() {
    let p = p();
    let grid: Vec<f64> = (1..=4).map(|k| k as f64 * p.tau_n).collect();
    let a = sweep_duration(&p, &grid, CutoffPolicy::AtSPeak).unwrap();
    let b = sweep_duration(&p, &grid, CutoffPolicy::AtSPeak).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    // same values when evaluated one point at a time
    for (k, t) in grid.iter().enumerate() {
        let single = sweep_duration(&p, &[*t], CutoffPolicy::AtSPeak).unwrap();
        assert_eq!(single.eta[0], a.eta[k]);
        assert_eq!(single.rho[0], a.rho[k]);
    }
}

#[test]
fn efficiency_trend_and_plateau() {
    let p = p();
    let eta = |k: f64| efficiency_eta(&p, k * p.tau_n, CutoffPolicy::AtSPeak).unwrap();
    let (e2, e6, e8) = (eta(2.0), eta(6.0), eta(8.0));
    assert!(e6 >= e2 * 0.98);
    let plateau = e8 / e6;
    assert!((1.0..=1.1).contains(&plateau), "{plateau}");
}

#[test]
fn afterpulsing_without_cutoff() {
    let p = p();
    let opts = SweepOptions {
        search_lifetimes: 2.0,
        settle_lifetimes: 2.0,
        ..SweepOptions::default()
    };
    let traj = simulate_optimal(&p, 8.0 * p.tau_n, CutoffPolicy::None, &opts).unwrap();
    let n = pulse_count(&traj.photon_density(), DEFAULT_PULSE_THRESHOLD).unwrap();
    assert!(n >= 2, "{n}");
    let cut = simulate_optimal(&p, 8.0 * p.tau_n, CutoffPolicy::AtSPeak, &opts).unwrap();
    assert_eq!(
        pulse_count(&cut.photon_density(), DEFAULT_PULSE_THRESHOLD).unwrap(),
        1
    );
}

#[test]
fn no_lasing_is_reported_per_point() {
    let p = p();
    assert!(matches!(
        efficiency_eta(&p, 0.05 * p.tau_n, CutoffPolicy::AtT),
        Err(Error::NoLasing { .. })
    ));
    let grid = [0.05 * p.tau_n, 2.0 * p.tau_n];
    let r = sweep_duration_with(&p, &grid, CutoffPolicy::AtT, &SweepOptions::default()).unwrap();
    assert!(r.eta.iter().all(Option::is_none));
    assert!(r
        .failures
        .iter()
        .all(|f| f.as_deref().is_some_and(|m| m.contains("no lasing"))));
    assert!(r.loss.iter().all(|j| *j > 0.0));
}
