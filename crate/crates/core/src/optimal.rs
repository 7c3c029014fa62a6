//! Closed-form minimum-loss precharge current.
//!
//! With the gain term dropped, carriers obey the first-order plant
//! `dN/dt = −N/τ_N + I/(eV)`. Minimizing `J = ∫₀ᵀ I² dt` subject to
//! `N(0) = 0`, `N(T) = N_th` gives the Euler–Lagrange equation
//! `N̈ − N/τ_N² = 0`, whose solution is `N(t) = N_th·sinh(t/τ_N)/sinh(T/τ_N)`
//! and, mapped back through the plant, the exponential current
//! `I(t) = eV·N_th·e^(t/τ_N) / (τ_N·sinh(T/τ_N))`.
//!
//! All evaluations below use the algebraically equivalent forms in
//! `1 − e^(−2T/τ_N)` so long pulses do not overflow `sinh`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::drive::DriveWaveform;
use crate::error::{Error, Result};
use crate::laser::LaserParams;
use crate::num::{from_usize, lit, Real};

/// Quadrature points used for `∫ u² dt` in optimality checks.
pub const QUADRATURE_POINTS: usize = 4097;
/// Number of sine modes in random admissible perturbations.
pub const PERTURBATION_MODES: usize = 10;

/// The optimal exponential current for one laser and pulse duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalProfile<F = f64> {
    amplitude: F,
    duration: F,
    params: LaserParams<F>,
}

impl<F: Real> OptimalProfile<F> {
    pub fn new(params: &LaserParams<F>, duration: F) -> Result<Self> {
        if !(duration.is_finite() && duration > F::zero()) {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("pulse duration must be finite and > 0, got {duration:e}"),
            });
        }
        let x = duration / params.tau_n;
        let amplitude = lit::<F>(2.0) * params.threshold_current() * (-x).exp() / Self::denom(x);
        Ok(Self {
            amplitude,
            duration,
            params: *params,
        })
    }

    // 1 − e^(−2x) = 2 e^(−x) sinh(x)
    fn denom(x: F) -> F {
        -(-(x + x)).exp_m1()
    }

    fn x(&self) -> F {
        self.duration / self.params.tau_n
    }

    /// Prefactor `A`: the current at `t = 0` (A).
    pub fn amplitude(&self) -> F {
        self.amplitude
    }

    pub fn duration(&self) -> F {
        self.duration
    }

    pub fn tau_n(&self) -> F {
        self.params.tau_n
    }

    pub fn params(&self) -> &LaserParams<F> {
        &self.params
    }

    fn check_domain(&self, what: &'static str, t: F) -> Result<()> {
        if t >= F::zero() && t <= self.duration {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: t.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: self.duration.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// Exponential law evaluated without the `[0, T]` domain check.
    pub fn current_unchecked(&self, t: F) -> F {
        lit::<F>(2.0)
            * self.params.threshold_current()
            * ((t - self.duration) / self.params.tau_n).exp()
            / Self::denom(self.x())
    }

    /// Optimal current `I(t)` (A) for `0 ≤ t ≤ T`.
    pub fn current(&self, t: F) -> Result<F> {
        self.check_domain("t", t)?;
        Ok(self.current_unchecked(t))
    }

    /// `dI/dt` (A/s); largest at `t = T`.
    pub fn current_slope(&self, t: F) -> Result<F> {
        Ok(self.current(t)? / self.params.tau_n)
    }

    /// Optimal carrier trajectory `N_th·sinh(t/τ_N)/sinh(T/τ_N)`.
    pub fn carrier_density(&self, t: F) -> Result<F> {
        self.check_domain("t", t)?;
        let tau = self.params.tau_n;
        if t == self.duration {
            return Ok(self.params.threshold_density());
        }
        let ratio = (-(t + t) / tau).exp_m1() / (-(self.duration + self.duration) / tau).exp_m1();
        Ok(self.params.threshold_density() * ((t - self.duration) / tau).exp() * ratio)
    }

    /// `J(T) = e²V²N_th²·e^(T/τ_N) / (τ_N·sinh(T/τ_N))` in A²·s (dissipated
    /// energy per ohm of load).
    pub fn energy_loss(&self) -> F {
        let ith = self.params.threshold_current();
        ith * ith * self.params.tau_n * lit(2.0) / Self::denom(self.x())
    }

    /// `I(T) = 2·I_th / (1 − e^(−2T/τ_N))`.
    pub fn peak_current(&self) -> F {
        lit::<F>(2.0) * self.params.threshold_current() / Self::denom(self.x())
    }

    /// Drive waveform continuing the exponential past `T`, with an optional
    /// hard cutoff.
    pub fn drive(&self, cutoff: Option<F>) -> DriveWaveform<F> {
        DriveWaveform::exponential(self.amplitude, self.params.tau_n, cutoff)
            .expect("optimal amplitude is positive")
    }
}

/// Infinite-duration limit `J_min = 2·e²V²N_th²/τ_N` (A²·s).
pub fn energy_loss_limit<F: Real>(params: &LaserParams<F>) -> F {
    let q = params.charge_volume() * params.threshold_density();
    lit::<F>(2.0) * q * q / params.tau_n
}

/// Dimensionless slew parameter `B = τ_N²·(dI/dt)_max / (eV·N_th)`.
pub fn slew_parameter<F: Real>(params: &LaserParams<F>, slew_max: F) -> F {
    params.tau_n * params.tau_n * slew_max / (params.charge_volume() * params.threshold_density())
}

/// Shortest pulse duration whose optimal current never exceeds `slew_max`
/// (A/s).
///
/// `dI/dt` peaks at `t = T`, where it equals `(eV·N_th/τ_N²)·2/(1 − e^(−2T/τ_N))`.
/// Setting that equal to `slew_max` gives `T_min = (τ_N/2)·ln(B/(B − 2))`;
/// for `B ≤ 2` even an infinitely long pulse is too steep.
pub fn min_duration_for_slew<F: Real>(params: &LaserParams<F>, slew_max: F) -> Result<F> {
    if !(slew_max.is_finite() && slew_max > F::zero()) {
        return Err(Error::InvalidParameter {
            name: "slew_max",
            reason: "slew limit must be finite and > 0".into(),
        });
    }
    let b = slew_parameter(params, slew_max);
    let two = lit::<F>(2.0);
    if b <= two {
        return Err(Error::SlewInfeasible {
            b: b.to_f64().unwrap_or(f64::NAN),
        });
    }
    // ln(B/(B−2)) = ln1p(2/(B−2)), accurate for large B
    Ok(params.tau_n * (two / (b - two)).ln_1p() / two)
}

/// Outcome of [`verify_optimality`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityReport<F = f64> {
    /// Closed-form `J(T)`.
    pub j_star: F,
    /// `J(T)` of the unperturbed trajectory on the same quadrature grid.
    pub j_star_quadrature: F,
    /// Smallest loss found over all perturbations.
    pub min_perturbed: F,
    /// `min_perturbed − j_star_quadrature`.
    pub min_excess: F,
    pub perturbations: usize,
    /// Perturbations with a loss below `J*·(1 − 1e-9)`.
    pub violations: usize,
}

impl<F: Real> OptimalityReport<F> {
    pub fn is_optimal(&self) -> bool {
        self.violations == 0 && self.min_excess >= -lit::<F>(1e-9) * self.j_star_quadrature
    }
}

struct PerturbationGrid<F> {
    weights: Vec<F>,
    u_star: Vec<F>,
    // modes × points tables of sin(mπt/T) and (mπ/T)·cos(mπt/T)
    sin_table: Vec<Vec<F>>,
    dsin_table: Vec<Vec<F>>,
    charge_volume: F,
    rate: F,
}

impl<F: Real> PerturbationGrid<F> {
    fn new(profile: &OptimalProfile<F>, modes: usize) -> Self {
        let t_end = profile.duration();
        let n = QUADRATURE_POINTS;
        let h = t_end / from_usize(n - 1);
        let times: Vec<F> = (0..n)
            .map(|i| if i == n - 1 { t_end } else { h * from_usize(i) })
            .collect();
        let weights = (0..n)
            .map(|i| {
                let w: F = if i == 0 || i == n - 1 {
                    F::one()
                } else if i % 2 == 1 {
                    lit(4.0)
                } else {
                    lit(2.0)
                };
                w * h / lit(3.0)
            })
            .collect();
        let u_star = times
            .iter()
            .map(|t| profile.current_unchecked(*t))
            .collect();
        let pi = F::PI();
        let sin_table = (1..=modes)
            .map(|m| {
                let k = pi * from_usize(m) / t_end;
                times.iter().map(|t| (k * *t).sin()).collect()
            })
            .collect();
        let dsin_table = (1..=modes)
            .map(|m| {
                let k = pi * from_usize(m) / t_end;
                times.iter().map(|t| k * (k * *t).cos()).collect()
            })
            .collect();
        Self {
            weights,
            u_star,
            sin_table,
            dsin_table,
            charge_volume: profile.params().charge_volume(),
            rate: F::one() / profile.tau_n(),
        }
    }

    fn loss(&self, coeffs: &[F], amplitude: F) -> F {
        let mut j = F::zero();
        for i in 0..self.weights.len() {
            let mut d = F::zero();
            let mut dd = F::zero();
            for (m, c) in coeffs.iter().enumerate() {
                d = d + *c * self.sin_table[m][i];
                dd = dd + *c * self.dsin_table[m][i];
            }
            // u = eV·(ẋ + x/τ_N) applied to x* + amplitude·δ
            let u = self.u_star[i] + self.charge_volume * amplitude * (dd + self.rate * d);
            j = j + self.weights[i] * u * u;
        }
        j
    }

    fn peak_abs(&self, coeffs: &[F]) -> F {
        (0..self.weights.len())
            .map(|i| {
                coeffs
                    .iter()
                    .enumerate()
                    .fold(F::zero(), |acc, (m, c)| acc + *c * self.sin_table[m][i])
                    .abs()
            })
            .fold(F::zero(), F::max)
    }
}

/// `∫₀ᵀ u² dt` for the carrier trajectory `x*(t) + amplitude·Σ c_m sin(mπt/T)`
/// mapped to current through the linear plant.
pub fn perturbed_loss<F: Real>(profile: &OptimalProfile<F>, coeffs: &[F], amplitude: F) -> F {
    PerturbationGrid::new(profile, coeffs.len()).loss(coeffs, amplitude)
}

/// Randomized check that no admissible perturbation of the optimal carrier
/// trajectory lowers the loss. Perturbations are random sine series
/// (endpoint-preserving) scaled to 1% of `N_th` peak amplitude.
pub fn verify_optimality<F: Real>(
    params: &LaserParams<F>,
    duration: F,
    n_perturbations: usize,
    seed: u64,
) -> Result<OptimalityReport<F>> {
    verify_optimality_with(params, duration, n_perturbations, seed, lit(0.01))
}

/// [`verify_optimality`] with an explicit perturbation size relative to `N_th`.
pub fn verify_optimality_with<F: Real>(
    params: &LaserParams<F>,
    duration: F,
    n_perturbations: usize,
    seed: u64,
    rel_amplitude: F,
) -> Result<OptimalityReport<F>> {
    if n_perturbations == 0 {
        return Err(Error::InvalidParameter {
            name: "n_perturbations",
            reason: "need at least one perturbation".into(),
        });
    }
    let profile = OptimalProfile::new(params, duration)?;
    let grid = PerturbationGrid::new(&profile, PERTURBATION_MODES);
    let j_quad = grid.loss(&[], F::zero());
    let amplitude = rel_amplitude * params.threshold_density();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_perturbed = F::infinity();
    let mut violations = 0;
    let floor = j_quad * (F::one() - lit(1e-9));
    for _ in 0..n_perturbations {
        let mut coeffs: Vec<F> = (0..PERTURBATION_MODES)
            .map(|_| lit(StandardNormal.sample(&mut rng)))
            .collect();
        let peak = grid.peak_abs(&coeffs);
        if peak > F::zero() {
            coeffs.iter_mut().for_each(|c| *c = *c / peak);
        }
        let j = grid.loss(&coeffs, amplitude);
        if j < floor {
            violations += 1;
        }
        min_perturbed = min_perturbed.min(j);
    }
    Ok(OptimalityReport {
        j_star: profile.energy_loss(),
        j_star_quadrature: j_quad,
        min_perturbed,
        min_excess: min_perturbed - j_quad,
        perturbations: n_perturbations,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::simpson;
    use approx::assert_relative_eq;

    fn p() -> LaserParams<f64> {
        LaserParams::default_fixture()
    }

    #[test]
    fn current_at_zero_is_amplitude() {
        let prof = OptimalProfile::new(&p(), 5e-9).unwrap();
        assert_relative_eq!(
            prof.current(0.0).unwrap(),
            prof.amplitude(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn current_matches_high_precision_value() {
        let prof = OptimalProfile::new(&p(), 5e-9).unwrap();
        assert_relative_eq!(
            prof.current(2.5e-9).unwrap(),
            0.014_891_345_363_237_103,
            max_relative = 1e-13
        );
    }

    #[test]
    fn long_pulse_peaks_at_twice_threshold() {
        let p = p();
        let prof = OptimalProfile::new(&p, 8.0 * p.tau_n).unwrap();
        let ith = p.threshold_current();
        assert_relative_eq!(
            prof.current(prof.duration()).unwrap(),
            2.0 * ith,
            max_relative = 1e-6
        );
        let expected = 2.0 * ith / (1.0 - (-16.0f64).exp());
        assert_relative_eq!(prof.peak_current(), expected, max_relative = 1e-14);
    }

    #[test]
    fn peak_current_closed_form_inversion() {
        let p = p();
        let prof = OptimalProfile::new(&p, p.tau_n * 3f64.sqrt().ln()).unwrap();
        assert_relative_eq!(
            prof.peak_current(),
            3.0 * p.threshold_current(),
            max_relative = 1e-13
        );
        for k in [0.1, 1.0, 5.0, 15.0] {
            let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
            assert!(prof.peak_current() > 2.0 * p.threshold_current());
        }
    }

    #[test]
    fn current_rejects_outside_domain() {
        let prof = OptimalProfile::new(&p(), 5e-9).unwrap();
        assert!(matches!(prof.current(-1e-12), Err(Error::Domain { .. })));
        assert!(matches!(prof.current(5.0001e-9), Err(Error::Domain { .. })));
        assert!(prof.carrier_density(6e-9).is_err());
        assert!(OptimalProfile::new(&p(), 0.0).is_err());
    }

    #[test]
    fn current_is_strictly_increasing_with_max_slope_at_end() {
        let prof = OptimalProfile::new(&p(), 5e-9).unwrap();
        let ts: Vec<f64> = (0..=100).map(|k| k as f64 * 5e-11).collect();
        for w in ts.windows(2) {
            assert!(prof.current(w[1]).unwrap() > prof.current(w[0]).unwrap());
            assert!(prof.current_slope(w[1]).unwrap() > prof.current_slope(w[0]).unwrap());
        }
    }

    #[test]
    fn carrier_boundary_conditions() {
        let p = p();
        let prof = OptimalProfile::new(&p, 2.0 * p.tau_n).unwrap();
        assert_eq!(prof.carrier_density(0.0).unwrap(), 0.0);
        assert_eq!(
            prof.carrier_density(prof.duration()).unwrap(),
            p.threshold_density()
        );
        assert_relative_eq!(
            prof.carrier_density(p.tau_n).unwrap(),
            p.threshold_density() * 0.324_027_136_831_942_7,
            max_relative = 1e-14
        );
    }

    #[test]
    fn energy_loss_limit_default_and_identities() {
        let p = p();
        assert_relative_eq!(
            energy_loss_limit(&p),
            2.665_212_026_983_227_6e-12,
            max_relative = 1e-13
        );
        let ith = p.threshold_current();
        assert_relative_eq!(
            energy_loss_limit(&p),
            2.0 * p.tau_n * ith * ith,
            max_relative = 1e-14
        );
        let mut q = p;
        q.volume *= 3.0;
        assert_relative_eq!(
            energy_loss_limit(&q),
            9.0 * energy_loss_limit(&p),
            max_relative = 1e-14
        );
    }

    #[test]
    fn energy_loss_high_precision_values() {
        let p = p();
        for (k, j) in [
            (0.5, 4.216_303_345_555_448_7e-12),
            (1.0, 3.082_364_730_874_700_6e-12),
            (2.0, 2.714_937_848_216_518_3e-12),
            (5.0, 2.665_333_032_915_715_6e-12),
            (10.0, 2.665_212_032_476_639e-12),
        ] {
            let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
            assert_relative_eq!(prof.energy_loss(), j, max_relative = 1e-13);
        }
    }

    #[test]
    fn energy_loss_matches_quadrature() {
        let p = p();
        for k in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
            let q = simpson(
                |t| prof.current_unchecked(t).powi(2),
                0.0,
                prof.duration(),
                8193,
            );
            assert_relative_eq!(prof.energy_loss(), q, max_relative = 1e-9);
        }
    }

    #[test]
    fn limits_converge_within_exponential_bound() {
        let p = p();
        let ith = p.threshold_current();
        let jmin = energy_loss_limit(&p);
        for k in [0.5, 1.0, 2.0, 4.0, 8.0, 12.0] {
            let prof = OptimalProfile::new(&p, k * p.tau_n).unwrap();
            let bound = 2.0 * (-2.0 * k).exp();
            assert!((prof.peak_current() - 2.0 * ith) / (2.0 * ith) <= bound);
            assert!((prof.energy_loss() - jmin) / jmin <= bound);
        }
        let short = OptimalProfile::new(&p, p.tau_n).unwrap();
        let long = OptimalProfile::new(&p, 10.0 * p.tau_n).unwrap();
        assert!(short.energy_loss() / long.energy_loss() > 1.0);
    }

    #[test]
    fn slew_bound_exact_root() {
        let p = p();
        // B = 4 ⇒ T_min = (τ_N/2)·ln 2
        let unit = p.charge_volume() * p.threshold_density() / (p.tau_n * p.tau_n);
        let t = min_duration_for_slew(&p, 4.0 * unit).unwrap();
        assert_relative_eq!(t, 0.5 * p.tau_n * 2f64.ln(), max_relative = 1e-14);
        // B → ∞ ⇒ T_min → 0⁺
        let t_big = min_duration_for_slew(&p, 1e9 * unit).unwrap();
        assert!(t_big > 0.0 && t_big < 1e-8 * p.tau_n);
    }

    #[test]
    fn slew_bound_default_fixture() {
        let p = p();
        let slew = 1e8;
        assert_relative_eq!(
            slew_parameter(&p, slew),
            7.748_080_230_365_084_6,
            max_relative = 1e-13
        );
        let t = min_duration_for_slew(&p, slew).unwrap();
        assert_relative_eq!(t / p.tau_n, 0.149_289_587_193_639_96, max_relative = 1e-12);
        // numerical derivative of I at t = T_min
        let prof = OptimalProfile::new(&p, t).unwrap();
        let h = t * 1e-5;
        let d = (prof.current(t).unwrap() - prof.current(t - 2.0 * h).unwrap()) / (2.0 * h);
        let d_central = (prof.current_unchecked(t + h) - prof.current_unchecked(t - h)) / (2.0 * h);
        assert_relative_eq!(d_central, slew, max_relative = 1e-6);
        assert!(d < slew);
    }

    #[test]
    fn slew_bound_infeasible() {
        let p = p();
        let unit = p.charge_volume() * p.threshold_density() / (p.tau_n * p.tau_n);
        assert!(matches!(
            min_duration_for_slew(&p, 2.0 * unit),
            Err(Error::SlewInfeasible { .. })
        ));
        assert!(matches!(
            min_duration_for_slew(&p, 0.5 * unit),
            Err(Error::SlewInfeasible { .. })
        ));
        assert!(min_duration_for_slew(&p, -1.0).is_err());
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let p = p();
        let prof = OptimalProfile::new(&p, 3.0 * p.tau_n).unwrap();
        let coeffs = [0.3, -1.0, 0.2];
        let grid = PerturbationGrid::new(&prof, coeffs.len());
        assert_eq!(grid.loss(&coeffs, 0.0), grid.loss(&[], 0.0));
    }

    #[test]
    fn half_period_sine_raises_loss() {
        let p = p();
        let prof = OptimalProfile::new(&p, 3.0 * p.tau_n).unwrap();
        let j0 = perturbed_loss(&prof, &[0.0], 0.0);
        for amp in [1e-4, 1e-2, 0.3] {
            for sign in [1.0, -1.0] {
                let j = perturbed_loss(&prof, &[sign], amp * p.threshold_density());
                assert!(j > j0, "amp {amp} sign {sign}");
            }
        }
        assert_relative_eq!(j0, prof.energy_loss(), max_relative = 1e-12);
    }

    #[test]
    fn verify_optimality_small_run() {
        let p = p();
        let r = verify_optimality(&p, 2.0 * p.tau_n, 50, 7).unwrap();
        assert!(r.is_optimal());
        assert!(r.min_excess > 0.0);
        assert!(verify_optimality(&p, p.tau_n, 0, 1).is_err());
    }

    #[test]
    fn single_precision_profile() {
        let p: LaserParams<f32> = LaserParams::default();
        let prof = OptimalProfile::new(&p, 10.0 * p.tau_n).unwrap();
        assert!((prof.peak_current() / p.threshold_current() - 2.0).abs() < 1e-5);
    }
}
