//! Saturating series inductor charging the diode from a voltage step.

use crate::error::{Error, Result};
use crate::metrics::SampledSignal;
use crate::num::{from_usize, lit, Real};
use crate::ode::{Control, Dopri5, Step};

/// Arctangent inductance law `L(I)` plus the diode's own inductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatInductorParams<F = f64> {
    /// Unsaturated inductance (H).
    pub l0: F,
    /// Fully saturated inductance (H).
    pub l_sat: F,
    /// Knee sharpness (1/A).
    pub sigma: F,
    /// Current at which `L` is halfway between `L0` and `L_sat` (A).
    pub i1: F,
    /// Diode parasitic inductance (H).
    pub l_diode: F,
    /// Drive voltage (V).
    pub v: F,
}

impl<F: Real> SatInductorParams<F> {
    pub fn new(l0: F, l_sat: F, sigma: F, i1: F, l_diode: F, v: F) -> Result<Self> {
        for (name, x) in [
            ("L0", l0),
            ("L_sat", l_sat),
            ("sigma", sigma),
            ("I1", i1),
            ("L_diode", l_diode),
            ("V", v),
        ] {
            super::positive(name, x)?;
        }
        if !(l0 > l_sat) {
            return Err(Error::InvalidParameter {
                name: "L0",
                reason: "must exceed L_sat".into(),
            });
        }
        Ok(Self {
            l0,
            l_sat,
            sigma,
            i1,
            l_diode,
            v,
        })
    }

    /// Total loop inductance at current `i`.
    pub fn loop_inductance(&self, i: F) -> F {
        saturating_inductance(self, i) + self.l_diode
    }

    /// `dI/dt` at current `i`.
    pub fn slope(&self, i: F) -> F {
        self.v / self.loop_inductance(i)
    }

    /// Bounds `V/(L0 + L_diode) ≤ dI/dt ≤ V/(L_sat + L_diode)`.
    pub fn slope_bounds(&self) -> (F, F) {
        (
            self.v / (self.l0 + self.l_diode),
            self.v / (self.l_sat + self.l_diode),
        )
    }
}

impl<F: Real> Default for SatInductorParams<F> {
    fn default() -> Self {
        Self {
            l0: lit(35e-9),
            l_sat: lit(5e-9),
            sigma: lit(10.0),
            i1: lit(0.375),
            l_diode: lit(5e-9),
            v: lit(5.0),
        }
    }
}

/// `L(I) = L_sat + (L0 − L_sat)/2·(1 − (2/π)·atan(σ(I − I1)))`.
pub fn saturating_inductance<F: Real>(p: &SatInductorParams<F>, i: F) -> F {
    let half = lit::<F>(0.5);
    let knee = F::FRAC_2_PI() * (p.sigma * (i - p.i1)).atan();
    p.l_sat + (p.l0 - p.l_sat) * half * (F::one() - knee)
}

/// Integrates `dI/dt = V/(L(I) + L_diode)` from `I(0) = 0` and samples the
/// current every `dt_out` up to `t_end`.
pub fn saturating_inductor_current<F: Real>(
    p: &SatInductorParams<F>,
    t_end: F,
    dt_out: F,
) -> Result<SampledSignal<F>> {
    if !(t_end.is_finite() && t_end > F::zero()) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: "must be > 0".into(),
        });
    }
    if !(dt_out.is_finite() && dt_out > F::zero()) {
        return Err(Error::InvalidParameter {
            name: "dt_out",
            reason: "must be > 0".into(),
        });
    }
    let n = (t_end / dt_out + lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    let values = sample(p, dt_out, n)?;
    SampledSignal::new(dt_out, values)
}

/// `n` samples of the current on the grid `k·dt`.
pub(crate) fn sample<F: Real>(p: &SatInductorParams<F>, dt: F, n: usize) -> Result<Vec<F>> {
    let mut out = Vec::with_capacity(n);
    out.push(F::zero());
    if n <= 1 {
        return Ok(out);
    }
    let t_end = dt * from_usize(n - 1);
    let scale = p.slope_bounds().1 * t_end;
    let solver = Dopri5::new(lit(1e-11), [scale * lit(1e-14)]);
    let rhs = |_t: F, y: &[F; 1]| [p.slope(y[0])];
    let mut next = 1usize;
    solver.integrate(
        rhs,
        F::zero(),
        [F::zero()],
        t_end,
        None,
        |step: &Step<F, 1>| {
            while next < n {
                let t = dt * from_usize(next);
                if t > step.t1 {
                    break;
                }
                out.push(step.eval(t)[0]);
                next += 1;
            }
            Control::Continue
        },
    )?;
    while out.len() < n {
        // grid points within rounding of t_end
        let last = *out.last().expect("nonempty");
        out.push(last);
    }
    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            t: (dt * from_usize(k)).to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

/// Order-of-magnitude saturation current `N·B_sat·S/L` (A).
pub fn estimate_saturation_current<F: Real>(n_turns: F, b_sat: F, s_area: F, l: F) -> Result<F> {
    for (name, x) in [
        ("N_turns", n_turns),
        ("B_sat", b_sat),
        ("S_area", s_area),
        ("L", l),
    ] {
        super::positive(name, x)?;
    }
    Ok(n_turns * b_sat * s_area / l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // closed-form inverse t(I) of the inductor ODE
    fn time_to_reach(p: &SatInductorParams<f64>, i: f64) -> f64 {
        let anti = |x: f64| (x * x.atan() - 0.5 * x.powi(2).ln_1p()) / p.sigma;
        let atan_int = anti(p.sigma * (i - p.i1)) - anti(-p.sigma * p.i1);
        let mean = p.l_sat + 0.5 * (p.l0 - p.l_sat) + p.l_diode;
        (mean * i - (p.l0 - p.l_sat) / std::f64::consts::PI * atan_int) / p.v
    }

    #[test]
    fn half_saturation_point() {
        let p = SatInductorParams::<f64>::default();
        assert_eq!(saturating_inductance(&p, p.i1), 0.5 * (p.l0 + p.l_sat));
    }

    #[test]
    fn fixture_value_and_limits() {
        let p = SatInductorParams::<f64>::default();
        assert_relative_eq!(
            saturating_inductance(&p, 0.75),
            7.488_569_529_689_592e-9,
            max_relative = 1e-13
        );
        assert_relative_eq!(saturating_inductance(&p, 1e9), p.l_sat, max_relative = 1e-6);
        let sharp = SatInductorParams { sigma: 1e6, ..p };
        assert_relative_eq!(
            saturating_inductance(&sharp, 0.0),
            p.l0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn matches_implicit_solution() {
        let p = SatInductorParams::<f64>::default();
        let sig = saturating_inductor_current(&p, 10e-9, 1e-11).unwrap();
        for k in (50..sig.len()).step_by(50) {
            let i = sig.values()[k];
            assert_relative_eq!(time_to_reach(&p, i), sig.time(k), max_relative = 1e-8);
        }
    }

    #[test]
    fn slope_bounds_and_terminal_slope() {
        let p = SatInductorParams::<f64>::default();
        let sig = saturating_inductor_current(&p, 10e-9, 1e-11).unwrap();
        let (lo, hi) = p.slope_bounds();
        let y = sig.values();
        for w in y.windows(2) {
            let d = (w[1] - w[0]) / sig.dt();
            assert!(d >= lo * (1.0 - 1e-9) && d <= hi * (1.0 + 1e-9));
        }
        let n = y.len();
        let terminal = (y[n - 1] - y[n - 2]) / sig.dt();
        assert!((terminal - hi).abs() / hi < 0.05);
        // accelerating before the knee
        let knee = p.i1 + 3.0 / p.sigma;
        let d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        for k in 1..d.len() {
            if y[k + 1] < knee {
                assert!(d[k] >= d[k - 1] * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn magnetic_energy_bound() {
        let p = SatInductorParams::<f64>::default();
        let sig = saturating_inductor_current(&p, 10e-9, 1e-11).unwrap();
        let work = p.v * crate::quad::simpson_samples(sig.values(), sig.dt());
        let i_end = *sig.values().last().unwrap();
        assert!(work >= 0.5 * (p.l_sat + p.l_diode) * i_end * i_end);
    }

    #[test]
    fn soft_knee_is_a_linear_ramp() {
        let p = SatInductorParams {
            sigma: 1e-12,
            ..SatInductorParams::default()
        };
        let sig = saturating_inductor_current(&p, 10e-9, 1e-10).unwrap();
        let slope = p.v / (0.5 * (p.l0 + p.l_sat) + p.l_diode);
        for k in 1..sig.len() {
            assert_relative_eq!(sig.values()[k], slope * sig.time(k), max_relative = 1e-6);
        }
    }

    #[test]
    fn saturation_current_estimate() {
        assert_relative_eq!(
            estimate_saturation_current(3.0, 0.3, 1e-6, 35e-9).unwrap(),
            25.714_285_714_285_714,
            max_relative = 1e-14
        );
        let base = estimate_saturation_current(3.0, 0.3, 1e-6, 35e-9).unwrap();
        assert_relative_eq!(
            estimate_saturation_current(3.0, 0.3, 1e-6, 70e-9).unwrap(),
            base / 2.0
        );
        assert_relative_eq!(
            estimate_saturation_current(6.0, 0.3, 1e-6, 35e-9).unwrap(),
            base * 2.0
        );
        assert!(estimate_saturation_current(0.0, 0.3, 1e-6, 35e-9).is_err());
    }
}
