//! Laser diode physics: single-mode carrier/photon rate equations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real, ELEMENTARY_CHARGE};

/// Name of the built-in parameter fixture.
pub const DEFAULT_FIXTURE: &str = "default-1W-850nm";

const DEFAULT_FIXTURE_JSON: &str = include_str!("../fixtures/default-1W-850nm.json");

/// Physical constants of one diode model, all in SI units.
///
/// The on-disk form is a flat JSON object whose keys are the conventional
/// symbol names (`tau_N`, `tau_P`, `Gamma`, `beta`, `g0`, `N_t`, `eps`, `V`);
/// unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserParams<F = f64> {
    /// Total spontaneous-emission carrier lifetime (s).
    #[serde(rename = "tau_N")]
    pub tau_n: F,
    /// Photon lifetime (s).
    #[serde(rename = "tau_P")]
    pub tau_p: F,
    /// Mode confinement factor.
    #[serde(rename = "Gamma")]
    pub gamma: F,
    /// Spontaneous-emission fraction coupled into the lasing mode.
    pub beta: F,
    /// Gain slope (m³/s).
    pub g0: F,
    /// Carrier density at transparency (1/m³).
    #[serde(rename = "N_t")]
    pub n_t: F,
    /// Gain compression (m³).
    pub eps: F,
    /// Active-region volume (m³).
    #[serde(rename = "V")]
    pub volume: F,
}

/// Carrier and photon density (1/m³).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaserState<F = f64> {
    pub n: F,
    pub s: F,
}

impl<F: Real> LaserState<F> {
    pub fn new(n: F, s: F) -> Self {
        Self { n, s }
    }

    pub fn zero() -> Self {
        Self {
            n: F::zero(),
            s: F::zero(),
        }
    }
}

fn positive<F: Real>(name: &'static str, v: F) -> Result<()> {
    if v.is_finite() && v > F::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {v:e}"),
        })
    }
}

impl<F: Real> LaserParams<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tau_n: F,
        tau_p: F,
        gamma: F,
        beta: F,
        g0: F,
        n_t: F,
        eps: F,
        volume: F,
    ) -> Result<Self> {
        let p = Self {
            tau_n,
            tau_p,
            gamma,
            beta,
            g0,
            n_t,
            eps,
            volume,
        };
        p.validate()?;
        Ok(p)
    }

    /// The `default-1W-850nm` fixture.
    pub fn default_fixture() -> Self {
        LaserParams::<f64>::from_json_str(DEFAULT_FIXTURE_JSON)
            .expect("built-in fixture is valid")
            .cast()
    }

    pub fn validate(&self) -> Result<()> {
        positive("tau_N", self.tau_n)?;
        positive("tau_P", self.tau_p)?;
        positive("Gamma", self.gamma)?;
        positive("beta", self.beta)?;
        positive("g0", self.g0)?;
        positive("N_t", self.n_t)?;
        positive("eps", self.eps)?;
        positive("V", self.volume)?;
        if self.gamma > F::one() {
            return Err(Error::InvalidParameter {
                name: "Gamma",
                reason: "must lie in (0, 1]".into(),
            });
        }
        if self.beta >= F::one() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "must lie in (0, 1)".into(),
            });
        }
        if self.tau_p >= self.tau_n {
            return Err(Error::InvalidParameter {
                name: "tau_P",
                reason: "photon lifetime must be shorter than carrier lifetime".into(),
            });
        }
        Ok(())
    }

    /// Elementary charge in the working scalar.
    pub fn charge(&self) -> F {
        lit(ELEMENTARY_CHARGE)
    }

    /// `e·V`, the charge needed to raise the carrier density by one per m³.
    pub fn charge_volume(&self) -> F {
        self.charge() * self.volume
    }

    /// Material gain term `g0·(N − N_t)·S / (1 + ε·S)`. Negative below
    /// transparency.
    pub fn gain(&self, n: F, s: F) -> F {
        self.g0 * (n - self.n_t) * s / (F::one() + self.eps * s)
    }

    /// Carrier density at which modal gain balances cavity loss.
    pub fn threshold_density(&self) -> F {
        self.n_t + F::one() / (self.tau_p * self.gamma * self.g0)
    }

    /// Steady-state current that holds the carriers at threshold.
    pub fn threshold_current(&self) -> F {
        self.charge_volume() * self.threshold_density() / self.tau_n
    }

    /// Right-hand side of the rate equations: `(dN/dt, dS/dt)`.
    pub fn rate_derivatives(&self, state: LaserState<F>, current: F) -> (F, F) {
        let g = self.gain(state.n, state.s);
        let dn = current / self.charge_volume() - state.n / self.tau_n - g;
        let ds =
            self.gamma * g - state.s / self.tau_p + self.gamma * self.beta * state.n / self.tau_n;
        (dn, ds)
    }
}

impl LaserParams<f64> {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    /// Converts to another scalar type.
    pub fn cast<G: Real>(&self) -> LaserParams<G> {
        LaserParams {
            tau_n: lit(self.tau_n),
            tau_p: lit(self.tau_p),
            gamma: lit(self.gamma),
            beta: lit(self.beta),
            g0: lit(self.g0),
            n_t: lit(self.n_t),
            eps: lit(self.eps),
            volume: lit(self.volume),
        }
    }
}

impl<F: Real> Default for LaserParams<F> {
    fn default() -> Self {
        Self::default_fixture()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> LaserParams<f64> {
        LaserParams::default_fixture()
    }

    #[test]
    fn gain_vanishes_without_photons_or_at_transparency() {
        let p = p();
        assert_eq!(p.gain(5e24, 0.0), 0.0);
        assert_eq!(p.gain(p.n_t, 1e21), 0.0);
        assert!(p.gain(0.5 * p.n_t, 1e20) < 0.0);
    }

    #[test]
    fn gain_matches_high_precision_value() {
        // 50-digit evaluation of g0 (N - N_t) S / (1 + eps S) at N = 2 N_t, S = 1e20.
        assert_relative_eq!(
            p().gain(2e24, 1e20),
            1.498_501_498_501_498_5e32,
            max_relative = 1e-14
        );
    }

    #[test]
    fn threshold_density_default() {
        assert_relative_eq!(
            p().threshold_density(),
            3.222_222_222_222_222_2e24,
            max_relative = 1e-14
        );
    }

    #[test]
    fn threshold_density_reciprocal_in_g0() {
        let a = p();
        let mut b = a;
        b.g0 *= 2.0;
        let ta = a.threshold_density() - a.n_t;
        let tb = b.threshold_density() - b.n_t;
        assert_relative_eq!(tb, ta / 2.0, max_relative = 1e-15);
        let mut c = a;
        c.g0 *= 1e12;
        assert_relative_eq!(c.threshold_density(), c.n_t, max_relative = 1e-11);
    }

    #[test]
    fn threshold_current_default_and_scaling() {
        let a = p();
        assert_relative_eq!(
            a.threshold_current(),
            0.025_812_845_77,
            max_relative = 1e-12
        );
        let mut b = a;
        b.volume *= 3.0;
        assert_relative_eq!(
            b.threshold_current(),
            3.0 * a.threshold_current(),
            max_relative = 1e-15
        );
        let mut c = a;
        c.tau_n *= 4.0;
        c.tau_p = a.tau_p;
        assert_relative_eq!(
            c.threshold_current(),
            a.threshold_current() / 4.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn rate_derivatives_cases() {
        let p = p();
        assert_eq!(p.rate_derivatives(LaserState::zero(), 0.0), (0.0, 0.0));
        let n = 2e24;
        let (dn, ds) = p.rate_derivatives(LaserState::new(n, 0.0), 0.0);
        assert_eq!(dn, -n / p.tau_n);
        assert_eq!(ds, p.gamma * p.beta * n / p.tau_n);
        let nth = p.threshold_density();
        let (dn, ds) = p.rate_derivatives(LaserState::new(nth, 1e19), 2.0 * p.threshold_current());
        assert_relative_eq!(dn, 1.577_781_110_777_811_1e33, max_relative = 1e-12);
        assert_relative_eq!(ds, 4.733_343_332_333_433_3e28, max_relative = 1e-9);
    }

    #[test]
    fn loader_rejects_unknown_and_invalid() {
        let ok = p().to_json_string();
        assert_eq!(LaserParams::from_json_str(&ok).unwrap(), p());
        let extra = ok.replacen('{', "{\"foo\": 1.0,", 1);
        assert!(matches!(
            LaserParams::from_json_str(&extra),
            Err(Error::Parse(_))
        ));
        let bad = ok.replace("\"tau_P\": 1e-12", "\"tau_P\": 3e-9");
        assert!(matches!(
            LaserParams::from_json_str(&bad),
            Err(Error::InvalidParameter { name: "tau_P", .. })
        ));
        assert!(LaserParams::new(2e-9, 1e-12, 1.5, 1e-4, 1.5e-12, 1e24, 1e-23, 1e-16).is_err());
        assert!(LaserParams::new(2e-9, 1e-12, 0.3, 1.0, 1.5e-12, 1e24, 1e-23, 1e-16).is_err());
    }

    #[test]
    fn single_precision_threshold() {
        let p32: LaserParams<f32> = LaserParams::default();
        assert!((p32.threshold_current() - 0.025_812_846).abs() < 1e-6);
    }
}
