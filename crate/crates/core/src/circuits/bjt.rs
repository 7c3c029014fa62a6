//! Push-pull BJT source: emitter current under a linear base-voltage ramp.

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Exponential emitter current `I_ES·(exp(ramp·t/V_T) − 1)` until `t_on`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BjtParams<F = f64> {
    /// Emitter saturation current (A).
    pub i_es: F,
    /// Thermal voltage (V).
    pub v_t: F,
    /// Base-emitter voltage slope (V/s).
    pub ramp_rate: F,
    /// Conduction time before the shorting switch closes (s).
    pub t_on: F,
}

/// Room-temperature thermal voltage (V).
pub const THERMAL_VOLTAGE: f64 = 0.026;

impl<F: Real> BjtParams<F> {
    pub fn new(i_es: F, v_t: F, ramp_rate: F, t_on: F) -> Result<Self> {
        let p = Self {
            i_es,
            v_t,
            ramp_rate,
            t_on,
        };
        for (name, v) in [
            ("I_ES", i_es),
            ("V_T", v_t),
            ("ramp_rate", ramp_rate),
            ("t_on", t_on),
        ] {
            super::positive(name, v)?;
        }
        Ok(p)
    }

    /// Exponential growth rate `ramp_rate / V_T` (1/s).
    pub fn rate(&self) -> F {
        self.ramp_rate / self.v_t
    }

    /// Waveform value: the emitter current for `0 ≤ t < t_on`, zero elsewhere.
    pub fn current(&self, t: F) -> F {
        if t < F::zero() || t >= self.t_on {
            F::zero()
        } else {
            self.i_es * (self.rate() * t).exp_m1()
        }
    }
}

impl<F: Real> Default for BjtParams<F> {
    fn default() -> Self {
        Self {
            i_es: lit(1e-3),
            v_t: lit(THERMAL_VOLTAGE),
            ramp_rate: lit(1.3e7),
            t_on: lit(5e-9),
        }
    }
}

/// Emitter current (A) for `0 ≤ t ≤ t_on`. The law is evaluated up to and
/// including `t_on`; [`BjtParams::current`] is the switched waveform.
pub fn bjt_current<F: Real>(p: &BjtParams<F>, t: F) -> Result<F> {
    if !(t >= F::zero() && t <= p.t_on) {
        return Err(Error::Domain {
            what: "t",
            value: t.to_f64().unwrap_or(f64::NAN),
            lo: 0.0,
            hi: p.t_on.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(p.i_es * (p.rate() * t).exp_m1())
}
