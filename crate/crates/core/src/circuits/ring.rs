//! Baseline resonant capacitive-discharge driver.

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Series RLC discharge of a charged capacitor, switched off at `t_off`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantRingParams<F = f64> {
    /// Discharge capacitance (F).
    pub c: F,
    /// Loop inductance (H).
    pub l: F,
    /// Series loss resistance (Ω).
    pub r_loss: F,
    /// Initial capacitor voltage (V).
    pub v0: F,
    /// Switch turn-off time (s).
    pub t_off: F,
}

impl<F: Real> ResonantRingParams<F> {
    /// `r_loss` may be zero (lossless ring); the loop must be underdamped.
    pub fn new(c: F, l: F, r_loss: F, v0: F, t_off: F) -> Result<Self> {
        for (name, x) in [("C", c), ("L", l), ("V0", v0), ("t_off", t_off)] {
            super::positive(name, x)?;
        }
        if !(r_loss.is_finite() && r_loss >= F::zero()) {
            return Err(Error::InvalidParameter {
                name: "R_loss",
                reason: "must be >= 0".into(),
            });
        }
        let p = Self {
            c,
            l,
            r_loss,
            v0,
            t_off,
        };
        if !p.is_underdamped() {
            return Err(Error::InvalidParameter {
                name: "R_loss",
                reason: "loop is not underdamped (R_loss >= 2·sqrt(L/C))".into(),
            });
        }
        Ok(p)
    }

    pub fn is_underdamped(&self) -> bool {
        self.r_loss < lit::<F>(2.0) * (self.l / self.c).sqrt()
    }

    /// Decay rate `R/(2L)` and damped angular frequency.
    pub fn decay_and_frequency(&self) -> (F, F) {
        let gamma = self.r_loss / (lit::<F>(2.0) * self.l);
        (gamma, (F::one() / (self.l * self.c) - gamma * gamma).sqrt())
    }

    /// Waveform value; zero outside `[0, t_off)`. Negative after the first
    /// half period if `t_off` allows it.
    pub fn current(&self, t: F) -> F {
        if t < F::zero() || t >= self.t_off {
            return F::zero();
        }
        let (gamma, wd) = self.decay_and_frequency();
        self.v0 / (wd * self.l) * (-gamma * t).exp() * (wd * t).sin()
    }
}

/// Diode current of the resonant discharge (A) at `t ≥ 0`.
pub fn resonant_ring_current<F: Real>(p: &ResonantRingParams<F>, t: F) -> Result<F> {
    if !p.is_underdamped() {
        return Err(Error::InvalidParameter {
            name: "R_loss",
            reason: "overdamped loop".into(),
        });
    }
    if !(t >= F::zero()) {
        return Err(Error::Domain {
            what: "t",
            value: t.to_f64().unwrap_or(f64::NAN),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(p.current(t))
}
