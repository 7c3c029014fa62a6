//! Parallel LC branches discharged together through the diode.

use crate::error::{Error, Result};
use crate::num::{from_usize, lit, Real};
use crate::ode::bisect;

/// Undamped LC branches, every capacitor initially charged to `V0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiResonantParams<F = f64> {
    /// `(L_i, C_i)` per branch (H, F).
    pub branches: Vec<(F, F)>,
    /// Initial capacitor voltage (V).
    pub v0: F,
}

impl<F: Real> MultiResonantParams<F> {
    pub fn new(branches: Vec<(F, F)>, v0: F) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidParameter {
                name: "branches",
                reason: "need at least one LC branch".into(),
            });
        }
        for (l, c) in &branches {
            super::positive("L_i", *l)?;
            super::positive("C_i", *c)?;
        }
        super::positive("V0", v0)?;
        Ok(Self { branches, v0 })
    }

    /// Total current `V0·Σ √(C_i/L_i)·sin(t/√(L_i C_i))` without turn-off.
    pub fn superposition(&self, t: F) -> F {
        self.v0
            * self
                .branches
                .iter()
                .map(|(l, c)| (*c / *l).sqrt() * (t / (*l * *c).sqrt()).sin())
                .sum::<F>()
    }

    /// Natural turn-off time: the first zero of the total current after it
    /// has peaked. The current leaves zero with positive slope, so this is
    /// the first positive root. `None` if no root is found within a long
    /// search horizon.
    pub fn turn_off_time(&self) -> Option<F> {
        let periods: Vec<F> = self
            .branches
            .iter()
            .map(|(l, c)| F::TAU() * (*l * *c).sqrt())
            .collect();
        let shortest = periods.iter().copied().fold(F::infinity(), F::min);
        let longest = periods.iter().copied().fold(F::zero(), F::max);
        let h = shortest / lit(256.0);
        let limit = (longest * lit(64.0) / h)
            .to_usize()
            .unwrap_or(usize::MAX)
            .min(10_000_000);
        let mut prev_t = F::zero();
        for k in 1..=limit {
            let t = h * from_usize(k);
            if self.superposition(t) <= F::zero() {
                return Some(bisect(|tt| self.superposition(tt), prev_t, t));
            }
            prev_t = t;
        }
        None
    }

    /// Grid samples `k·dt` with the current held at zero from the first
    /// nonpositive sample on.
    pub fn sample(&self, dt: F, n: usize) -> Vec<F> {
        let mut off = false;
        (0..n)
            .map(|k| {
                if k == 0 || off {
                    return F::zero();
                }
                let i = self.superposition(dt * from_usize(k));
                if i <= F::zero() {
                    off = true;
                    F::zero()
                } else {
                    i
                }
            })
            .collect()
    }

    /// Waveform value: the superposition up to the natural turn-off, zero
    /// after it (and before `t = 0`).
    pub fn current_with_turn_off(&self, t: F, t_z: Option<F>) -> F {
        if t < F::zero() || t_z.is_some_and(|z| t >= z) {
            F::zero()
        } else {
            self.superposition(t)
        }
    }
}

/// Superposed branch current at `t ≥ 0` plus the natural turn-off time.
pub fn multi_resonant_current<F: Real>(p: &MultiResonantParams<F>, t: F) -> Result<(F, Option<F>)> {
    if !(t >= F::zero()) {
        return Err(Error::Domain {
            what: "t",
            value: t.to_f64().unwrap_or(f64::NAN),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok((p.superposition(t), p.turn_off_time()))
}
