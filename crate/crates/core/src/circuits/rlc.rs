//! Step response of a series inductor feeding a resistor with a parallel
//! capacitor.
//!
//! With `v` the capacitor (and load) voltage, `L·di_L/dt = V − v` and
//! `C·dv/dt = i_L − v/R`; the load current is `v/R`.

use crate::error::{Error, Result};
use crate::num::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlcParams<F = f64> {
    /// Load resistance (Ω).
    pub r: F,
    /// Parallel capacitance (F).
    pub c: F,
    /// Series inductance (H).
    pub l: F,
    /// Supply step (V).
    pub v: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Damping {
    Underdamped,
    Critical,
    Overdamped,
}

/// Relative band around `L = 4R²C` treated as critically damped.
pub const CRITICAL_BAND: f64 = 1e-9;

impl<F: Real> RlcParams<F> {
    pub fn new(r: F, c: F, l: F, v: F) -> Result<Self> {
        for (name, x) in [("R", r), ("C", c), ("L", l), ("V", v)] {
            super::positive(name, x)?;
        }
        Ok(Self { r, c, l, v })
    }

    /// Time constant `τ = 2RC`.
    pub fn tau(&self) -> F {
        lit::<F>(2.0) * self.r * self.c
    }

    /// `4R²C/L`; above one the response rings.
    pub fn damping_ratio(&self) -> F {
        lit::<F>(4.0) * self.r * self.r * self.c / self.l
    }

    pub fn regime(&self) -> Damping {
        let q = self.damping_ratio() - F::one();
        if q.abs() <= lit(CRITICAL_BAND) {
            Damping::Critical
        } else if q > F::zero() {
            Damping::Underdamped
        } else {
            Damping::Overdamped
        }
    }

    /// Load current (A) at `t`, zero before the step.
    pub fn current(&self, t: F) -> F {
        if t <= F::zero() {
            return F::zero();
        }
        let x = t / self.tau();
        let scale = self.v / self.r;
        let q = self.damping_ratio() - F::one();
        let one = F::one();
        let tail = match self.regime() {
            Damping::Critical => (-x).exp() * (one + x),
            Damping::Underdamped => {
                let a = q.sqrt();
                (-x).exp() * ((a * x).cos() + (a * x).sin() / a)
            }
            Damping::Overdamped => {
                // e^(−x)(cosh βx + sinh βx/β) split into two decaying modes
                let b = (-q).sqrt();
                let half = lit::<F>(0.5);
                half * (one + one / b) * (-(one - b) * x).exp()
                    + half * (one - one / b) * (-(one + b) * x).exp()
            }
        };
        scale * (one - tail)
    }
}

/// Load current (A) for a supply step at `t = 0`, in every damping regime.
pub fn rlc_step_response<F: Real>(p: &RlcParams<F>, t: F) -> Result<F> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::Control;
    use crate::ode::Dopri5;
    use approx::assert_relative_eq;

    fn ode_current(p: &RlcParams<f64>, t: f64) -> f64 {
        let solver = Dopri5::new(1e-12, [1e-18, 1e-15]);
        let rhs = |_t: f64, y: &[f64; 2]| [(p.v - y[1]) / p.l, (y[0] - y[1] / p.r) / p.c];
        let out = solver
            .integrate(rhs, 0.0, [0.0, 0.0], t, None, |_| Control::Continue)
            .unwrap();
        out.y[1] / p.r
    }

    #[test]
    fn critical_example_values_are_critical() {
        let p = RlcParams::new(5.0, 150e-12, 15e-9, 5.0).unwrap();
        assert_eq!(p.regime(), Damping::Critical);
        assert_relative_eq!(p.tau(), 1.5e-9, max_relative = 1e-14);
        for t in [0.5e-9, 1.5e-9, 4e-9] {
            let x: f64 = t / 1.5e-9;
            assert_relative_eq!(
                p.current(t),
                1.0 - (-x).exp() * (1.0 + x),
                max_relative = 1e-13
            );
        }
        assert_relative_eq!(p.current(1e-6), 1.0, max_relative = 1e-12);
        assert_eq!(p.current(0.0), 0.0);
    }

    #[test]
    fn matches_network_ode() {
        for p in [
            RlcParams::new(5.0, 150e-12, 15e-9, 5.0).unwrap(),
            RlcParams::new(5.0, 150e-12, 5e-9, 5.0).unwrap(),
            RlcParams::new(5.0, 150e-12, 60e-9, 5.0).unwrap(),
        ] {
            for k in 1..=20 {
                let t = k as f64 * 0.5e-9;
                assert_relative_eq!(p.current(t), ode_current(&p, t), max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn branches_agree_near_the_boundary() {
        let base = RlcParams::new(5.0, 150e-12, 15e-9, 5.0).unwrap();
        for f in [1.0 - 1e-6, 1.0 + 1e-6] {
            let p = RlcParams {
                l: base.l * f,
                ..base
            };
            assert_ne!(p.regime(), Damping::Critical);
            for k in 1..=50 {
                let t = k as f64 * 0.2e-9;
                assert_relative_eq!(p.current(t), base.current(t), max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn overdamped_is_stable_for_long_times() {
        let p = RlcParams::<f64>::new(1e-3, 1e-6, 1e-3, 1.0).unwrap();
        assert_eq!(p.regime(), Damping::Overdamped);
        let i = p.current(1e3);
        assert!(i.is_finite());
        assert!(rlc_step_response(&p, -1.0).is_err());
    }
}
