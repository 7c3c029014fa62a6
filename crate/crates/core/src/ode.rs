//! Adaptive Dormand–Prince 5(4) integrator with dense output.
//!
//! The integrator works on fixed-size state arrays so the laser model
//! (carrier density, photon density, accumulated photon integral) and the
//! scalar circuit ODEs share one implementation. Every accepted step is handed
//! to a callback together with its continuous extension, which is what event
//! location and output resampling are built on.

use crate::error::{Error, Result};
use crate::num::{lit, Real};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Error estimate weights (5th minus embedded 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step and its continuous extension.
#[derive(Debug, Clone)]
pub struct Step<F, const D: usize> {
    pub t0: F,
    pub t1: F,
    pub y0: [F; D],
    pub y1: [F; D],
    /// Right-hand side at `(t0, y0)`.
    pub dy0: [F; D],
    /// Right-hand side at `(t1, y1)`.
    pub dy1: [F; D],
    coeffs: [[F; D]; 5],
}

impl<F: Real, const D: usize> Step<F, D> {
    /// Fourth-order interpolant valid for `t` in `[t0, t1]`.
    pub fn eval(&self, t: F) -> [F; D] {
        let h = self.t1 - self.t0;
        if h == F::zero() {
            return self.y1;
        }
        let theta = (t - self.t0) / h;
        let theta1 = F::one() - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }
}

/// What the step callback wants the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control<F> {
    Continue,
    /// Stop at a time inside the step just taken.
    StopAt(F),
}

/// Final state of an integration call.
#[derive(Debug, Clone)]
pub struct Outcome<F, const D: usize> {
    pub t: F,
    pub y: [F; D],
    /// Step size suggestion for a continuation call.
    pub h_next: F,
    pub steps: usize,
    pub rejected: usize,
    pub clamps: usize,
    /// True when the callback requested an early stop.
    pub stopped: bool,
}

/// Step-size controlled explicit Runge–Kutta integrator.
#[derive(Debug, Clone)]
pub struct Dopri5<F, const D: usize> {
    pub rtol: F,
    pub atol: [F; D],
    /// Absolute floor on the step size, below which the integration fails.
    pub h_min: F,
    pub h_max: Option<F>,
    pub max_steps: usize,
    /// Components clamped to zero after every accepted step.
    pub nonnegative: [bool; D],
}

impl<F: Real, const D: usize> Dopri5<F, D> {
    pub fn new(rtol: F, atol: [F; D]) -> Self {
        Self {
            rtol,
            atol,
            h_min: F::zero(),
            h_max: None,
            max_steps: 10_000_000,
            nonnegative: [false; D],
        }
    }

    fn error_norm(&self, err: &[F; D], y0: &[F; D], y1: &[F; D]) -> F {
        let mut acc = F::zero();
        for i in 0..D {
            let sk = self.atol[i] + self.rtol * y0[i].abs().max(y1[i].abs());
            let r = err[i] / sk;
            acc = acc + r * r;
        }
        (acc / lit(D as f64)).sqrt()
    }

    fn initial_step<R>(&self, rhs: &R, t0: F, y0: &[F; D], f0: &[F; D], span: F) -> F
    where
        R: Fn(F, &[F; D]) -> [F; D],
    {
        let rms = |v: &[F; D]| {
            let mut acc = F::zero();
            for i in 0..D {
                let sk = self.atol[i] + self.rtol * y0[i].abs();
                acc = acc + (v[i] / sk) * (v[i] / sk);
            }
            (acc / lit(D as f64)).sqrt()
        };
        let d0 = rms(y0);
        let d1 = rms(f0);
        let tiny = lit::<F>(1e-5);
        let h0 = if d0 < tiny || d1 < tiny {
            lit::<F>(1e-6) * span
        } else {
            lit::<F>(0.01) * d0 / d1
        }
        .min(span);
        let y1: [F; D] = std::array::from_fn(|i| y0[i] + h0 * f0[i]);
        let f1 = rhs(t0 + h0, &y1);
        let df: [F; D] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = rms(&df) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= lit(1e-15) {
            (h0 * lit(1e-3)).max(lit::<F>(1e-6) * span)
        } else {
            (lit::<F>(0.01) / dmax).powf(lit(0.2))
        };
        (h0 * lit(100.0)).min(h1).min(span)
    }

    /// Integrates `dy/dt = rhs(t, y)` from `t0` to `t_end`.
    ///
    /// `on_step` sees every accepted step; returning [`Control::StopAt`]
    /// truncates the integration at that time (which must lie in the step).
    pub fn integrate<R, C>(
        &self,
        rhs: R,
        t0: F,
        y0: [F; D],
        t_end: F,
        h_init: Option<F>,
        mut on_step: C,
    ) -> Result<Outcome<F, D>>
    where
        R: Fn(F, &[F; D]) -> [F; D],
        C: FnMut(&Step<F, D>) -> Control<F>,
    {
        let span = t_end - t0;
        let mut out = Outcome {
            t: t0,
            y: y0,
            h_next: F::zero(),
            steps: 0,
            rejected: 0,
            clamps: 0,
            stopped: false,
        };
        if span <= F::zero() {
            out.h_next = h_init.unwrap_or(F::zero());
            return Ok(out);
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: t0.to_f64().unwrap_or(f64::NAN),
            });
        }

        let h_max = self.h_max.unwrap_or(span).min(span);
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y);
        let mut h = match h_init {
            Some(h) if h > F::zero() => h,
            _ => self.initial_step(&rhs, t0, &y0, &k1, span),
        }
        .min(h_max);
        let mut last_rejected = false;
        let eps16 = F::epsilon() * lit(16.0);

        while t < t_end {
            if out.steps + out.rejected >= self.max_steps {
                return Err(Error::TooManySteps {
                    steps: self.max_steps,
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }
            let remaining = t_end - t;
            // stretch onto the end instead of leaving a sliver step behind
            let last = h * lit(1.01) >= remaining;
            let h_free = h;
            if last {
                h = remaining;
            }
            let floor = self.h_min.max(eps16 * t.abs());
            if !last && h < floor {
                return Err(Error::StepSizeUnderflow {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    h: h.to_f64().unwrap_or(f64::NAN),
                });
            }

            let stage = |coef: &[(f64, &[F; D])]| -> [F; D] {
                std::array::from_fn(|i| {
                    let mut acc = F::zero();
                    for (a, k) in coef {
                        acc = acc + lit::<F>(*a) * k[i];
                    }
                    y[i] + h * acc
                })
            };
            let k2 = rhs(t + lit::<F>(C2) * h, &stage(&[(A21, &k1)]));
            let k3 = rhs(t + lit::<F>(C3) * h, &stage(&[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                t + lit::<F>(C4) * h,
                &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                t + lit::<F>(C5) * h,
                &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let t_new = if last { t_end } else { t + h };
            let k6 = rhs(
                t_new,
                &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = rhs(t_new, &y_new);

            let finite = y_new.iter().chain(k7.iter()).all(|v| v.is_finite());
            let err_norm = if finite {
                let err: [F; D] = std::array::from_fn(|i| {
                    h * (lit::<F>(E1) * k1[i]
                        + lit::<F>(E3) * k3[i]
                        + lit::<F>(E4) * k4[i]
                        + lit::<F>(E5) * k5[i]
                        + lit::<F>(E6) * k6[i]
                        + lit::<F>(E7) * k7[i])
                });
                self.error_norm(&err, &y, &y_new)
            } else {
                F::infinity()
            };

            if !finite && h <= floor * lit(2.0) {
                return Err(Error::NonFinite {
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }

            if err_norm <= F::one() {
                let ydiff: [F; D] = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: [F; D] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
                let coeffs = [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                    std::array::from_fn(|i| {
                        h * (lit::<F>(D1) * k1[i]
                            + lit::<F>(D3) * k3[i]
                            + lit::<F>(D4) * k4[i]
                            + lit::<F>(D5) * k5[i]
                            + lit::<F>(D6) * k6[i]
                            + lit::<F>(D7) * k7[i])
                    }),
                ];

                let mut y_acc = y_new;
                let mut clamped = false;
                for i in 0..D {
                    if self.nonnegative[i] && y_acc[i] < F::zero() {
                        y_acc[i] = F::zero();
                        clamped = true;
                        out.clamps += 1;
                    }
                }
                let dy1 = if clamped { rhs(t_new, &y_acc) } else { k7 };
                out.steps += 1;

                let step = Step {
                    t0: t,
                    t1: t_new,
                    y0: y,
                    y1: y_acc,
                    dy0: k1,
                    dy1,
                    coeffs,
                };

                let factor = if err_norm == F::zero() {
                    lit(10.0)
                } else {
                    (lit::<F>(0.9) * err_norm.powf(lit(-0.2)))
                        .max(lit(0.2))
                        .min(lit(10.0))
                };
                let factor = if last_rejected {
                    factor.min(F::one())
                } else {
                    factor
                };
                // a final step cut short by the span end says nothing about
                // the step the solution supports; hand on the free proposal
                let h_next = if last {
                    (h * factor).max(h_free)
                } else {
                    h * factor
                }
                .min(h_max);
                last_rejected = false;

                if let Control::StopAt(ts) = on_step(&step) {
                    let ts = ts.max(step.t0).min(step.t1);
                    let mut ys = step.eval(ts);
                    for i in 0..D {
                        if self.nonnegative[i] && ys[i] < F::zero() {
                            ys[i] = F::zero();
                        }
                    }
                    out.t = ts;
                    out.y = ys;
                    out.h_next = h_next;
                    out.stopped = true;
                    return Ok(out);
                }

                t = t_new;
                y = y_acc;
                k1 = dy1;
                h = h_next;
            } else {
                out.rejected += 1;
                last_rejected = true;
                let shrink = if finite {
                    (lit::<F>(0.9) * err_norm.powf(lit(-0.2))).max(lit(0.2))
                } else {
                    lit(0.2)
                };
                h = h * shrink.min(lit(0.9));
            }
        }

        out.t = t;
        out.y = y;
        out.h_next = h;
        Ok(out)
    }
}

/// Locates a sign change of `g` in `[a, b]` by bisection.
///
/// `g(a)` and `g(b)` must have opposite signs (or `g(b) == 0`). Returns the
/// left-most bracket point after the interval shrinks to a few ulps.
pub fn bisect<F: Real, G: Fn(F) -> F>(g: G, mut a: F, mut b: F) -> F {
    let mut ga = g(a);
    if ga == F::zero() {
        return a;
    }
    for _ in 0..200 {
        let m = a + (b - a) * lit(0.5);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == F::zero() {
            return m;
        }
        if (gm > F::zero()) == (ga > F::zero()) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    b
}
