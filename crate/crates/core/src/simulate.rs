//! Time-domain integration of the rate equations under a drive waveform.

use crate::drive::{DriveWaveform, SegmentLaw};
use crate::error::{Error, Result};
use crate::laser::{LaserParams, LaserState};
use crate::metrics::SampledSignal;
use crate::num::{from_usize, lit, Real};
use crate::ode::{bisect, Control, Dopri5, Step};
use crate::quad::gauss_legendre5;

/// One output sample: carrier density, photon density (1/m³), current (A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<F = f64> {
    pub n: F,
    pub s: F,
    pub current: F,
}

/// Events located by the integrator (independent of the output grid).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Events<F = f64> {
    /// First time the carrier density reaches threshold.
    pub threshold_time: Option<F>,
    /// Time and value of the global photon-density maximum.
    pub peak: Option<(F, F)>,
    /// Time at which the drive was forced to zero by the peak cutoff rule.
    pub drive_cutoff: Option<F>,
    /// Number of negative excursions clamped to zero.
    pub negative_clamps: usize,
}

/// Uniformly sampled simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F = f64> {
    pub dt: F,
    pub t0: F,
    pub samples: Vec<Sample<F>>,
    pub events: Events<F>,
    /// `∫ S dt` over the integrated span, accumulated by the integrator.
    pub photon_integral: F,
    /// Time the integration actually stopped.
    pub end_time: F,
}

impl<F: Real> Trajectory<F> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> F {
        self.t0 + self.dt * from_usize(k)
    }

    pub fn times(&self) -> Vec<F> {
        (0..self.samples.len()).map(|k| self.time(k)).collect()
    }

    pub fn carrier_density(&self) -> Vec<F> {
        self.samples.iter().map(|s| s.n).collect()
    }

    pub fn current(&self) -> Vec<F> {
        self.samples.iter().map(|s| s.current).collect()
    }

    /// Photon density as a signal for pulse metrics.
    pub fn photon_density(&self) -> SampledSignal<F> {
        SampledSignal::new(self.dt, self.samples.iter().map(|s| s.s).collect())
            .expect("photon density samples are clamped nonnegative")
    }

    /// Carrier density at the located photon peak (interpolated from the grid).
    pub fn carrier_density_at(&self, t: F) -> Option<F> {
        if self.samples.is_empty() {
            return None;
        }
        let x = (t - self.t0) / self.dt;
        if x < F::zero() {
            return None;
        }
        let k = x.floor().to_usize()?;
        if k + 1 >= self.samples.len() {
            return self.samples.last().map(|s| s.n);
        }
        let w = x - from_usize(k);
        Some(self.samples[k].n * (F::one() - w) + self.samples[k + 1].n * w)
    }
}

/// Early-termination rule applied once the first post-threshold photon peak
/// has been located.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleRule<F> {
    /// Stop when `S` falls below this fraction of the peak.
    pub rel_level: F,
    /// Stop at the latest this long after the peak.
    pub horizon: F,
}

/// Integrator configuration for [`simulate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions<F> {
    pub initial: LaserState<F>,
    pub rtol: F,
    /// Absolute tolerance on `N` and `S` (1/m³).
    pub atol: F,
    /// Smallest step (s) the integrator may take before giving up.
    pub step_floor: F,
    /// Force the drive to zero at the first photon peak after threshold.
    pub cutoff_at_peak: bool,
    pub settle: Option<SettleRule<F>>,
}

impl<F: Real> Default for SimulationOptions<F> {
    fn default() -> Self {
        Self {
            initial: LaserState::zero(),
            rtol: lit(1e-8),
            atol: F::one(),
            step_floor: lit(1e-22),
            cutoff_at_peak: false,
            settle: None,
        }
    }
}

fn check_span<F: Real>(t_end: F, dt_out: F) -> Result<()> {
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
    Ok(())
}

fn grid_len<F: Real>(t_end: F, dt_out: F) -> usize {
    (t_end / dt_out + lit(1e-9)).floor().to_usize().unwrap_or(0) + 1
}

/// Integrates the full nonlinear rate equations from `(0, 0)` with default
/// options.
pub fn simulate<F: Real>(
    params: &LaserParams<F>,
    drive: &DriveWaveform<F>,
    t_end: F,
    dt_out: F,
) -> Result<Trajectory<F>> {
    simulate_with(params, drive, t_end, dt_out, &SimulationOptions::default())
}

struct Recorder<F: Real> {
    dt_out: F,
    grid_len: usize,
    next: usize,
    samples: Vec<Sample<F>>,
    n_th: F,
    threshold_time: Option<F>,
    first_peak: Option<F>,
    best: (F, F),
    t_stop: F,
}

impl<F: Real> Recorder<F> {
    fn emit_until(&mut self, step: &Step<F, 3>, t_last: F, current: impl Fn(F) -> F) {
        while self.next < self.grid_len {
            let t = self.dt_out * from_usize(self.next);
            if t > t_last {
                break;
            }
            let y = if t >= step.t1 { step.y1 } else { step.eval(t) };
            self.samples.push(Sample {
                n: y[0].max(F::zero()),
                s: y[1].max(F::zero()),
                current: current(t),
            });
            self.next += 1;
        }
    }
}

/// Integrates the full nonlinear rate equations.
///
/// Output is resampled from the integrator's continuous extension onto the
/// grid `k·dt_out`; the threshold crossing and photon peak are located on the
/// continuous solution, so they do not depend on `dt_out`.
pub fn simulate_with<F: Real>(
    params: &LaserParams<F>,
    drive: &DriveWaveform<F>,
    t_end: F,
    dt_out: F,
    opts: &SimulationOptions<F>,
) -> Result<Trajectory<F>> {
    check_span(t_end, dt_out)?;
    let n0 = opts.initial.n;
    let s0 = opts.initial.s;
    if n0 < F::zero() || s0 < F::zero() {
        return Err(Error::InvalidParameter {
            name: "initial",
            reason: "initial densities must be >= 0".into(),
        });
    }

    let mut solver = Dopri5::new(opts.rtol, [opts.atol, opts.atol, opts.atol * params.tau_n]);
    solver.h_min = opts.step_floor;
    solver.nonnegative = [true, true, false];

    let n_th = params.threshold_density();
    let glen = grid_len(t_end, dt_out);
    let mut rec = Recorder {
        dt_out,
        grid_len: glen,
        next: 1,
        samples: Vec::with_capacity(glen),
        n_th,
        threshold_time: if n0 >= n_th { Some(F::zero()) } else { None },
        first_peak: None,
        best: (F::zero(), s0),
        t_stop: t_end,
    };
    rec.samples.push(Sample {
        n: n0,
        s: s0,
        current: drive.current(F::zero()),
    });

    let segments = drive.segments(F::zero(), t_end);
    let mut cut: Option<F> = None;
    let mut clamps = 0usize;
    let mut t = F::zero();
    let mut y = [n0, s0, F::zero()];
    let mut h: Option<F> = None;
    let mut seg_idx = 0usize;

    while t < rec.t_stop {
        while seg_idx < segments.len() && segments[seg_idx].1 <= t {
            seg_idx += 1;
        }
        let (law, seg_end) = match (cut, segments.get(seg_idx)) {
            (Some(_), _) | (None, None) => (SegmentLaw::Constant(F::zero()), rec.t_stop),
            (None, Some(&(_, b, law))) => (law, b.min(rec.t_stop)),
        };
        let current_at = |tt: F| drive.eval_law(law, tt);
        let rhs = |tt: F, yy: &[F; 3]| -> [F; 3] {
            let (dn, ds) = params.rate_derivatives(LaserState::new(yy[0], yy[1]), current_at(tt));
            [dn, ds, yy[1]]
        };
        let output_current = |tt: F| match cut {
            Some(c) if tt >= c => F::zero(),
            _ => drive.current(tt),
        };
        let cutoff_at_peak = opts.cutoff_at_peak && cut.is_none();
        let settle = opts.settle;

        let outcome = solver.integrate(rhs, t, y, seg_end, h, |step: &Step<F, 3>| {
            if rec.threshold_time.is_none() && step.y0[0] < rec.n_th && step.y1[0] >= rec.n_th {
                let n_th = rec.n_th;
                rec.threshold_time = Some(bisect(|tt| step.eval(tt)[0] - n_th, step.t0, step.t1));
            }

            let mut stop: Option<F> = None;
            let mut cut_here = false;
            if step.dy0[1] > F::zero() && step.dy1[1] <= F::zero() {
                let tp = bisect(|tt| rhs(tt, &step.eval(tt))[1], step.t0, step.t1);
                let sp = step.eval(tp)[1];
                if sp > rec.best.1 {
                    rec.best = (tp, sp);
                }
                let after_threshold = rec.threshold_time.is_some_and(|tt| tt <= tp);
                if rec.first_peak.is_none() && after_threshold {
                    rec.first_peak = Some(tp);
                    if let Some(rule) = settle {
                        rec.t_stop = rec.t_stop.min(tp + rule.horizon);
                    }
                    if cutoff_at_peak {
                        stop = Some(tp);
                        cut_here = true;
                    }
                }
            }
            if step.y1[1] > rec.best.1 {
                rec.best = (step.t1, step.y1[1]);
            }
            if stop.is_none() {
                if let (Some(rule), Some(_)) = (settle, rec.first_peak) {
                    if step.y1[1] < rule.rel_level * rec.best.1 {
                        stop = Some(step.t1);
                    }
                }
            }
            if stop.is_none() && rec.t_stop < step.t1 {
                stop = Some(rec.t_stop);
            }

            match stop {
                Some(ts) => {
                    // grid points at the cutoff instant already see the drive off
                    rec.emit_until(step, ts, |tt| {
                        if cut_here && tt >= ts {
                            F::zero()
                        } else {
                            output_current(tt)
                        }
                    });
                    Control::StopAt(ts)
                }
                None => {
                    rec.emit_until(step, step.t1, &output_current);
                    Control::Continue
                }
            }
        })?;

        clamps += outcome.clamps;
        t = outcome.t;
        y = outcome.y;
        h = Some(outcome.h_next);
        if outcome.stopped {
            if cutoff_at_peak && cut.is_none() && rec.first_peak == Some(t) {
                cut = Some(t);
            } else {
                rec.t_stop = rec.t_stop.min(t);
            }
        }
    }

    if y[1] > rec.best.1 {
        rec.best = (t, y[1]);
    }
    let peak = (rec.best.1 > F::zero()).then_some(rec.best);

    Ok(Trajectory {
        dt: dt_out,
        t0: F::zero(),
        samples: rec.samples,
        events: Events {
            threshold_time: rec.threshold_time,
            peak,
            drive_cutoff: cut,
            negative_clamps: clamps,
        },
        photon_integral: y[2],
        end_time: t,
    })
}

/// Exact update of the linearized carrier equation over `[a, b]` under one
/// segment law.
fn linear_step<F: Real>(
    params: &LaserParams<F>,
    drive: &DriveWaveform<F>,
    law: SegmentLaw<F>,
    n_a: F,
    a: F,
    b: F,
) -> F {
    let tau = params.tau_n;
    let h = b - a;
    let decay = (-h / tau).exp();
    let forced = match law {
        SegmentLaw::Constant(c) => c * tau * (-(-h / tau).exp_m1()),
        SegmentLaw::Exponential {
            amplitude,
            time_constant,
        } => {
            let k = F::one() / tau + F::one() / time_constant;
            amplitude * (b / time_constant).exp() * (-(-h * k).exp_m1()) / k
        }
        SegmentLaw::Generator => {
            let panels = 4usize;
            let w = h / from_usize(panels);
            (0..panels)
                .map(|p| {
                    let lo = a + w * from_usize(p);
                    gauss_legendre5(
                        |s| (-(b - s) / tau).exp() * drive.eval_law(law, s),
                        lo,
                        lo + w,
                    )
                })
                .sum()
        }
    };
    n_a * decay + forced / params.charge_volume()
}

/// Integrates the linearized carrier equation `dN/dt = I/(eV) − N/τ_N` with
/// the photon density held at zero, starting from `(0, 0)`.
pub fn simulate_linear<F: Real>(
    params: &LaserParams<F>,
    drive: &DriveWaveform<F>,
    t_end: F,
    dt_out: F,
) -> Result<Trajectory<F>> {
    simulate_linear_from(params, drive, t_end, dt_out, F::zero())
}

/// [`simulate_linear`] from an arbitrary initial carrier density.
///
/// Each step applies the variation-of-constants formula exactly: closed-form
/// drives are integrated analytically, sampled drives are piecewise constant
/// by construction, and custom generators use Gauss–Legendre quadrature.
pub fn simulate_linear_from<F: Real>(
    params: &LaserParams<F>,
    drive: &DriveWaveform<F>,
    t_end: F,
    dt_out: F,
    n0: F,
) -> Result<Trajectory<F>> {
    check_span(t_end, dt_out)?;
    if !(n0.is_finite() && n0 >= F::zero()) {
        return Err(Error::InvalidParameter {
            name: "initial",
            reason: "N0 must be >= 0".into(),
        });
    }
    let n_th = params.threshold_density();
    let glen = grid_len(t_end, dt_out);
    let segments = drive.segments(F::zero(), t_end);
    let mut samples = Vec::with_capacity(glen);
    samples.push(Sample {
        n: n0,
        s: F::zero(),
        current: drive.current(F::zero()),
    });
    let mut threshold_time = if n0 >= n_th { Some(F::zero()) } else { None };

    let mut n = n0;
    let mut t = F::zero();
    let mut seg_idx = 0usize;
    for k in 1..glen {
        let target = dt_out * from_usize(k);
        while t < target {
            while seg_idx < segments.len() && segments[seg_idx].1 <= t {
                seg_idx += 1;
            }
            let (law, b) = match segments.get(seg_idx) {
                Some(&(_, b, law)) => (law, b.min(target)),
                None => (SegmentLaw::Constant(F::zero()), target),
            };
            let n_b = linear_step(params, drive, law, n, t, b);
            if !n_b.is_finite() {
                return Err(Error::NonFinite {
                    t: b.to_f64().unwrap_or(f64::NAN),
                });
            }
            if threshold_time.is_none() && n < n_th && n_b >= n_th {
                let (n_a, a) = (n, t);
                threshold_time = Some(bisect(
                    |tt| linear_step(params, drive, law, n_a, a, tt) - n_th,
                    a,
                    b,
                ));
            }
            n = n_b;
            t = b;
        }
        samples.push(Sample {
            n,
            s: F::zero(),
            current: drive.current(target),
        });
    }

    Ok(Trajectory {
        dt: dt_out,
        t0: F::zero(),
        samples,
        events: Events {
            threshold_time,
            peak: None,
            drive_cutoff: None,
            negative_clamps: 0,
        },
        photon_integral: F::zero(),
        end_time: t,
    })
}
