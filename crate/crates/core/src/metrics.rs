//! Pulse-shape metrics on uniformly sampled, nonnegative signals.
//!
//! The central quantity is `ρ = max f / ∫ f`, the ratio of the ∞-norm to the
//! 1-norm of a pulse. It is invariant under amplitude scaling, grows without
//! bound as the pulse approaches an impulse, and cannot increase when the
//! pulse passes through a linear time-invariant system with a nonnegative
//! impulse response (`convolve`).

use crate::error::{Error, Result};
use crate::num::{compensated_sum, from_usize, lit, Real};

/// Uniform nonnegative samples with an optional integration window.
///
/// The window is the half-open index range `[start, end)`; it defaults to the
/// full record.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<F = f64> {
    dt: F,
    values: Vec<F>,
    window: Option<(usize, usize)>,
}

impl<F: Real> SampledSignal<F> {
    /// Rejects `dt <= 0`, non-finite values and negative samples.
    pub fn new(dt: F, values: Vec<F>) -> Result<Self> {
        if !(dt.is_finite() && dt > F::zero()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "sample interval must be finite and > 0".into(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "values",
                    reason: format!("non-finite sample at index {index}"),
                });
            }
            if *v < F::zero() {
                return Err(Error::NegativeSample {
                    index,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self {
            dt,
            values,
            window: None,
        })
    }

    /// Like [`SampledSignal::new`] but clamps negative samples to zero and
    /// reports how many were clamped.
    pub fn new_clamped(dt: F, mut values: Vec<F>) -> Result<(Self, usize)> {
        let mut clamped = 0;
        for v in values.iter_mut() {
            if *v < F::zero() {
                *v = F::zero();
                clamped += 1;
            }
        }
        Ok((Self::new(dt, values)?, clamped))
    }

    pub fn with_window(mut self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.values.len() {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!(
                    "need start < end <= {}, got [{start}, {end})",
                    self.values.len()
                ),
            });
        }
        self.window = Some((start, end));
        Ok(self)
    }

    /// Window covering sample times `t0 <= k·dt <= t1` (with a 1e-9 sample
    /// slack for rounding).
    pub fn with_time_window(self, t0: F, t1: F) -> Result<Self> {
        let slack = lit::<F>(1e-9);
        let start = (t0 / self.dt - slack)
            .ceil()
            .max(F::zero())
            .to_usize()
            .unwrap_or(0);
        let end = ((t1 / self.dt + slack).floor() + F::one())
            .max(F::zero())
            .to_usize()
            .unwrap_or(0)
            .min(self.values.len());
        self.with_window(start, end)
    }

    pub fn dt(&self) -> F {
        self.dt
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Effective window `[start, end)`.
    pub fn window(&self) -> (usize, usize) {
        self.window.unwrap_or((0, self.values.len()))
    }

    pub fn windowed(&self) -> &[F] {
        let (a, b) = self.window();
        &self.values[a..b]
    }

    /// Sample time of index `k`.
    pub fn time(&self, k: usize) -> F {
        self.dt * from_usize(k)
    }

    /// Every sample multiplied by `k` (window preserved).
    pub fn scaled(&self, k: F) -> Self {
        Self {
            dt: self.dt,
            values: self.values.iter().map(|v| *v * k).collect(),
            window: self.window,
        }
    }

    /// Index (absolute) and value of the earliest maximum in the window.
    pub fn peak(&self) -> Option<(usize, F)> {
        let (a, _) = self.window();
        let mut best: Option<(usize, F)> = None;
        for (i, v) in self.windowed().iter().enumerate() {
            if best.is_none_or(|(_, b)| *v > b) {
                best = Some((a + i, *v));
            }
        }
        best
    }

    /// `dt · Σ y` over the window.
    pub fn integral(&self) -> F {
        self.dt * compensated_sum(self.windowed().iter().copied())
    }
}

/// Peak-to-integral ratio `max y / (dt Σ y)` over the window, in 1/s.
pub fn rho<F: Real>(signal: &SampledSignal<F>) -> Result<F> {
    let (_, peak) = signal.peak().ok_or(Error::UndefinedMetric)?;
    if peak <= F::zero() {
        return Err(Error::UndefinedMetric);
    }
    let sum = compensated_sum(signal.windowed().iter().copied());
    Ok(peak / (sum * signal.dt()))
}

/// Full width at half maximum (s), measured between the first rising and the
/// last falling half-maximum crossings with linear interpolation.
pub fn fwhm<F: Real>(signal: &SampledSignal<F>) -> Result<F> {
    let (_, peak) = signal.peak().ok_or(Error::UndefinedMetric)?;
    if peak <= F::zero() {
        return Err(Error::UndefinedMetric);
    }
    let y = signal.windowed();
    let half = peak * lit(0.5);
    let first = y
        .iter()
        .position(|v| *v >= half)
        .ok_or(Error::UnboundedPulse)?;
    let last = y
        .iter()
        .rposition(|v| *v >= half)
        .ok_or(Error::UnboundedPulse)?;
    if first == 0 || last + 1 >= y.len() {
        return Err(Error::UnboundedPulse);
    }
    // fractional index where the segment lo → lo+1 passes through `half`
    let cross = |lo: usize| -> F {
        let (ylo, yhi) = (y[lo], y[lo + 1]);
        from_usize::<F>(lo) + (half - ylo) / (yhi - ylo)
    };
    let left = cross(first - 1);
    let right = cross(last);
    Ok((right - left) * signal.dt())
}

/// Riemann approximation of `(h ∗ f)(t)`: the discrete convolution scaled by
/// `dt`. Output length is `len(f) + len(h) − 1`; windows are ignored.
pub fn convolve<F: Real>(f: &SampledSignal<F>, h: &SampledSignal<F>) -> Result<SampledSignal<F>> {
    let tol = lit::<F>(1e-12);
    if (f.dt() - h.dt()).abs() > tol * f.dt().max(h.dt()) {
        return Err(Error::SampleIntervalMismatch {
            a: f.dt().to_f64().unwrap_or(f64::NAN),
            b: h.dt().to_f64().unwrap_or(f64::NAN),
        });
    }
    if f.is_empty() || h.is_empty() {
        return SampledSignal::new(f.dt(), Vec::new());
    }
    let (fv, hv) = (f.values(), h.values());
    let n = fv.len() + hv.len() - 1;
    let mut out = vec![F::zero(); n];
    for (i, a) in fv.iter().enumerate() {
        if *a == F::zero() {
            continue;
        }
        for (j, b) in hv.iter().enumerate() {
            out[i + j] = out[i + j] + *a * *b;
        }
    }
    let dt = f.dt();
    for v in out.iter_mut() {
        *v = *v * dt;
    }
    SampledSignal::new(dt, out)
}

/// Number of disjoint runs where the signal is at least `rel_threshold · peak`.
pub fn pulse_count<F: Real>(signal: &SampledSignal<F>, rel_threshold: F) -> Result<usize> {
    if !(rel_threshold > F::zero() && rel_threshold < F::one()) {
        return Err(Error::InvalidParameter {
            name: "rel_threshold",
            reason: "must lie in (0, 1)".into(),
        });
    }
    let peak = match signal.peak() {
        Some((_, p)) if p > F::zero() => p,
        _ => return Ok(0),
    };
    let level = rel_threshold * peak;
    let mut count = 0;
    let mut inside = false;
    for v in signal.windowed() {
        let above = *v >= level;
        if above && !inside {
            count += 1;
        }
        inside = above;
    }
    Ok(count)
}

/// Default threshold for [`pulse_count`].
pub const DEFAULT_PULSE_THRESHOLD: f64 = 0.1;
