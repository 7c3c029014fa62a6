//! Drive-current waveforms fed into the rate equations.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metrics::SampledSignal;
use crate::num::{from_usize, Real};

/// Time-indexed current source (A).
#[derive(Clone)]
pub enum DriveSource<F: Real> {
    Zero,
    Constant(F),
    /// `amplitude · exp(t / time_constant)`, the optimal precharge shape
    /// continued past its nominal duration.
    Exponential {
        amplitude: F,
        time_constant: F,
    },
    /// Zero-order hold of uniform samples starting at `t = 0`; zero after
    /// the last sample interval.
    Sampled(SampledSignal<F>),
    /// Arbitrary closed-form generator. Negative outputs are treated as zero.
    Custom(Arc<dyn Fn(F) -> F + Send + Sync>),
}

impl<F: Real> fmt::Debug for DriveSource<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c:e})"),
            Self::Exponential {
                amplitude,
                time_constant,
            } => {
                write!(f, "Exponential({amplitude:e}, {time_constant:e})")
            }
            Self::Sampled(s) => write!(f, "Sampled(n = {}, dt = {:e})", s.len(), s.dt()),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A current source plus an optional cutoff time after which `I ≡ 0`.
#[derive(Debug, Clone)]
pub struct DriveWaveform<F: Real = f64> {
    source: DriveSource<F>,
    cutoff: Option<F>,
}

/// Current law that is smooth over one integration segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SegmentLaw<F> {
    Constant(F),
    Exponential {
        amplitude: F,
        time_constant: F,
    },
    /// Evaluate the custom generator.
    Generator,
}

impl<F: Real> DriveWaveform<F> {
    pub fn new(source: DriveSource<F>, cutoff: Option<F>) -> Result<Self> {
        match &source {
            DriveSource::Constant(c) if !(c.is_finite() && *c >= F::zero()) => {
                return Err(Error::InvalidParameter {
                    name: "current",
                    reason: "constant drive must be finite and >= 0".into(),
                })
            }
            DriveSource::Exponential {
                amplitude,
                time_constant,
            } if !(*amplitude >= F::zero() && *time_constant > F::zero()) => {
                return Err(Error::InvalidParameter {
                    name: "amplitude",
                    reason: "exponential drive needs amplitude >= 0 and time constant > 0".into(),
                })
            }
            _ => {}
        }
        if let Some(c) = cutoff {
            if c.is_nan() || c < F::zero() {
                return Err(Error::InvalidParameter {
                    name: "cutoff",
                    reason: "cutoff time must be >= 0".into(),
                });
            }
        }
        Ok(Self { source, cutoff })
    }

    pub fn zero() -> Self {
        Self {
            source: DriveSource::Zero,
            cutoff: None,
        }
    }

    pub fn constant(current: F) -> Result<Self> {
        Self::new(DriveSource::Constant(current), None)
    }

    pub fn exponential(amplitude: F, time_constant: F, cutoff: Option<F>) -> Result<Self> {
        Self::new(
            DriveSource::Exponential {
                amplitude,
                time_constant,
            },
            cutoff,
        )
    }

    pub fn sampled(signal: SampledSignal<F>, cutoff: Option<F>) -> Self {
        Self {
            source: DriveSource::Sampled(signal),
            cutoff,
        }
    }

    pub fn custom<G>(generator: G, cutoff: Option<F>) -> Self
    where
        G: Fn(F) -> F + Send + Sync + 'static,
    {
        Self {
            source: DriveSource::Custom(Arc::new(generator)),
            cutoff,
        }
    }

    pub fn source(&self) -> &DriveSource<F> {
        &self.source
    }

    pub fn cutoff(&self) -> Option<F> {
        self.cutoff
    }

    pub fn with_cutoff(mut self, cutoff: Option<F>) -> Self {
        self.cutoff = cutoff;
        self
    }

    /// Current at time `t` (A); zero before 0 and from the cutoff on.
    pub fn current(&self, t: F) -> F {
        if t < F::zero() || self.cutoff.is_some_and(|c| t >= c) {
            return F::zero();
        }
        match &self.source {
            DriveSource::Zero => F::zero(),
            DriveSource::Constant(c) => *c,
            DriveSource::Exponential {
                amplitude,
                time_constant,
            } => *amplitude * (t / *time_constant).exp(),
            DriveSource::Sampled(s) => {
                let k = (t / s.dt()).floor().to_usize().unwrap_or(usize::MAX);
                s.values().get(k).copied().unwrap_or(F::zero())
            }
            DriveSource::Custom(g) => g(t).max(F::zero()),
        }
    }

    /// Splits `[t0, t_end]` at every discontinuity of the drive and returns
    /// the current law valid on each piece.
    pub(crate) fn segments(&self, t0: F, t_end: F) -> Vec<(F, F, SegmentLaw<F>)> {
        let mut out: Vec<(F, F, SegmentLaw<F>)> = Vec::new();
        let mut push = |a: F, b: F, law: SegmentLaw<F>| {
            let a = a.max(t0);
            let b = b.min(t_end);
            if b > a {
                out.push((a, b, law));
            }
        };
        let stop = self.cutoff.map_or(t_end, |c| c.min(t_end)).max(t0);
        let zero = SegmentLaw::Constant(F::zero());
        if t0 < F::zero() {
            push(t0, F::zero(), zero);
        }
        let on_start = t0.max(F::zero());
        match &self.source {
            DriveSource::Zero => push(on_start, stop, zero),
            DriveSource::Constant(c) => push(on_start, stop, SegmentLaw::Constant(*c)),
            DriveSource::Exponential {
                amplitude,
                time_constant,
            } => push(
                on_start,
                stop,
                SegmentLaw::Exponential {
                    amplitude: *amplitude,
                    time_constant: *time_constant,
                },
            ),
            DriveSource::Custom(_) => push(on_start, stop, SegmentLaw::Generator),
            DriveSource::Sampled(s) => {
                let dt = s.dt();
                let n = s.len();
                let first = (on_start / dt).floor().to_usize().unwrap_or(0);
                let mut k = first;
                while k < n {
                    let a = dt * from_usize(k);
                    if a >= stop {
                        break;
                    }
                    let b = if k + 1 == n {
                        dt * from_usize(n)
                    } else {
                        dt * from_usize(k + 1)
                    };
                    push(a, b.min(stop), SegmentLaw::Constant(s.values()[k]));
                    k += 1;
                }
                let end = dt * from_usize(n);
                if end < stop {
                    push(end.max(on_start), stop, zero);
                }
            }
        }
        if stop < t_end {
            push(stop, t_end, zero);
        }
        out
    }

    /// Evaluates a segment law; `t` is assumed inside the segment.
    pub(crate) fn eval_law(&self, law: SegmentLaw<F>, t: F) -> F {
        match law {
            SegmentLaw::Constant(c) => c,
            SegmentLaw::Exponential {
                amplitude,
                time_constant,
            } => amplitude * (t / time_constant).exp(),
            SegmentLaw::Generator => match &self.source {
                DriveSource::Custom(g) => g(t).max(F::zero()),
                _ => self.current(t),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_zeroes_current() {
        let d = DriveWaveform::exponential(1.0, 2.0, Some(3.0)).unwrap();
        assert_eq!(d.current(0.0), 1.0);
        assert!((d.current(2.0) - 1f64.exp()).abs() < 1e-15);
        assert_eq!(d.current(3.0), 0.0);
        assert_eq!(d.current(-1.0), 0.0);
    }

    #[test]
    fn sampled_zero_order_hold() {
        let s = SampledSignal::new(0.5, vec![1.0, 2.0, 3.0]).unwrap();
        let d = DriveWaveform::sampled(s, None);
        assert_eq!(d.current(0.0), 1.0);
        assert_eq!(d.current(0.49), 1.0);
        assert_eq!(d.current(0.5), 2.0);
        assert_eq!(d.current(1.49), 3.0);
        assert_eq!(d.current(1.5), 0.0);
        let segs = d.segments(0.0, 2.0);
        assert_eq!(segs.len(), 4);
        assert_eq!(segs[3], (1.5, 2.0, SegmentLaw::Constant(0.0)));
    }

    #[test]
    fn segments_split_at_cutoff() {
        let d = DriveWaveform::constant(1.0).unwrap().with_cutoff(Some(1.0));
        let segs = d.segments(0.0, 3.0);
        assert_eq!(
            segs,
            vec![
                (0.0, 1.0, SegmentLaw::Constant(1.0)),
                (1.0, 3.0, SegmentLaw::Constant(0.0))
            ]
        );
    }

    #[test]
    fn rejects_negative_constant() {
        assert!(DriveWaveform::constant(-1.0).is_err());
        let d = DriveWaveform::custom(|t: f64| -t, None);
        assert_eq!(d.current(1.0), 0.0);
    }
}
