//! Least-squares fit of a topology's parameters to a reference current.
//!
//! Parameters are searched in log space: each bound pair `[lo, hi]` maps to
//! the unit interval, so the search is scale-free and respects positivity.
//! Equal bounds fix a parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CircuitParams, Topology};
use crate::error::{Error, Result};
use crate::metrics::SampledSignal;
use crate::nelder_mead::NelderMead;
use crate::num::{from_usize, lit, Real};

/// Per-parameter search box in topology vector order.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<F = f64> {
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

impl<F: Real> Bounds<F> {
    pub fn new(lo: Vec<F>, hi: Vec<F>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: "lo and hi lengths differ".into(),
            });
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && *a > F::zero() && a <= b) {
                return Err(Error::InvalidParameter {
                    name: "bounds",
                    reason: format!("need 0 < lo <= hi, got [{a:e}, {b:e}]"),
                });
            }
        }
        Ok(Self { lo, hi })
    }

    /// Box `[v/factor, v·factor]` around each value.
    pub fn around(values: &[F], factor: F) -> Result<Self> {
        Self::new(
            values.iter().map(|v| *v / factor).collect(),
            values.iter().map(|v| *v * factor).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    fn decode(&self, u: &[F]) -> Vec<F> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(u, (lo, hi))| {
                if lo == hi {
                    *lo
                } else {
                    (lo.ln() + *u * (hi.ln() - lo.ln())).exp().max(*lo).min(*hi)
                }
            })
            .collect()
    }

    fn encode(&self, x: &[F]) -> Vec<F> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (lo, hi))| {
                if lo == hi {
                    lit(0.5)
                } else {
                    ((x.ln() - lo.ln()) / (hi.ln() - lo.ln()))
                        .max(F::zero())
                        .min(F::one())
                }
            })
            .collect()
    }

    /// Geometric center of the box.
    pub fn center(&self) -> Vec<F> {
        self.decode(&vec![lit(0.5); self.len()])
    }
}

/// Search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<F = f64> {
    /// Number of multistart runs; the first starts at the box center (or
    /// `initial`), the rest at seeded random points.
    pub starts: usize,
    /// Function evaluations per start.
    pub budget: usize,
    pub seed: u64,
    /// Optional first start, in parameter units.
    pub initial: Option<Vec<F>>,
}

impl<F: Real> Default for FitOptions<F> {
    fn default() -> Self {
        Self {
            starts: 8,
            budget: 2000,
            seed: 0,
            initial: None,
        }
    }
}

/// Outcome of [`fit_to_reference`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<F = f64> {
    pub params: CircuitParams<F>,
    /// Root-mean-square deviation over the reference window (A).
    pub rms: F,
    /// Reference peak over the window (A).
    pub reference_peak: F,
    /// RMS of the bounds-center parameters (A).
    pub center_rms: F,
    /// The best start's simplex met its tolerances.
    pub simplex_converged: bool,
    /// Improved on the bounds center, or reproduced the reference to
    /// `1e-9` of its peak. False is the convergence warning.
    pub converged: bool,
    /// Index of the winning start.
    pub best_start: usize,
    pub evaluations: usize,
}

impl<F: Real> FitReport<F> {
    pub fn topology(&self) -> Topology {
        self.params.topology()
    }

    /// RMS relative to the reference peak.
    pub fn normalized_rms(&self) -> F {
        self.rms / self.reference_peak
    }

    /// `key = value` lines: topology, parameters (SI), RMS and flags.
    pub fn to_text(&self) -> String {
        let topo = self.topology();
        let mut out = format!("topology = {}\n", topo.name());
        for (name, v) in topo.param_names().iter().zip(self.params.to_vector()) {
            out.push_str(&format!("{name} = {v:e}\n"));
        }
        out.push_str(&format!("rms_A = {:e}\n", self.rms));
        out.push_str(&format!("rms_relative = {:e}\n", self.normalized_rms()));
        out.push_str(&format!("reference_peak_A = {:e}\n", self.reference_peak));
        out.push_str(&format!("center_rms_A = {:e}\n", self.center_rms));
        out.push_str(&format!("converged = {}\n", self.converged));
        out.push_str(&format!("simplex_converged = {}\n", self.simplex_converged));
        out.push_str(&format!("best_start = {}\n", self.best_start));
        out.push_str(&format!("evaluations = {}\n", self.evaluations));
        out
    }
}

fn rms_against<F: Real>(model: &[F], reference: &SampledSignal<F>) -> F {
    let (s, e) = reference.window();
    let r = reference.values();
    let mut acc = F::zero();
    for k in s..e {
        let d = model[k] - r[k];
        acc = acc + d * d;
    }
    (acc / from_usize(e - s)).sqrt()
}

fn objective<F: Real>(topology: Topology, reference: &SampledSignal<F>, x: &[F]) -> F {
    let (_, end) = reference.window();
    let model = CircuitParams::from_vector(topology, x).and_then(|p| p.sample(reference.dt(), end));
    match model {
        Ok(m) if m.iter().all(|v| v.is_finite()) => rms_against(&m, reference),
        _ => F::infinity(),
    }
}

/// RMS deviation (A) of a given parameter set from the reference window.
pub fn rms_error<F: Real>(params: &CircuitParams<F>, reference: &SampledSignal<F>) -> Result<F> {
    let (_, end) = reference.window();
    Ok(rms_against(&params.sample(reference.dt(), end)?, reference))
}

/// Fits `topology` to `reference` over its window by bounded multistart
/// Nelder–Mead. Deterministic for a given seed; starts run in parallel and
/// are ranked by `(rms, start index)`.
pub fn fit_to_reference<F: Real>(
    topology: Topology,
    reference: &SampledSignal<F>,
    bounds: &Bounds<F>,
    opts: &FitOptions<F>,
) -> Result<FitReport<F>> {
    if bounds.len() != topology.dimension() {
        return Err(Error::InvalidParameter {
            name: "bounds",
            reason: format!(
                "{} expects {} bounds, got {}",
                topology,
                topology.dimension(),
                bounds.len()
            ),
        });
    }
    let (_, peak) = reference.peak().ok_or(Error::UndefinedMetric)?;
    if !(peak > F::zero()) {
        return Err(Error::UndefinedMetric);
    }
    if opts.starts == 0 {
        return Err(Error::InvalidParameter {
            name: "starts",
            reason: "need at least one start".into(),
        });
    }

    let d = topology.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<F>> = Vec::with_capacity(opts.starts);
    starts.push(match &opts.initial {
        Some(x0) if x0.len() == d => bounds.encode(x0),
        Some(_) => {
            return Err(Error::InvalidParameter {
                name: "initial",
                reason: "wrong length".into(),
            });
        }
        None => vec![lit(0.5); d],
    });
    for _ in 1..opts.starts {
        starts.push((0..d).map(|_| lit(rng.gen::<f64>())).collect());
    }

    let center = bounds.center();
    let center_rms = objective(topology, reference, &center);
    let nm = NelderMead {
        max_evals: opts.budget,
        ..NelderMead::default()
    };
    let mut results: Vec<_> = starts
        .par_iter()
        .enumerate()
        .map(|(i, u0)| {
            (
                i,
                nm.minimize(|u| objective(topology, reference, &bounds.decode(u)), u0),
            )
        })
        .collect();
    results.sort_by(|a, b| {
        a.1.value
            .partial_cmp(&b.1.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let evaluations = results.iter().map(|(_, m)| m.evals).sum();
    let (best_start, best) = results.swap_remove(0);
    let x = bounds.decode(&best.x);
    let params = CircuitParams::from_vector(topology, &x).map_err(|_| Error::InvalidParameter {
        name: "bounds",
        reason: "no valid parameter set found inside the bounds".into(),
    })?;
    let rms = best.value;
    if !rms.is_finite() {
        return Err(Error::InvalidParameter {
            name: "bounds",
            reason: "no valid parameter set found inside the bounds".into(),
        });
    }
    Ok(FitReport {
        params,
        rms,
        reference_peak: peak,
        center_rms,
        simplex_converged: best.converged,
        converged: rms < center_rms || rms <= lit::<F>(1e-9) * peak,
        best_start,
        evaluations,
    })
}

/// Best pure inductive ramp `I = k·t` through the reference window:
/// returns `(k, rms)`.
pub fn ramp_baseline<F: Real>(reference: &SampledSignal<F>) -> (F, F) {
    let (s, e) = reference.window();
    let r = reference.values();
    let (mut ty, mut tt) = (F::zero(), F::zero());
    for k in s..e {
        let t = reference.time(k);
        ty = ty + t * r[k];
        tt = tt + t * t;
    }
    let slope = if tt > F::zero() { ty / tt } else { F::zero() };
    let model: Vec<F> = (0..e).map(|k| slope * reference.time(k)).collect();
    (slope, rms_against(&model, reference))
}

/// Wide log-space search boxes scaled to the reference's duration and peak.
///
/// Time, current and a 1 V voltage unit fix an impedance scale `Z = 1 V/I_p`;
/// inductances range around `Z·T`, capacitances around `T/Z`, each over
/// six decades. The BJT thermal voltage is fixed at 26 mV.
pub fn default_bounds<F: Real>(
    topology: Topology,
    reference: &SampledSignal<F>,
) -> Result<Bounds<F>> {
    let (_, end) = reference.window();
    let peak = reference
        .peak()
        .map(|p| p.1)
        .filter(|p| *p > F::zero())
        .ok_or(Error::UndefinedMetric)?;
    let span = reference.time(end - 1).max(reference.dt());
    let z = F::one() / peak;
    let wide = |c: F| (c * lit(1e-3), c * lit(1e3));
    let l = wide(z * span);
    let c = wide(span / z);
    let r = wide(z);
    let volts = wide(F::one());
    let on = (span * lit(1.01), span * lit(4.0));
    let pairs: Vec<(F, F)> = match topology {
        Topology::Bjt => {
            let vt = lit(super::bjt::THERMAL_VOLTAGE);
            let rate = (vt / span * lit(0.1), vt / span * lit(100.0));
            vec![(peak * lit(1e-4), peak * lit(10.0)), (vt, vt), rate, on]
        }
        Topology::MultiResonant { branches } => {
            let mut v = vec![volts];
            for _ in 0..branches {
                v.push(l);
                v.push(c);
            }
            v
        }
        Topology::Rlc => vec![r, c, l, volts],
        Topology::SatInductor => {
            vec![
                l,
                l,
                (lit::<F>(1e-2) / peak, lit::<F>(1e3) / peak),
                (peak * lit(1e-3), peak * lit(10.0)),
                l,
                volts,
            ]
        }
        Topology::ResonantRing => vec![c, l, r, volts, on],
    };
    Bounds::new(
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )
}
