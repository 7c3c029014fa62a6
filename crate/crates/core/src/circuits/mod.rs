//! Waveform models of practical laser-driver topologies.
//!
//! Each topology has a parameter struct whose `current(t)` is the switched
//! waveform (zero before `t = 0` and after the topology's natural or forced
//! turn-off). [`CircuitParams`] wraps them for fitting, export and use as a
//! simulation drive.

pub mod bjt;
pub mod efficiency;
pub mod fit;
pub mod multi_resonant;
pub mod ring;
pub mod rlc;
pub mod sat_inductor;

pub use bjt::{bjt_current, BjtParams};
pub use efficiency::driver_efficiency;
pub use fit::{default_bounds, fit_to_reference, ramp_baseline, Bounds, FitOptions, FitReport};
pub use multi_resonant::{multi_resonant_current, MultiResonantParams};
pub use ring::{resonant_ring_current, ResonantRingParams};
pub use rlc::{rlc_step_response, Damping, RlcParams};
pub use sat_inductor::{
    estimate_saturation_current, saturating_inductance, saturating_inductor_current,
    SatInductorParams,
};

use std::fmt;
use std::str::FromStr;

use crate::drive::DriveWaveform;
use crate::error::{Error, Result};
use crate::metrics::SampledSignal;
use crate::num::{from_usize, Real};

pub(crate) fn positive<F: Real>(name: &'static str, v: F) -> Result<()> {
    if v.is_finite() && v > F::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {v:e}"),
        })
    }
}

/// Driver topology; fixes the layout of the parameter vector used in fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `[I_ES, V_T, ramp_rate, t_on]`
    Bjt,
    /// `[V0, L1, C1, L2, C2, ...]`
    MultiResonant { branches: usize },
    /// `[R, C, L, V]`
    Rlc,
    /// `[L0, L_sat, sigma, I1, L_diode, V]`
    SatInductor,
    /// `[C, L, R_loss, V0, t_off]`
    ResonantRing,
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bjt => "bjt",
            Self::MultiResonant { .. } => "multi-resonant",
            Self::Rlc => "rlc",
            Self::SatInductor => "sat-inductor",
            Self::ResonantRing => "resonant-ring",
        }
    }

    /// Parameter names with their SI unit suffix, in vector order.
    pub fn param_names(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            Self::Bjt => &["I_ES_A", "V_T_V", "ramp_rate_V_per_s", "t_on_s"],
            Self::Rlc => &["R_ohm", "C_F", "L_H", "V_V"],
            Self::SatInductor => &["L0_H", "L_sat_H", "sigma_per_A", "I1_A", "L_diode_H", "V_V"],
            Self::ResonantRing => &["C_F", "L_H", "R_loss_ohm", "V0_V", "t_off_s"],
            Self::MultiResonant { branches } => {
                let mut names = vec!["V0_V".to_string()];
                for i in 1..=*branches {
                    names.push(format!("L{i}_H"));
                    names.push(format!("C{i}_F"));
                }
                return names;
            }
        };
        fixed.iter().map(|s| s.to_string()).collect()
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Bjt | Self::Rlc => 4,
            Self::SatInductor => 6,
            Self::ResonantRing => 5,
            Self::MultiResonant { branches } => 1 + 2 * branches,
        }
    }

    /// Parses a topology name; `branches` applies to `multi-resonant` only.
    pub fn from_name(name: &str, branches: usize) -> Result<Self> {
        match name {
            "bjt" => Ok(Self::Bjt),
            "multi-resonant" if branches >= 1 => Ok(Self::MultiResonant { branches }),
            "multi-resonant" => Err(Error::InvalidParameter {
                name: "branches",
                reason: "need at least one".into(),
            }),
            "rlc" => Ok(Self::Rlc),
            "sat-inductor" => Ok(Self::SatInductor),
            "resonant-ring" => Ok(Self::ResonantRing),
            other => Err(Error::Parse(format!("unknown topology `{other}`"))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    /// `multi-resonant` parses with three branches; use
    /// [`Topology::from_name`] for other counts.
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, 3)
    }
}

/// Parameters of any topology.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitParams<F = f64> {
    Bjt(BjtParams<F>),
    MultiResonant(MultiResonantParams<F>),
    Rlc(RlcParams<F>),
    SatInductor(SatInductorParams<F>),
    ResonantRing(ResonantRingParams<F>),
}

impl<F: Real> CircuitParams<F> {
    pub fn topology(&self) -> Topology {
        match self {
            Self::Bjt(_) => Topology::Bjt,
            Self::MultiResonant(p) => Topology::MultiResonant {
                branches: p.branches.len(),
            },
            Self::Rlc(_) => Topology::Rlc,
            Self::SatInductor(_) => Topology::SatInductor,
            Self::ResonantRing(_) => Topology::ResonantRing,
        }
    }

    pub fn to_vector(&self) -> Vec<F> {
        match self {
            Self::Bjt(p) => vec![p.i_es, p.v_t, p.ramp_rate, p.t_on],
            Self::MultiResonant(p) => {
                let mut v = vec![p.v0];
                for (l, c) in &p.branches {
                    v.push(*l);
                    v.push(*c);
                }
                v
            }
            Self::Rlc(p) => vec![p.r, p.c, p.l, p.v],
            Self::SatInductor(p) => vec![p.l0, p.l_sat, p.sigma, p.i1, p.l_diode, p.v],
            Self::ResonantRing(p) => vec![p.c, p.l, p.r_loss, p.v0, p.t_off],
        }
    }

    /// Builds validated parameters from a vector laid out per `topology`.
    pub fn from_vector(topology: Topology, v: &[F]) -> Result<Self> {
        if v.len() != topology.dimension() {
            return Err(Error::InvalidParameter {
                name: "params",
                reason: format!(
                    "{} expects {} values, got {}",
                    topology,
                    topology.dimension(),
                    v.len()
                ),
            });
        }
        Ok(match topology {
            Topology::Bjt => Self::Bjt(BjtParams::new(v[0], v[1], v[2], v[3])?),
            Topology::MultiResonant { .. } => {
                let branches = v[1..].chunks(2).map(|c| (c[0], c[1])).collect();
                Self::MultiResonant(MultiResonantParams::new(branches, v[0])?)
            }
            Topology::Rlc => Self::Rlc(RlcParams::new(v[0], v[1], v[2], v[3])?),
            Topology::SatInductor => {
                Self::SatInductor(SatInductorParams::new(v[0], v[1], v[2], v[3], v[4], v[5])?)
            }
            Topology::ResonantRing => {
                Self::ResonantRing(ResonantRingParams::new(v[0], v[1], v[2], v[3], v[4])?)
            }
        })
    }

    /// Waveform samples at `k·dt`, `k = 0..n`. Values can be negative only
    /// for a resonant ring left on past its first half period.
    pub fn sample(&self, dt: F, n: usize) -> Result<Vec<F>> {
        let at = |f: &dyn Fn(F) -> F| (0..n).map(|k| f(dt * from_usize(k))).collect::<Vec<F>>();
        Ok(match self {
            Self::Bjt(p) => at(&|t| p.current(t)),
            Self::MultiResonant(p) => p.sample(dt, n),
            Self::Rlc(p) => at(&|t| p.current(t)),
            Self::SatInductor(p) => sat_inductor::sample(p, dt, n)?,
            Self::ResonantRing(p) => at(&|t| p.current(t)),
        })
    }

    /// Drive waveform for the rate-equation simulator. Negative ring current
    /// is clipped (the diode blocks it); the saturating inductor is sampled
    /// on `dt` up to `t_end` and held.
    pub fn drive(&self, dt: F, t_end: F) -> Result<DriveWaveform<F>> {
        Ok(match self {
            Self::Bjt(p) => {
                let p = *p;
                DriveWaveform::custom(move |t| p.current(t), Some(p.t_on))
            }
            Self::MultiResonant(p) => {
                let t_z = p.turn_off_time();
                let q = p.clone();
                DriveWaveform::custom(move |t| q.current_with_turn_off(t, t_z), t_z)
            }
            Self::Rlc(p) => {
                let p = *p;
                DriveWaveform::custom(move |t| p.current(t), None)
            }
            Self::SatInductor(p) => {
                let n = (t_end / dt).ceil().to_usize().unwrap_or(0) + 1;
                let values = sat_inductor::sample(p, dt, n)?;
                DriveWaveform::sampled(SampledSignal::new(dt, values)?, None)
            }
            Self::ResonantRing(p) => {
                let p = *p;
                DriveWaveform::custom(move |t| p.current(t).max(F::zero()), Some(p.t_off))
            }
        })
    }
}
