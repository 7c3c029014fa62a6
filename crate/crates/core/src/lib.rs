//! Energy-optimal drive currents for gain-switched semiconductor lasers.
//!
//! The crate covers four pieces that fit together:
//!
//! * [`laser`] / [`simulate`]: single-mode carrier/photon rate equations and
//!   their adaptive integration under arbitrary drive waveforms.
//! * [`optimal`] / [`sweep`]: the closed-form exponential precharge current
//!   that minimizes `∫ I² dt` for reaching threshold in a fixed time, its
//!   loss, peak-current and slew-rate properties, and duration sweeps through
//!   the full nonlinear model.
//! * [`metrics`]: the peak-to-integral pulse metric `ρ`, FWHM and helpers.
//! * [`circuits`]: waveform models of practical driver topologies, a
//!   least-squares fitter against the optimal reference, and wall-plug
//!   efficiency.
//!
//! Every model is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*F64` / `*F32` aliases below name the common
//! instantiations.

// `!(x > 0)` style checks are deliberate: they reject NaN too
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision
)]

pub mod circuits;
pub mod drive;
pub mod error;
pub mod io;
pub mod laser;
pub mod metrics;
pub mod nelder_mead;
pub mod num;
pub mod ode;
pub mod optimal;
pub mod quad;
pub mod simulate;
pub mod sweep;

pub use drive::{DriveSource, DriveWaveform};
pub use error::{Error, Result};
pub use laser::{LaserParams, LaserState, DEFAULT_FIXTURE};
pub use metrics::{convolve, fwhm, pulse_count, rho, SampledSignal};
pub use num::Real;
pub use optimal::{OptimalProfile, OptimalityReport};
pub use simulate::{
    simulate, simulate_linear, simulate_linear_from, simulate_with, Events, Sample, SettleRule,
    SimulationOptions, Trajectory,
};
pub use sweep::{
    efficiency_eta, simulate_optimal, sweep_duration, CutoffPolicy, SweepOptions, SweepResult,
};

pub type LaserParamsF64 = LaserParams<f64>;
pub type LaserParamsF32 = LaserParams<f32>;
pub type LaserStateF64 = LaserState<f64>;
pub type LaserStateF32 = LaserState<f32>;
pub type DriveWaveformF64 = DriveWaveform<f64>;
pub type DriveWaveformF32 = DriveWaveform<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type SampledSignalF64 = SampledSignal<f64>;
pub type SampledSignalF32 = SampledSignal<f32>;
pub type OptimalProfileF64 = OptimalProfile<f64>;
pub type OptimalProfileF32 = OptimalProfile<f32>;
pub type SweepResultF64 = SweepResult<f64>;
pub type SweepResultF32 = SweepResult<f32>;
