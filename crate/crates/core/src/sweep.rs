//! Full-model efficiency of the optimal precharge and duration sweeps.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laser::LaserParams;
use crate::metrics::rho;
use crate::num::{lit, Real};
use crate::optimal::OptimalProfile;
use crate::simulate::{simulate_with, SettleRule, SimulationOptions, Trajectory};

/// What happens to the optimal current once it has done its job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffPolicy {
    /// Force the current to zero at the first photon-density peak.
    #[default]
    AtSPeak,
    /// Force the current to zero at the nominal duration `T`.
    AtT,
    /// Let the exponential keep rising until the run ends.
    None,
}

impl CutoffPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::AtSPeak => "at-S-peak",
            Self::AtT => "at-T",
            Self::None => "none",
        }
    }
}

impl std::str::FromStr for CutoffPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at-S-peak" | "at-s-peak" | "peak" => Ok(Self::AtSPeak),
            "at-T" | "at-t" => Ok(Self::AtT),
            "none" => Ok(Self::None),
            other => Err(Error::Parse(format!(
                "unknown cutoff policy `{other}` (expected at-S-peak, at-T or none)"
            ))),
        }
    }
}

/// Run settings shared by [`efficiency_eta_with`] and [`sweep_duration_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<F> {
    /// Output grid spacing (s); `None` means `τ_N / 2000`.
    pub dt_out: Option<F>,
    /// Photon integration stops when `S` drops below this fraction of its peak.
    pub settle_level: F,
    /// ... or this many `τ_N` after the peak, whichever comes first.
    pub settle_lifetimes: F,
    /// Longest run, in `τ_N` beyond `T`, allowed to look for a pulse.
    pub search_lifetimes: F,
}

impl<F: Real> Default for SweepOptions<F> {
    fn default() -> Self {
        Self {
            dt_out: None,
            settle_level: lit(1e-6),
            settle_lifetimes: lit(5.0),
            search_lifetimes: lit(10.0),
        }
    }
}

/// Simulates the full model driven by the optimal current for duration `T`
/// under `policy`, stopping once the optical pulse has settled.
pub fn simulate_optimal<F: Real>(
    params: &LaserParams<F>,
    duration: F,
    policy: CutoffPolicy,
    opts: &SweepOptions<F>,
) -> Result<Trajectory<F>> {
    let profile = OptimalProfile::new(params, duration)?;
    let cutoff = match policy {
        CutoffPolicy::AtT => Some(duration),
        CutoffPolicy::AtSPeak | CutoffPolicy::None => None,
    };
    let drive = profile.drive(cutoff);
    let tau = params.tau_n;
    let sim = SimulationOptions {
        cutoff_at_peak: policy == CutoffPolicy::AtSPeak,
        settle: Some(SettleRule {
            rel_level: opts.settle_level,
            horizon: opts.settle_lifetimes * tau,
        }),
        ..SimulationOptions::default()
    };
    let dt_out = opts.dt_out.unwrap_or(tau * lit(5e-4));
    simulate_with(
        params,
        &drive,
        duration + opts.search_lifetimes * tau,
        dt_out,
        &sim,
    )
}

fn eta_from<F: Real>(params: &LaserParams<F>, duration: F, traj: &Trajectory<F>) -> Result<F> {
    let lased = match (traj.events.threshold_time, traj.events.peak) {
        (Some(t_th), Some((t_peak, _))) => t_th <= t_peak,
        _ => false,
    };
    if !lased {
        return Err(Error::NoLasing {
            t: duration.to_f64().unwrap_or(f64::NAN),
        });
    }
    let profile = OptimalProfile::new(params, duration)?;
    Ok(traj.photon_integral / profile.energy_loss())
}

/// Efficiency measure `η = ∫ S dt / ∫₀ᵀ I² dt` (m⁻³/A²), proportional to
/// optical output per unit of resistive drive loss.
pub fn efficiency_eta<F: Real>(
    params: &LaserParams<F>,
    duration: F,
    policy: CutoffPolicy,
) -> Result<F> {
    efficiency_eta_with(params, duration, policy, &SweepOptions::default())
}

pub fn efficiency_eta_with<F: Real>(
    params: &LaserParams<F>,
    duration: F,
    policy: CutoffPolicy,
    opts: &SweepOptions<F>,
) -> Result<F> {
    let traj = simulate_optimal(params, duration, policy, opts)?;
    eta_from(params, duration, &traj)
}

/// Per-duration results; `None` entries mark points whose simulation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<F = f64> {
    pub durations: Vec<F>,
    pub loss: Vec<F>,
    pub peak_current: Vec<F>,
    pub eta: Vec<Option<F>>,
    pub rho: Vec<Option<F>>,
    /// Failure message per point, if any.
    pub failures: Vec<Option<String>>,
}

impl<F: Real> SweepResult<F> {
    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    /// True when every point failed to lase.
    pub fn all_failed(&self) -> bool {
        self.eta.iter().all(Option::is_none)
    }

    /// Writes `T_s,J_A2s,I_peak_A,eta,rho_per_s` with `NA` for failed points.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "T_s,J_A2s,I_peak_A,eta,rho_per_s")?;
        let opt = |v: Option<F>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:e}"));
        for k in 0..self.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{},{}",
                self.durations[k],
                self.loss[k],
                self.peak_current[k],
                opt(self.eta[k]),
                opt(self.rho[k])
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }
}

/// Evaluates loss, peak current, `η` and the `ρ` of the simulated pulse at
/// every duration in `grid`, in parallel.
pub fn sweep_duration<F: Real>(
    params: &LaserParams<F>,
    grid: &[F],
    policy: CutoffPolicy,
) -> Result<SweepResult<F>> {
    sweep_duration_with(params, grid, policy, &SweepOptions::default())
}

pub fn sweep_duration_with<F: Real>(
    params: &LaserParams<F>,
    grid: &[F],
    policy: CutoffPolicy,
    opts: &SweepOptions<F>,
) -> Result<SweepResult<F>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "T_grid",
            reason: "grid is empty".into(),
        });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "T_grid",
            reason: "durations must be strictly increasing".into(),
        });
    }
    let profiles = grid
        .iter()
        .map(|t| OptimalProfile::new(params, *t))
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<std::result::Result<(F, F), String>> = grid
        .par_iter()
        .map(|t| {
            let traj = simulate_optimal(params, *t, policy, opts).map_err(|e| e.to_string())?;
            let eta = eta_from(params, *t, &traj).map_err(|e| e.to_string())?;
            let r = rho(&traj.photon_density()).map_err(|e| e.to_string())?;
            Ok((eta, r))
        })
        .collect();

    let mut out = SweepResult {
        durations: grid.to_vec(),
        loss: profiles.iter().map(OptimalProfile::energy_loss).collect(),
        peak_current: profiles.iter().map(OptimalProfile::peak_current).collect(),
        eta: Vec::with_capacity(grid.len()),
        rho: Vec::with_capacity(grid.len()),
        failures: Vec::with_capacity(grid.len()),
    };
    for p in points {
        match p {
            Ok((e, r)) => {
                out.eta.push(Some(e));
                out.rho.push(Some(r));
                out.failures.push(None);
            }
            Err(msg) => {
                out.eta.push(None);
                out.rho.push(None);
                out.failures.push(Some(msg));
            }
        }
    }
    Ok(out)
}
