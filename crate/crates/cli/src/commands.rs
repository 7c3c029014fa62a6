//! The five subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use gainswitch::circuits::fit::rms_error;
use gainswitch::circuits::{
    default_bounds, fit_to_reference, ramp_baseline, BjtParams, CircuitParams, FitOptions,
    SatInductorParams, Topology,
};
use gainswitch::io::{read_table_file, Table};
use gainswitch::metrics::DEFAULT_PULSE_THRESHOLD;
use gainswitch::optimal::{
    energy_loss_limit, min_duration_for_slew, slew_parameter, verify_optimality,
};
use gainswitch::sweep::sweep_duration_with;
use gainswitch::{
    fwhm, pulse_count, rho, simulate_with, CutoffPolicy, DriveWaveform, LaserParams,
    OptimalProfile, SampledSignal, SimulationOptions, SweepOptions, DEFAULT_FIXTURE,
};
use serde_json::{json, Map, Value};

use crate::args::{CircuitArgs, GlobalArgs, MetricArgs, OptimalArgs, SimulateArgs, SweepArgs};
use crate::output::{num, opt_num, Format, Sink};
use crate::UsageError;

/// Environment variable naming a directory of `<fixture>.json` files.
pub const FIXTURES_ENV: &str = "GAINSWITCH_FIXTURES";

const DEFAULT_SAMPLES: usize = 1001;
const DEFAULT_CIRCUIT_DURATION: f64 = 5e-9;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub struct Context {
    pub laser_spec: Option<String>,
    pub sink: Sink,
    pub seed: u64,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> anyhow::Result<Self> {
        let format = Format::parse(g.format.as_deref())?;
        Ok(Self {
            laser_spec: g.laser.clone(),
            sink: Sink::new(g.out.clone(), format)?,
            seed: g.seed.unwrap_or(0),
        })
    }

    pub fn laser(&self) -> anyhow::Result<LaserParams<f64>> {
        load_laser(self.laser_spec.as_deref().unwrap_or(DEFAULT_FIXTURE))
    }
}

/// Resolves `--laser`: the fixture directory from the environment first,
/// then a file path, then the built-in fixture.
pub fn load_laser(spec: &str) -> anyhow::Result<LaserParams<f64>> {
    let dir = std::env::var_os(FIXTURES_ENV).map(PathBuf::from);
    if let Some(dir) = &dir {
        let candidate = dir.join(format!("{spec}.json"));
        if candidate.is_file() {
            return read_laser(&candidate);
        }
    }
    let path = Path::new(spec);
    if path.is_file() {
        return read_laser(path);
    }
    match dir {
        Some(dir) => Err(anyhow!("fixture `{spec}` not found in {}", dir.display())),
        None if spec == DEFAULT_FIXTURE => Ok(LaserParams::default_fixture()),
        None => Err(anyhow!("no fixture or file named `{spec}`")),
    }
}

fn read_laser(path: &Path) -> anyhow::Result<LaserParams<f64>> {
    LaserParams::from_json_file(path).with_context(|| format!("loading laser {}", path.display()))
}

fn positive(flag: &str, v: f64) -> anyhow::Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("{flag} must be finite and > 0, got {v}")))
    }
}

fn required(flag: &str, v: Option<f64>) -> anyhow::Result<f64> {
    positive(flag, v.ok_or_else(|| usage(format!("{flag} is required")))?)
}

fn sample_count(v: Option<usize>) -> anyhow::Result<usize> {
    match v.unwrap_or(DEFAULT_SAMPLES) {
        n if n >= 2 => Ok(n),
        n => Err(usage(format!("--samples must be >= 2, got {n}"))),
    }
}

fn policy(v: Option<&str>, default: CutoffPolicy) -> anyhow::Result<CutoffPolicy> {
    v.map_or(Ok(default), |s| {
        s.parse().map_err(|e| usage(format!("--cutoff: {e}")))
    })
}

fn laser_summary(p: &LaserParams<f64>) -> Value {
    json!({
        "tau_N_s": num(p.tau_n),
        "I_th_A": num(p.threshold_current()),
        "N_th_m3": num(p.threshold_density()),
    })
}

fn topology(name: &str, branches: Option<usize>) -> anyhow::Result<Topology> {
    Topology::from_name(name, branches.unwrap_or(3)).map_err(|e| usage(e.to_string()))
}

/// Parameters used when `--params` is absent.
pub fn default_circuit(topology: Topology) -> Vec<f64> {
    match topology {
        Topology::Bjt => CircuitParams::Bjt(BjtParams::default()).to_vector(),
        Topology::SatInductor => {
            CircuitParams::SatInductor(SatInductorParams::default()).to_vector()
        }
        // critically damped: L = 4 R^2 C
        Topology::Rlc => vec![5.0, 150e-12, 15e-9, 5.0],
        Topology::MultiResonant { branches } => {
            let mut v = vec![5.0];
            for k in 1..=branches {
                v.push(10e-9);
                v.push(50e-12 * k as f64);
            }
            v
        }
        Topology::ResonantRing => vec![1e-9, 10e-9, 0.5, 5.0, 5e-9],
    }
}

fn circuit_params(
    topology: Topology,
    params: Option<Vec<f64>>,
) -> anyhow::Result<(CircuitParams<f64>, bool)> {
    let given = params.is_some();
    let v = params.unwrap_or_else(|| default_circuit(topology));
    let p = CircuitParams::from_vector(topology, &v)
        .map_err(|e| usage(format!("--params for {topology}: {e}")))?;
    Ok((p, given))
}

fn named_params(p: &CircuitParams<f64>) -> Value {
    let mut m = Map::new();
    for (name, v) in p.topology().param_names().into_iter().zip(p.to_vector()) {
        m.insert(name, num(v));
    }
    Value::Object(m)
}

/// Loads one column of a trace as a nonnegative signal starting at `t = 0`.
fn trace_signal(
    path: &Path,
    column: Option<&str>,
    clamp: bool,
    what: &str,
) -> anyhow::Result<(Table, SampledSignal<f64>, String)> {
    let table = read_table_file(path).with_context(|| format!("reading {}", path.display()))?;
    let (index, name) = match column {
        Some(c) => (
            table
                .column_index(c)
                .ok_or_else(|| anyhow!("{}: no column `{c}`", path.display()))?,
            c.to_string(),
        ),
        None => match table.column_index("I_A") {
            Some(i) if what == "current" => (i, "I_A".to_string()),
            _ => (0, table.headers[1].clone()),
        },
    };
    let (signal, clamped) = table
        .signal(index, clamp)
        .with_context(|| format!("{}: column `{name}`", path.display()))?;
    if clamped > 0 {
        eprintln!("warning: clamped {clamped} negative samples of `{name}` to zero");
    }
    Ok((table, signal, name))
}

pub fn optimal(ctx: &Context, a: OptimalArgs) -> anyhow::Result<()> {
    let t = required("--duration", a.duration)?;
    let n = sample_count(a.samples)?;
    let slew = a.slew_max.map(|s| positive("--slew-max", s)).transpose()?;
    let p = ctx.laser()?;
    let prof = OptimalProfile::new(&p, t)?;

    let mut summary = json!({
        "T_s": num(t),
        "A_A": num(prof.amplitude()),
        "I_peak_A": num(prof.peak_current()),
        "J_A2s": num(prof.energy_loss()),
        "J_min_A2s": num(energy_loss_limit(&p)),
        "laser": laser_summary(&p),
    });
    if let Some(s) = slew {
        let t_min = min_duration_for_slew(&p, s)?;
        summary["slew_max_A_per_s"] = num(s);
        summary["B"] = num(slew_parameter(&p, s));
        summary["T_min_s"] = num(t_min);
        if t < t_min {
            eprintln!("warning: T = {t:e} s is shorter than the slew-limited minimum {t_min:e} s");
        }
    }
    if let Some(count) = a.verify {
        let r = verify_optimality(&p, t, count, ctx.seed)?;
        summary["verification"] = json!({
            "seed": ctx.seed,
            "perturbations": r.perturbations,
            "violations": r.violations,
            "J_star_A2s": num(r.j_star_quadrature),
            "min_perturbed_A2s": num(r.min_perturbed),
            "min_excess": num(r.min_excess),
        });
        if r.violations > 0 {
            eprintln!(
                "warning: {} perturbations beat the optimal loss",
                r.violations
            );
        }
    }

    let dt = t / (n - 1) as f64;
    let mut current: Vec<f64> = (0..n)
        .map(|k| prof.current_unchecked((dt * k as f64).min(t)))
        .collect();
    current[n - 1] = prof.current_unchecked(t);
    ctx.sink.table(&["t_s", "I_A"], dt, &[&current], summary)
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> anyhow::Result<()> {
    let p = ctx.laser()?;
    let tau = p.tau_n;
    let dt = positive("--dt", a.dt.unwrap_or(tau / 2000.0))?;
    let name = a.drive.clone().unwrap_or_else(|| "optimal".into());

    // drive, its nominal duration, the default cutoff, circuit parameters
    let (drive, span, default_policy, circuit): (DriveWaveform<f64>, f64, _, Option<Value>) =
        match name.as_str() {
            "optimal" => {
                let t = required("--duration", a.duration)?;
                let prof = OptimalProfile::new(&p, t)?;
                (prof.drive(None), t, CutoffPolicy::AtSPeak, None)
            }
            "zero" => {
                let t = a.duration.map_or(Ok(0.0), |t| positive("--duration", t))?;
                (DriveWaveform::zero(), t, CutoffPolicy::None, None)
            }
            "trace" => {
                let path = a
                    .trace
                    .as_deref()
                    .ok_or_else(|| usage("--drive trace needs --trace <PATH>"))?;
                let (table, signal, _) =
                    trace_signal(path, a.column.as_deref(), a.clamp_negative, "current")?;
                if table.t0.abs() > 1e-6 * table.dt {
                    return Err(anyhow!(
                        "{}: current trace must start at t = 0, starts at {:e} s",
                        path.display(),
                        table.t0
                    ));
                }
                let span = table.dt * signal.len() as f64;
                (
                    DriveWaveform::sampled(signal, None),
                    span,
                    CutoffPolicy::None,
                    None,
                )
            }
            other => {
                let topo = Topology::from_name(other, a.branches.unwrap_or(3)).map_err(|_| {
                    usage(format!(
                        "unknown drive `{other}` (expected optimal, zero, trace or a topology)"
                    ))
                })?;
                let (cp, _) = circuit_params(topo, a.params.clone())?;
                let t = positive("--duration", a.duration.unwrap_or(DEFAULT_CIRCUIT_DURATION))?;
                let end = a.end.unwrap_or(t + 2.0 * tau);
                let drive = cp.drive(dt, end)?;
                (drive, t, CutoffPolicy::None, Some(named_params(&cp)))
            }
        };
    let policy = policy(a.cutoff.as_deref(), default_policy)?;
    let end = positive("--end", a.end.unwrap_or(span + 2.0 * tau))?;

    let drive = match policy {
        CutoffPolicy::AtT => {
            let c = drive.cutoff().map_or(span, |c| c.min(span));
            drive.with_cutoff(Some(c))
        }
        _ => drive,
    };
    let opts = SimulationOptions {
        cutoff_at_peak: policy == CutoffPolicy::AtSPeak,
        ..SimulationOptions::default()
    };
    let traj = simulate_with(&p, &drive, end, dt, &opts)?;

    let ev = traj.events;
    let lased = matches!((ev.threshold_time, ev.peak), (Some(a), Some((b, _))) if a <= b);
    let photons = traj.photon_density();
    let pulses = pulse_count(&photons, DEFAULT_PULSE_THRESHOLD)?;
    let (peak, rho_v, fwhm_v, n_peak) = if lased {
        let (tp, sp) = ev.peak.expect("checked");
        (
            Some((tp, sp)),
            rho(&photons).ok(),
            fwhm(&photons).ok(),
            traj.carrier_density_at(tp),
        )
    } else {
        eprintln!(
            "warning: no lasing: the carrier density never reached threshold before a photon peak"
        );
        (None, None, None, None)
    };
    let summary = json!({
        "drive": name,
        "circuit": circuit.unwrap_or(Value::Null),
        "T_s": num(span),
        "cutoff": policy.name(),
        "end_s": num(traj.end_time),
        "dt_s": num(dt),
        "lasing": lased,
        "t_th_s": opt_num(ev.threshold_time),
        "t_peak_s": opt_num(peak.map(|p| p.0)),
        "S_peak_m3": opt_num(peak.map(|p| p.1)),
        "N_at_peak_m3": opt_num(n_peak),
        "drive_cutoff_s": opt_num(ev.drive_cutoff),
        "pulse_count": pulses,
        "rho_per_s": opt_num(rho_v),
        "fwhm_s": opt_num(fwhm_v),
        "photon_integral_s_per_m3": num(traj.photon_integral),
        "negative_clamps": ev.negative_clamps,
        "laser": laser_summary(&p),
    });
    let n: Vec<f64> = traj.samples.iter().map(|s| s.n).collect();
    let s = photons.values();
    let i = traj.current();
    ctx.sink
        .table(&["t_s", "N_m3", "S_m3", "I_A"], dt, &[&n, s, &i], summary)
}

/// `start:stop:count`, linearly spaced.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || usage(format!("--grid `{spec}`: expected start:stop:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite() && a > 0.0) {
        return Err(usage(format!("--grid `{spec}`: start must be > 0")));
    }
    if b <= a {
        return Err(usage(format!("--grid `{spec}`: stop must exceed start")));
    }
    if n < 2 {
        return Err(usage(format!("--grid `{spec}`: count must be >= 2")));
    }
    let step = (b - a) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| a + step * k as f64).collect();
    g[n - 1] = b;
    Ok(g)
}

pub fn sweep(ctx: &Context, a: SweepArgs) -> anyhow::Result<()> {
    let spec = a
        .grid
        .as_deref()
        .ok_or_else(|| usage("--grid is required"))?;
    let mut grid = parse_grid(spec)?;
    let policy = policy(a.cutoff.as_deref(), CutoffPolicy::AtSPeak)?;
    let dt = a.dt.map(|d| positive("--dt", d)).transpose()?;
    let p = ctx.laser()?;
    if a.tau_units {
        grid.iter_mut().for_each(|t| *t *= p.tau_n);
    }
    let opts = SweepOptions {
        dt_out: Some(dt.unwrap_or(p.tau_n / 2000.0)),
        ..SweepOptions::default()
    };
    let r = sweep_duration_with(&p, &grid, policy, &opts)?;
    for (t, f) in r.durations.iter().zip(&r.failures) {
        if let Some(msg) = f {
            eprintln!("warning: T = {t:e} s: {msg}");
        }
    }
    match ctx.sink.format {
        Format::Csv => ctx.sink.text(&r.to_csv_string())?,
        Format::Json => {
            let col = |v: &[f64]| Value::Array(v.iter().map(|x| num(*x)).collect());
            let ocol = |v: &[Option<f64>]| Value::Array(v.iter().map(|x| opt_num(*x)).collect());
            ctx.sink.json(&json!({
                "cutoff": policy.name(),
                "T_s": col(&r.durations),
                "J_A2s": col(&r.loss),
                "I_peak_A": col(&r.peak_current),
                "eta": ocol(&r.eta),
                "rho_per_s": ocol(&r.rho),
                "failures": r.failures,
            }))?
        }
    }
    if r.all_failed() {
        return Err(anyhow!("every grid point failed"));
    }
    Ok(())
}

/// `t0:t1` in seconds.
fn parse_window(spec: &str) -> anyhow::Result<(f64, f64)> {
    let bad = || usage(format!("--window `{spec}`: expected t0:t1 with t0 < t1"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if a.is_finite() && b.is_finite() && a < b {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

pub fn metric(ctx: &Context, a: MetricArgs) -> anyhow::Result<()> {
    let path = a
        .trace
        .as_deref()
        .ok_or_else(|| usage("a trace file is required"))?;
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let (table, signal, column) =
        trace_signal(path, a.column.as_deref(), a.clamp_negative, "signal")?;
    let signal = match window {
        Some((t0, t1)) => signal
            .with_time_window(t0 - table.t0, t1 - table.t0)
            .with_context(|| format!("--window {t0:e}:{t1:e}"))?,
        None => signal,
    };
    let (s, e) = signal.window();
    let r = rho(&signal)?;
    let width = match fwhm(&signal) {
        Ok(w) => Some(w),
        Err(err) => {
            eprintln!("warning: {err}");
            None
        }
    };
    let pulses = pulse_count(&signal, DEFAULT_PULSE_THRESHOLD)?;
    let t_at = |k: usize| table.t0 + table.dt * k as f64;
    let fields: Vec<(&str, Value)> = vec![
        ("column", json!(column)),
        ("rho_per_s", num(r)),
        ("rho_per_ns", num(r * 1e-9)),
        ("fwhm_s", opt_num(width)),
        ("fwhm_ps", opt_num(width.map(|w| w * 1e12))),
        ("window_start_s", num(t_at(s))),
        ("window_end_s", num(t_at(e - 1))),
        ("samples", json!(e - s)),
        ("pulse_count", json!(pulses)),
    ];
    match ctx.sink.format {
        Format::Csv => {
            let head: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let row: Vec<String> = fields
                .iter()
                .map(|(_, v)| match v {
                    Value::Null => "NA".to_string(),
                    Value::String(s) => s.clone(),
                    Value::Number(n) => match n.as_f64() {
                        Some(x) if !n.is_u64() => format!("{x:e}"),
                        _ => n.to_string(),
                    },
                    other => other.to_string(),
                })
                .collect();
            ctx.sink
                .text(&format!("{}\n{}\n", head.join(","), row.join(",")))
        }
        Format::Json => {
            let m: Map<String, Value> = fields
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            ctx.sink.json(&Value::Object(m))
        }
    }
}

pub fn circuit(ctx: &Context, a: CircuitArgs) -> anyhow::Result<()> {
    let name = a
        .topology
        .as_deref()
        .ok_or_else(|| usage("a topology is required"))?;
    let topo = topology(name, a.branches)?;
    let (params, given) = circuit_params(topo, a.params.clone())?;
    let from = a.fit_from.unwrap_or(0.0);
    if !(0.0..1.0).contains(&from) {
        return Err(usage(format!("--fit-from must lie in [0, 1), got {from}")));
    }
    let starts = a.starts.unwrap_or(8);
    if starts == 0 {
        return Err(usage("--starts must be >= 1"));
    }

    // reference on its own grid
    let (reference, ref_header, ref_kind, t) = match &a.reference {
        Some(path) => {
            let (table, signal, _) = trace_signal(path, a.column.as_deref(), false, "current")?;
            if table.t0.abs() > 1e-6 * table.dt {
                return Err(anyhow!("{}: reference must start at t = 0", path.display()));
            }
            let t = table.dt * (signal.len() - 1) as f64;
            (signal, "I_ref_A", json!(path.display().to_string()), t)
        }
        None => {
            let t = positive("--duration", a.duration.unwrap_or(DEFAULT_CIRCUIT_DURATION))?;
            let n = sample_count(a.samples)?;
            let p = ctx.laser()?;
            let prof = OptimalProfile::new(&p, t)?;
            let dt = t / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n)
                .map(|k| prof.current_unchecked((dt * k as f64).min(t)))
                .collect();
            v[n - 1] = prof.current_unchecked(t);
            (SampledSignal::new(dt, v)?, "I_opt_A", json!("optimal"), t)
        }
    };
    let n = reference.len();
    let dt = reference.dt();
    let start = ((n - 1) as f64 * from).round() as usize;
    let reference = reference.with_window(start, n)?;

    let mut fit_text = None;
    let mut summary = json!({
        "topology": topo.name(),
        "T_s": num(t),
        "dt_s": num(dt),
        "reference": ref_kind,
        "window_start_s": num(dt * start as f64),
    });
    let params = if a.fit {
        let bounds = default_bounds(topo, &reference)?;
        let opts = FitOptions {
            starts,
            budget: a.budget.unwrap_or(2000),
            seed: ctx.seed,
            initial: given.then(|| params.to_vector()),
        };
        let report = fit_to_reference(topo, &reference, &bounds, &opts)?;
        if !report.converged {
            eprintln!("warning: fit did not improve on the search-box center");
        }
        summary["fit"] = json!({
            "converged": report.converged,
            "simplex_converged": report.simplex_converged,
            "best_start": report.best_start,
            "evaluations": report.evaluations,
            "seed": ctx.seed,
        });
        fit_text = Some(report.to_text());
        report.params
    } else {
        params
    };
    let rms = rms_error(&params, &reference)?;
    let (slope, ramp_rms) = ramp_baseline(&reference);
    let peak = reference.peak().map_or(f64::NAN, |p| p.1);
    summary["params"] = named_params(&params);
    summary["rms_A"] = num(rms);
    summary["rms_relative"] = num(rms / peak);
    summary["ramp_slope_A_per_s"] = num(slope);
    summary["ramp_rms_A"] = num(ramp_rms);

    let waveform = params.sample(dt, n)?;
    if let Some(text) = &fit_text {
        match ctx.sink.format {
            Format::Csv => ctx.sink.companion_text("fit.txt", text)?,
            Format::Json => summary["fit_report"] = json!(text),
        }
    }
    ctx.sink.table(
        &["t_s", "I_A", ref_header],
        dt,
        &[&waveform, reference.values()],
        summary,
    )
}
