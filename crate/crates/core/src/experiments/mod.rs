//! Canned experiments reproducing the storage, recall and crosstalk
//! measurements, each returning echoes and pass/fail comparisons.
//!
//! Every experiment runs a program from the shipped corpus (see
//! [`corpus`]) with timing parameters derived from a [`SimConfig`].

pub mod corpus;
mod fig1;
mod fig2;
mod fig3;

use std::f64::consts::PI;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{integrate_echo, noise_floor_threshold, EchoReport, RefocusMap, Symbol};
use crate::config::{Auto, SimConfig};
use crate::engine::{event_times, run_sequence, SequenceEvent, Signal};
use crate::ensemble::{build_ensemble, Ensemble};
use crate::error::ExperimentError;
use crate::geometry::{mode_overlap, SampleGeometry};
use crate::sequence::{PhaseSymbol, Params};

pub use fig1::{experiment_fig1a, experiment_fig1b, Fig1aPoint, Fig1aResult, Fig1bResult};
pub use fig2::{experiment_crosstalk, experiment_fig2, CrosstalkReport, Fig2Result, RecallOrder};
pub use fig3::{experiment_fig3a, experiment_fig3b, Fig3aResult, Fig3bResult};

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: &[&str] = &["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "crosstalk"];

/// One echo as emitted in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoRecord {
    pub t_us: f64,
    pub re: f64,
    pub im: f64,
    pub intensity: f64,
    pub symbol: Symbol,
}

impl From<&EchoReport> for EchoRecord {
    fn from(r: &EchoReport) -> Self {
        Self {
            t_us: r.t_center * 1e6,
            re: r.amplitude.re,
            im: r.amplitude.im,
            intensity: r.intensity,
            symbol: r.symbol,
        }
    }
}

/// A measured quantity checked against its expected value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub value: f64,
    pub theory: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Comparison {
    /// Passes when `|value − theory| ≤ tolerance`.
    pub fn within(name: &str, value: f64, theory: f64, tolerance: f64) -> Self {
        let pass = (value - theory).abs() <= tolerance;
        Self { name: name.into(), value, theory, tolerance, pass }
    }

    /// Passes when `value ≤ theory + tolerance`; used for upper bounds where
    /// `theory` is the ideal value.
    pub fn at_most(name: &str, value: f64, theory: f64, tolerance: f64) -> Self {
        let pass = value <= theory + tolerance;
        Self { name: name.into(), value, theory, tolerance, pass }
    }

    /// Passes when `value ≥ theory − tolerance`.
    pub fn at_least(name: &str, value: f64, theory: f64, tolerance: f64) -> Self {
        let pass = value >= theory - tolerance;
        Self { name: name.into(), value, theory, tolerance, pass }
    }
}

/// A curve written as CSV with columns `x, measured, theory`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub x: Vec<f64>,
    pub measured: Vec<f64>,
    pub theory: Vec<f64>,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,measured,theory\n");
        for ((x, m), t) in self.x.iter().zip(&self.measured).zip(&self.theory) {
            let _ = writeln!(out, "{},{},{}", fmt12(*x), fmt12(*m), fmt12(*t));
        }
        out
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Serialisable outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_digest: String,
    pub seed: u64,
    pub echoes: Vec<EchoRecord>,
    pub comparisons: Vec<Comparison>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub crosstalk: Vec<CrosstalkReport>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
}

impl ExperimentReport {
    fn new(experiment: &str, cfg: &SimConfig) -> Self {
        Self {
            experiment: experiment.into(),
            config_digest: cfg.digest(),
            seed: cfg.seed,
            echoes: Vec::new(),
            comparisons: Vec::new(),
            crosstalk: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are always serialisable")
    }
}

/// Default configuration of a named experiment.
pub fn preset(name: &str) -> Option<SimConfig> {
    let mut c = SimConfig::default();
    let slab = |c: &mut SimConfig| {
        c.set("profile", "slab").unwrap();
        c.set("sampling", "grid").unwrap();
    };
    match name {
        "fig1a" | "fig1b" => {}
        "fig2a" | "fig2b" | "crosstalk" => slab(&mut c),
        "fig3a" | "fig3b" => {
            slab(&mut c);
            c.static_gradient_mt_m = Auto::Auto;
            c.halfwidth_us = Auto::Value(0.2);
            c.dt_us = 0.1;
            if name == "fig3b" {
                c.n_pulses = 8;
            }
        }
        _ => return None,
    }
    Some(c)
}

/// Runs a named experiment and collects its report.
pub fn run_experiment(name: &str, cfg: &SimConfig) -> Result<ExperimentReport, ExperimentError> {
    match name {
        "fig1a" => Ok(experiment_fig1a(cfg)?.report(cfg)),
        "fig1b" => Ok(experiment_fig1b(cfg)?.report(cfg)),
        "fig2a" | "fig2b" => {
            let order = if name == "fig2a" { RecallOrder::Same } else { RecallOrder::Inverse };
            Ok(experiment_fig2(cfg, order, phase_pair(cfg)?)?.report(cfg))
        }
        "crosstalk" => {
            let reports = experiment_crosstalk(cfg, phase_pair(cfg)?)?;
            Ok(fig2::crosstalk_report(cfg, reports))
        }
        "fig3a" => Ok(experiment_fig3a(cfg)?.report(cfg)),
        "fig3b" => Ok(experiment_fig3b(cfg)?.report(cfg)),
        other => Err(ExperimentError::Precondition(format!("unknown experiment `{other}`"))),
    }
}

fn phase_pair(cfg: &SimConfig) -> Result<(PhaseSymbol, PhaseSymbol), ExperimentError> {
    match cfg.phases.as_slice() {
        [a, b] => Ok((*a, *b)),
        other => Err(ExperimentError::Precondition(format!("`phases` needs two entries, got {}", other.len()))),
    }
}

/// Characteristic length `L` used to express wavenumbers as `k·L`.
pub fn extent(geometry: &SampleGeometry) -> f64 {
    geometry.radial_extent().unwrap_or_else(|| geometry.half_extent())
}

/// Gradient amplitude in T/m: the configured value, or the overlap zero
/// whose amplitude for the configured pulse duration is closest to 30 mT/m.
pub fn resolve_gradient(cfg: &SimConfig) -> Result<f64, ExperimentError> {
    let tau = cfg.grad_us * 1e-6;
    let gamma = cfg.ensemble_config()?.constants.gamma_e();
    Ok(match cfg.grad_mt_m {
        Auto::Value(g) => g * 1e-3,
        Auto::Auto => cfg
            .geometry()
            .overlap_zeros(64)
            .into_iter()
            .map(|k| k / (gamma * tau))
            .min_by(|a, b| (a - 30e-3).abs().total_cmp(&(b - 30e-3).abs()))
            .expect("at least one zero"),
    })
}

/// Static gradient in T/m: the configured value, or the one that puts the
/// first overlap zero at one pulse spacing of free evolution.
pub fn resolve_static_gradient(cfg: &SimConfig) -> Result<f64, ExperimentError> {
    let gamma = cfg.ensemble_config()?.constants.gamma_e();
    Ok(match cfg.static_gradient_mt_m {
        Auto::Value(g) => g * 1e-3,
        Auto::Auto => cfg.geometry().overlap_zeros(1)[0] / (gamma * cfg.spacing_us * 1e-6),
    })
}

/// Ensemble built from `cfg` with the static gradient resolved.
pub fn ensemble_for(cfg: &SimConfig) -> Result<Ensemble, ExperimentError> {
    let mut ec = cfg.ensemble_config()?;
    ec.static_gradient = resolve_static_gradient(cfg)?;
    Ok(build_ensemble(&ec, cfg.n_spins, cfg.seed)?)
}

/// Register contents: the configured list, or `n` random `±x` drawn from the seed.
pub fn register_symbols(cfg: &SimConfig, n: usize) -> Result<Vec<PhaseSymbol>, ExperimentError> {
    match cfg.symbols {
        Auto::Value(()) => {
            if cfg.symbol_list.len() != n {
                return Err(ExperimentError::Precondition(format!(
                    "`symbols` has {} entries but {n} pulses are stored",
                    cfg.symbol_list.len()
                )));
            }
            Ok(cfg.symbol_list.clone())
        }
        Auto::Auto => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5359_4d42);
            Ok((0..n).map(|_| if rng.random::<bool>() { PhaseSymbol::PlusX } else { PhaseSymbol::MinusX }).collect())
        }
    }
}

pub(crate) fn symbol_of(p: PhaseSymbol) -> Symbol {
    match p {
        PhaseSymbol::PlusX => Symbol::PlusX,
        PhaseSymbol::MinusX => Symbol::MinusX,
        PhaseSymbol::PlusY => Symbol::PlusY,
        PhaseSymbol::MinusY => Symbol::MinusY,
    }
}

/// Parameter map with helpers for the units used by the corpus.
#[derive(Default)]
pub(crate) struct Bindings(Params);

impl Bindings {
    pub fn us(mut self, name: &str, us: f64) -> Result<Self, ExperimentError> {
        if !(us >= 0.0) {
            return Err(ExperimentError::Precondition(format!(
                "timeline does not fit: `{name}` would be {us:.4} us; shorten the echo window or gradient"
            )));
        }
        self.0.insert(name.into(), crate::sequence::ParamValue::duration_s(us * 1e-6));
        Ok(self)
    }

    pub fn gradient(mut self, name: &str, g: f64) -> Self {
        self.0.insert(name.into(), crate::sequence::ParamValue::gradient_t_per_m(g));
        self
    }

    pub fn angle(mut self, name: &str, theta: f64) -> Self {
        self.0.insert(name.into(), crate::sequence::ParamValue::angle_rad(theta));
        self
    }

    pub fn phase(mut self, name: &str, p: PhaseSymbol) -> Self {
        self.0.insert(name.into(), crate::sequence::ParamValue::phase(p));
        self
    }

    pub fn phases(mut self, name: &str, ps: &[PhaseSymbol]) -> Self {
        self.0.insert(name.into(), crate::sequence::ParamValue::phases(ps));
        self
    }

    pub fn integer(mut self, name: &str, n: usize) -> Self {
        self.0.insert(name.into(), crate::sequence::ParamValue::integer(n as i64));
        self
    }

    pub fn compile(&self, program: &str) -> Result<Vec<SequenceEvent>, ExperimentError> {
        corpus::compile_shipped(program, &self.0)
    }
}

/// Runs `events` on a copy of `ensemble` and joins the acquired windows.
pub(crate) fn simulate(ensemble: &Ensemble, events: &[SequenceEvent]) -> Result<Signal, ExperimentError> {
    let mut e = ensemble.clone();
    let signals = run_sequence(&mut e, events)?;
    Ok(Signal::concat(&signals))
}

/// Integrates the echo at `t_echo`, decoding through the refocusing pulses
/// between `t_pulse` and the echo.
pub(crate) fn read_echo(
    signal: &Signal,
    events: &[SequenceEvent],
    t_pulse: f64,
    t_echo: f64,
    half_width: f64,
    threshold: f64,
) -> Result<EchoReport, ExperimentError> {
    let frame = RefocusMap::from_events(events, t_pulse, t_echo);
    Ok(integrate_echo(signal, t_echo, half_width, threshold)?.decoded(&frame, threshold))
}

/// Largest distance, in samples, between each predicted echo time and the
/// peak of `|m_plus|` within `± search` of it.
pub(crate) fn mirror_offset_samples(signal: &Signal, echo_times: &[f64], search: f64, dt: f64) -> f64 {
    echo_times
        .iter()
        .map(|&t| match signal.peak_index(t - search, t + search) {
            Some(i) => ((signal.t[i] - t) / dt).abs().round(),
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Detection threshold for echoes of a pulse with tip `theta`.
pub(crate) fn threshold(cfg: &SimConfig, theta: f64) -> f64 {
    noise_floor_threshold(cfg.n_spins, theta.sin(), cfg.threshold_factor)
}

/// Time at which the free-induction envelope of the ensemble (static
/// gradient overlap times the detuning decay) first falls below `1/e`.
pub fn dephasing_time(cfg: &SimConfig) -> Result<f64, ExperimentError> {
    let g = resolve_static_gradient(cfg)?;
    let gamma = cfg.ensemble_config()?.constants.gamma_e();
    let geom = cfg.geometry();
    let t2s = cfg.t2star_us * 1e-6;
    let envelope = |t: f64| {
        let detuning = match cfg.detuning_dist {
            crate::ensemble::DetuningDistribution::Lorentzian => (-t / t2s).exp(),
            crate::ensemble::DetuningDistribution::Gaussian => (-(t / t2s).powi(2)).exp(),
        };
        mode_overlap(&geom, gamma * g * t).re.abs() * detuning
    };
    let target = (-1.0f64).exp();
    let step = 1e-9;
    let mut t = 0.0;
    while t < 1e-3 {
        if envelope(t + step) < target {
            let (mut lo, mut hi) = (t, t + step);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if envelope(mid) < target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        t += step;
    }
    Ok(f64::INFINITY)
}

pub(crate) fn pulse_times(events: &[SequenceEvent], small: bool) -> Vec<f64> {
    let times = event_times(events, 0.0);
    events
        .iter()
        .zip(times)
        .filter_map(|(e, t)| match *e {
            SequenceEvent::MicrowavePulse { theta, .. } if ((theta.abs() - PI).abs() > 1e-9) == small => Some(t),
            _ => None,
        })
        .collect()
}
