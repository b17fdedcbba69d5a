use std::f64::consts::PI;

use super::{extent, read_echo, resolve_gradient, simulate, threshold, Bindings, Comparison, Curve, ExperimentReport};
use crate::analysis::{EchoReport, Symbol};
use crate::config::SimConfig;
use crate::ensemble::Ensemble;
use crate::error::ExperimentError;
use crate::geometry::mode_overlap;

/// Refocusing pulse time of the single-echo programs; the echo forms at twice this.
const PI_TIME_US: f64 = 10.0;

/// Half-length of the acquisition window around an echo.
pub(crate) fn acquisition_half(cfg: &SimConfig) -> f64 {
    (cfg.halfwidth() * 1e6 + 2.0 * cfg.dt_us).max(2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1aPoint {
    /// Gradient area `G·τ` in mT·µs/m.
    pub area: f64,
    /// Wavenumber times the sample's characteristic length.
    pub k_l: f64,
    /// Echo amplitude projected on the `k = 0` echo, normalised to it.
    pub amplitude: f64,
    /// `|A|² / |A₀|²`.
    pub intensity: f64,
    pub theory_amplitude: f64,
    pub theory_intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1aResult {
    pub points: Vec<Fig1aPoint>,
    pub reference: EchoReport,
    /// Zero crossings of the measured amplitude, in units of `k·L`.
    pub zeros: Vec<f64>,
    pub expected_zeros: Vec<f64>,
    pub rms_deviation: f64,
    /// Normalised intensity with the gradient set exactly to the first overlap zero.
    pub intensity_at_first_zero: f64,
}

struct Fig1aRunner<'a> {
    cfg: &'a SimConfig,
    ensemble: Ensemble,
    tau: f64,
    half: f64,
}

impl Fig1aRunner<'_> {
    fn echo(&self, g: f64) -> Result<EchoReport, ExperimentError> {
        let tau_us = self.tau * 1e6;
        let events = Bindings::default()
            .gradient("G", g)
            .us("tau", tau_us)?
            .us("store", PI_TIME_US - tau_us)?
            .phase("refocus", self.cfg.refocus_phase)
            .us("lead", PI_TIME_US - self.half)?
            .us("window", 2.0 * self.half)?
            .us("dt", self.cfg.dt_us)?
            .compile("fig1a")?;
        let signal = simulate(&self.ensemble, &events)?;
        read_echo(&signal, &events, 0.0, 2.0 * PI_TIME_US * 1e-6, self.cfg.halfwidth(), threshold(self.cfg, PI / 2.0))
    }
}

/// Echo amplitude after a single phase-encoding gradient, swept over
/// `k·L ∈ [0, kr0_max]`, against the analytic mode overlap.
pub fn experiment_fig1a(cfg: &SimConfig) -> Result<Fig1aResult, ExperimentError> {
    if cfg.k_points < 2 {
        return Err(ExperimentError::Precondition("`k_points` must be at least 2".into()));
    }
    let ensemble = super::ensemble_for(cfg)?;
    let gamma = ensemble.constants.gamma_e();
    let geometry = ensemble.geometry;
    let len = extent(&geometry);
    let runner = Fig1aRunner { cfg, ensemble, tau: cfg.grad_us * 1e-6, half: acquisition_half(cfg) };
    let g_for = |k_l: f64| k_l / (len * gamma * runner.tau);

    let reference = runner.echo(0.0)?;
    let a0 = reference.amplitude;
    let mut points = Vec::with_capacity(cfg.k_points);
    for i in 0..cfg.k_points {
        let k_l = cfg.kr0_max * i as f64 / (cfg.k_points - 1) as f64;
        let g = g_for(k_l);
        let a = runner.echo(g)?.amplitude;
        let theory = mode_overlap(&geometry, k_l / len).re;
        points.push(Fig1aPoint {
            area: g * 1e3 * runner.tau * 1e6,
            k_l,
            amplitude: (a * a0.conj()).re / a0.norm_sqr(),
            intensity: a.norm_sqr() / a0.norm_sqr(),
            theory_amplitude: theory,
            theory_intensity: theory * theory,
        });
    }
    let rms_deviation =
        (points.iter().map(|p| (p.intensity - p.theory_intensity).powi(2)).sum::<f64>() / points.len() as f64).sqrt();
    let zeros = points
        .windows(2)
        .filter(|w| w[0].amplitude.signum() != w[1].amplitude.signum())
        .map(|w| {
            let (x0, x1, y0, y1) = (w[0].k_l, w[1].k_l, w[0].amplitude, w[1].amplitude);
            x0 + (x1 - x0) * y0 / (y0 - y1)
        })
        .collect();
    let expected_zeros: Vec<f64> = geometry.overlap_zeros(2).iter().map(|k| k * len).collect();
    let at_zero = runner.echo(g_for(expected_zeros[0]))?.amplitude.norm_sqr() / a0.norm_sqr();
    Ok(Fig1aResult { points, reference, zeros, expected_zeros, rms_deviation, intensity_at_first_zero: at_zero })
}

impl Fig1aResult {
    pub fn report(&self, cfg: &SimConfig) -> ExperimentReport {
        let mut r = ExperimentReport::new("fig1a", cfg);
        r.echoes.push((&self.reference).into());
        r.comparisons.push(Comparison::at_most("intensity_rms_deviation", self.rms_deviation, 0.0, 0.01));
        for (i, &expected) in self.expected_zeros.iter().enumerate() {
            let found = self.zeros.get(i).copied().unwrap_or(f64::NAN);
            r.comparisons.push(Comparison::within(&format!("zero_{}_kr0", i + 1), found, expected, 0.01 * expected));
        }
        r.comparisons.push(Comparison::at_most("intensity_at_first_zero", self.intensity_at_first_zero, 0.0, 1e-4));
        let x: Vec<f64> = self.points.iter().map(|p| p.area).collect();
        r.curves.push(Curve {
            name: "fig1a_intensity".into(),
            x: x.clone(),
            measured: self.points.iter().map(|p| p.intensity).collect(),
            theory: self.points.iter().map(|p| p.theory_intensity).collect(),
        });
        r.curves.push(Curve {
            name: "fig1a_amplitude".into(),
            x,
            measured: self.points.iter().map(|p| p.amplitude).collect(),
            theory: self.points.iter().map(|p| p.theory_amplitude).collect(),
        });
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1bResult {
    pub recall: EchoReport,
    pub hahn: EchoReport,
    /// `|A_recall| / |A_hahn|`.
    pub fidelity: f64,
    /// Distance between the two echo peaks in samples.
    pub center_offset_samples: f64,
}

/// Gradient recall versus a plain Hahn echo with identical timing.
pub fn experiment_fig1b(cfg: &SimConfig) -> Result<Fig1bResult, ExperimentError> {
    let ensemble = super::ensemble_for(cfg)?;
    let g = resolve_gradient(cfg)?;
    let tau_us = cfg.grad_us;
    let half = acquisition_half(cfg);
    let bind = || -> Result<Bindings, ExperimentError> {
        Bindings::default()
            .gradient("G", g)
            .us("tau", tau_us)?
            .us("store", PI_TIME_US - tau_us)?
            .phase("refocus", cfg.refocus_phase)
            .us("lead", PI_TIME_US - tau_us - half)?
            .us("window", 2.0 * half)?
            .us("dt", cfg.dt_us)
    };
    let t_echo = 2.0 * PI_TIME_US * 1e-6;
    let th = threshold(cfg, PI / 2.0);
    let mut reports = Vec::new();
    let mut peaks = Vec::new();
    for program in ["fig1b", "fig1b_hahn"] {
        let events = bind()?.compile(program)?;
        let signal = simulate(&ensemble, &events)?;
        reports.push(read_echo(&signal, &events, 0.0, t_echo, cfg.halfwidth(), th)?);
        let i = signal.peak_index(f64::NEG_INFINITY, f64::INFINITY).unwrap_or(0);
        peaks.push(signal.t[i]);
    }
    let (recall, hahn) = (reports[0], reports[1]);
    Ok(Fig1bResult {
        recall,
        hahn,
        fidelity: recall.amplitude.norm() / hahn.amplitude.norm(),
        center_offset_samples: ((peaks[0] - peaks[1]) / (cfg.dt_us * 1e-6)).abs().round(),
    })
}

impl Fig1bResult {
    pub fn report(&self, cfg: &SimConfig) -> ExperimentReport {
        let mut r = ExperimentReport::new("fig1b", cfg);
        r.echoes.push((&self.recall).into());
        r.echoes.push((&self.hahn).into());
        r.comparisons.push(Comparison::at_least("fidelity", self.fidelity, 1.0, 1e-3));
        r.comparisons.push(Comparison::at_most("echo_center_offset_samples", self.center_offset_samples, 0.0, 1.0));
        let ok = (self.recall.symbol == Symbol::PlusX) as u8 as f64;
        r.comparisons.push(Comparison::within("recall_symbol_matches", ok, 1.0, 0.0));
        r
    }
}
