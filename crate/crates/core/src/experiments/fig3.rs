use std::f64::consts::PI;

use super::{
    dephasing_time, mirror_offset_samples, read_echo, register_symbols, resolve_static_gradient, simulate, symbol_of,
    threshold, Bindings, Comparison, Curve, ExperimentReport,
};
use crate::analysis::{fit_exponential, fit_fixed_decay, EchoReport, Symbol};
use crate::config::SimConfig;
use crate::engine::SequenceEvent;
use crate::error::ExperimentError;
use crate::sequence::PhaseSymbol;

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3aResult {
    /// Stored symbols in write order.
    pub symbols: Vec<PhaseSymbol>,
    /// Echoes in time order (last written first).
    pub echoes: Vec<EchoReport>,
    /// Pulse-to-echo delay `2Δt` of each echo, seconds.
    pub delays: Vec<f64>,
    /// Prefactor and RMS relative residual of `A exp(−2Δt/T2)` with `T2` fixed.
    pub fit_amplitude: f64,
    pub fit_rms: f64,
    /// `T2` from a free exponential fit.
    pub fitted_t2: f64,
    pub mirror_offset_samples: f64,
    /// Free-induction dephasing time in the static gradient.
    pub dephasing_time: f64,
}

impl Fig3aResult {
    pub fn decoded(&self) -> Vec<Symbol> {
        self.echoes.iter().map(|e| e.symbol).collect()
    }

    /// Stored symbols in the order their echoes appear.
    pub fn expected(&self) -> Vec<Symbol> {
        self.symbols.iter().rev().map(|&p| symbol_of(p)).collect()
    }

    pub fn report(&self, cfg: &SimConfig) -> ExperimentReport {
        let mut r = ExperimentReport::new("fig3a", cfg);
        register_comparisons(&mut r, &self.echoes, &self.expected(), self.mirror_offset_samples);
        r.comparisons.push(Comparison::at_most("envelope_rms_relative_residual", self.fit_rms, 0.0, 0.02));
        r.comparisons.push(Comparison::at_most("dephasing_time_us", self.dephasing_time * 1e6, 2.0, 0.0));
        r.comparisons.push(Comparison::within(
            "fitted_T2_us",
            self.fitted_t2 * 1e6,
            cfg.t2_us,
            0.1 * cfg.t2_us,
        ));
        let t2 = cfg.t2_us * 1e-6;
        r.curves.push(Curve {
            name: "fig3a_envelope".into(),
            x: self.delays.iter().map(|d| d * 1e6).collect(),
            measured: self.echoes.iter().map(|e| e.amplitude.norm()).collect(),
            theory: self.delays.iter().map(|d| self.fit_amplitude * (-d / t2).exp()).collect(),
        });
        r
    }
}

fn register_comparisons(r: &mut ExperimentReport, echoes: &[EchoReport], expected: &[Symbol], mirror: f64) {
    r.echoes = echoes.iter().map(Into::into).collect();
    let correct = echoes.iter().zip(expected).filter(|(e, s)| e.symbol == **s).count();
    r.comparisons.push(Comparison::within("symbols_decoded_reversed", correct as f64, expected.len() as f64, 0.0));
    r.comparisons.push(Comparison::at_most("echo_time_mirror_offset_samples", mirror, 0.0, 1.0));
}

fn check_register(cfg: &SimConfig) -> Result<(), ExperimentError> {
    if resolve_static_gradient(cfg)? == 0.0 {
        return Err(ExperimentError::Precondition("register storage needs a static gradient".into()));
    }
    if !(cfg.tip_pi.abs() < 0.01) {
        return Err(ExperimentError::Precondition(format!("tip angle {}π is not below 0.01π", cfg.tip_pi)));
    }
    let t2s = dephasing_time(cfg)?;
    if !(cfg.spacing_us * 1e-6 > t2s) {
        return Err(ExperimentError::Precondition(format!(
            "pulse spacing {} us does not exceed the dephasing time {:.3} us",
            cfg.spacing_us,
            t2s * 1e6
        )));
    }
    if cfg.n_pulses == 0 {
        return Err(ExperimentError::Precondition("no pulses to store".into()));
    }
    Ok(())
}

/// Reads the echo of every register pulse; `echo_of(j)` is the echo time of
/// pulse `j` in seconds. Returns echoes sorted by time and the mirror offset.
fn read_register(
    cfg: &SimConfig,
    events: &[SequenceEvent],
    echo_of: impl Fn(usize) -> f64,
) -> Result<(Vec<EchoReport>, Vec<(f64, f64)>, f64), ExperimentError> {
    let ensemble = super::ensemble_for(cfg)?;
    let signal = simulate(&ensemble, events)?;
    let pulses = super::pulse_times(events, true);
    let th = threshold(cfg, cfg.tip_pi * PI);
    let mut echoes = Vec::with_capacity(pulses.len());
    let mut times = Vec::with_capacity(pulses.len());
    for (j, &tp) in pulses.iter().enumerate().rev() {
        let te = echo_of(j);
        echoes.push(read_echo(&signal, events, tp, te, cfg.halfwidth(), th)?);
        times.push((tp, te));
    }
    let echo_times: Vec<f64> = times.iter().map(|t| t.1).collect();
    let mirror = mirror_offset_samples(&signal, &echo_times, 0.5 * cfg.spacing_us * 1e-6, cfg.dt_us * 1e-6);
    Ok((echoes, times, mirror))
}

/// `n_pulses` weak pulses written `spacing_us` apart in a static gradient and
/// recalled in reverse by one refocusing pulse.
pub fn experiment_fig3a(cfg: &SimConfig) -> Result<Fig3aResult, ExperimentError> {
    check_register(cfg)?;
    let n = cfg.n_pulses;
    let s = cfg.spacing_us;
    let symbols = register_symbols(cfg, n)?;
    let events = Bindings::default()
        .integer("n", n)
        .angle("tip", cfg.tip_pi * PI)
        .us("spacing", s)?
        .phase("refocus", cfg.refocus_phase)
        .us("window", (n + 1) as f64 * s)?
        .us("dt", cfg.dt_us)?
        .phases("ph", &symbols)
        .compile("fig3a")?;
    let t_pi = n as f64 * s;
    let (echoes, times, mirror) = read_register(cfg, &events, |j| (2.0 * t_pi - j as f64 * s) * 1e-6)?;
    let delays: Vec<f64> = times.iter().map(|(tp, te)| te - tp).collect();
    let amps: Vec<f64> = echoes.iter().map(|e| e.amplitude.norm()).collect();
    let (fit_amplitude, fit_rms) = fit_fixed_decay(&delays, &amps, cfg.t2_us * 1e-6);
    let (_, fitted_t2) = fit_exponential(&delays, &amps);
    Ok(Fig3aResult {
        symbols,
        echoes,
        delays,
        fit_amplitude,
        fit_rms,
        fitted_t2,
        mirror_offset_samples: mirror,
        dephasing_time: dephasing_time(cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3bResult {
    pub symbols: Vec<PhaseSymbol>,
    /// Echoes in time order after the return transfer.
    pub echoes: Vec<EchoReport>,
    pub mirror_offset_samples: f64,
    /// Echoes above threshold when the coherence is left on the nucleus.
    pub echoes_without_return: usize,
}

impl Fig3bResult {
    pub fn decoded(&self) -> Vec<Symbol> {
        self.echoes.iter().map(|e| e.symbol).collect()
    }

    pub fn expected(&self) -> Vec<Symbol> {
        self.symbols.iter().rev().map(|&p| symbol_of(p)).collect()
    }

    pub fn report(&self, cfg: &SimConfig) -> ExperimentReport {
        let mut r = ExperimentReport::new("fig3b", cfg);
        register_comparisons(&mut r, &self.echoes, &self.expected(), self.mirror_offset_samples);
        r.comparisons.push(Comparison::within("echoes_without_return_transfer", self.echoes_without_return as f64, 0.0, 0.0));
        r
    }
}

/// Compiled nuclear-storage program and the echo time of pulse `j`.
pub fn fig3b_program(
    cfg: &SimConfig,
    symbols: &[PhaseSymbol],
    with_return: bool,
) -> Result<(Vec<SequenceEvent>, impl Fn(usize) -> f64), ExperimentError> {
    let n = symbols.len();
    let s = cfg.spacing_us;
    let w = cfg.nuclear_wait_us;
    let events = Bindings::default()
        .integer("n", n)
        .angle("tip", cfg.tip_pi * PI)
        .us("spacing", s)?
        .us("nwait", w)?
        .phase("refocus", cfg.refocus_phase)
        .us("window", (n + 1) as f64 * s)?
        .us("dt", cfg.dt_us)?
        .phases("ph", symbols)
        .compile(if with_return { "fig3b" } else { "fig3b_no_return" })?;
    let store = n as f64 * s;
    let back = store + 2.0 * w;
    Ok((events, move |j: usize| (back + store - j as f64 * s) * 1e-6))
}

/// Register stored on the electron, parked on the nucleus, refocused there
/// by an rf π pulse and returned for readout.
pub fn experiment_fig3b(cfg: &SimConfig) -> Result<Fig3bResult, ExperimentError> {
    check_register(cfg)?;
    let symbols = register_symbols(cfg, cfg.n_pulses)?;
    let (events, echo_of) = fig3b_program(cfg, &symbols, true)?;
    let (echoes, _, mirror) = read_register(cfg, &events, &echo_of)?;
    let (events, echo_of) = fig3b_program(cfg, &symbols, false)?;
    let (parked, _, _) = read_register(cfg, &events, &echo_of)?;
    Ok(Fig3bResult {
        symbols,
        echoes,
        mirror_offset_samples: mirror,
        echoes_without_return: parked.iter().filter(|e| e.symbol != Symbol::None).count(),
    })
}
