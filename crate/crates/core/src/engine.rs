//! Event operations on an [`Ensemble`] and the sequence runner.
//!
//! Conventions:
//! - Transverse magnetisation is `m = sx + i sy`; free precession at
//!   frequency `ω` maps `m → m e^{iωt}`.
//! - Pulses rotate right-handedly about the in-plane axis `(cos φ, sin φ, 0)`.
//!   A π/2 pulse about `+x` takes `+z` to `−y`.
//! - A π pulse with phase `φ` maps `m → e^{2iφ} m̄`, which inverts every stored
//!   wavenumber `k → −k`.
//!
//! Per-site updates run in parallel over fixed-size chunks. Reductions sum
//! each chunk in site order and then the chunk partials in chunk order, so the
//! result is bit-identical for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ensemble::{Ensemble, SpinSite};
use crate::error::EngineError;

/// Sites per parallel work unit. Fixed so that reductions do not depend on
/// the thread count.
pub const CHUNK: usize = 2048;

/// Acquisition samples computed per pass (bounds partial-sum memory).
const SAMPLE_BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferDirection {
    ElectronToNuclear,
    NuclearToElectron,
}

/// One step of a pulse program. Angles in rad, durations in s, gradients in
/// T/m. Microwave and rf pulses are instantaneous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceEvent {
    MicrowavePulse { theta: f64, phase: f64 },
    GradientPulse { g: f64, tau: f64 },
    Delay { t: f64 },
    RfPulse { theta: f64, phase: f64 },
    Transfer(TransferDirection),
    Acquire { duration: f64, dt: f64 },
}

impl SequenceEvent {
    /// Physical time taken by the event.
    pub fn duration(&self) -> f64 {
        match *self {
            SequenceEvent::GradientPulse { tau, .. } => tau,
            SequenceEvent::Delay { t } => t,
            SequenceEvent::Acquire { duration, .. } => duration,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |what: &str, v: f64| Err(EngineError::InvalidArgument(format!("{what} = {v}")));
        match *self {
            SequenceEvent::MicrowavePulse { theta, phase } | SequenceEvent::RfPulse { theta, phase } => {
                if !theta.is_finite() {
                    return bad("non-finite angle", theta);
                }
                if !phase.is_finite() {
                    return bad("non-finite phase", phase);
                }
            }
            SequenceEvent::GradientPulse { g, tau } => {
                if !g.is_finite() {
                    return bad("non-finite gradient", g);
                }
                if !(tau >= 0.0 && tau.is_finite()) {
                    return bad("negative or non-finite gradient duration", tau);
                }
            }
            SequenceEvent::Delay { t } => {
                if !(t >= 0.0 && t.is_finite()) {
                    return bad("negative or non-finite delay", t);
                }
            }
            SequenceEvent::Acquire { duration, dt } => check_acquire(duration, dt)?,
            SequenceEvent::Transfer(_) => {}
        }
        Ok(())
    }
}

fn check_acquire(duration: f64, dt: f64) -> Result<(), EngineError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EngineError::InvalidArgument(format!("acquisition dt must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration >= dt) {
        return Err(EngineError::InvalidArgument(format!(
            "acquisition duration {duration} shorter than dt {dt}"
        )));
    }
    Ok(())
}

/// Digitised transverse magnetisation. `t` is absolute sequence time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Signal {
    pub t: Vec<f64>,
    pub m_plus: Vec<Complex64>,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Concatenates several acquisitions in order.
    pub fn concat<'a>(signals: impl IntoIterator<Item = &'a Signal>) -> Signal {
        let mut out = Signal::default();
        for s in signals {
            out.t.extend_from_slice(&s.t);
            out.m_plus.extend_from_slice(&s.m_plus);
        }
        out
    }

    /// Index of the sample with the largest `|m|` in `[t0, t1]`.
    pub fn peak_index(&self, t0: f64, t1: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (&t, m)) in self.t.iter().zip(&self.m_plus).enumerate() {
            if t < t0 || t > t1 {
                continue;
            }
            let a = m.norm_sqr();
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((i, a));
            }
        }
        best.map(|(i, _)| i)
    }
}

fn for_each_site(e: &mut Ensemble, f: impl Fn(&mut SpinSite) + Sync) {
    e.sites.par_chunks_mut(CHUNK).for_each(|chunk| chunk.iter_mut().for_each(&f));
}

/// Rodrigues rotation of `v` by `angle` about the unit in-plane axis `(c, s, 0)`.
#[inline]
fn rotate_in_plane(v: [f64; 3], ax: f64, ay: f64, angle: f64) -> [f64; 3] {
    let (sn, cs) = angle.sin_cos();
    let dot = ax * v[0] + ay * v[1];
    // axis × v with axis_z = 0
    let cross = [ay * v[2], -ax * v[2], ax * v[1] - ay * v[0]];
    let k = dot * (1.0 - cs);
    [v[0] * cs + cross[0] * sn + ax * k, v[1] * cs + cross[1] * sn + ay * k, v[2] * cs + cross[2] * sn]
}

/// Instantaneous resonant pulse. Each site's rotation angle is scaled by the
/// local drive strength `1 + β (r/r0)²`.
pub fn apply_microwave_pulse(e: &mut Ensemble, theta: f64, phase: f64) {
    let (ay, ax) = phase.sin_cos();
    let drive = e.drive_profile();
    for_each_site(e, |site| {
        let angle = theta * drive.scale(site.r);
        site.s = rotate_in_plane(site.s, ax, ay, angle);
    });
}

/// Rotation of a nuclear coherence by `theta` about `(cos φ, sin φ)`, acting
/// on the pair `(a, ā)`: `a → cos²(θ/2) a + sin²(θ/2) e^{2iφ} ā`.
#[inline]
pub fn rotate_coherence(a: Complex64, theta: f64, phase: f64) -> Complex64 {
    let c = theta.cos();
    let plus = 0.5 * (1.0 + c);
    let minus = 0.5 * (1.0 - c);
    a * plus + Complex64::from_polar(minus, 2.0 * phase) * a.conj()
}

/// Instantaneous rf pulse on the nuclear registers; electrons untouched.
pub fn apply_rf_pulse(e: &mut Ensemble, theta: f64, phase: f64) {
    for_each_site(e, |site| site.a_n = rotate_coherence(site.a_n, theta, phase));
}

/// Per-site evolution for a duration `t` with an extra gradient `g` on top of
/// the static field.
fn precess(e: &mut Ensemble, g: f64, t: f64) {
    if t == 0.0 {
        return;
    }
    let gamma = e.constants.gamma_e();
    let ratio = e.constants.gamma_ratio_nuclear();
    let static_g = e.static_gradient;
    let rel = e.relaxation;
    let e2 = (-t / rel.t2).exp();
    let e1 = (-t / rel.t1).exp();
    let e2n = (-t / rel.t2n).exp();
    for_each_site(e, |site| {
        let omega = site.delta + gamma * static_g * site.z;
        let phase = (omega + gamma * g * site.z) * t;
        let m = site.transverse() * Complex64::from_polar(e2, phase);
        site.set_transverse(m);
        site.s[2] = 1.0 - (1.0 - site.s[2]) * e1;
        site.a_n *= Complex64::from_polar(e2n, ratio * phase);
    });
    e.clock += t;
}

/// Gradient pulse `g` (T/m) for `tau` (s). Static detuning, the static
/// gradient and relaxation act for the same interval.
pub fn apply_gradient(e: &mut Ensemble, g: f64, tau: f64) -> Result<(), EngineError> {
    SequenceEvent::GradientPulse { g, tau }.validate()?;
    precess(e, g, tau);
    Ok(())
}

/// Free precession and relaxation for `t` seconds.
pub fn evolve_free(e: &mut Ensemble, t: f64) -> Result<(), EngineError> {
    SequenceEvent::Delay { t }.validate()?;
    precess(e, 0.0, t);
    Ok(())
}

/// Swaps each site's electron transverse amplitude with its nuclear
/// coherence, scaled by the transfer fidelity. `sz` is unchanged. The swap is
/// its own inverse, so both directions perform the same exchange.
pub fn transfer_coherence(e: &mut Ensemble, direction: TransferDirection) {
    let eta = e.transfer_fidelity;
    let _ = direction;
    for_each_site(e, |site| {
        let m = site.transverse();
        let a = site.a_n;
        site.set_transverse(a * eta);
        site.a_n = m * eta;
    });
}

/// Steps free evolution in increments of `dt` for `duration`, recording the
/// weighted mean transverse magnetisation after each step. A remainder shorter
/// than `dt` is evolved without sampling.
pub fn acquire(e: &mut Ensemble, duration: f64, dt: f64) -> Result<Signal, EngineError> {
    check_acquire(duration, dt)?;
    let n_steps = ((duration / dt) * (1.0 + 1e-12)).floor() as usize;
    let t0 = e.clock;
    let n = e.sites.len() as f64;

    let gamma = e.constants.gamma_e();
    let ratio = e.constants.gamma_ratio_nuclear();
    let static_g = e.static_gradient;
    let rel = e.relaxation;
    let decay = (-dt / rel.t2).exp();
    let weights: Vec<f64> = e.sites.iter().map(|s| e.detection_weight(s.r)).collect();

    let mut m_plus = Vec::with_capacity(n_steps);
    let mut done = 0;
    while done < n_steps {
        let block = SAMPLE_BLOCK.min(n_steps - done);
        let partials: Vec<Vec<Complex64>> = e
            .sites
            .par_chunks_mut(CHUNK)
            .zip(weights.par_chunks(CHUNK))
            .map(|(chunk, w)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); block];
                for (site, &wi) in chunk.iter_mut().zip(w) {
                    let omega = site.delta + gamma * static_g * site.z;
                    let step = Complex64::from_polar(decay, omega * dt);
                    let mut m = site.transverse();
                    for slot in acc.iter_mut() {
                        m *= step;
                        *slot += m * wi;
                    }
                    site.set_transverse(m);
                }
                acc
            })
            .collect();
        for j in 0..block {
            let mut total = Complex64::new(0.0, 0.0);
            for p in &partials {
                total += p[j];
            }
            m_plus.push(total / n);
        }
        done += block;
    }

    // longitudinal and nuclear evolution over the sampled span in one step
    let span = n_steps as f64 * dt;
    let e1 = (-span / rel.t1).exp();
    let e2n = (-span / rel.t2n).exp();
    for_each_site(e, |site| {
        let omega = site.delta + gamma * static_g * site.z;
        site.s[2] = 1.0 - (1.0 - site.s[2]) * e1;
        site.a_n *= Complex64::from_polar(e2n, ratio * omega * span);
    });

    let t = (1..=n_steps).map(|j| t0 + j as f64 * dt).collect();
    e.clock = t0 + span;
    let rest = duration - span;
    if rest > 0.0 {
        precess(e, 0.0, rest);
    }
    e.clock = t0 + duration;
    Ok(Signal { t, m_plus })
}

/// Applies one event.
pub fn apply_event(e: &mut Ensemble, event: &SequenceEvent) -> Result<Option<Signal>, EngineError> {
    event.validate()?;
    match *event {
        SequenceEvent::MicrowavePulse { theta, phase } => apply_microwave_pulse(e, theta, phase),
        SequenceEvent::GradientPulse { g, tau } => apply_gradient(e, g, tau)?,
        SequenceEvent::Delay { t } => evolve_free(e, t)?,
        SequenceEvent::RfPulse { theta, phase } => apply_rf_pulse(e, theta, phase),
        SequenceEvent::Transfer(dir) => transfer_coherence(e, dir),
        SequenceEvent::Acquire { duration, dt } => return acquire(e, duration, dt).map(Some),
    }
    Ok(None)
}

/// Folds `events` through the ensemble and returns every acquisition in order.
/// Errors carry the index of the offending event; the ensemble is left in the
/// state reached before it.
pub fn run_sequence(e: &mut Ensemble, events: &[SequenceEvent]) -> Result<Vec<Signal>, EngineError> {
    let mut signals = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        if let Some(sig) = apply_event(e, ev).map_err(|err| err.at(i))? {
            signals.push(sig);
        }
    }
    Ok(signals)
}

/// Start time of every event when the sequence begins at `t0`.
pub fn event_times(events: &[SequenceEvent], t0: f64) -> Vec<f64> {
    let mut t = t0;
    events
        .iter()
        .map(|ev| {
            let start = t;
            t += ev.duration();
            start
        })
        .collect()
}
