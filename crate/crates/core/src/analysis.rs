//! Echo integration and decoding, refocusing frames, and closed-form theory.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::engine::{event_times, SequenceEvent, Signal};
use crate::error::ExperimentError;

/// Cardinal in-plane direction, or `None` for an echo below threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    None,
}

impl Symbol {
    /// Nearest cardinal direction of a complex amplitude (`+x` = positive
    /// real axis).
    pub fn nearest(a: Complex64) -> Symbol {
        let quadrant = ((a.arg() / (0.5 * PI)).round() as i64).rem_euclid(4);
        match quadrant {
            0 => Symbol::PlusX,
            1 => Symbol::PlusY,
            2 => Symbol::MinusX,
            _ => Symbol::MinusY,
        }
    }

    /// Pulse phase in radians; `None` has no phase.
    pub fn phase(&self) -> Option<f64> {
        match self {
            Symbol::PlusX => Some(0.0),
            Symbol::PlusY => Some(0.5 * PI),
            Symbol::MinusX => Some(PI),
            Symbol::MinusY => Some(1.5 * PI),
            Symbol::None => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Symbol::PlusX => "+x",
            Symbol::MinusX => "-x",
            Symbol::PlusY => "+y",
            Symbol::MinusY => "-y",
            Symbol::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Symbol> {
        Some(match s {
            "+x" => Symbol::PlusX,
            "-x" => Symbol::MinusX,
            "+y" => Symbol::PlusY,
            "-y" => Symbol::MinusY,
            "none" => Symbol::None,
            _ => return None,
        })
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Composite action of refocusing pulses on a transverse amplitude:
/// `m ↦ factor · m` or `m ↦ factor · m̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefocusMap {
    pub conjugate: bool,
    pub factor: Complex64,
}

impl RefocusMap {
    pub fn identity() -> Self {
        Self { conjugate: false, factor: Complex64::new(1.0, 0.0) }
    }

    /// Followed by a π pulse with phase `phase` (`m ↦ e^{2iφ} m̄`).
    pub fn then_pi(self, phase: f64) -> Self {
        Self { conjugate: !self.conjugate, factor: Complex64::from_polar(1.0, 2.0 * phase) * self.factor.conj() }
    }

    pub fn apply(&self, m: Complex64) -> Complex64 {
        self.factor * if self.conjugate { m.conj() } else { m }
    }

    pub fn invert(&self, m: Complex64) -> Complex64 {
        let u = m / self.factor;
        if self.conjugate {
            u.conj()
        } else {
            u
        }
    }

    /// All π pulses (microwave or rf) in `events` whose start time lies in
    /// `(after, before)`, composed in time order.
    pub fn from_events(events: &[SequenceEvent], after: f64, before: f64) -> Self {
        let times = event_times(events, 0.0);
        let mut map = Self::identity();
        for (ev, &t) in events.iter().zip(&times) {
            if t <= after || t >= before {
                continue;
            }
            if let SequenceEvent::MicrowavePulse { theta, phase } | SequenceEvent::RfPulse { theta, phase } = *ev {
                if is_pi(theta) {
                    map = map.then_pi(phase);
                }
            }
        }
        map
    }
}

fn is_pi(theta: f64) -> bool {
    ((theta.abs() / PI) - 1.0).abs() < 1e-9
}

/// Transverse amplitude right after a small tip `theta` with phase `phase`
/// from `+z`: `−i sin θ e^{iφ}`.
pub fn excitation_amplitude(theta: f64, phase: f64) -> Complex64 {
    Complex64::new(0.0, -theta.sin()) * Complex64::from_polar(1.0, phase)
}

/// Pulse symbol whose excitation, carried through `frame`, best explains the
/// echo amplitude `a`.
pub fn decode_pulse_symbol(a: Complex64, frame: &RefocusMap) -> Symbol {
    // undo the refocusing, then rotate so a +x pulse lies on the real axis
    Symbol::nearest(frame.invert(a) * Complex64::new(0.0, 1.0))
}

/// Receiver-frame display transform: multiplies by `i` so a `+x` excitation
/// reads positive real, and inverts the imaginary part of samples taken after
/// an odd number of `+y` refocusing pulses, so echo and FID share a sign.
pub fn display_transform(signal: &Signal, pi_times: &[f64]) -> Signal {
    let m_plus = signal
        .t
        .iter()
        .zip(&signal.m_plus)
        .map(|(&t, &m)| {
            let flips = pi_times.iter().filter(|&&p| p < t).count();
            let r = m * Complex64::new(0.0, 1.0);
            if flips % 2 == 1 {
                r.conj()
            } else {
                r
            }
        })
        .collect();
    Signal { t: signal.t.clone(), m_plus }
}

/// Integrated echo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoReport {
    pub t_center: f64,
    pub amplitude: Complex64,
    /// `|amplitude|²`.
    pub intensity: f64,
    pub symbol: Symbol,
}

impl EchoReport {
    /// Re-labels the symbol as the pulse phase that produced this echo.
    pub fn decoded(mut self, frame: &RefocusMap, threshold: f64) -> Self {
        self.symbol = if self.amplitude.norm() < threshold {
            Symbol::None
        } else {
            decode_pulse_symbol(self.amplitude, frame)
        };
        self
    }
}

/// Mean of `m_plus` over `[t_center − half_width, t_center + half_width]` by
/// the trapezoidal rule, with linear interpolation at the window edges.
/// `symbol` is the raw in-plane direction of the amplitude (or `None` below
/// `threshold`).
pub fn integrate_echo(
    signal: &Signal,
    t_center: f64,
    half_width: f64,
    threshold: f64,
) -> Result<EchoReport, ExperimentError> {
    let (a, b) = (t_center - half_width, t_center + half_width);
    let outside = || ExperimentError::WindowOutsideSignal { start_us: a * 1e6, end_us: b * 1e6 };
    let (&first, &last) = match (signal.t.first(), signal.t.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(outside()),
    };
    let slack = 1e-9 * (last - first).abs().max(half_width);
    if !(half_width > 0.0) || a < first - slack || b > last + slack {
        return Err(outside());
    }
    let (a, b) = (a.max(first), b.min(last));
    let t = &signal.t;
    let m = &signal.m_plus;
    let interp = |x: f64| -> Complex64 {
        let j = t.partition_point(|&ti| ti <= x).clamp(1, t.len() - 1);
        let (t0, t1) = (t[j - 1], t[j]);
        let w = if t1 > t0 { (x - t0) / (t1 - t0) } else { 0.0 };
        m[j - 1] * (1.0 - w) + m[j] * w
    };
    let amplitude = if t.len() == 1 {
        m[0]
    } else {
        let mut pts: Vec<(f64, Complex64)> = vec![(a, interp(a))];
        for (&ti, &mi) in t.iter().zip(m) {
            if ti > a && ti < b {
                pts.push((ti, mi));
            }
        }
        pts.push((b, interp(b)));
        let mut acc = Complex64::new(0.0, 0.0);
        for w in pts.windows(2) {
            acc += (w[0].1 + w[1].1) * (0.5 * (w[1].0 - w[0].0));
        }
        if b > a {
            acc / (b - a)
        } else {
            pts[0].1
        }
    };
    let symbol = if amplitude.norm() < threshold { Symbol::None } else { Symbol::nearest(amplitude) };
    Ok(EchoReport { t_center, amplitude, intensity: amplitude.norm_sqr(), symbol })
}

/// Detection threshold: `factor` times the Monte Carlo noise floor of `n`
/// sites whose transverse magnitude is `scale`.
pub fn noise_floor_threshold(n: usize, scale: f64, factor: f64) -> f64 {
    factor * scale.abs() / (n as f64).sqrt()
}

/// Expected fractional echo losses `(D1, D2)` for two stored excitations:
/// partial refocusing of the first by the second, and longitudinal
/// magnetisation consumed by the first before the second is written.
pub fn crosstalk_theory(theta1: f64, theta2: f64) -> (f64, f64) {
    ((1.0 - theta2.cos()) / 2.0, 1.0 - theta1.cos())
}

/// Least-squares fit of `y = A exp(−x / tau)` with `tau` fixed; returns `A`
/// and the RMS of the relative residuals.
pub fn fit_fixed_decay(x: &[f64], y: &[f64], tau: f64) -> (f64, f64) {
    let basis: Vec<f64> = x.iter().map(|&xi| (-xi / tau).exp()).collect();
    // minimise Σ (y/b − A)² in relative terms → A = mean(y/b)
    let ratios: Vec<f64> = y.iter().zip(&basis).map(|(&yi, &bi)| yi / bi).collect();
    let a = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let rms = (ratios.iter().map(|r| (r / a - 1.0).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
    (a, rms)
}

/// Log-linear fit of `y = A exp(−x / tau)`; returns `(A, tau)`.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ((my - slope * mx).exp(), -1.0 / slope)
}
