use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::fig1::acquisition_half;
use super::{read_echo, resolve_gradient, simulate, symbol_of, threshold, Bindings, Comparison, Curve, ExperimentReport};
use crate::analysis::{crosstalk_theory, display_transform, EchoReport, Symbol};
use crate::config::SimConfig;
use crate::engine::{SequenceEvent, Signal};
use crate::ensemble::Ensemble;
use crate::error::ExperimentError;
use crate::sequence::PhaseSymbol;
use crate::Complex64;

/// Second storage pulse and first refocusing pulse, in µs.
const P2_US: f64 = 8.0;
const PI1_US: f64 = 20.0;
/// Second refocusing pulse of the same-order program, in µs.
const PI2_US: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecallOrder {
    /// First stored, first recalled (two refocusing pulses).
    Same,
    /// Last stored, first recalled.
    Inverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Result {
    pub order: RecallOrder,
    pub theta: (f64, f64),
    pub phases: (PhaseSymbol, PhaseSymbol),
    /// Echoes in time order, symbols decoded as pulse phases.
    pub echoes: Vec<EchoReport>,
    /// Index of the storage pulse (0 or 1) behind each echo.
    pub sources: Vec<usize>,
    /// Echo of the same pulse with the other pulse switched off.
    pub references: Vec<EchoReport>,
    /// Receiver-frame transient of the full program.
    pub display: Signal,
}

impl Fig2Result {
    /// Expected symbols in echo-time order.
    pub fn expected_symbols(&self) -> Vec<Symbol> {
        self.sources.iter().map(|&s| symbol_of(if s == 0 { self.phases.0 } else { self.phases.1 })).collect()
    }

    pub fn decoded_symbols(&self) -> Vec<Symbol> {
        self.echoes.iter().map(|e| e.symbol).collect()
    }

    /// `(I/I_ref) / (1 − D)²` for each echo; one when the losses follow the
    /// crosstalk laws.
    pub fn intensity_ratios(&self) -> Vec<f64> {
        let (d1, d2) = crosstalk_theory(self.theta.0, self.theta.1);
        self.echoes
            .iter()
            .zip(&self.references)
            .zip(&self.sources)
            .map(|((e, r), &s)| {
                let keep = if s == 0 { 1.0 - d1 } else { 1.0 - d2 };
                e.intensity / r.intensity / (keep * keep)
            })
            .collect()
    }

    pub fn report(&self, cfg: &SimConfig) -> ExperimentReport {
        let name = match self.order {
            RecallOrder::Same => "fig2a",
            RecallOrder::Inverse => "fig2b",
        };
        let mut r = ExperimentReport::new(name, cfg);
        r.echoes = self.echoes.iter().map(Into::into).collect();
        let expected = self.expected_symbols();
        let correct = self.decoded_symbols().iter().zip(&expected).filter(|(a, b)| a == b).count();
        r.comparisons.push(Comparison::within("symbols_decoded", correct as f64, expected.len() as f64, 0.0));
        for (i, ratio) in self.intensity_ratios().into_iter().enumerate() {
            let name = format!("echo_{}_intensity_vs_crosstalk_theory", i + 1);
            r.comparisons.push(Comparison::within(&name, ratio, 1.0, 0.03));
        }
        r
    }
}

struct Fig2Program {
    events: Vec<SequenceEvent>,
    /// `(echo time, source pulse)` in time order, seconds.
    echoes: Vec<(f64, usize)>,
    pi_times: Vec<f64>,
}

fn fig2_program(
    cfg: &SimConfig,
    order: RecallOrder,
    theta: (f64, f64),
    phases: (PhaseSymbol, PhaseSymbol),
) -> Result<Fig2Program, ExperimentError> {
    let tau = cfg.grad_us;
    let h = acquisition_half(cfg);
    let b = Bindings::default()
        .angle("theta1", theta.0)
        .angle("theta2", theta.1)
        .phase("phi1", phases.0)
        .phase("phi2", phases.1)
        .gradient("G", resolve_gradient(cfg)?)
        .us("tau", tau)?
        .phase("refocus", cfg.refocus_phase)
        .us("gap1", P2_US - tau)?
        .us("gap2", PI1_US - P2_US - tau)?
        .us("window", 2.0 * h)?
        .us("dt", cfg.dt_us)?;
    let e1 = 2.0 * PI1_US;
    let (program, echoes, pi_times, b) = match order {
        RecallOrder::Inverse => {
            let e2 = 2.0 * PI1_US - P2_US;
            let b = b.us("lead1", e2 - h - (PI1_US + tau))?.us("lead2", e1 - h - (e2 + h + tau))?;
            ("fig2b", vec![(e2, 1), (e1, 0)], vec![PI1_US], b)
        }
        RecallOrder::Same => {
            let e2 = 2.0 * PI2_US - (2.0 * PI1_US - P2_US);
            let b = b
                .us("lead1", e1 - h - (PI1_US + 2.0 * tau))?
                .us("gap3", PI2_US - (e1 + h))?
                .us("lead2", e2 - h - (PI2_US + tau))?;
            ("fig2a", vec![(e1, 0), (e2, 1)], vec![PI1_US, PI2_US], b)
        }
    };
    Ok(Fig2Program {
        events: b.compile(program)?,
        echoes: echoes.into_iter().map(|(t, s)| (t * 1e-6, s)).collect(),
        pi_times: pi_times.into_iter().map(|t| t * 1e-6).collect(),
    })
}

fn fig2_echoes(
    cfg: &SimConfig,
    ensemble: &Ensemble,
    order: RecallOrder,
    theta: (f64, f64),
    phases: (PhaseSymbol, PhaseSymbol),
) -> Result<(Vec<EchoReport>, Fig2Program, Signal), ExperimentError> {
    let program = fig2_program(cfg, order, theta, phases)?;
    let signal = simulate(ensemble, &program.events)?;
    let pulse_time = [0.0, P2_US * 1e-6];
    let thetas = [theta.0, theta.1];
    let echoes = program
        .echoes
        .iter()
        .map(|&(t, s)| {
            read_echo(&signal, &program.events, pulse_time[s], t, cfg.halfwidth(), threshold(cfg, thetas[s]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((echoes, program, signal))
}

/// Two pulses written into modes `2k` and `k` and recalled in the requested
/// order.
pub fn experiment_fig2(
    cfg: &SimConfig,
    order: RecallOrder,
    phases: (PhaseSymbol, PhaseSymbol),
) -> Result<Fig2Result, ExperimentError> {
    let theta = (cfg.tip1_pi * PI, cfg.tip2_pi * PI);
    let ensemble = super::ensemble_for(cfg)?;
    let (echoes, program, signal) = fig2_echoes(cfg, &ensemble, order, theta, phases)?;
    let sources: Vec<usize> = program.echoes.iter().map(|&(_, s)| s).collect();
    let mut references = Vec::new();
    for (k, &s) in sources.iter().enumerate() {
        let alone = if s == 0 { (theta.0, 0.0) } else { (0.0, theta.1) };
        references.push(fig2_echoes(cfg, &ensemble, order, alone, phases)?.0[k]);
    }
    Ok(Fig2Result {
        order,
        theta,
        phases,
        echoes,
        sources,
        references,
        display: display_transform(&signal, &program.pi_times),
    })
}

/// Fractional echo losses of two stored excitations against the theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrosstalkReport {
    pub theta1: f64,
    pub theta2: f64,
    #[serde(rename = "D1")]
    pub d1: f64,
    #[serde(rename = "D2")]
    pub d2: f64,
    #[serde(rename = "D1_theory")]
    pub d1_theory: f64,
    #[serde(rename = "D2_theory")]
    pub d2_theory: f64,
}

/// The tip-angle grid `theta_points` values evenly spaced over
/// `[theta_min_pi, theta_max_pi]·π`.
pub fn theta_grid(cfg: &SimConfig) -> Vec<f64> {
    let n = cfg.theta_points.max(1);
    (0..n)
        .map(|i| {
            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (cfg.theta_min_pi + f * (cfg.theta_max_pi - cfg.theta_min_pi)) * PI
        })
        .collect()
}

/// `D = (I₀ − I)/I₀` over the tip-angle grid, where `I` is the integrated
/// echo with both excitations stored and `I₀` with the other one off.
pub fn experiment_crosstalk(
    cfg: &SimConfig,
    phases: (PhaseSymbol, PhaseSymbol),
) -> Result<Vec<CrosstalkReport>, ExperimentError> {
    let grid = theta_grid(cfg);
    if grid.iter().any(|t| !(0.0..=PI).contains(t)) {
        return Err(ExperimentError::Precondition("tip angles must lie in [0, π]".into()));
    }
    let ensemble = super::ensemble_for(cfg)?;
    let order = RecallOrder::Inverse;
    // echo 0 is the second pulse, echo 1 the first
    let run = |t1: f64, t2: f64| -> Result<(Complex64, Complex64), ExperimentError> {
        let (e, _, _) = fig2_echoes(cfg, &ensemble, order, (t1, t2), phases)?;
        Ok((e[1].amplitude, e[0].amplitude))
    };
    let alone1: Vec<Complex64> = grid.par_iter().map(|&t1| run(t1, 0.0).map(|r| r.0)).collect::<Result<_, _>>()?;
    let alone2: Vec<Complex64> = grid.par_iter().map(|&t2| run(0.0, t2).map(|r| r.1)).collect::<Result<_, _>>()?;
    let pairs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..grid.len()).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let (t1, t2) = (grid[i], grid[j]);
            let (a1, a2) = run(t1, t2)?;
            let (d1_theory, d2_theory) = crosstalk_theory(t1, t2);
            Ok(CrosstalkReport {
                theta1: t1,
                theta2: t2,
                d1: fractional_loss(a1, alone1[i]),
                d2: fractional_loss(a2, alone2[j]),
                d1_theory,
                d2_theory,
            })
        })
        .collect()
}

/// `1 − A/A₀` with `A` projected on the reference echo, so an echo that
/// changes sign counts as a loss beyond one.
fn fractional_loss(a: Complex64, a0: Complex64) -> f64 {
    1.0 - (a * a0.conj()).re / a0.norm_sqr()
}

/// Largest spread of `value` across reports sharing the same `key`.
fn max_spread(reports: &[CrosstalkReport], key: impl Fn(&CrosstalkReport) -> f64, value: impl Fn(&CrosstalkReport) -> f64) -> f64 {
    let mut keys: Vec<f64> = reports.iter().map(&key).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    keys.iter()
        .map(|&k| {
            let vals = reports.iter().filter(|r| key(r) == k).map(&value);
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo
        })
        .fold(0.0, f64::max)
}

pub(crate) fn crosstalk_report(cfg: &SimConfig, reports: Vec<CrosstalkReport>) -> ExperimentReport {
    let mut r = ExperimentReport::new("crosstalk", cfg);
    let max_d1 = reports.iter().map(|c| (c.d1 - c.d1_theory).abs()).fold(0.0, f64::max);
    let max_d2 = reports.iter().map(|c| (c.d2 - c.d2_theory).abs()).fold(0.0, f64::max);
    r.comparisons.push(Comparison::at_most("max_abs_D1_deviation", max_d1, 0.0, 0.005));
    r.comparisons.push(Comparison::at_most("max_abs_D2_deviation", max_d2, 0.0, 0.005));
    r.comparisons.push(Comparison::at_most("D1_spread_over_theta1", max_spread(&reports, |c| c.theta2, |c| c.d1), 0.0, 0.005));
    r.comparisons.push(Comparison::at_most("D2_spread_over_theta2", max_spread(&reports, |c| c.theta1, |c| c.d2), 0.0, 0.005));
    r.curves.push(Curve {
        name: "crosstalk_D1".into(),
        x: reports.iter().map(|c| c.theta2 / PI).collect(),
        measured: reports.iter().map(|c| c.d1).collect(),
        theory: reports.iter().map(|c| c.d1_theory).collect(),
    });
    r.curves.push(Curve {
        name: "crosstalk_D2".into(),
        x: reports.iter().map(|c| c.theta1 / PI).collect(),
        measured: reports.iter().map(|c| c.d2).collect(),
        theory: reports.iter().map(|c| c.d2_theory).collect(),
    });
    r.crosstalk = reports;
    r
}
