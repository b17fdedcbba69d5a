//! Scalar, matrix-based reference implementation of every engine operation
//! for small ensembles, with proptest strategies for states and events.

use proptest::prelude::*;
use spinmem::engine::{self, SequenceEvent};
use spinmem::{
    Complex64, Ensemble, EnsembleConfig, PhysicalConstants, RelaxationParams, SampleGeometry, SpinSite,
    TransferDirection,
};

pub const TOL: f64 = 1e-12;

pub type Mat3 = [[f64; 3]; 3];

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            out[i] += m[i][k] * v[k];
        }
    }
    out
}

pub fn rx(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub fn rz(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation by `theta` about `(cos φ, sin φ, 0)` as `Rz(φ) Rx(θ) Rz(−φ)`.
pub fn pulse_matrix(theta: f64, phase: f64) -> Mat3 {
    matmul(&rz(phase), &matmul(&rx(theta), &rz(-phase)))
}

#[derive(Clone, Debug)]
pub struct Scalar {
    z: f64,
    r: f64,
    delta: f64,
    s: [f64; 3],
    a: [f64; 2],
}

pub struct Model {
    sites: Vec<Scalar>,
    gamma: f64,
    ratio: f64,
    static_g: f64,
    beta: f64,
    r0: Option<f64>,
    rel: RelaxationParams,
    eta: f64,
}

impl Model {
    pub fn of(e: &Ensemble) -> Self {
        Model {
            sites: e
                .sites
                .iter()
                .map(|s| Scalar { z: s.z, r: s.r, delta: s.delta, s: s.s, a: [s.a_n.re, s.a_n.im] })
                .collect(),
            gamma: e.constants.gamma_e(),
            ratio: e.constants.gamma_ratio_nuclear(),
            static_g: e.static_gradient,
            beta: e.b1_beta,
            r0: e.geometry.radial_extent(),
            rel: e.relaxation,
            eta: e.transfer_fidelity,
        }
    }

    pub fn drive(&self, r: f64) -> f64 {
        match self.r0 {
            Some(r0) => 1.0 + self.beta * (r / r0) * (r / r0),
            None => 1.0,
        }
    }

    pub fn pulse(&mut self, theta: f64, phase: f64) {
        for i in 0..self.sites.len() {
            let m = pulse_matrix(theta * self.drive(self.sites[i].r), phase);
            self.sites[i].s = apply(&m, self.sites[i].s);
        }
    }

    pub fn rf(&mut self, theta: f64, phase: f64) {
        let m = pulse_matrix(theta, phase);
        for site in &mut self.sites {
            let v = apply(&m, [site.a[0], site.a[1], 0.0]);
            site.a = [v[0], v[1]];
        }
    }

    pub fn evolve(&mut self, g: f64, t: f64) {
        for site in &mut self.sites {
            let angle = site.delta * t + self.gamma * self.static_g * site.z * t + self.gamma * g * site.z * t;
            let d2 = (-t / self.rel.t2).exp();
            let rot = rz(angle);
            let v = apply(&rot, [site.s[0], site.s[1], 0.0]);
            site.s[0] = v[0] * d2;
            site.s[1] = v[1] * d2;
            site.s[2] = 1.0 + (site.s[2] - 1.0) * (-t / self.rel.t1).exp();
            let dn = (-t / self.rel.t2n).exp();
            let w = apply(&rz(self.ratio * angle), [site.a[0], site.a[1], 0.0]);
            site.a = [w[0] * dn, w[1] * dn];
        }
    }

    pub fn transfer(&mut self) {
        for site in &mut self.sites {
            let (mx, my) = (site.s[0], site.s[1]);
            site.s[0] = self.eta * site.a[0];
            site.s[1] = self.eta * site.a[1];
            site.a = [self.eta * mx, self.eta * my];
        }
    }

    pub fn acquire(&mut self, duration: f64, dt: f64) -> Vec<[f64; 2]> {
        let n_steps = (duration / dt * (1.0 + 1e-12)).floor() as usize;
        let weights: Vec<f64> = self.sites.iter().map(|s| self.drive(s.r)).collect();
        let mean_w = if self.beta == 0.0 { 1.0 } else { weights.iter().sum::<f64>() / weights.len() as f64 };
        let start = self.sites.clone();
        let mut samples = Vec::new();
        for j in 1..=n_steps {
            let t = j as f64 * dt;
            let mut acc = [0.0, 0.0];
            for (site, w) in start.iter().zip(&weights) {
                let w = if self.beta == 0.0 { 1.0 } else { w / mean_w };
                let angle = (site.delta + self.gamma * self.static_g * site.z) * t;
                let v = apply(&rz(angle), [site.s[0], site.s[1], 0.0]);
                let d = (-t / self.rel.t2).exp();
                acc[0] += w * v[0] * d;
                acc[1] += w * v[1] * d;
            }
            let n = start.len() as f64;
            samples.push([acc[0] / n, acc[1] / n]);
        }
        self.evolve(0.0, duration);
        samples
    }

    pub fn run(&mut self, ev: &SequenceEvent) -> Option<Vec<[f64; 2]>> {
        match *ev {
            SequenceEvent::MicrowavePulse { theta, phase } => self.pulse(theta, phase),
            SequenceEvent::GradientPulse { g, tau } => self.evolve(g, tau),
            SequenceEvent::Delay { t } => self.evolve(0.0, t),
            SequenceEvent::RfPulse { theta, phase } => self.rf(theta, phase),
            SequenceEvent::Transfer(_) => self.transfer(),
            SequenceEvent::Acquire { duration, dt } => return Some(self.acquire(duration, dt)),
        }
        None
    }
}

pub fn bloch() -> impl Strategy<Value = [f64; 3]> {
    (0.0..=1.0f64, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(len, pol, az)| {
        [len * pol.sin() * az.cos(), len * pol.sin() * az.sin(), len * pol.cos()]
    })
}

pub fn coherence() -> impl Strategy<Value = Complex64> {
    (0.0..=1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, p)| Complex64::from_polar(r, p))
}

pub fn site() -> impl Strategy<Value = SpinSite> {
    (-1e-3..1e-3f64, 0.0..1e-3f64, -2e7..2e7f64, bloch(), coherence()).prop_map(|(z, r, delta, s, a_n)| SpinSite {
        z,
        r,
        delta,
        s,
        a_n,
    })
}

pub fn finite_or_inf(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::INFINITY), lo..hi]
}

pub fn ensemble() -> impl Strategy<Value = Ensemble> {
    (
        prop::collection::vec(site(), 1..=8),
        prop_oneof![
            Just(SampleGeometry::TransverseCylinder { r0: 1e-3 }),
            Just(SampleGeometry::Sphere { r0: 1e-3 }),
            Just(SampleGeometry::UniformSlab { d: 2e-3 }),
        ],
        -0.3..0.3f64,
        -0.05..0.05f64,
        (finite_or_inf(1e-6, 1e-3), finite_or_inf(1e-4, 1.0)),
        0.5..=1.0f64,
        -5e-3..5e-3f64,
    )
        .prop_map(|(sites, geometry, b1_beta, static_gradient, (t2, t2n), eta, ratio)| {
            let t1 = if t2.is_finite() { 3.0 * t2 } else { f64::INFINITY };
            let cfg = EnsembleConfig {
                geometry,
                relaxation: RelaxationParams { t2, t2_star: f64::INFINITY, t1, t2n },
                constants: PhysicalConstants::with_nuclear_ratio(ratio).unwrap(),
                static_gradient,
                b1_beta,
                transfer_fidelity: eta,
                ..Default::default()
            };
            Ensemble::from_sites(&cfg, sites).unwrap()
        })
}

pub fn event() -> impl Strategy<Value = SequenceEvent> {
    use std::f64::consts::{PI, TAU};
    prop_oneof![
        (-2.0 * PI..2.0 * PI, 0.0..TAU).prop_map(|(theta, phase)| SequenceEvent::MicrowavePulse { theta, phase }),
        (-0.1..0.1f64, 0.0..5e-6f64).prop_map(|(g, tau)| SequenceEvent::GradientPulse { g, tau }),
        (0.0..5e-6f64).prop_map(|t| SequenceEvent::Delay { t }),
        (-2.0 * PI..2.0 * PI, 0.0..TAU).prop_map(|(theta, phase)| SequenceEvent::RfPulse { theta, phase }),
        prop_oneof![Just(TransferDirection::ElectronToNuclear), Just(TransferDirection::NuclearToElectron)]
            .prop_map(SequenceEvent::Transfer),
        (1usize..40, 1e-8..1e-7f64, 0.0..0.99f64).prop_map(|(n, dt, frac)| SequenceEvent::Acquire {
            duration: (n as f64 + frac) * dt,
            dt
        }),
    ]
}

/// Largest per-component difference between the engine and the reference
/// after running `events` from `e`, over final states and all samples.
pub fn max_deviation(mut e: Ensemble, events: &[SequenceEvent]) -> f64 {
    let mut m = Model::of(&e);
    let signals = engine::run_sequence(&mut e, events).unwrap();
    let expected: Vec<Vec<[f64; 2]>> = events.iter().filter_map(|ev| m.run(ev)).collect();
    let mut worst: f64 = 0.0;
    for (a, b) in e.sites.iter().zip(&m.sites) {
        for c in 0..3 {
            worst = worst.max((a.s[c] - b.s[c]).abs());
        }
        worst = worst.max((a.a_n.re - b.a[0]).abs()).max((a.a_n.im - b.a[1]).abs());
    }
    if signals.len() != expected.len() {
        return f64::INFINITY;
    }
    for (sig, exp) in signals.iter().zip(&expected) {
        if sig.len() != exp.len() {
            return f64::INFINITY;
        }
        for (got, want) in sig.m_plus.iter().zip(exp) {
            worst = worst.max((got.re - want[0]).abs()).max((got.im - want[1]).abs());
        }
    }
    worst
}
