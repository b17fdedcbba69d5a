//! Key-value configuration file.
//!
//! ```text
//! # ensemble
//! n_spins = 100000
//! profile = cylinder        # slab | cylinder | sphere
//! r0_mm = 1.0
//! T2_us = 450
//! T2star_us = 1
//! seed = 20100
//! ```
//!
//! Values may be quoted. `inf` disables a relaxation channel. Numeric values
//! also accept a fraction `a/b`. Keys not listed in [`KEYS`] are rejected.

use std::fmt::Write;

use sha2::{Digest, Sha256};

use crate::constants::PhysicalConstants;
use crate::ensemble::{DetuningDistribution, EnsembleConfig, RelaxationParams, Sampling};
use crate::error::ConfigError;
use crate::geometry::SampleGeometry;
use crate::sequence::PhaseSymbol;

/// A value that may be derived from the rest of the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: Copy> Auto<T> {
    pub fn or(self, derived: impl FnOnce() -> T) -> T {
        match self {
            Auto::Auto => derived(),
            Auto::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Slab,
    Cylinder,
    Sphere,
}

/// Fully resolved simulation and protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_spins: usize,
    pub profile: Profile,
    pub d_mm: f64,
    pub r0_mm: f64,
    pub t2_us: f64,
    pub t2star_us: f64,
    pub t1_us: f64,
    pub t2n_ms: f64,
    pub static_gradient_mt_m: Auto<f64>,
    pub gamma_ratio_nuclear: f64,
    pub b1_beta: f64,
    pub detuning_dist: DetuningDistribution,
    pub sampling: Sampling,
    pub transfer_fidelity: f64,
    pub seed: u64,

    /// Gradient pulse duration.
    pub grad_us: f64,
    /// Gradient pulse amplitude; `auto` picks the overlap zero nearest 30 mT/m.
    pub grad_mt_m: Auto<f64>,
    pub refocus_phase: PhaseSymbol,
    pub dt_us: f64,
    /// Echo window half-width; `auto` is 2·T2*.
    pub halfwidth_us: Auto<f64>,
    pub threshold_factor: f64,
    /// Small tip for the register experiments, in units of π.
    pub tip_pi: f64,
    pub tip1_pi: f64,
    pub tip2_pi: f64,
    pub phases: Vec<PhaseSymbol>,
    pub spacing_us: f64,
    pub n_pulses: usize,
    /// Register contents; `auto` draws ±x from the seed.
    pub symbols: Auto<()>,
    pub symbol_list: Vec<PhaseSymbol>,
    pub nuclear_wait_us: f64,
    pub kr0_max: f64,
    pub k_points: usize,
    pub theta_min_pi: f64,
    pub theta_max_pi: f64,
    pub theta_points: usize,
}

/// Every recognised key, in canonical order.
pub const KEYS: &[&str] = &[
    "n_spins",
    "profile",
    "d_mm",
    "r0_mm",
    "T2_us",
    "T2star_us",
    "T1_us",
    "T2n_ms",
    "static_gradient_mT_m",
    "gamma_ratio_nuclear",
    "b1_beta",
    "detuning_dist",
    "sampling",
    "transfer_fidelity",
    "seed",
    "grad_us",
    "grad_mT_m",
    "refocus_phase",
    "dt_us",
    "halfwidth_us",
    "threshold_factor",
    "tip_pi",
    "tip1_pi",
    "tip2_pi",
    "phases",
    "spacing_us",
    "n_pulses",
    "symbols",
    "nuclear_wait_us",
    "kr0_max",
    "k_points",
    "theta_min_pi",
    "theta_max_pi",
    "theta_points",
];

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_spins: 100_000,
            profile: Profile::Cylinder,
            d_mm: 3.0,
            r0_mm: 1.0,
            t2_us: 450.0,
            t2star_us: 1.0,
            t1_us: f64::INFINITY,
            t2n_ms: 1000.0,
            static_gradient_mt_m: Auto::Value(0.0),
            gamma_ratio_nuclear: crate::constants::PHOSPHORUS_NUCLEAR_RATIO,
            b1_beta: 0.0,
            detuning_dist: DetuningDistribution::Lorentzian,
            sampling: Sampling::MonteCarlo,
            transfer_fidelity: 1.0,
            seed: 20100,
            grad_us: 1.3,
            grad_mt_m: Auto::Auto,
            refocus_phase: PhaseSymbol::PlusY,
            dt_us: 0.05,
            halfwidth_us: Auto::Auto,
            threshold_factor: 3.0,
            tip_pi: 0.005,
            tip1_pi: 1.0 / 6.0,
            tip2_pi: 1.0 / 6.0,
            phases: vec![PhaseSymbol::PlusX, PhaseSymbol::MinusX],
            spacing_us: 3.0,
            n_pulses: 100,
            symbols: Auto::Auto,
            symbol_list: Vec::new(),
            nuclear_wait_us: 50.0,
            kr0_max: 12.0,
            k_points: 61,
            theta_min_pi: 0.02,
            theta_max_pi: 0.6,
            theta_points: 10,
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), message: message.into() }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let v = v.trim();
    if v == "inf" {
        return Ok(f64::INFINITY);
    }
    if let Some((a, b)) = v.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad(key, format!("not a number: `{v}`")))?;
        let b: f64 = b.trim().parse().map_err(|_| bad(key, format!("not a number: `{v}`")))?;
        return Ok(a / b);
    }
    v.parse().map_err(|_| bad(key, format!("not a number: `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse().map_err(|_| bad(key, format!("not a non-negative integer: `{v}`")))
}

fn parse_auto(key: &str, v: &str) -> Result<Auto<f64>, ConfigError> {
    if v.trim() == "auto" {
        Ok(Auto::Auto)
    } else {
        parse_f64(key, v).map(Auto::Value)
    }
}

fn parse_phase(key: &str, v: &str) -> Result<PhaseSymbol, ConfigError> {
    PhaseSymbol::parse(v.trim()).ok_or_else(|| bad(key, format!("expected +x, -x, +y or -y, got `{v}`")))
}

fn parse_phases(key: &str, v: &str) -> Result<Vec<PhaseSymbol>, ConfigError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_phase(key, s)).collect()
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

fn fmt_auto(v: &Auto<f64>) -> String {
    match v {
        Auto::Auto => "auto".into(),
        Auto::Value(x) => fmt_f64(*x),
    }
}

fn fmt_phases(p: &[PhaseSymbol]) -> String {
    p.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
}

impl SimConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim().trim_matches('"');
        match key {
            "n_spins" => self.n_spins = parse_usize(key, v)?,
            "profile" => {
                self.profile = match v {
                    "slab" => Profile::Slab,
                    "cylinder" => Profile::Cylinder,
                    "sphere" => Profile::Sphere,
                    _ => return Err(bad(key, "expected slab, cylinder or sphere")),
                }
            }
            "d_mm" => self.d_mm = parse_f64(key, v)?,
            "r0_mm" => self.r0_mm = parse_f64(key, v)?,
            "T2_us" => self.t2_us = parse_f64(key, v)?,
            "T2star_us" => self.t2star_us = parse_f64(key, v)?,
            "T1_us" => self.t1_us = parse_f64(key, v)?,
            "T2n_ms" => self.t2n_ms = parse_f64(key, v)?,
            "static_gradient_mT_m" => self.static_gradient_mt_m = parse_auto(key, v)?,
            "gamma_ratio_nuclear" => self.gamma_ratio_nuclear = parse_f64(key, v)?,
            "b1_beta" => self.b1_beta = parse_f64(key, v)?,
            "detuning_dist" => {
                self.detuning_dist = match v {
                    "lorentzian" => DetuningDistribution::Lorentzian,
                    "gaussian" => DetuningDistribution::Gaussian,
                    _ => return Err(bad(key, "expected lorentzian or gaussian")),
                }
            }
            "sampling" => {
                self.sampling = match v {
                    "mc" => Sampling::MonteCarlo,
                    "grid" => Sampling::Grid,
                    _ => return Err(bad(key, "expected mc or grid")),
                }
            }
            "transfer_fidelity" => self.transfer_fidelity = parse_f64(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| bad(key, format!("not an unsigned integer: `{v}`")))?,
            "grad_us" => self.grad_us = parse_f64(key, v)?,
            "grad_mT_m" => self.grad_mt_m = parse_auto(key, v)?,
            "refocus_phase" => self.refocus_phase = parse_phase(key, v)?,
            "dt_us" => self.dt_us = parse_f64(key, v)?,
            "halfwidth_us" => self.halfwidth_us = parse_auto(key, v)?,
            "threshold_factor" => self.threshold_factor = parse_f64(key, v)?,
            "tip_pi" => self.tip_pi = parse_f64(key, v)?,
            "tip1_pi" => self.tip1_pi = parse_f64(key, v)?,
            "tip2_pi" => self.tip2_pi = parse_f64(key, v)?,
            "phases" => self.phases = parse_phases(key, v)?,
            "spacing_us" => self.spacing_us = parse_f64(key, v)?,
            "n_pulses" => self.n_pulses = parse_usize(key, v)?,
            "symbols" => {
                if v == "auto" {
                    self.symbols = Auto::Auto;
                    self.symbol_list.clear();
                } else {
                    self.symbols = Auto::Value(());
                    self.symbol_list = parse_phases(key, v)?;
                }
            }
            "nuclear_wait_us" => self.nuclear_wait_us = parse_f64(key, v)?,
            "kr0_max" => self.kr0_max = parse_f64(key, v)?,
            "k_points" => self.k_points = parse_usize(key, v)?,
            "theta_min_pi" => self.theta_min_pi = parse_f64(key, v)?,
            "theta_max_pi" => self.theta_max_pi = parse_f64(key, v)?,
            "theta_points" => self.theta_points = parse_usize(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Current value of `key` in canonical text form.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "n_spins" => self.n_spins.to_string(),
            "profile" => match self.profile {
                Profile::Slab => "slab",
                Profile::Cylinder => "cylinder",
                Profile::Sphere => "sphere",
            }
            .into(),
            "d_mm" => fmt_f64(self.d_mm),
            "r0_mm" => fmt_f64(self.r0_mm),
            "T2_us" => fmt_f64(self.t2_us),
            "T2star_us" => fmt_f64(self.t2star_us),
            "T1_us" => fmt_f64(self.t1_us),
            "T2n_ms" => fmt_f64(self.t2n_ms),
            "static_gradient_mT_m" => fmt_auto(&self.static_gradient_mt_m),
            "gamma_ratio_nuclear" => fmt_f64(self.gamma_ratio_nuclear),
            "b1_beta" => fmt_f64(self.b1_beta),
            "detuning_dist" => match self.detuning_dist {
                DetuningDistribution::Lorentzian => "lorentzian",
                DetuningDistribution::Gaussian => "gaussian",
            }
            .into(),
            "sampling" => match self.sampling {
                Sampling::MonteCarlo => "mc",
                Sampling::Grid => "grid",
            }
            .into(),
            "transfer_fidelity" => fmt_f64(self.transfer_fidelity),
            "seed" => self.seed.to_string(),
            "grad_us" => fmt_f64(self.grad_us),
            "grad_mT_m" => fmt_auto(&self.grad_mt_m),
            "refocus_phase" => self.refocus_phase.as_str().into(),
            "dt_us" => fmt_f64(self.dt_us),
            "halfwidth_us" => fmt_auto(&self.halfwidth_us),
            "threshold_factor" => fmt_f64(self.threshold_factor),
            "tip_pi" => fmt_f64(self.tip_pi),
            "tip1_pi" => fmt_f64(self.tip1_pi),
            "tip2_pi" => fmt_f64(self.tip2_pi),
            "phases" => fmt_phases(&self.phases),
            "spacing_us" => fmt_f64(self.spacing_us),
            "n_pulses" => self.n_pulses.to_string(),
            "symbols" => match self.symbols {
                Auto::Auto => "auto".into(),
                Auto::Value(()) => fmt_phases(&self.symbol_list),
            },
            "nuclear_wait_us" => fmt_f64(self.nuclear_wait_us),
            "kr0_max" => fmt_f64(self.kr0_max),
            "k_points" => self.k_points.to_string(),
            "theta_min_pi" => fmt_f64(self.theta_min_pi),
            "theta_max_pi" => fmt_f64(self.theta_max_pi),
            "theta_points" => self.theta_points.to_string(),
            _ => return None,
        })
    }

    pub fn is_key(key: &str) -> bool {
        KEYS.contains(&key)
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let k = k.trim();
            self.set(k, v).map_err(|e| match e {
                ConfigError::UnknownKey(_) | ConfigError::BadValue { .. } => ConfigError::Syntax {
                    line: i + 1,
                    message: e.to_string(),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies `key=value` overrides (e.g. from `--set`).
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: 0, message: format!("expected key=value, got `{o}`") })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// All keys in canonical order, one `key = value` per line.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).expect("every listed key has a getter"));
        }
        out
    }

    /// SHA-256 of the canonical form; changes iff a resolved value changes.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical().as_bytes()))
    }

    pub fn geometry(&self) -> SampleGeometry {
        match self.profile {
            Profile::Slab => SampleGeometry::UniformSlab { d: self.d_mm * 1e-3 },
            Profile::Cylinder => SampleGeometry::TransverseCylinder { r0: self.r0_mm * 1e-3 },
            Profile::Sphere => SampleGeometry::Sphere { r0: self.r0_mm * 1e-3 },
        }
    }

    pub fn relaxation(&self) -> RelaxationParams {
        RelaxationParams {
            t2: self.t2_us * 1e-6,
            t2_star: self.t2star_us * 1e-6,
            t1: self.t1_us * 1e-6,
            t2n: self.t2n_ms * 1e-3,
        }
    }

    /// Ensemble configuration; an `auto` static gradient resolves to zero
    /// here (experiments that need one derive it first).
    pub fn ensemble_config(&self) -> Result<EnsembleConfig, ConfigError> {
        let cfg = EnsembleConfig {
            geometry: self.geometry(),
            relaxation: self.relaxation(),
            constants: PhysicalConstants::with_nuclear_ratio(self.gamma_ratio_nuclear)?,
            static_gradient: self.static_gradient_mt_m.or(|| 0.0) * 1e-3,
            b1_beta: self.b1_beta,
            detuning: self.detuning_dist,
            sampling: self.sampling,
            transfer_fidelity: self.transfer_fidelity,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Echo window half-width in seconds.
    pub fn halfwidth(&self) -> f64 {
        self.halfwidth_us.or(|| 2.0 * self.t2star_us) * 1e-6
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}
