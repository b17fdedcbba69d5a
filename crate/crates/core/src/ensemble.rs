//! The spin ensemble data model and its construction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constants::PhysicalConstants;
use crate::error::EnsembleError;
use crate::geometry::SampleGeometry;

/// Relaxation times in seconds. `f64::INFINITY` disables a channel.
///
/// `t2_star` describes the residual static inhomogeneity only; dephasing from
/// a configured static gradient comes on top of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    pub t2: f64,
    pub t2_star: f64,
    pub t1: f64,
    pub t2n: f64,
}

impl RelaxationParams {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        for (name, v) in [("T2", self.t2), ("T2*", self.t2_star), ("T1", self.t1), ("T2n", self.t2n)] {
            if v.is_nan() || v <= 0.0 {
                return Err(EnsembleError::Relaxation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.t2_star.is_finite() && self.t2_star > self.t2 {
            return Err(EnsembleError::Relaxation(format!(
                "T2* ({}) exceeds T2 ({})",
                self.t2_star, self.t2
            )));
        }
        // T2 <= T1 keeps |s| non-increasing under relaxation.
        if self.t2 > self.t1 {
            return Err(EnsembleError::Relaxation(format!("T2 ({}) exceeds T1 ({})", self.t2, self.t1)));
        }
        Ok(())
    }

    /// No decay and no inhomogeneous broadening.
    pub fn ideal() -> Self {
        Self { t2: f64::INFINITY, t2_star: f64::INFINITY, t1: f64::INFINITY, t2n: f64::INFINITY }
    }
}

impl Default for RelaxationParams {
    fn default() -> Self {
        Self { t2: 450e-6, t2_star: 1e-6, t1: f64::INFINITY, t2n: 1.0 }
    }
}

/// Static detuning lineshape. Both are parameterised so that the free
/// induction decay falls to `1/e` at `t2_star`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetuningDistribution {
    /// Half width at half maximum `1/T2*`: exponential FID.
    #[default]
    Lorentzian,
    /// Standard deviation `√2/T2*`: Gaussian FID `exp(−(t/T2*)²)`.
    Gaussian,
}

impl DetuningDistribution {
    fn quantile(&self, p: f64, t2_star: f64) -> f64 {
        match self {
            DetuningDistribution::Lorentzian => (PI * (p - 0.5)).tan() / t2_star,
            DetuningDistribution::Gaussian => std::f64::consts::SQRT_2 / t2_star * normal_quantile(p),
        }
    }
}

/// How sites are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Independent draws from the spatial density and detuning lineshape.
    #[default]
    MonteCarlo,
    /// Deterministic product grid: `z` at quantile midpoints of the spatial
    /// density crossed with detunings at quantile midpoints of the lineshape.
    /// Overlap sums then follow the analytic curves with quadrature rather
    /// than `1/√N` accuracy.
    Grid,
}

/// Everything needed to build an [`Ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub geometry: SampleGeometry,
    pub relaxation: RelaxationParams,
    pub constants: PhysicalConstants,
    /// Static gradient along `z` in T/m.
    pub static_gradient: f64,
    /// Second-order radial drive-field inhomogeneity coefficient.
    pub b1_beta: f64,
    pub detuning: DetuningDistribution,
    pub sampling: Sampling,
    /// Amplitude fidelity of electron/nuclear coherence swaps.
    pub transfer_fidelity: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            geometry: SampleGeometry::default(),
            relaxation: RelaxationParams::default(),
            constants: PhysicalConstants::default(),
            static_gradient: 0.0,
            b1_beta: 0.0,
            detuning: DetuningDistribution::default(),
            sampling: Sampling::default(),
            transfer_fidelity: 1.0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        self.geometry.validate()?;
        self.relaxation.validate()?;
        if !self.static_gradient.is_finite() {
            return Err(EnsembleError::Parameter("static gradient must be finite".into()));
        }
        if !self.b1_beta.is_finite() {
            return Err(EnsembleError::Parameter("b1_beta must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.transfer_fidelity) {
            return Err(EnsembleError::Parameter(format!(
                "transfer fidelity must lie in [0, 1], got {}",
                self.transfer_fidelity
            )));
        }
        Ok(())
    }
}

/// One member of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSite {
    /// Position along the gradient axis, m.
    pub z: f64,
    /// Radial position used for drive-field inhomogeneity, m.
    pub r: f64,
    /// Static detuning, rad/s.
    pub delta: f64,
    /// Electron Bloch vector.
    pub s: [f64; 3],
    /// Nuclear coherence amplitude.
    pub a_n: Complex64,
}

impl SpinSite {
    pub fn at_rest(z: f64, r: f64, delta: f64) -> Self {
        Self { z, r, delta, s: [0.0, 0.0, 1.0], a_n: Complex64::new(0.0, 0.0) }
    }

    /// `sx + i sy`.
    #[inline]
    pub fn transverse(&self) -> Complex64 {
        Complex64::new(self.s[0], self.s[1])
    }

    #[inline]
    pub fn set_transverse(&mut self, m: Complex64) {
        self.s[0] = m.re;
        self.s[1] = m.im;
    }

    pub fn norm(&self) -> f64 {
        (self.s[0] * self.s[0] + self.s[1] * self.s[1] + self.s[2] * self.s[2]).sqrt()
    }
}

/// The spin collection plus the physical configuration that drives it.
///
/// Site order is fixed at construction; every reduction over sites runs in a
/// fixed order so that results do not depend on the thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub sites: Vec<SpinSite>,
    pub constants: PhysicalConstants,
    pub geometry: SampleGeometry,
    pub relaxation: RelaxationParams,
    pub static_gradient: f64,
    pub b1_beta: f64,
    pub rng_seed: u64,
    pub transfer_fidelity: f64,
    /// Elapsed sequence time in seconds.
    pub clock: f64,
    detection_norm: f64,
}

impl Ensemble {
    /// Builds an ensemble from explicit sites, e.g. for hand-computed checks.
    pub fn from_sites(config: &EnsembleConfig, sites: Vec<SpinSite>) -> Result<Self, EnsembleError> {
        config.validate()?;
        if sites.is_empty() {
            return Err(EnsembleError::NoSpins);
        }
        let mut e = Ensemble {
            sites,
            constants: config.constants,
            geometry: config.geometry,
            relaxation: config.relaxation,
            static_gradient: config.static_gradient,
            b1_beta: config.b1_beta,
            rng_seed: 0,
            transfer_fidelity: config.transfer_fidelity,
            clock: 0.0,
            detection_norm: 1.0,
        };
        e.detection_norm = e.compute_detection_norm();
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Relative drive-field strength at radius `r`: `1 + β (r/r0)²`.
    #[inline]
    pub fn b1_scale(&self, r: f64) -> f64 {
        self.drive_profile().scale(r)
    }

    pub fn drive_profile(&self) -> DriveProfile {
        DriveProfile { r0: self.geometry.radial_extent(), beta: self.b1_beta }
    }

    /// Reciprocal detection weight of a site, normalised to mean one across
    /// the ensemble. Exactly one when `b1_beta == 0`.
    #[inline]
    pub fn detection_weight(&self, r: f64) -> f64 {
        if self.b1_beta == 0.0 {
            1.0
        } else {
            self.b1_scale(r) / self.detection_norm
        }
    }

    fn compute_detection_norm(&self) -> f64 {
        if self.b1_beta == 0.0 {
            return 1.0;
        }
        self.sites.iter().map(|s| self.b1_scale(s.r)).sum::<f64>() / self.sites.len() as f64
    }

    /// Free-precession frequency of a site: detuning plus static gradient.
    #[inline]
    pub fn precession(&self, site: &SpinSite) -> f64 {
        site.delta + self.constants.gamma_e() * self.static_gradient * site.z
    }

    /// Unweighted mean of `sx + i sy`, summed in site order.
    pub fn mean_transverse(&self) -> Complex64 {
        let sum: Complex64 = self.sites.iter().map(|s| s.transverse()).sum();
        sum / self.sites.len() as f64
    }
}

/// Radial drive-field inhomogeneity `1 + β (r/r0)²`; flat for the slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProfile {
    r0: Option<f64>,
    beta: f64,
}

impl DriveProfile {
    #[inline]
    pub fn scale(&self, r: f64) -> f64 {
        match self.r0 {
            Some(r0) if self.beta != 0.0 => {
                let q = r / r0;
                1.0 + self.beta * q * q
            }
            _ => 1.0,
        }
    }
}

/// Spatial wavenumber written by a gradient `g` (T/m) applied for `tau` (s):
/// `k = γ_e g τ`, so a site at `z` acquires phase `k z`.
pub fn wavenumber(g: f64, tau: f64, constants: &PhysicalConstants) -> f64 {
    constants.gamma_e() * g * tau
}

/// Samples `n_spins` sites and returns the ensemble in its initial state
/// (all Bloch vectors along `+z`, nuclear registers empty).
pub fn build_ensemble(config: &EnsembleConfig, n_spins: usize, seed: u64) -> Result<Ensemble, EnsembleError> {
    config.validate()?;
    if n_spins == 0 {
        return Err(EnsembleError::NoSpins);
    }
    let sites = match config.sampling {
        Sampling::MonteCarlo => sample_monte_carlo(config, n_spins, seed),
        Sampling::Grid => sample_grid(config, n_spins),
    };
    let mut e = Ensemble::from_sites(config, sites)?;
    e.rng_seed = seed;
    Ok(e)
}

fn sample_monte_carlo(config: &EnsembleConfig, n: usize, seed: u64) -> Vec<SpinSite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t2s = config.relaxation.t2_star;
    (0..n)
        .map(|_| {
            let u = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let (z, r) = config.geometry.point_from_uniform(u);
            let delta = if t2s.is_finite() {
                match config.detuning {
                    DetuningDistribution::Lorentzian => {
                        // open interval keeps tan finite
                        let p: f64 = rng.random_range(f64::EPSILON..1.0);
                        DetuningDistribution::Lorentzian.quantile(p, t2s)
                    }
                    DetuningDistribution::Gaussian => {
                        let x: f64 = StandardNormal.sample(&mut rng);
                        std::f64::consts::SQRT_2 / t2s * x
                    }
                }
            } else {
                0.0
            };
            SpinSite::at_rest(z, r, delta)
        })
        .collect()
}

/// Splits `n` into `(n_z, n_delta)` with `n_z * n_delta == n`, taking the
/// largest divisor not above `√n` for the detuning axis.
pub fn grid_shape(n: usize, broadened: bool) -> (usize, usize) {
    if !broadened {
        return (n, 1);
    }
    let mut nd = (n as f64).sqrt().floor() as usize;
    while nd > 1 && n % nd != 0 {
        nd -= 1;
    }
    (n / nd.max(1), nd.max(1))
}

fn sample_grid(config: &EnsembleConfig, n: usize) -> Vec<SpinSite> {
    let t2s = config.relaxation.t2_star;
    let (nz, nd) = grid_shape(n, t2s.is_finite());
    let deltas: Vec<f64> = if t2s.is_finite() {
        (0..nd).map(|j| config.detuning.quantile((j as f64 + 0.5) / nd as f64, t2s)).collect()
    } else {
        vec![0.0]
    };
    // golden-ratio sequence for the transverse position inside each slice
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut sites = Vec::with_capacity(n);
    for i in 0..nz {
        let z = config.geometry.quantile((i as f64 + 0.5) / nz as f64);
        for (j, &delta) in deltas.iter().enumerate() {
            let u = ((i * nd + j) as f64 * golden + 0.5).fract();
            let r = config.geometry.radial_given_z(z, u);
            sites.push(SpinSite::at_rest(z, r, delta));
        }
    }
    sites
}

/// Acklam's rational approximation refined by one Halley step; accurate to
/// double precision over (0, 1).
fn normal_quantile(p: f64) -> f64 {
    if p > 0.5 {
        return -normal_quantile(1.0 - p);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    let plow = 0.024_25;
    let x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement against erfc
    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Complementary error function (Numerical Recipes `erfcc`, |rel err| < 1.2e-7,
/// adequate for one Halley correction step).
#[cfg(test)]
mod tests {
    use super::*;

    fn slab(d: f64) -> EnsembleConfig {
        EnsembleConfig { geometry: SampleGeometry::UniformSlab { d }, ..Default::default() }
    }

    #[test]
    fn small_slab_initial_state() {
        let e = build_ensemble(&slab(3e-3), 4, 7).unwrap();
        assert_eq!(e.len(), 4);
        for s in &e.sites {
            assert!(s.z >= -1.5e-3 && s.z <= 1.5e-3);
            assert_eq!(s.s, [0.0, 0.0, 1.0]);
            assert_eq!(s.a_n, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn same_seed_same_ensemble() {
        let cfg = EnsembleConfig::default();
        let a = build_ensemble(&cfg, 1000, 42).unwrap();
        let b = build_ensemble(&cfg, 1000, 42).unwrap();
        assert_eq!(a, b);
        let c = build_ensemble(&cfg, 1000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn errors() {
        assert_eq!(build_ensemble(&EnsembleConfig::default(), 0, 1), Err(EnsembleError::NoSpins));
        assert!(matches!(build_ensemble(&slab(0.0), 10, 1), Err(EnsembleError::Geometry(_))));
        let mut cfg = EnsembleConfig::default();
        cfg.geometry = SampleGeometry::TransverseCylinder { r0: -1.0 };
        assert!(build_ensemble(&cfg, 10, 1).is_err());
        cfg = EnsembleConfig::default();
        cfg.relaxation.t2_star = 1.0;
        assert!(matches!(build_ensemble(&cfg, 10, 1), Err(EnsembleError::Relaxation(_))));
    }

    #[test]
    fn wavenumber_linear() {
        let c = PhysicalConstants::default();
        assert_eq!(wavenumber(0.0, 1.3e-6, &c), 0.0);
        let k = wavenumber(0.030, 1.3e-6, &c);
        assert!((k - 6.867_35e3).abs() < 0.01, "k = {k}");
        assert_eq!(wavenumber(0.030, 2.6e-6, &c), 2.0 * k);
        assert_eq!(wavenumber(-0.030, 1.3e-6, &c), -k);
    }

    #[test]
    fn grid_shape_factorises() {
        assert_eq!(grid_shape(100_000, true), (400, 250));
        assert_eq!(grid_shape(7, true), (7, 1));
        assert_eq!(grid_shape(64, false), (64, 1));
        assert_eq!(grid_shape(64, true), (8, 8));
    }

    #[test]
    fn normal_quantile_accuracy() {
        assert!(normal_quantile(0.5).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.001) + 3.090_232_306_167_813_5).abs() < 1e-11);
    }

    #[test]
    fn lorentzian_grid_is_symmetric() {
        let cfg = EnsembleConfig { sampling: Sampling::Grid, ..slab(3e-3) };
        let e = build_ensemble(&cfg, 64, 0).unwrap();
        let sum: f64 = e.sites.iter().map(|s| s.delta).sum();
        assert!(sum.abs() < 1e-6 * e.sites.iter().map(|s| s.delta.abs()).sum::<f64>());
    }

    #[test]
    fn detection_weights_have_unit_mean() {
        let cfg = EnsembleConfig { b1_beta: 0.1, ..Default::default() };
        let e = build_ensemble(&cfg, 5000, 3).unwrap();
        let mean: f64 = e.sites.iter().map(|s| e.detection_weight(s.r)).sum::<f64>() / 5000.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }
}
