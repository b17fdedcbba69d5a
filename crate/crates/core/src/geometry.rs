//! Sample geometries: spatial density along the gradient axis, sampling, and
//! analytic mode overlaps.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::EnsembleError;
use crate::special::{bessel_j1_zero, jinc};

/// Shape of the spin sample. Gradients act along `z`.
///
/// `TransverseCylinder` is a cylinder whose axis is perpendicular to `z`, so
/// its cross-section is a disc of radius `r0` and the column density along
/// `z` is `∝ √(r0² − z²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleGeometry {
    UniformSlab { d: f64 },
    TransverseCylinder { r0: f64 },
    Sphere { r0: f64 },
}

impl SampleGeometry {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let (name, v) = match *self {
            SampleGeometry::UniformSlab { d } => ("d", d),
            SampleGeometry::TransverseCylinder { r0 } | SampleGeometry::Sphere { r0 } => ("r0", r0),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(EnsembleError::Geometry(format!("{name} must be positive and finite, got {v}")))
        }
    }

    pub fn profile_name(&self) -> &'static str {
        match self {
            SampleGeometry::UniformSlab { .. } => "slab",
            SampleGeometry::TransverseCylinder { .. } => "cylinder",
            SampleGeometry::Sphere { .. } => "sphere",
        }
    }

    /// Half-extent of the support along `z`.
    pub fn half_extent(&self) -> f64 {
        match *self {
            SampleGeometry::UniformSlab { d } => 0.5 * d,
            SampleGeometry::TransverseCylinder { r0 } | SampleGeometry::Sphere { r0 } => r0,
        }
    }

    /// Radius used for the radial drive-field inhomogeneity; `None` for the
    /// slab, which has no radial coordinate.
    pub fn radial_extent(&self) -> Option<f64> {
        match *self {
            SampleGeometry::UniformSlab { .. } => None,
            SampleGeometry::TransverseCylinder { r0 } | SampleGeometry::Sphere { r0 } => Some(r0),
        }
    }

    /// Normalised density of spins along `z` (integrates to 1).
    pub fn density(&self, z: f64) -> f64 {
        let h = self.half_extent();
        if z.abs() > h {
            return 0.0;
        }
        match *self {
            SampleGeometry::UniformSlab { d } => 1.0 / d,
            SampleGeometry::TransverseCylinder { r0 } => 2.0 * (r0 * r0 - z * z).sqrt() / (PI * r0 * r0),
            SampleGeometry::Sphere { r0 } => 0.75 * (r0 * r0 - z * z) / (r0 * r0 * r0),
        }
    }

    /// Cumulative distribution of `z`.
    pub fn cdf(&self, z: f64) -> f64 {
        let h = self.half_extent();
        if z <= -h {
            return 0.0;
        }
        if z >= h {
            return 1.0;
        }
        match *self {
            SampleGeometry::UniformSlab { d } => z / d + 0.5,
            SampleGeometry::TransverseCylinder { r0 } => {
                let u = z / r0;
                0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / PI
            }
            SampleGeometry::Sphere { r0 } => {
                let u = z / r0;
                0.5 + 0.75 * u - 0.25 * u * u * u
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf) by bisection (the slab is closed form).
    pub fn quantile(&self, p: f64) -> f64 {
        let h = self.half_extent();
        if let SampleGeometry::UniformSlab { d } = *self {
            return (p - 0.5) * d;
        }
        let (mut lo, mut hi) = (-h, h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Maps three uniform variates to a point `(z, r)` distributed uniformly
    /// over the sample volume. `r` is the distance from the cylinder axis or
    /// sphere centre; zero for the slab.
    pub fn point_from_uniform(&self, u: [f64; 3]) -> (f64, f64) {
        match *self {
            SampleGeometry::UniformSlab { d } => ((u[0] - 0.5) * d, 0.0),
            SampleGeometry::TransverseCylinder { r0 } => {
                let r = r0 * u[0].sqrt();
                let a = 2.0 * PI * u[1];
                (r * a.cos(), r)
            }
            SampleGeometry::Sphere { r0 } => {
                let r = r0 * u[0].cbrt();
                let cos_t = 2.0 * u[1] - 1.0;
                (r * cos_t, r)
            }
        }
    }

    /// Radial coordinate for a site at `z` given a uniform variate `u` for the
    /// transverse position within the slice at that `z`.
    pub fn radial_given_z(&self, z: f64, u: f64) -> f64 {
        match *self {
            SampleGeometry::UniformSlab { .. } => 0.0,
            SampleGeometry::TransverseCylinder { r0 } => {
                let half_chord = (r0 * r0 - z * z).max(0.0).sqrt();
                let y = half_chord * (2.0 * u - 1.0);
                (y * y + z * z).sqrt()
            }
            SampleGeometry::Sphere { r0 } => {
                // uniform over the disc slice of radius √(r0² − z²)
                let rho = (r0 * r0 - z * z).max(0.0).sqrt() * u.sqrt();
                (rho * rho + z * z).sqrt()
            }
        }
    }

    /// Positive wavenumbers at which the mode overlap with `k = 0` vanishes,
    /// in increasing order.
    pub fn overlap_zeros(&self, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|n| match *self {
                SampleGeometry::UniformSlab { d } => 2.0 * PI * n as f64 / d,
                SampleGeometry::TransverseCylinder { r0 } => bessel_j1_zero(n) / r0,
                SampleGeometry::Sphere { r0 } => sphere_overlap_zero(n) / r0,
            })
            .collect()
    }
}

impl Default for SampleGeometry {
    fn default() -> Self {
        SampleGeometry::TransverseCylinder { r0: 1e-3 }
    }
}

/// Analytic overlap `(1/N) ∫ n(z) e^{−ikz} dz` of a spin-wave mode `k` with the
/// uniform mode. Real and even in `k` for all supported profiles.
pub fn mode_overlap(geometry: &SampleGeometry, k: f64) -> Complex64 {
    let value = match *geometry {
        SampleGeometry::UniformSlab { d } => sinc(0.5 * k * d),
        SampleGeometry::TransverseCylinder { r0 } => jinc(k * r0),
        SampleGeometry::Sphere { r0 } => sphere_form_factor(k * r0),
    };
    Complex64::new(value, 0.0)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `3 (sin x − x cos x) / x³`.
fn sphere_form_factor(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2 * x2 * x2 / 15_120.0 + x2 * x2 * x2 * x2 / 1_330_560.0
    } else {
        3.0 * (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// `n`-th positive root of `tan x = x`.
fn sphere_overlap_zero(n: usize) -> f64 {
    let b = (n as f64 + 0.5) * PI;
    let mut x = b - 1.0 / b;
    for _ in 0..50 {
        let f = x.sin() - x * x.cos();
        let df = x * x.sin();
        let step = f / df;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}
