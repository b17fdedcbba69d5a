//! Physical constants.

use crate::error::EnsembleError;

/// Free-electron g-factor magnitude (CODATA 2018).
pub const G_ELECTRON: f64 = 2.002_319_304_362_56;
/// Bohr magneton in J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant in J s (exact in SI 2019).
pub const HBAR: f64 = 1.054_571_817e-34;

/// γ_n/γ_e for ³¹P donors. Negative: the nucleus precesses in the opposite
/// sense to the electron.
pub const PHOSPHORUS_NUCLEAR_RATIO: f64 = -6.150_1e-4;

/// Gyromagnetic factors used by the engine.
///
/// `gamma_e` is the composite `g_e μ_B / ħ` in rad s⁻¹ T⁻¹; a spin in a field
/// offset `B` precesses at `gamma_e * B` in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    gamma_e: f64,
    gamma_ratio_nuclear: f64,
}

impl PhysicalConstants {
    pub fn new(gamma_e: f64, gamma_ratio_nuclear: f64) -> Result<Self, EnsembleError> {
        if !(gamma_e.is_finite() && gamma_e > 0.0) {
            return Err(EnsembleError::Constants(format!("gamma_e must be positive, got {gamma_e}")));
        }
        if !(gamma_ratio_nuclear.abs() < 0.01) {
            return Err(EnsembleError::Constants(format!(
                "|gamma_ratio_nuclear| must be below 0.01, got {gamma_ratio_nuclear}"
            )));
        }
        Ok(Self { gamma_e, gamma_ratio_nuclear })
    }

    /// CODATA electron value with the given nuclear ratio.
    pub fn with_nuclear_ratio(gamma_ratio_nuclear: f64) -> Result<Self, EnsembleError> {
        Self::new(codata_gamma_e(), gamma_ratio_nuclear)
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }

    pub fn gamma_ratio_nuclear(&self) -> f64 {
        self.gamma_ratio_nuclear
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { gamma_e: codata_gamma_e(), gamma_ratio_nuclear: PHOSPHORUS_NUCLEAR_RATIO }
    }
}

/// `g_e μ_B / ħ` from the CODATA values above, ≈ 1.760 859 630 × 10¹¹.
pub fn codata_gamma_e() -> f64 {
    G_ELECTRON * BOHR_MAGNETON / HBAR
}
