//! Physical parameters and the unit systems derived from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnError};

/// CODATA 2018 values.
pub mod constants {
    pub const G: f64 = 6.674_30e-11;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const K_B: f64 = 1.380_649e-23;
}

/// How a quoted trap frequency maps onto the angular frequency `omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyConvention {
    /// The number is a cyclic frequency in Hz: `omega0 = 2 pi f`.
    #[default]
    Cyclic,
    /// The number already is an angular frequency in rad/s.
    Angular,
}

impl FrequencyConvention {
    pub fn angular_frequency(self, quoted: f64) -> f64 {
        match self {
            FrequencyConvention::Cyclic => 2.0 * PI * quoted,
            FrequencyConvention::Angular => quoted,
        }
    }
}

/// SI parameters of the two-mass setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Mass of each particle [kg].
    pub m: f64,
    /// Separation of the initial mean positions [m].
    pub separation: f64,
    /// Trap angular frequency [rad/s].
    pub omega0: f64,
    /// Temperature [K].
    pub temperature: f64,
    /// Gravitational constant [m^3 kg^-1 s^-2].
    pub g_newton: f64,
    /// Reduced Planck constant [J s].
    pub hbar: f64,
    /// Boltzmann constant [J/K].
    pub k_b: f64,
    /// Width of the initial Gaussian (position standard deviation) [m].
    pub sigma: f64,
}

impl PhysicalParams {
    /// Particles cooled to the trap ground state; `sigma` follows from `omega0`.
    pub fn ground_state(m: f64, separation: f64, omega0: f64, temperature: f64) -> Result<Self> {
        let mut p = Self {
            m,
            separation,
            omega0,
            temperature,
            g_newton: constants::G,
            hbar: constants::HBAR,
            k_b: constants::K_B,
            sigma: 0.0,
        };
        p.sigma = p.ground_state_sigma();
        p.validate()?;
        Ok(p)
    }

    /// Silica spheres of 100 nm radius (11.1 fg) at 500 nm, trapped at 500 kHz.
    pub fn silica_pair(convention: FrequencyConvention, temperature: f64) -> Self {
        Self::ground_state(1.11e-17, 5.0e-7, convention.angular_frequency(5.0e5), temperature)
            .expect("reference parameters are valid")
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        self.temperature = temperature;
        self.validate()?;
        Ok(self)
    }

    pub fn with_g(mut self, g_newton: f64) -> Result<Self> {
        self.g_newton = g_newton;
        self.validate()?;
        Ok(self)
    }

    pub fn with_separation(mut self, separation: f64) -> Result<Self> {
        self.separation = separation;
        self.validate()?;
        Ok(self)
    }

    /// Replace the ground-state width by an explicit value (see [`Self::sigma_overridden`]).
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    /// Position standard deviation of the trap ground state, `sqrt(hbar / (2 m omega0))`.
    pub fn ground_state_sigma(&self) -> f64 {
        (self.hbar / (2.0 * self.m * self.omega0)).sqrt()
    }

    /// True when `sigma` no longer matches the trap ground state.
    pub fn sigma_overridden(&self) -> bool {
        let gs = self.ground_state_sigma();
        ((self.sigma - gs) / gs).abs() > 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SnError::InvalidParameter { field, reason: format!("must be > 0, got {v}") })
            }
        }
        fn non_negative(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(SnError::InvalidParameter { field, reason: format!("must be >= 0, got {v}") })
            }
        }
        positive("m", self.m)?;
        positive("separation", self.separation)?;
        positive("omega0", self.omega0)?;
        non_negative("temperature", self.temperature)?;
        non_negative("g_newton", self.g_newton)?;
        positive("hbar", self.hbar)?;
        positive("k_b", self.k_b)?;
        positive("sigma", self.sigma)?;
        Ok(())
    }

    /// Human-readable warnings about the regime of validity.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.sigma / self.separation;
        if ratio > 0.1 {
            out.push(format!(
                "sigma/L = {ratio:.3e} > 0.1: the quadratic expansion of the Newtonian coupling is unreliable"
            ));
        }
        if self.sigma_overridden() {
            out.push(format!(
                "sigma = {:.6e} m differs from the trap ground-state width {:.6e} m",
                self.sigma,
                self.ground_state_sigma()
            ));
        }
        out
    }

    /// Scale factors of the PDE unit system (length `sigma`, time `2 m sigma^2 / hbar`).
    pub fn pde_units(&self) -> PdeUnits {
        PdeUnits::new(self)
    }
}

/// Unit system for the wave-equation solvers: length `sigma`, time `2 m sigma^2 / hbar`,
/// energy `hbar^2 / (2 m sigma^2)`. In these units the kinetic operator is `-laplacian`
/// and Newtonian self-gravity carries the single coupling `g = 2 G m^3 sigma / hbar^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeUnits {
    pub length: f64,
    pub time: f64,
    pub energy: f64,
    /// Dimensionless gravitational coupling at physical strength.
    pub coupling: f64,
}

impl PdeUnits {
    pub fn new(p: &PhysicalParams) -> Self {
        let length = p.sigma;
        let time = 2.0 * p.m * p.sigma * p.sigma / p.hbar;
        let energy = p.hbar * p.hbar / (2.0 * p.m * p.sigma * p.sigma);
        let coupling = 2.0 * p.g_newton * p.m.powi(3) * p.sigma / (p.hbar * p.hbar);
        Self { length, time, energy, coupling }
    }

    pub fn force(&self) -> f64 {
        self.energy / self.length
    }

    pub fn power(&self) -> f64 {
        self.energy / self.time
    }

    pub fn momentum(&self) -> f64 {
        self.energy * self.time / self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_width_consistent() {
        let p = PhysicalParams::silica_pair(FrequencyConvention::Cyclic, 0.0);
        let expect = (p.hbar / (2.0 * p.m * p.omega0)).sqrt();
        assert_eq!(p.sigma, expect);
        assert!(!p.sigma_overridden());
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let e = PhysicalParams::ground_state(0.0, 1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(e, SnError::InvalidParameter { field: "m", .. }));
    }

    #[test]
    fn warns_on_wide_packets() {
        let p = PhysicalParams::silica_pair(FrequencyConvention::Cyclic, 0.0);
        let p = p.with_sigma(p.separation * 0.2).unwrap();
        let w = p.warnings();
        assert_eq!(w.len(), 2);
        assert!(w[0].contains("sigma/L"));
    }

    #[test]
    fn pde_time_unit_is_inverse_trap_frequency() {
        let p = PhysicalParams::silica_pair(FrequencyConvention::Cyclic, 0.0);
        let u = p.pde_units();
        assert!((u.time * p.omega0 - 1.0).abs() < 1e-14);
        assert!((u.energy - p.hbar * p.omega0).abs() / u.energy < 1e-14);
    }
}
