use serde::{Deserialize, Serialize};

use super::PhysicsError;

/// Koval mixture viscosity with an Arrhenius-type temperature factor:
/// `mu(a, theta) = mu0 (1 + (M^(1/4) - 1) a)^(-4) exp(1/theta - 1/theta*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityModel {
    pub mu0: f64,
    /// `M = mu(0) / mu(1)`.
    pub mobility_ratio: f64,
    pub theta_star: f64,
    pub permeability: f64,
}

impl Default for ViscosityModel {
    fn default() -> Self {
        ViscosityModel {
            mu0: 1.0,
            mobility_ratio: 1.0,
            theta_star: 1.0,
            permeability: 1.0,
        }
    }
}

impl ViscosityModel {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        for (name, v) in [
            ("mu0", self.mu0),
            ("mobility_ratio", self.mobility_ratio),
            ("theta_star", self.theta_star),
            ("permeability", self.permeability),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhysicsError::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }

    /// Concentration factor `mu_R(a)`.
    pub fn mu_r(&self, a: f64) -> f64 {
        self.mu0 * (1.0 + (self.mobility_ratio.powf(0.25) - 1.0) * a).powi(-4)
    }

    pub fn mu(&self, a: f64, theta: f64) -> Result<f64, PhysicsError> {
        if !(theta > 0.0) {
            return Err(PhysicsError::NonPositiveTemperature(theta));
        }
        Ok(self.mu_r(a) * (1.0 / theta - 1.0 / self.theta_star).exp())
    }

    /// Mobility `K / mu`.
    pub fn kappa(&self, a: f64, theta: f64) -> Result<f64, PhysicsError> {
        Ok(self.permeability / self.mu(a, theta)?)
    }
}
