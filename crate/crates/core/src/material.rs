//! Material parameters of the coupled elastic/magnetic medium.

use crate::error::ValidationError;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Polarization branch of the elastic wave field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveMode {
    /// Shear branch, speed `c_T = sqrt(mu)`.
    Transversal,
    /// Pressure branch, speed `c_L = sqrt(lambda + 2 mu)`.
    Longitudinal,
}

impl WaveMode {
    pub fn other(self) -> WaveMode {
        match self {
            WaveMode::Transversal => WaveMode::Longitudinal,
            WaveMode::Longitudinal => WaveMode::Transversal,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            WaveMode::Transversal => "T",
            WaveMode::Longitudinal => "L",
        }
    }
}

/// Elastic constants, coupling constants and the exterior magnetic field.
///
/// Constructed through [`Material::new`], which enforces
/// `mu > 0`, `lambda + 2 mu > 0` and `lambda + mu != 0` (the two wave speeds
/// must differ).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Material {
    pub lambda: f64,
    pub mu: f64,
    pub kappa: f64,
    pub beta: f64,
    /// Field magnitude |B|.
    pub b_magnitude: f64,
    /// Unit field direction.
    pub b_hat: Vec3,
}

/// Minimal admissible gap |lambda + mu| between the squared wave speeds.
pub const TOL_SPEED_GAP: f64 = 1e-9;

impl Material {
    pub fn new(
        lambda: f64,
        mu: f64,
        kappa: f64,
        beta: f64,
        b_field: Vec3,
    ) -> Result<Material, ValidationError> {
        if !(mu > 0.0) {
            return Err(ValidationError::new("material", "mu must be positive"));
        }
        if !(lambda + 2.0 * mu > 0.0) {
            return Err(ValidationError::new(
                "material",
                "lambda + 2*mu must be positive",
            ));
        }
        if (lambda + mu).abs() <= TOL_SPEED_GAP {
            return Err(ValidationError::new(
                "material",
                "lambda + mu must be nonzero (equal wave speeds are degenerate)",
            ));
        }
        if !(kappa > 0.0) || !(beta > 0.0) {
            return Err(ValidationError::new(
                "material",
                "coupling constants kappa and beta must be positive",
            ));
        }
        let b_magnitude = b_field.norm();
        let b_hat = if b_magnitude > 0.0 {
            b_field / b_magnitude
        } else {
            // B = 0 decouples the system; keep a conventional direction.
            Vec3::EX
        };
        Ok(Material {
            lambda,
            mu,
            kappa,
            beta,
            b_magnitude,
            b_hat,
        })
    }

    /// Helper for tests and scenarios given directly in terms of wave speeds.
    pub fn from_speeds(
        c_t: f64,
        c_l: f64,
        kappa: f64,
        beta: f64,
        b_field: Vec3,
    ) -> Result<Material, ValidationError> {
        let mu = c_t * c_t;
        let lambda = c_l * c_l - 2.0 * mu;
        Material::new(lambda, mu, kappa, beta, b_field)
    }

    pub fn c_t(&self) -> f64 {
        self.mu.sqrt()
    }

    pub fn c_l(&self) -> f64 {
        (self.lambda + 2.0 * self.mu).sqrt()
    }

    pub fn speed(&self, mode: WaveMode) -> f64 {
        match mode {
            WaveMode::Transversal => self.c_t(),
            WaveMode::Longitudinal => self.c_l(),
        }
    }

    /// Slowness 1/c of the given branch.
    pub fn slowness(&self, mode: WaveMode) -> f64 {
        1.0 / self.speed(mode)
    }

    pub fn c_max(&self) -> f64 {
        self.c_t().max(self.c_l())
    }

    pub fn b_field(&self) -> Vec3 {
        self.b_hat * self.b_magnitude
    }
}
