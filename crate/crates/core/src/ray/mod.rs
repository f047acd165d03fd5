//! Generalized bicharacteristic flow for the two elastic wave speeds:
//! straight interior transport, boundary classification, specular
//! reflection, transversal/longitudinal mode conversion and boundary
//! gliding.

pub mod glancing;
pub mod trace;

pub use glancing::{glide_boundary, glancing_stratum, GlancingStratum, GlideOutcome};
pub use trace::{
    trace_ray, BoundaryContext, Continuation, ContinuationPolicy, EventKind, Ray, RaySegment,
    SegmentType, Specular, StopReason, TraceLimits,
};

use crate::error::TraceError;
use crate::geometry::BoundaryPoint;
use crate::material::{Material, WaveMode};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Default width of the glancing band: |q0| <= TOL_Q * tau^2.
pub const TOL_Q: f64 = 1e-8;

/// Point of the compressed cotangent bundle with a branch tag. The
/// characteristic relation c_mode^2 |eta|^2 = tau^2 ties |eta| to tau;
/// spatial motion is along eta, time advances at 1/c per unit length.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub y: Vec3,
    pub tau: f64,
    pub eta: Vec3,
    pub mode: WaveMode,
}

impl PhasePoint {
    /// On-shell phase point moving in `direction` with time frequency `tau`.
    pub fn from_direction(
        t: f64,
        y: Vec3,
        direction: Vec3,
        tau: f64,
        mode: WaveMode,
        material: &Material,
    ) -> PhasePoint {
        let eta = direction.normalize() * (tau * material.slowness(mode));
        PhasePoint {
            t,
            y,
            tau,
            eta,
            mode,
        }
    }

    pub fn direction(&self) -> Vec3 {
        self.eta.normalize()
    }

    /// Relative violation of c_mode^2 |eta|^2 = tau^2.
    pub fn characteristic_residual(&self, material: &Material) -> f64 {
        let c2 = material.speed(self.mode).powi(2);
        (c2 * self.eta.norm2() - self.tau * self.tau).abs() / (self.tau * self.tau)
    }

    pub fn check_on_shell(&self, material: &Material) -> Result<(), TraceError> {
        let r = self.characteristic_residual(material);
        if r > 1e-9 {
            return Err(TraceError::OffShell(r));
        }
        Ok(())
    }
}

/// Sign class of q0 = |eta'|^2 - tau^2/c^2 at a boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryClass {
    Hyperbolic,
    Elliptic,
    Glancing,
}

/// q0 for the branch with the given speed.
pub fn q0(tau: f64, eta_prime_norm2: f64, speed: f64) -> f64 {
    let nu = 1.0 / speed;
    eta_prime_norm2 - nu * nu * tau * tau
}

/// Classification with a tolerance band |q0| <= tol_q tau^2 mapped to
/// Glancing.
pub fn classify_boundary(tau: f64, eta_prime_norm2: f64, speed: f64, tol_q: f64) -> BoundaryClass {
    let q = q0(tau, eta_prime_norm2, speed);
    if q.abs() <= tol_q * tau * tau {
        BoundaryClass::Glancing
    } else if q < 0.0 {
        BoundaryClass::Hyperbolic
    } else {
        BoundaryClass::Elliptic
    }
}

/// Specular reflection of an outgoing-to-the-boundary frequency vector.
/// Preserves the tangential part and the characteristic relation exactly.
pub fn reflect_hyperbolic(
    p: &BoundaryPoint,
    tau: f64,
    eta_in: Vec3,
    speed: f64,
) -> Result<Vec3, TraceError> {
    let eta_prime = eta_in.reject_from_unit(p.n);
    if classify_boundary(tau, eta_prime.norm2(), speed, TOL_Q) != BoundaryClass::Hyperbolic {
        return Err(TraceError::NotHyperbolic);
    }
    if eta_in.dot(p.n) <= 0.0 {
        return Err(TraceError::NotHyperbolic);
    }
    Ok(eta_in.reflect_across(p.n))
}

/// Incidence/refraction data of a conversion event. Angles are measured
/// from the tangent plane, as ratios of normal to tangential frequency.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConversionAngles {
    pub alpha_in: f64,
    pub beta_out: f64,
    /// tan(alpha_in) * tan(beta_out); equals 1 exactly at the resistant
    /// incidence where incoming and outgoing rays are orthogonal.
    pub tan_product: f64,
    /// Incoming and outgoing normal frequency components xi_n.
    pub xi_n_in: f64,
    pub xi_n_out: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum ConvertOutcome {
    Converted { eta_out: Vec3, angles: ConversionAngles },
    /// The target branch is elliptic at this tangential frequency.
    Impossible { q0_target: f64 },
}

/// Mode conversion at a point hyperbolic for the incoming branch: the
/// tangential frequency is conserved and the outgoing normal component is
/// +sqrt(tau^2/c_out^2 - |eta'|^2) into the domain.
pub fn mode_convert(
    p: &BoundaryPoint,
    tau: f64,
    eta_in: Vec3,
    from_mode: WaveMode,
    material: &Material,
) -> Result<ConvertOutcome, TraceError> {
    let c_in = material.speed(from_mode);
    let c_out = material.speed(from_mode.other());
    let xi_n_in = eta_in.dot(p.n);
    let eta_prime = eta_in.reject_from_unit(p.n);
    if classify_boundary(tau, eta_prime.norm2(), c_in, TOL_Q) != BoundaryClass::Hyperbolic
        || xi_n_in <= 0.0
    {
        return Err(TraceError::NotHyperbolic);
    }
    let q_t = q0(tau, eta_prime.norm2(), c_out);
    if q_t >= -TOL_Q * tau * tau {
        return Ok(ConvertOutcome::Impossible { q0_target: q_t });
    }
    let xi_n_out = (-q_t).sqrt();
    let eta_out = eta_prime - p.n * xi_n_out;
    let ep = eta_prime.norm();
    let angles = ConversionAngles {
        alpha_in: xi_n_in.atan2(ep),
        beta_out: xi_n_out.atan2(ep),
        tan_product: if ep > 0.0 {
            (xi_n_in * xi_n_out) / (ep * ep)
        } else {
            f64::INFINITY
        },
        xi_n_in,
        xi_n_out,
    };
    Ok(ConvertOutcome::Converted { eta_out, angles })
}

/// Tangential frequency magnitude at which a hyperbolic-hyperbolic
/// conversion joins orthogonal incoming/outgoing rays (the resistant
/// incidence): |eta'| = tau / sqrt(c_T^2 + c_L^2).
pub fn resistant_eta_prime(tau: f64, material: &Material) -> f64 {
    let ct2 = material.mu;
    let cl2 = material.lambda + 2.0 * material.mu;
    tau / (ct2 + cl2).sqrt()
}
