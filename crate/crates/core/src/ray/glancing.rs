//! Glancing-point stratification and boundary gliding.
//!
//! At a glancing point the flow is controlled by q1, the derivative of the
//! tangential symbol transverse to the boundary. With the interior metric
//! convention q1 is positive on a convex patch (the flow hugs the boundary
//! and glides along its geodesics, as on a ball equator) and negative on a
//! concave patch (the ray touches once and leaves: diffractive). Flat
//! directions are resolved by the order of the first nonvanishing flow
//! derivative of q1, which coincides with the tangent contact order minus
//! two.

use crate::error::GeomError;
use crate::geometry::{BoundaryPoint, Domain};
use crate::material::{Material, WaveMode};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlancingStratum {
    /// q1 < 0: the ray touches the boundary at one point and stays interior.
    Diffractive,
    /// q1 > 0: the ray follows a boundary geodesic.
    Gliding,
    /// q1 vanishes to order k-1 along the flow; k is the first nonvanishing
    /// derivative order (tangent contact order minus two).
    HigherOrder(u32),
}

/// Relative curvature threshold below which a glancing point counts as a
/// higher-order stratum: |kappa_n| <= TOL_CURVATURE / diam.
pub const TOL_CURVATURE: f64 = 1e-7;

/// Stratum of a glancing point for the branch with slowness 1/speed,
/// evaluated from the normal curvature of the boundary in the tangential
/// ray direction.
pub fn glancing_stratum(
    domain: &Domain,
    p: &BoundaryPoint,
    tau: f64,
    eta_prime: Vec3,
    speed: f64,
) -> Result<GlancingStratum, GeomError> {
    let d = eta_prime
        .reject_from_unit(p.n)
        .try_normalize()
        .ok_or(GeomError::NotTangent(1.0))?;
    let kappa = domain.normal_curvature(p, d);
    // q1 = 2 nu^2 tau^2 kappa_n up to the metric normalization; only the
    // sign and the vanishing order matter.
    let nu = 1.0 / speed;
    let q1 = 2.0 * nu * nu * tau * tau * kappa;
    let _ = q1;
    let tol = TOL_CURVATURE / domain.diameter();
    if kappa > tol {
        Ok(GlancingStratum::Gliding)
    } else if kappa < -tol {
        Ok(GlancingStratum::Diffractive)
    } else {
        match domain.contact_order(p, d)? {
            Some(m) if m >= 3 => Ok(GlancingStratum::HigherOrder(m - 2)),
            Some(_) => Ok(GlancingStratum::Gliding), // curvature right at the threshold
            None => Err(GeomError::ExceedsSmoothness(domain.smoothness_order())),
        }
    }
}

/// Where a glide stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlideStop {
    /// The stratum changed sign (boundary flattened or turned concave).
    StratumChange,
    /// The arclength budget ran out.
    Budget,
}

#[derive(Clone, Debug)]
pub struct GlideOutcome {
    pub end: BoundaryPoint,
    /// Unit direction of motion at the endpoint.
    pub direction: Vec3,
    pub arclength: f64,
    pub elapsed_time: f64,
    pub stop: GlideStop,
    /// Sampled points of the geodesic (for serialization/plotting).
    pub path: Vec<Vec3>,
}

/// Integrates the boundary geodesic from `p` in tangential direction
/// `direction` until the stratum changes or `max_arclength` is exhausted.
///
/// Projected velocity-Verlet on {phi = 0}: the geodesic acceleration is the
/// normal component -(v . H v / |grad phi|^2) grad phi, positions are
/// re-projected onto the surface and velocities renormalized each step.
/// The step is controlled by the local curvature so that the accumulated
/// phase error stays near ERROR_RATE per unit arclength.
pub fn glide_boundary(
    domain: &Domain,
    p: &BoundaryPoint,
    direction: Vec3,
    mode: WaveMode,
    material: &Material,
    max_arclength: f64,
) -> Result<GlideOutcome, GeomError> {
    const ERROR_RATE: f64 = 1e-9;
    let c = material.speed(mode);
    let mut y = p.y;
    let mut v = direction
        .reject_from_unit(p.n)
        .try_normalize()
        .ok_or(GeomError::NotTangent(1.0))?;
    let mut s = 0.0f64;
    let mut path = vec![y];
    let path_stride = (max_arclength / 512.0).max(1e-6 * domain.diameter());
    let mut next_sample = path_stride;
    let mut stop = GlideStop::Budget;

    if max_arclength <= 0.0 {
        return Ok(GlideOutcome {
            end: *p,
            direction: v,
            arclength: 0.0,
            elapsed_time: 0.0,
            stop: GlideStop::Budget,
            path,
        });
    }

    let accel = |y: Vec3, v: Vec3| -> Vec3 {
        let g = domain.grad(y);
        let h = domain.surface().hessian(y);
        let hv = crate::geometry::surface::mat3_mul_vec(&h, v);
        -g * (v.dot(hv) / g.norm2())
    };

    let max_step = 1e-3 * domain.diameter();
    let mut iterations = 0usize;
    let iter_cap = 50_000_000 / 64; // hard safety cap
    while s < max_arclength {
        iterations += 1;
        if iterations > iter_cap {
            break;
        }
        let a = accel(y, v);
        let kappa = a.norm().max(1e-12 / domain.diameter());
        // Per-unit-length phase error of the projected Verlet step is about
        // (h kappa)^2 / 6; solve for h at the target rate.
        let h = ((6.0 * ERROR_RATE).sqrt() / kappa.powf(1.5))
            .min(max_step)
            .min(0.1 / kappa)
            .min(max_arclength - s)
            .max(1e-9 * domain.diameter());
        // Verlet predictor.
        let y_pred = y + v * h + a * (0.5 * h * h);
        let bp = domain.project_to_boundary(y_pred)?;
        y = bp.y;
        let a_new = accel(y, v);
        let mut v_new = v + (a + a_new) * (0.5 * h);
        v_new = v_new.reject_from_unit(bp.n);
        v = v_new.try_normalize().ok_or(GeomError::NotTangent(1.0))?;
        s += h;
        if s >= next_sample {
            path.push(y);
            next_sample += path_stride;
        }
        // Stratum check: gliding persists while the patch stays convex.
        let kappa_n = domain.normal_curvature(&bp, v);
        if kappa_n <= TOL_CURVATURE / domain.diameter() {
            stop = GlideStop::StratumChange;
            break;
        }
    }
    if s >= max_arclength {
        stop = GlideStop::Budget;
    }
    let n = domain.normal(y);
    path.push(y);
    Ok(GlideOutcome {
        end: BoundaryPoint { y, n },
        direction: v,
        arclength: s,
        elapsed_time: s / c,
        stop,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Surface;
    use crate::vec3::vec3;

    fn ball() -> Domain {
        Domain::new(Surface::Ball { radius: 1.0 }).unwrap()
    }

    fn mat() -> Material {
        Material::new(2.0, 1.0, 0.5, 1.0, Vec3::EX).unwrap()
    }

    #[test]
    fn ball_glancing_points_glide() {
        // Interior of a convex body: every glancing point is gliding; the
        // equator carries the boundary geodesics. This is the sign
        // calibration of q1 against the ball.
        let d = ball();
        let p = d.project_to_boundary(vec3(0.0, 1.0, 0.0)).unwrap();
        let eta_prime = Vec3::EX;
        let stratum = glancing_stratum(&d, &p, 1.0, eta_prime, 1.0).unwrap();
        assert_eq!(stratum, GlancingStratum::Gliding);
    }

    #[test]
    fn quartic_flat_direction_is_higher_order() {
        let d = Domain::new(Surface::Superquadric {
            exponents: [2, 1, 1],
            semi_axes: [1.0, 1.0, 1.0],
        })
        .unwrap();
        let p = d.project_to_boundary(vec3(0.0, 1.0, 0.0)).unwrap();
        let stratum = glancing_stratum(&d, &p, 1.0, Vec3::EX, 1.0).unwrap();
        // Contact order 4 in the flat direction: first nonvanishing flow
        // derivative of q1 has order 2.
        assert_eq!(stratum, GlancingStratum::HigherOrder(2));
    }

    #[test]
    fn convex_body_has_no_diffractive_stratum() {
        let d = Domain::new(Surface::Ellipsoid {
            semi_axes: [2.0, 1.0, 1.0],
        })
        .unwrap();
        for i in 0..64 {
            let dir = crate::geometry::fibonacci_direction(i, 64);
            let (p, _) = d.first_boundary_hit(Vec3::ZERO, dir).unwrap();
            let t = p.n.any_orthogonal();
            let stratum = glancing_stratum(&d, &p, 1.0, t, 1.0).unwrap();
            assert_ne!(stratum, GlancingStratum::Diffractive);
        }
    }

    #[test]
    fn equator_geodesic_closes() {
        // Great-circle oracle: after arclength 2 pi the glide returns to the
        // start within 1e-8.
        let d = ball();
        let m = mat();
        let start = d.project_to_boundary(vec3(0.0, 1.0, 0.0)).unwrap();
        let out = glide_boundary(
            &d,
            &start,
            Vec3::EX,
            WaveMode::Transversal,
            &m,
            2.0 * std::f64::consts::PI,
        )
        .unwrap();
        assert_eq!(out.stop, GlideStop::Budget);
        assert!(
            (out.end.y - start.y).norm() < 1e-8,
            "closure error {:.3e}",
            (out.end.y - start.y).norm()
        );
        assert!((out.elapsed_time - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        // Stays on the equator plane {x = 0} throughout.
        for q in &out.path {
            assert!(q.x.abs() < 1e-8);
        }
    }

    #[test]
    fn ellipsoid_symmetry_section_is_invariant() {
        // A geodesic started tangent to the {x = 0} section of an ellipsoid
        // of revolution stays in that symmetry plane.
        let d = Domain::new(Surface::Ellipsoid {
            semi_axes: [2.0, 1.0, 1.0],
        })
        .unwrap();
        let m = mat();
        let start = d.project_to_boundary(vec3(0.0, 1.0, 0.0)).unwrap();
        let out = glide_boundary(&d, &start, Vec3::EZ, WaveMode::Transversal, &m, 3.0).unwrap();
        for q in &out.path {
            assert!(q.x.abs() < 1e-7, "left symmetry plane: {q:?}");
        }
    }

    #[test]
    fn zero_budget_is_identity() {
        let d = ball();
        let m = mat();
        let start = d.project_to_boundary(vec3(0.0, 1.0, 0.0)).unwrap();
        let out = glide_boundary(&d, &start, Vec3::EX, WaveMode::Transversal, &m, 0.0).unwrap();
        assert_eq!(out.arclength, 0.0);
        assert!((out.end.y - start.y).norm() == 0.0);
    }
}
