//! Detection of shadow curves: boundary curves on which the outward normal
//! is orthogonal to the exterior field direction. A planar convex shadow
//! curve in a plane normal to the field supports boundary rays of infinite
//! life-length; its tangent contact order sets the polynomial decay order.

use crate::geometry::surface::mat3_mul_vec;
use crate::geometry::{BoundaryPoint, Domain};
use crate::vec3::{vec3, Vec3};
use serde::{Deserialize, Serialize};

/// Closed polyline on the boundary where n . b_hat = 0, plus derived labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShadowCurve {
    pub samples: Vec<BoundaryPoint>,
    /// Unit normal of the best-fit plane of the samples.
    pub plane_normal: Vec3,
    /// Max distance of a sample to the best-fit plane.
    pub planarity_residual: f64,
    /// Sign-constancy of consecutive 2D cross products after projection.
    pub convexity_flag: bool,
    /// Minimal tangent contact order along the field direction over the
    /// sampled points; `None` when unresolved within the smoothness order.
    pub contact_order: Option<u32>,
    /// Angle between the best-fit plane normal and the field direction.
    pub plane_alignment_angle: f64,
    pub arclength: f64,
}

impl ShadowCurve {
    /// Whether the curve supports an infinite boundary ray: planar in a
    /// plane normal to the field, and convex in that plane.
    pub fn qualifies(&self, tol_plane: f64, tol_align: f64) -> bool {
        self.planarity_residual <= tol_plane
            && self.plane_alignment_angle <= tol_align
            && self.convexity_flag
    }
}

/// Traces the connected components of {y on boundary : |n(y) . b_hat| <= tol}
/// as closed polylines. `grid_resolution` controls the seeding density.
pub fn find_shadow_curves(domain: &Domain, b_hat: Vec3, grid_resolution: usize) -> Vec<ShadowCurve> {
    let b_hat = b_hat.normalize();
    let res = grid_resolution.max(8);
    let mut seeds = seed_points(domain, b_hat, res);
    let step = 2e-3 * domain.diameter();
    let mut curves: Vec<ShadowCurve> = Vec::new();
    while let Some(seed) = seeds.pop() {
        let Some(samples) = trace_curve(domain, b_hat, seed, step) else {
            continue;
        };
        // Drop seeds consumed by this component.
        seeds.retain(|s| {
            !samples
                .iter()
                .any(|p| (p.y - *s).norm() < 4.0 * step)
        });
        curves.push(analyze_curve(domain, b_hat, samples));
    }
    curves
}

/// Signed alignment g = grad phi . b_hat whose zero set on the surface is the
/// shadow curve, and its spatial gradient H b_hat.
fn g_and_grad(domain: &Domain, b_hat: Vec3, y: Vec3) -> (f64, Vec3) {
    let g = domain.grad(y).dot(b_hat);
    let h = domain.surface().hessian(y);
    (g, mat3_mul_vec(&h, b_hat))
}

fn seed_points(domain: &Domain, b_hat: Vec3, res: usize) -> Vec<Vec3> {
    // Radial projection from the origin over a lat-long direction grid;
    // the analytic families are star-shaped about the origin.
    let mut pts = vec![Vec3::ZERO; res * res];
    let mut gs = vec![0.0; res * res];
    for i in 0..res {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / res as f64;
        for j in 0..res {
            let az = 2.0 * std::f64::consts::PI * j as f64 / res as f64;
            let dir = vec3(theta.sin() * az.cos(), theta.sin() * az.sin(), theta.cos());
            let (bp, _) = domain
                .first_boundary_hit(Vec3::ZERO, dir)
                .expect("radial probe of a validated domain");
            pts[i * res + j] = bp.y;
            gs[i * res + j] = bp.n.dot(b_hat);
        }
    }
    let mut seeds = Vec::new();
    let mut push_crossing = |a: Vec3, ga: f64, b: Vec3, gb: f64| {
        if ga == 0.0 {
            seeds.push(a);
        } else if ga * gb < 0.0 {
            // Linear interpolation, then the corrector finishes the job.
            let t = ga / (ga - gb);
            if let Some(p) = correct(domain, b_hat, a + (b - a) * t) {
                seeds.push(p);
            }
        }
    };
    for i in 0..res {
        for j in 0..res {
            let a = i * res + j;
            let right = i * res + (j + 1) % res;
            push_crossing(pts[a], gs[a], pts[right], gs[right]);
            if i + 1 < res {
                let down = (i + 1) * res + j;
                push_crossing(pts[a], gs[a], pts[down], gs[down]);
            }
        }
    }
    seeds
}

/// Newton corrector onto the codimension-2 set {phi = 0, g = 0}.
fn correct(domain: &Domain, b_hat: Vec3, start: Vec3) -> Option<Vec3> {
    let mut y = start;
    let tol_phi = 0.01 * domain.tol.surface;
    for _ in 0..50 {
        let f0 = domain.phi(y);
        let (f1, dg) = g_and_grad(domain, b_hat, y);
        let dphi = domain.grad(y);
        let scale = dphi.norm();
        if f0.abs() <= tol_phi && f1.abs() <= 1e-12 * scale.max(1e-300) {
            return Some(y);
        }
        // Min-norm step for the 2x3 system [dphi; dg] delta = -(f0, f1).
        let a11 = dphi.norm2();
        let a12 = dphi.dot(dg);
        let a22 = dg.norm2();
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-30 * (a11 * a22).max(1e-300) {
            return None;
        }
        let l1 = (-f0 * a22 + f1 * a12) / det;
        let l2 = (f0 * a12 - f1 * a11) / det;
        y += dphi * l1 + dg * l2;
    }
    None
}

fn trace_curve(domain: &Domain, b_hat: Vec3, seed: Vec3, step: f64) -> Option<Vec<BoundaryPoint>> {
    let start = correct(domain, b_hat, seed)?;
    let mut samples = Vec::new();
    let mut y = start;
    let mut prev_tangent: Option<Vec3> = None;
    let max_steps = 400_000;
    let mut total = 0.0;
    for _ in 0..max_steps {
        let n = domain.normal(y);
        samples.push(BoundaryPoint { y, n });
        let (_, dg) = g_and_grad(domain, b_hat, y);
        let mut t = domain.grad(y).cross(dg);
        let tn = t.norm();
        if tn < 1e-14 * domain.grad(y).norm().max(1e-300) {
            // Tangent undefined: the intersection is not transversal here.
            return None;
        }
        t = t / tn;
        if let Some(pt) = prev_tangent {
            if t.dot(pt) < 0.0 {
                t = -t;
            }
        }
        prev_tangent = Some(t);
        y = correct(domain, b_hat, y + t * step)?;
        total += step;
        if total > 3.0 * step && (y - start).norm() < 0.75 * step {
            return Some(samples);
        }
    }
    None
}

fn analyze_curve(domain: &Domain, b_hat: Vec3, samples: Vec<BoundaryPoint>) -> ShadowCurve {
    let m = samples.len();
    let centroid = samples.iter().fold(Vec3::ZERO, |a, p| a + p.y) / m as f64;
    // Covariance of the samples; the eigenvector of the smallest eigenvalue
    // is the best-fit plane normal.
    let mut cov = [[0.0; 3]; 3];
    for p in &samples {
        let d = p.y - centroid;
        let da = d.as_array();
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += da[r] * da[c];
            }
        }
    }
    let (evals, evecs) = jacobi_eigen_3x3(cov);
    let mut imin = 0;
    for k in 1..3 {
        if evals[k] < evals[imin] {
            imin = k;
        }
    }
    let mut plane_normal = evecs[imin];
    if plane_normal.dot(b_hat) < 0.0 {
        plane_normal = -plane_normal;
    }
    let planarity_residual = samples
        .iter()
        .map(|p| ((p.y - centroid).dot(plane_normal)).abs())
        .fold(0.0, f64::max);
    let plane_alignment_angle = plane_normal.angle_to(b_hat);

    // Convexity of the projected closed polyline: consecutive edge cross
    // products keep one sign.
    let e1 = plane_normal.any_orthogonal();
    let e2 = plane_normal.cross(e1);
    let proj: Vec<(f64, f64)> = samples
        .iter()
        .map(|p| ((p.y - centroid).dot(e1), (p.y - centroid).dot(e2)))
        .collect();
    let scale2 = proj.iter().map(|p| p.0 * p.0 + p.1 * p.1).fold(0.0, f64::max);
    let mut pos = false;
    let mut neg = false;
    for i in 0..m {
        let a = proj[i];
        let b = proj[(i + 1) % m];
        let c = proj[(i + 2) % m];
        let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
        if cross > 1e-10 * scale2 {
            pos = true;
        } else if cross < -1e-10 * scale2 {
            neg = true;
        }
    }
    let convexity_flag = !(pos && neg);

    // Minimal tangent contact order along b_hat over a subsample. On the
    // curve b_hat lies in the tangent plane, so the precondition holds.
    let stride = (m / 48).max(1);
    let mut contact: Option<u32> = None;
    let mut unresolved = false;
    for p in samples.iter().step_by(stride) {
        match domain.contact_order(p, b_hat) {
            Ok(Some(k)) => contact = Some(contact.map_or(k, |c: u32| c.min(k))),
            Ok(None) => unresolved = true,
            Err(_) => {}
        }
    }
    let contact_order = if contact.is_none() && unresolved {
        None
    } else {
        contact
    };

    let arclength: f64 = samples
        .windows(2)
        .map(|w| (w[1].y - w[0].y).norm())
        .sum::<f64>()
        + (samples[0].y - samples[m - 1].y).norm();

    ShadowCurve {
        samples,
        plane_normal,
        planarity_residual,
        convexity_flag,
        contact_order,
        plane_alignment_angle,
        arclength,
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
fn jacobi_eigen_3x3(mut a: [[f64; 3]; 3]) -> ([f64; 3], [Vec3; 3]) {
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off < 1e-30 * (a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2]).max(1e-300) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    (
        [a[0][0], a[1][1], a[2][2]],
        [
            vec3(v[0][0], v[1][0], v[2][0]),
            vec3(v[0][1], v[1][1], v[2][1]),
            vec3(v[0][2], v[1][2], v[2][2]),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Surface;

    #[test]
    fn ball_equator_is_the_only_curve() {
        let d = Domain::new(Surface::Ball { radius: 1.0 }).unwrap();
        let b = Vec3::EX;
        let curves = find_shadow_curves(&d, b, 24);
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        // Exact zero set of n . b_hat = x is the great circle {x = 0}.
        for p in &c.samples {
            assert!(p.y.dot(b).abs() <= 10.0 * d.tol.surface);
            assert!(p.n.dot(b).abs() <= 1e-8);
        }
        assert!(c.planarity_residual <= 1e-6 * d.diameter());
        assert!(c.plane_alignment_angle <= 1e-6);
        assert!(c.convexity_flag);
        assert_eq!(c.contact_order, Some(2));
        assert!((c.arclength - 2.0 * std::f64::consts::PI).abs() < 1e-2);
        assert!(c.qualifies(d.tol.plane, 1e-6));
    }

    #[test]
    fn ball_has_one_curve_for_generic_field_direction() {
        let d = Domain::new(Surface::Ball { radius: 1.0 }).unwrap();
        let b = vec3(0.3, -0.5, 0.81).normalize();
        let curves = find_shadow_curves(&d, b, 24);
        assert_eq!(curves.len(), 1);
        for p in &curves[0].samples {
            assert!(p.y.dot(b).abs() <= 10.0 * d.tol.surface);
        }
        assert!(curves[0].qualifies(d.tol.plane, 1e-6));
    }

    #[test]
    fn axis_aligned_ellipsoid_has_planar_equator() {
        let d = Domain::new(Surface::Ellipsoid {
            semi_axes: [2.0, 1.0, 1.0],
        })
        .unwrap();
        let curves = find_shadow_curves(&d, Vec3::EX, 24);
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!(c.planarity_residual <= d.tol.plane);
        assert!(c.plane_alignment_angle <= 1e-6);
        assert_eq!(c.contact_order, Some(2));
        assert!(c.qualifies(d.tol.plane, 1e-6));
    }

    #[test]
    fn tilted_ellipsoid_curve_does_not_qualify() {
        // For a quadric the shadow curve is the central section by the plane
        // {M b . y = 0}; it is planar, but its plane normal M b is parallel
        // to b only when b lies along a principal axis. A 30-degree tilt
        // therefore yields a non-qualifying curve.
        let d = Domain::new(Surface::Ellipsoid {
            semi_axes: [2.0, 1.0, 1.0],
        })
        .unwrap();
        let ang: f64 = 30f64.to_radians();
        let b = vec3(ang.cos(), ang.sin(), 0.0);
        let curves = find_shadow_curves(&d, b, 24);
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        // Oracle: plane normal is parallel to M b, M = diag(1/4, 1, 1).
        let expect = vec3(b.x / 4.0, b.y, b.z).normalize();
        assert!(c.planarity_residual <= d.tol.plane);
        assert!((c.plane_normal - expect).norm() < 1e-6 || (c.plane_normal + expect).norm() < 1e-6);
        assert!(c.plane_alignment_angle > 1e-2);
        assert!(!c.qualifies(d.tol.plane, 1e-6));
    }

    #[test]
    fn quartic_body_contact_order_four() {
        let d = Domain::new(Surface::Superquadric {
            exponents: [2, 1, 1],
            semi_axes: [1.0, 1.0, 1.0],
        })
        .unwrap();
        let curves = find_shadow_curves(&d, Vec3::EX, 24);
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!(c.qualifies(d.tol.plane, 1e-6));
        assert_eq!(c.contact_order, Some(4));
    }
}
