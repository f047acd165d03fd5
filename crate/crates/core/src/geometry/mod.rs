//! Smooth-domain representation: implicit-surface queries, normals,
//! ray-boundary intersection, tangent contact order and shadow curves.

pub mod shadow;
pub mod surface;

pub use shadow::{find_shadow_curves, ShadowCurve};
pub use surface::Surface;

use crate::error::{GeomError, ValidationError};
use crate::vec3::{vec3, Vec3};
use serde::{Deserialize, Serialize};

/// Tolerances of the geometric kernels. Lengths scale with the domain
/// diameter; see [`Domain::new`] for the defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeomTolerances {
    /// Admissible |phi| residual for a point counted as on-surface.
    pub surface: f64,
    /// Angle tolerance (radians) for tangency / orthogonality tests.
    pub angle: f64,
    /// Max distance to the best-fit plane for a curve counted as planar.
    pub plane: f64,
    /// Relative threshold for a line-Taylor coefficient counted as nonzero.
    pub contact_rel: f64,
}

/// Bounded smooth region {phi < 0} of an analytic implicit surface.
#[derive(Clone, Debug)]
pub struct Domain {
    surface: Surface,
    bbox: (Vec3, Vec3),
    diam: f64,
    smoothness_order: u32,
    pub tol: GeomTolerances,
}

/// A point on {phi = 0} together with the outward unit normal.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub y: Vec3,
    pub n: Vec3,
}

const MAX_NEWTON: usize = 60;

impl Domain {
    /// Validates the surface by sampling and fixes the default tolerances:
    /// `tol_surface = 1e-10 diam`, `tol_angle = 1e-8`, `tol_plane = 1e-6 diam`.
    pub fn new(surface: Surface) -> Result<Domain, ValidationError> {
        Domain::with_smoothness(surface, 8)
    }

    pub fn with_smoothness(surface: Surface, smoothness_order: u32) -> Result<Domain, ValidationError> {
        if smoothness_order < 4 {
            return Err(ValidationError::new(
                "domain",
                "smoothness_order must be at least 4",
            ));
        }
        let bbox = surface.bounding_box();
        let diam = (bbox.1 - bbox.0).norm();
        let tol = GeomTolerances {
            surface: 1e-10 * diam,
            angle: 1e-8,
            plane: 1e-6 * diam,
            contact_rel: 1e-6,
        };
        let dom = Domain {
            surface,
            bbox,
            diam,
            smoothness_order,
            tol,
        };
        dom.validate_by_sampling()?;
        Ok(dom)
    }

    fn validate_by_sampling(&self) -> Result<(), ValidationError> {
        if !(self.surface.phi(Vec3::ZERO) < 0.0) {
            return Err(ValidationError::new(
                "domain",
                "origin must be interior (phi(0) < 0) for the analytic families",
            ));
        }
        // phi > 0 on the bounding box shell (boundedness, sampled).
        let (lo, hi) = self.bbox;
        for &sx in &[lo.x, hi.x] {
            for &sy in &[lo.y, hi.y] {
                for &sz in &[lo.z, hi.z] {
                    if self.surface.phi(vec3(sx, sy, sz)) <= 0.0 {
                        return Err(ValidationError::new(
                            "domain",
                            "phi <= 0 at a bounding-box corner; domain not contained",
                        ));
                    }
                }
            }
        }
        // grad phi != 0 on a sample of the surface.
        let n_dir = 64;
        for i in 0..n_dir {
            let d = fibonacci_direction(i, n_dir);
            if let Ok((bp, _)) = self.first_boundary_hit_raw(Vec3::ZERO, d) {
                let g = self.surface.grad(bp.y).norm();
                if g < 1e-12 * self.diam {
                    return Err(ValidationError::new(
                        "domain",
                        format!("degenerate surface: |grad phi| = {g:.3e} at {:?}", bp.y),
                    ));
                }
            } else {
                return Err(ValidationError::new(
                    "domain",
                    "radial probe from the origin missed the surface",
                ));
            }
        }
        Ok(())
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn phi(&self, y: Vec3) -> f64 {
        self.surface.phi(y)
    }

    pub fn grad(&self, y: Vec3) -> Vec3 {
        self.surface.grad(y)
    }

    pub fn diameter(&self) -> f64 {
        self.diam
    }

    pub fn smoothness_order(&self) -> u32 {
        self.smoothness_order
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        self.bbox
    }

    pub fn is_interior(&self, y: Vec3) -> bool {
        self.phi(y) < -self.tol.surface
    }

    /// Outward unit normal of the level set through `y`.
    pub fn normal(&self, y: Vec3) -> Vec3 {
        self.grad(y).normalize()
    }

    /// Normal curvature of the boundary at `p` in the tangent direction `d`
    /// (unit), with respect to the outward normal. Positive on a convex
    /// patch seen from inside (sphere of radius r: 1/r).
    pub fn normal_curvature(&self, p: &BoundaryPoint, d: Vec3) -> f64 {
        let h = self.surface.hessian(p.y);
        let g = self.grad(p.y).norm();
        d.dot(surface::mat3_mul_vec(&h, d)) / g
    }

    /// Newton projection of `y0` onto {phi = 0} along grad phi.
    pub fn project_to_boundary(&self, y0: Vec3) -> Result<BoundaryPoint, GeomError> {
        let mut y = y0;
        let target = 0.01 * self.tol.surface;
        for _ in 0..MAX_NEWTON {
            let f = self.phi(y);
            if f.abs() <= target {
                return Ok(BoundaryPoint {
                    y,
                    n: self.normal(y),
                });
            }
            let g = self.grad(y);
            let g2 = g.norm2();
            if g2 < 1e-300 {
                return Err(GeomError::NoConvergence(MAX_NEWTON));
            }
            y -= g * (f / g2);
        }
        if self.phi(y).abs() <= self.tol.surface {
            return Ok(BoundaryPoint {
                y,
                n: self.normal(y),
            });
        }
        Err(GeomError::NoConvergence(MAX_NEWTON))
    }

    /// First intersection of the ray y + s d (s > 0) with the boundary.
    /// Returns the refined hit point and the travel length.
    pub fn first_boundary_hit(&self, y: Vec3, d: Vec3) -> Result<(BoundaryPoint, f64), GeomError> {
        debug_assert!((d.norm() - 1.0).abs() < 1e-9, "direction must be unit");
        self.first_boundary_hit_raw(y, d)
    }

    fn first_boundary_hit_raw(&self, y: Vec3, d: Vec3) -> Result<(BoundaryPoint, f64), GeomError> {
        // Bracket the first sign change. The step ladder starts tiny so that
        // short chords right after a boundary departure are not stepped over,
        // then grows to a coarse march bounded by the domain size.
        let coarse = self.diam / 2048.0;
        let s_skip = 1e-12 * self.diam;
        let s_max = 1.5 * self.diam;
        let mut s_prev = 0.0;
        let mut f_prev = self.phi(y);
        let mut step = s_skip.max(1e-300);
        loop {
            let s_next = (s_prev + step).min(s_max);
            let f_next = self.phi(y + d * s_next);
            if f_next >= 0.0 {
                if f_prev >= 0.0 && s_prev == 0.0 {
                    // Starting on/outside the surface and immediately leaving.
                    return Err(GeomError::NoHit);
                }
                let s = self.refine_crossing(y, d, s_prev, s_next)?;
                let p = y + d * s;
                return Ok((
                    BoundaryPoint {
                        y: p,
                        n: self.normal(p),
                    },
                    s,
                ));
            }
            if s_next >= s_max {
                return Err(GeomError::NoHit);
            }
            s_prev = s_next;
            f_prev = f_next;
            step = (step * 2.0).min(coarse);
        }
    }

    /// Bisection plus Newton polish of a bracketed crossing of phi along y + s d.
    fn refine_crossing(&self, y: Vec3, d: Vec3, mut lo: f64, mut hi: f64) -> Result<f64, GeomError> {
        let f = |s: f64| self.phi(y + d * s);
        let mut flo = f(lo);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm < 0.0 {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * self.diam {
                break;
            }
        }
        let _ = flo;
        let mut s = 0.5 * (lo + hi);
        for _ in 0..40 {
            let p = y + d * s;
            let fv = self.phi(p);
            if fv.abs() <= 0.001 * self.tol.surface {
                return Ok(s);
            }
            let dfds = self.grad(p).dot(d);
            if dfds.abs() < 1e-300 {
                break;
            }
            let mut s_new = s - fv / dfds;
            if s_new < lo || s_new > hi {
                s_new = 0.5 * (lo + hi);
            }
            if self.phi(y + d * s_new) < 0.0 {
                lo = s_new.max(lo);
            } else {
                hi = s_new.min(hi);
            }
            s = s_new;
        }
        let s = 0.5 * (lo + hi);
        if self.phi(y + d * s).abs() <= self.tol.surface {
            Ok(s)
        } else {
            Err(GeomError::NoConvergence(40))
        }
    }

    /// Taylor coefficients (in the scaled variable u = s/halfwidth) of
    /// phi(p + s d), fitted to samples of phi along the line. Degree equals
    /// the smoothness order. This is the finite-difference engine behind
    /// [`Domain::contact_order`]; the analytic families provide the exact
    /// polynomial as an independent oracle in the tests.
    pub fn line_taylor_scaled(&self, p: Vec3, d: Vec3, halfwidth: f64) -> Vec<f64> {
        let degree = self.smoothness_order as usize;
        let npts = degree + 1;
        let mut us = Vec::with_capacity(npts);
        let mut fs = Vec::with_capacity(npts);
        for j in 0..npts {
            let u = -1.0 + 2.0 * j as f64 / (npts - 1) as f64;
            us.push(u);
            fs.push(self.phi(p + d * (u * halfwidth)));
        }
        solve_vandermonde(&us, &fs)
    }

    /// Smallest k >= 2 with nonzero k-th derivative of phi along the tangent
    /// line at `p` in direction `d`, or `None` when every coefficient up to
    /// the smoothness order is below the noise floor (infinite-order
    /// sentinel).
    pub fn contact_order(&self, p: &BoundaryPoint, d: Vec3) -> Result<Option<u32>, GeomError> {
        let align = d.dot(p.n).abs() / d.norm();
        if align > self.tol.angle {
            return Err(GeomError::NotTangent(align));
        }
        let d = d.normalize();
        let halfwidth = 0.02 * self.diam;
        let coeffs = self.line_taylor_scaled(p.y, d, halfwidth);
        let fmax = coeffs
            .iter()
            .map(|c| c.abs())
            .fold(0.0f64, f64::max);
        let floor = 1e3 * f64::EPSILON * fmax.max(self.tol.surface);
        let cmax = coeffs[2..]
            .iter()
            .map(|c| c.abs())
            .fold(0.0f64, f64::max);
        if cmax <= floor {
            return Ok(None);
        }
        for (k, c) in coeffs.iter().enumerate().skip(2) {
            if c.abs() > self.tol.contact_rel * cmax && c.abs() > floor {
                return Ok(Some(k as u32));
            }
        }
        Ok(None)
    }
}

/// Deterministic, roughly uniform directions on the sphere.
pub fn fibonacci_direction(i: usize, n: usize) -> Vec3 {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
    vec3(r * phi.cos(), r * phi.sin(), z)
}

/// Dense polynomial interpolation: solves sum_k a_k u^k = f at the given
/// nodes by Gaussian elimination with partial pivoting. Node count is tiny
/// (smoothness order + 1), so conditioning and cost are not a concern.
fn solve_vandermonde(us: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = us.len();
    let mut a = vec![0.0; n * n];
    let mut b = fs.to_vec();
    for (j, &u) in us.iter().enumerate() {
        let mut pw = 1.0;
        for k in 0..n {
            a[j * n + k] = pw;
            pw *= u;
        }
    }
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let fac = a[row * n + col] / p;
            if fac == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= fac * a[col * n + k];
            }
            b[row] -= fac * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    b
}
