//! Analytic implicit-surface families.
//!
//! Every domain is the sublevel set {phi < 0} of one of these scalar fields.
//! The families are polynomial in the coordinates, so gradients and Hessians
//! are available in closed form.

use crate::vec3::{vec3, Vec3};
use serde::{Deserialize, Serialize};

/// Symmetric 3x3 matrix, row-major.
pub type Mat3 = [[f64; 3]; 3];

pub fn mat3_mul_vec(m: &Mat3, v: Vec3) -> Vec3 {
    vec3(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// Named analytic families with numeric parameters, serialized bit-exactly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Surface {
    /// phi = |y|^2 - r^2
    Ball { radius: f64 },
    /// phi = (x/a)^2 + (y/b)^2 + (z/c)^2 - 1
    Ellipsoid { semi_axes: [f64; 3] },
    /// phi = sum_i (y_i/a_i)^(2 p_i) - 1 with integer p_i >= 1
    Superquadric {
        exponents: [u32; 3],
        semi_axes: [f64; 3],
    },
    /// phi = |y|^2 - r^2 - amplitude * z^degree
    PerturbedBall {
        radius: f64,
        amplitude: f64,
        degree: u32,
    },
}

impl Surface {
    pub fn phi(&self, y: Vec3) -> f64 {
        match self {
            Surface::Ball { radius } => y.norm2() - radius * radius,
            Surface::Ellipsoid { semi_axes: a } => {
                let u = y.x / a[0];
                let v = y.y / a[1];
                let w = y.z / a[2];
                u * u + v * v + w * w - 1.0
            }
            Surface::Superquadric {
                exponents: p,
                semi_axes: a,
            } => {
                let mut s = -1.0;
                for (i, c) in y.as_array().iter().enumerate() {
                    s += (c / a[i]).powi(2 * p[i] as i32);
                }
                s
            }
            Surface::PerturbedBall {
                radius,
                amplitude,
                degree,
            } => y.norm2() - radius * radius - amplitude * y.z.powi(*degree as i32),
        }
    }

    pub fn grad(&self, y: Vec3) -> Vec3 {
        match self {
            Surface::Ball { .. } => y * 2.0,
            Surface::Ellipsoid { semi_axes: a } => vec3(
                2.0 * y.x / (a[0] * a[0]),
                2.0 * y.y / (a[1] * a[1]),
                2.0 * y.z / (a[2] * a[2]),
            ),
            Surface::Superquadric {
                exponents: p,
                semi_axes: a,
            } => {
                let g = |c: f64, a: f64, p: u32| {
                    2.0 * p as f64 * (c / a).powi(2 * p as i32 - 1) / a
                };
                vec3(
                    g(y.x, a[0], p[0]),
                    g(y.y, a[1], p[1]),
                    g(y.z, a[2], p[2]),
                )
            }
            Surface::PerturbedBall {
                amplitude, degree, ..
            } => {
                let d = *degree as i32;
                vec3(
                    2.0 * y.x,
                    2.0 * y.y,
                    2.0 * y.z - amplitude * d as f64 * y.z.powi(d - 1),
                )
            }
        }
    }

    pub fn hessian(&self, y: Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        match self {
            Surface::Ball { .. } => {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = 2.0;
                }
            }
            Surface::Ellipsoid { semi_axes: a } => {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = 2.0 / (a[i] * a[i]);
                }
            }
            Surface::Superquadric {
                exponents: p,
                semi_axes: a,
            } => {
                let comps = y.as_array();
                for (i, row) in m.iter_mut().enumerate() {
                    let pi = p[i] as i32;
                    row[i] = 2.0 * pi as f64 * (2 * pi - 1) as f64
                        * (comps[i] / a[i]).powi(2 * pi - 2)
                        / (a[i] * a[i]);
                }
            }
            Surface::PerturbedBall {
                amplitude, degree, ..
            } => {
                let d = *degree as i32;
                m[0][0] = 2.0;
                m[1][1] = 2.0;
                m[2][2] = 2.0
                    - amplitude * (d * (d - 1)) as f64 * if d >= 2 { y.z.powi(d - 2) } else { 0.0 };
            }
        }
        m
    }

    /// Axis-aligned box guaranteed to contain {phi <= 0}, with a margin.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let half = match self {
            Surface::Ball { radius } => vec3(*radius, *radius, *radius),
            Surface::Ellipsoid { semi_axes: a } | Surface::Superquadric { semi_axes: a, .. } => {
                vec3(a[0], a[1], a[2])
            }
            Surface::PerturbedBall {
                radius,
                amplitude,
                degree,
            } => {
                // |y|^2 <= r^2 + |A| R^deg; iterate the fixed point a few times.
                let mut rr = *radius;
                for _ in 0..16 {
                    rr = (radius * radius + amplitude.abs() * rr.powi(*degree as i32)).sqrt();
                }
                vec3(rr, rr, rr)
            }
        };
        let half = half * 1.0001 + vec3(1e-9, 1e-9, 1e-9);
        (-half, half)
    }

    /// Exact Taylor coefficients of s -> phi(y + s d), lowest degree first.
    ///
    /// Possible because every family is polynomial; this is the independent
    /// oracle the finite-difference contact-order engine is checked against.
    pub fn line_polynomial(&self, y: Vec3, d: Vec3) -> Vec<f64> {
        match self {
            Surface::Ball { radius } => vec![
                y.norm2() - radius * radius,
                2.0 * y.dot(d),
                d.norm2(),
            ],
            Surface::Ellipsoid { semi_axes: a } => {
                let scale = |v: Vec3| vec3(v.x / a[0], v.y / a[1], v.z / a[2]);
                let ys = scale(y);
                let ds = scale(d);
                vec![ys.norm2() - 1.0, 2.0 * ys.dot(ds), ds.norm2()]
            }
            Surface::Superquadric {
                exponents: p,
                semi_axes: a,
            } => {
                let deg = 2 * p.iter().max().copied().unwrap_or(1) as usize;
                let mut coeffs = vec![0.0; deg + 1];
                coeffs[0] = -1.0;
                for i in 0..3 {
                    let u = y.as_array()[i] / a[i];
                    let w = d.as_array()[i] / a[i];
                    // (u + s w)^(2p) via the binomial theorem
                    let n = 2 * p[i] as usize;
                    let mut binom = 1.0f64;
                    for (k, c) in coeffs.iter_mut().take(n + 1).enumerate() {
                        *c += binom * u.powi((n - k) as i32) * w.powi(k as i32);
                        binom *= (n - k) as f64 / (k + 1) as f64;
                    }
                }
                coeffs
            }
            Surface::PerturbedBall {
                radius,
                amplitude,
                degree,
            } => {
                let n = (*degree as usize).max(2);
                let mut coeffs = vec![0.0; n + 1];
                coeffs[0] += y.norm2() - radius * radius;
                coeffs[1] += 2.0 * y.dot(d);
                coeffs[2] += d.norm2();
                let m = *degree as usize;
                let mut binom = 1.0f64;
                for k in 0..=m {
                    coeffs[k] -= amplitude * binom * y.z.powi((m - k) as i32) * d.z.powi(k as i32);
                    binom *= (m - k) as f64 / (k + 1) as f64;
                }
                coeffs
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(s: &Surface, y: Vec3) -> Vec3 {
        let e = 1e-6;
        vec3(
            (s.phi(y + Vec3::EX * e) - s.phi(y - Vec3::EX * e)) / (2.0 * e),
            (s.phi(y + Vec3::EY * e) - s.phi(y - Vec3::EY * e)) / (2.0 * e),
            (s.phi(y + Vec3::EZ * e) - s.phi(y - Vec3::EZ * e)) / (2.0 * e),
        )
    }

    #[test]
    fn gradients_match_finite_differences() {
        let surfaces = [
            Surface::Ball { radius: 1.0 },
            Surface::Ellipsoid {
                semi_axes: [2.0, 1.0, 1.0],
            },
            Surface::Superquadric {
                exponents: [2, 1, 1],
                semi_axes: [1.0, 1.0, 1.0],
            },
            Surface::PerturbedBall {
                radius: 1.0,
                amplitude: 0.1,
                degree: 3,
            },
        ];
        let pts = [vec3(0.3, -0.4, 0.5), vec3(0.9, 0.1, -0.2)];
        for s in &surfaces {
            for &y in &pts {
                let g = s.grad(y);
                let gf = fd_grad(s, y);
                assert!((g - gf).norm() < 1e-8 * (1.0 + g.norm()), "{s:?} at {y:?}");
            }
        }
    }

    #[test]
    fn line_polynomial_matches_phi() {
        let surfaces = [
            Surface::Superquadric {
                exponents: [2, 1, 3],
                semi_axes: [1.0, 0.8, 1.2],
            },
            Surface::PerturbedBall {
                radius: 1.0,
                amplitude: 0.1,
                degree: 3,
            },
        ];
        let y = vec3(0.2, 0.3, -0.1);
        let d = vec3(0.6, -0.2, 0.77).normalize();
        for srf in &surfaces {
            let c = srf.line_polynomial(y, d);
            for &s in &[-0.5, -0.03, 0.0, 0.2, 0.9] {
                let horner = c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck);
                let direct = srf.phi(y + d * s);
                assert!(
                    (horner - direct).abs() < 1e-12 * (1.0 + direct.abs()),
                    "{srf:?}: s={s}"
                );
            }
        }
    }
}
