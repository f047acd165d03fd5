//! Separable sine/cosine transforms on the box and the spectral
//! divergence projection of the magnetic field.
//!
//! On a Dirichlet axis the discrete sine modes (DST-I on the interior
//! nodes) are the exact eigenvectors of the compact Laplacian, and the
//! cosine modes (DCT-I on all nodes) are their even counterparts. A cavity
//! mode of the magnetic field carries a sine profile along its own axis and
//! cosine profiles along the others, which reproduces h . n = 0 exactly.
//! The centered divergence acts diagonally on this basis with the effective
//! wavenumber sin(theta)/h, so zeroing the longitudinal coefficient kills
//! the centered divergence at every interior node exactly.

use crate::error::ValidationError;
use crate::pde::{AxisBc, Grid, VectorField};

/// Dense symmetric orthonormal transform matrix of one axis role.
#[derive(Clone, Debug)]
struct AxisTransform {
    /// n x n (cosine role, full line) or (n-2) x (n-2) (sine role).
    matrix: Vec<f64>,
    size: usize,
}

impl AxisTransform {
    fn identity(size: usize) -> AxisTransform {
        let mut matrix = vec![0.0; size * size];
        for i in 0..size {
            matrix[i * size + i] = 1.0;
        }
        AxisTransform { matrix, size }
    }

    /// DST-I on `m` interior nodes: S[p][i] = sqrt(2/(m+1)) sin(pi (p+1)(i+1)/(m+1)).
    fn dst1(m: usize) -> AxisTransform {
        let mut matrix = vec![0.0; m * m];
        let norm = (2.0 / (m as f64 + 1.0)).sqrt();
        for p in 0..m {
            for i in 0..m {
                matrix[p * m + i] = norm
                    * (std::f64::consts::PI * (p as f64 + 1.0) * (i as f64 + 1.0)
                        / (m as f64 + 1.0))
                        .sin();
            }
        }
        AxisTransform { matrix, size: m }
    }

    /// DCT-I on n nodes: C[p][i] = sqrt(2/(n-1)) c_p c_i cos(pi p i/(n-1)),
    /// c_0 = c_{n-1} = 1/sqrt(2).
    fn dct1(n: usize) -> AxisTransform {
        let mut matrix = vec![0.0; n * n];
        let norm = (2.0 / (n as f64 - 1.0)).sqrt();
        let c = |i: usize| {
            if i == 0 || i == n - 1 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            }
        };
        for p in 0..n {
            for i in 0..n {
                matrix[p * n + i] = norm
                    * c(p)
                    * c(i)
                    * (std::f64::consts::PI * p as f64 * i as f64 / (n as f64 - 1.0)).cos();
            }
        }
        AxisTransform { matrix, size: n }
    }

    fn apply_to_line(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.size);
        for (p, yp) in y.iter_mut().enumerate() {
            let row = &self.matrix[p * self.size..(p + 1) * self.size];
            *yp = row.iter().zip(x).map(|(m, v)| m * v).sum();
        }
    }
}

/// Spectral projector removing the centered-divergence content of the
/// magnetic field on a box with Dirichlet and invariant axes.
pub struct SpectralProjector {
    grid: Grid,
    /// Sine transform per axis (component's own axis).
    sine: [AxisTransform; 3],
    /// Cosine transform per axis (transverse axes).
    cosine: [AxisTransform; 3],
    /// Effective wavenumber sin(theta_m)/h per axis and mode index.
    k_eff: [Vec<f64>; 3],
}

impl SpectralProjector {
    pub fn new(grid: &Grid) -> Result<SpectralProjector, ValidationError> {
        let mut sine = Vec::with_capacity(3);
        let mut cosine = Vec::with_capacity(3);
        let mut k_eff = Vec::with_capacity(3);
        for a in 0..3 {
            let n = grid.n[a];
            if n == 1 {
                sine.push(AxisTransform::identity(1));
                cosine.push(AxisTransform::identity(1));
                k_eff.push(vec![0.0]);
                continue;
            }
            if grid.bc[a] != AxisBc::Dirichlet {
                return Err(ValidationError::new(
                    "projector",
                    "divergence projection requires Dirichlet or invariant axes",
                ));
            }
            sine.push(AxisTransform::dst1(n - 2));
            cosine.push(AxisTransform::dct1(n));
            let h = grid.h(a);
            let mut ks = vec![0.0; n];
            for (m, k) in ks.iter_mut().enumerate() {
                let theta = std::f64::consts::PI * m as f64 / (n as f64 - 1.0);
                *k = theta.sin() / h;
            }
            k_eff.push(ks);
        }
        Ok(SpectralProjector {
            grid: *grid,
            sine: [sine.remove(0), sine.remove(0), sine.remove(0)],
            cosine: [cosine.remove(0), cosine.remove(0), cosine.remove(0)],
            k_eff: [k_eff.remove(0), k_eff.remove(0), k_eff.remove(0)],
        })
    }

    /// Transforms component `comp` to (or from) coefficient space: sine
    /// along its own axis over interior slots, cosine along the others.
    /// The transforms are involutions, so the same call inverts.
    fn transform_component(&self, comp: usize, data: &mut [f64]) {
        let grid = &self.grid;
        let n = grid.n;
        let strides = grid.strides();
        for axis in 0..3 {
            if n[axis] == 1 {
                continue;
            }
            let own = axis == comp;
            let t = if own { &self.sine[axis] } else { &self.cosine[axis] };
            let stride = strides[axis];
            let (oa, ob) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let full = n[axis];
            let (offset, len) = if own { (1usize, full - 2) } else { (0usize, full) };
            let mut x = vec![0.0; len];
            let mut y = vec![0.0; len];
            for jb in 0..n[ob] {
                for ja in 0..n[oa] {
                    let mut coords = [0usize; 3];
                    coords[oa] = ja;
                    coords[ob] = jb;
                    let base = grid.idx(coords[0], coords[1], coords[2]);
                    for k in 0..len {
                        x[k] = data[base + (offset + k) * stride];
                    }
                    t.apply_to_line(&x, &mut y);
                    for k in 0..len {
                        data[base + (offset + k) * stride] = y[k];
                    }
                }
            }
        }
    }

    /// Removes the longitudinal (divergence-carrying) part of `h` in the
    /// cavity basis. Returns the removed coefficient mass (squared).
    pub fn project(&self, h: &mut VectorField) -> f64 {
        for c in 0..3 {
            self.transform_component(c, &mut h[c]);
        }
        let grid = &self.grid;
        let n = grid.n;
        let mut removed = 0.0;
        for mz in 0..n[2] {
            for my in 0..n[1] {
                for mx in 0..n[0] {
                    let m = [mx, my, mz];
                    let id = grid.idx(mx, my, mz);
                    let k = [
                        self.k_eff[0][mx],
                        self.k_eff[1][my],
                        self.k_eff[2][mz],
                    ];
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if k2 <= 0.0 {
                        continue;
                    }
                    // Coefficient of component a exists iff its own-axis
                    // index is an interior sine slot; elsewhere k_a = 0.
                    let mut dotp = 0.0;
                    for a in 0..3 {
                        if slot_valid(n[a], m[a]) {
                            dotp += k[a] * h[a][id];
                        }
                    }
                    if dotp == 0.0 {
                        continue;
                    }
                    let scale = dotp / k2;
                    for a in 0..3 {
                        if slot_valid(n[a], m[a]) && k[a] != 0.0 {
                            h[a][id] -= scale * k[a];
                        }
                    }
                    removed += scale * scale * k2;
                }
            }
        }
        for c in 0..3 {
            self.transform_component(c, &mut h[c]);
        }
        crate::pde::ops::pin_h(&self.grid, h);
        removed
    }
}

#[inline]
fn slot_valid(n: usize, m: usize) -> bool {
    n == 1 || (m >= 1 && m <= n - 2)
}
