//! Discrete spatial operators.
//!
//! Conventions that the energy bookkeeping relies on:
//!
//! * the elastic operator is evaluated at free displacement nodes only and
//!   satisfies <-A v, v> = |grad_s v|^2-sum + |div_c v|^2 + sum_a |T_a v_a|^2
//!   exactly (summation by parts), where grad_s is the staggered edge
//!   gradient, div_c the centered divergence with zero padding and T_a the
//!   half-weighted second difference;
//! * `curl` and `curl_transpose` are exact matrix transposes of each other,
//!   so the curl-curl operator assembled as curl_transpose(curl(.)) has
//!   <C h, h> = |curl h|^2 exactly.
//!
//! Out-of-range reads are zero for Dirichlet axes and wrap for periodic
//! axes; a single-node axis wraps onto itself, which makes every derivative
//! along it vanish (the 2.5D reduction).

use crate::material::Material;
use crate::pde::{AxisBc, Grid, VectorField};
use crate::vec3::Vec3;

#[inline]
fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Applies a 1D slice kernel along `axis`, reading from `src` and writing
/// to `dst` (which may not alias).
pub fn apply_line(
    grid: &Grid,
    axis: usize,
    src: &[f64],
    dst: &mut [f64],
    kernel: impl Fn(&Grid, usize, &[f64], &mut [f64]),
) {
    let n = grid.n;
    let stride = grid.strides()[axis];
    let len = n[axis];
    let mut buf_in = vec![0.0; len];
    let mut buf_out = vec![0.0; len];
    let (oa, ob) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for jb in 0..n[ob] {
        for ja in 0..n[oa] {
            let mut coords = [0usize; 3];
            coords[oa] = ja;
            coords[ob] = jb;
            let base = grid.idx(coords[0], coords[1], coords[2]);
            for (k, b) in buf_in.iter_mut().enumerate() {
                *b = src[base + k * stride];
            }
            kernel(grid, axis, &buf_in, &mut buf_out);
            for (k, b) in buf_out.iter().enumerate() {
                dst[base + k * stride] = *b;
            }
        }
    }
}

/// 1D first derivative: centered inside, second-order one-sided at
/// Dirichlet ends, wrapped for periodic axes, zero on an invariant axis.
fn d1_line(grid: &Grid, axis: usize, x: &[f64], y: &mut [f64]) {
    let n = x.len();
    let h = grid.h(axis);
    if n == 1 {
        y[0] = 0.0;
        return;
    }
    match grid.bc[axis] {
        AxisBc::Periodic => {
            for i in 0..n {
                let ip = wrap(i as i64 + 1, n);
                let im = wrap(i as i64 - 1, n);
                y[i] = (x[ip] - x[im]) / (2.0 * h);
            }
        }
        AxisBc::Dirichlet => {
            y[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
            for i in 1..n - 1 {
                y[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
            }
            y[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
        }
    }
}

/// Exact transpose of `d1_line`.
fn d1t_line(grid: &Grid, axis: usize, g: &[f64], y: &mut [f64]) {
    let n = g.len();
    let h = grid.h(axis);
    if n == 1 {
        y[0] = 0.0;
        return;
    }
    let s = 1.0 / (2.0 * h);
    match grid.bc[axis] {
        AxisBc::Periodic => {
            for j in 0..n {
                let jp = wrap(j as i64 + 1, n);
                let jm = wrap(j as i64 - 1, n);
                y[j] = (g[jm] - g[jp]) * s;
            }
        }
        AxisBc::Dirichlet => {
            for (j, yj) in y.iter_mut().enumerate() {
                let mut acc = 0.0;
                // Interior rows i = 1..n-2 contribute +-1/(2h) at j = i +- 1.
                if j >= 2 && j - 1 <= n - 2 {
                    acc += g[j - 1];
                }
                if j + 1 <= n - 2 {
                    acc -= g[j + 1];
                }
                // One-sided end rows.
                match j {
                    0 => acc += -3.0 * g[0],
                    1 => acc += 4.0 * g[0],
                    2 => acc += -g[0],
                    _ => {}
                }
                if j + 3 == n {
                    acc += g[n - 1];
                } else if j + 2 == n {
                    acc += -4.0 * g[n - 1];
                } else if j + 1 == n {
                    acc += 3.0 * g[n - 1];
                }
                *yj = acc * s;
            }
        }
    }
}

/// d_axis applied to a scalar field.
pub fn diff_axis(grid: &Grid, axis: usize, src: &[f64], dst: &mut [f64]) {
    apply_line(grid, axis, src, dst, d1_line);
}

/// Exact transpose of [`diff_axis`].
pub fn diff_axis_transpose(grid: &Grid, axis: usize, src: &[f64], dst: &mut [f64]) {
    apply_line(grid, axis, src, dst, d1t_line);
}

/// curl v with the one-sided/centered derivative.
pub fn curl(grid: &Grid, v: &VectorField, out: &mut VectorField, work: &mut Vec<f64>) {
    work.resize(grid.len(), 0.0);
    // out_x = d_y v_z - d_z v_y, and cyclic.
    for c in 0..3 {
        let a = (c + 1) % 3;
        let b = (c + 2) % 3;
        diff_axis(grid, a, &v[b], &mut out[c]);
        diff_axis(grid, b, &v[a], work);
        for (o, w) in out[c].iter_mut().zip(work.iter()) {
            *o -= *w;
        }
    }
}

/// Exact transpose of [`curl`]: (R^T g)_x = d_z^T g_y - d_y^T g_z, cyclic.
pub fn curl_transpose(grid: &Grid, g: &VectorField, out: &mut VectorField, work: &mut Vec<f64>) {
    work.resize(grid.len(), 0.0);
    for c in 0..3 {
        let a = (c + 1) % 3; // d_a couples comp c into g_b and vice versa
        let b = (c + 2) % 3;
        diff_axis_transpose(grid, b, &g[a], &mut out[c]);
        diff_axis_transpose(grid, a, &g[b], work);
        for (o, w) in out[c].iter_mut().zip(work.iter()) {
            *o -= *w;
        }
    }
}

#[inline]
fn neighbor(i: usize, n: usize, d: i64, bc: AxisBc) -> Option<usize> {
    if n == 1 {
        return Some(0);
    }
    let j = i as i64 + d;
    match bc {
        AxisBc::Periodic => Some(wrap(j, n)),
        AxisBc::Dirichlet => {
            if j < 0 || j >= n as i64 {
                None
            } else {
                Some(j as usize)
            }
        }
    }
}

#[inline]
fn read3(grid: &Grid, f: &[f64], i: [usize; 3], d: [i64; 3]) -> f64 {
    let mut c = [0usize; 3];
    for a in 0..3 {
        match neighbor(i[a], grid.n[a], d[a], grid.bc[a]) {
            Some(j) => c[a] = j,
            None => return 0.0,
        }
    }
    f[grid.idx(c[0], c[1], c[2])]
}

/// Elastic operator mu lap v + (lambda + mu) grad div v, evaluated at free
/// displacement nodes (zero at pinned boundary nodes).
pub fn apply_elastic(grid: &Grid, material: &Material, v: &VectorField, out: &mut VectorField) {
    let mu = material.mu;
    let lm = material.lambda + material.mu;
    let h = [grid.h(0), grid.h(1), grid.h(2)];
    let n = grid.n;
    for k in 0..3 {
        for iz in 0..n[2] {
            for iy in 0..n[1] {
                for ix in 0..n[0] {
                    let id = grid.idx(ix, iy, iz);
                    if !grid.displacement_free(ix, iy, iz) {
                        out[k][id] = 0.0;
                        continue;
                    }
                    let i = [ix, iy, iz];
                    // Compact Laplacian of component k.
                    let mut lap = 0.0;
                    for a in 0..3 {
                        if n[a] == 1 {
                            continue;
                        }
                        let mut d = [0i64; 3];
                        d[a] = 1;
                        let fp = read3(grid, &v[k], i, d);
                        d[a] = -1;
                        let fm = read3(grid, &v[k], i, d);
                        lap += (fp - 2.0 * v[k][id] + fm) / (h[a] * h[a]);
                    }
                    // grad(div v), component k.
                    let mut gd = 0.0;
                    for l in 0..3 {
                        if l == k {
                            if n[k] == 1 {
                                continue;
                            }
                            let mut d = [0i64; 3];
                            d[k] = 1;
                            let fp = read3(grid, &v[k], i, d);
                            d[k] = -1;
                            let fm = read3(grid, &v[k], i, d);
                            gd += (fp - 2.0 * v[k][id] + fm) / (h[k] * h[k]);
                        } else {
                            if n[k] == 1 || n[l] == 1 {
                                continue;
                            }
                            let mut d = [0i64; 3];
                            d[k] = 1;
                            d[l] = 1;
                            let fpp = read3(grid, &v[l], i, d);
                            d[l] = -1;
                            let fpm = read3(grid, &v[l], i, d);
                            d[k] = -1;
                            d[l] = 1;
                            let fmp = read3(grid, &v[l], i, d);
                            d[l] = -1;
                            let fmm = read3(grid, &v[l], i, d);
                            gd += (fpp - fpm - fmp + fmm) / (4.0 * h[k] * h[l]);
                        }
                    }
                    out[k][id] = mu * lap + lm * gd;
                }
            }
        }
    }
}

/// Centered divergence with zero padding (Dirichlet) / wrap (periodic),
/// evaluated at every node.
pub fn divergence_centered(grid: &Grid, v: &VectorField, out: &mut [f64]) {
    let h = [grid.h(0), grid.h(1), grid.h(2)];
    let n = grid.n;
    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let i = [ix, iy, iz];
                let mut s = 0.0;
                for a in 0..3 {
                    if n[a] == 1 {
                        continue;
                    }
                    let mut d = [0i64; 3];
                    d[a] = 1;
                    let fp = read3(grid, &v[a], i, d);
                    d[a] = -1;
                    let fm = read3(grid, &v[a], i, d);
                    s += (fp - fm) / (2.0 * h[a]);
                }
                out[grid.idx(ix, iy, iz)] = s;
            }
        }
    }
}

/// Half-weighted second difference T_a f = (2 f - f_{+a} - f_{-a}) / (2 h_a)
/// with zero padding / wrap; the correction term in the compressional form.
pub fn t_second_diff(grid: &Grid, axis: usize, f: &[f64], out: &mut [f64]) {
    let h = grid.h(axis);
    let n = grid.n;
    if n[axis] == 1 {
        out.fill(0.0);
        return;
    }
    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let i = [ix, iy, iz];
                let id = grid.idx(ix, iy, iz);
                let mut d = [0i64; 3];
                d[axis] = 1;
                let fp = read3(grid, f, i, d);
                d[axis] = -1;
                let fm = read3(grid, f, i, d);
                out[id] = (2.0 * f[id] - fp - fm) / (2.0 * h);
            }
        }
    }
}

/// Sum over staggered edges of ((f_{i+1}-f_i)/h)^2, all axes: equals
/// <-lap f, f> exactly for fields vanishing on Dirichlet faces.
pub fn staggered_gradient_energy(grid: &Grid, f: &[f64]) -> f64 {
    let n = grid.n;
    let mut total = 0.0;
    for axis in 0..3 {
        if n[axis] == 1 {
            continue;
        }
        let h = grid.h(axis);
        let stride = grid.strides()[axis];
        let edges = match grid.bc[axis] {
            AxisBc::Dirichlet => n[axis] - 1,
            AxisBc::Periodic => n[axis],
        };
        let (oa, ob) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for jb in 0..n[ob] {
            for ja in 0..n[oa] {
                let mut coords = [0usize; 3];
                coords[oa] = ja;
                coords[ob] = jb;
                let base = grid.idx(coords[0], coords[1], coords[2]);
                for e in 0..edges {
                    let a = f[base + e * stride];
                    let b = f[base + ((e + 1) % n[axis]) * stride];
                    let d = (b - a) / h;
                    total += d * d;
                }
            }
        }
    }
    total
}

/// Pointwise cross product with a constant vector: out = v x b.
pub fn cross_with_b(v: &VectorField, b: Vec3, out: &mut VectorField) {
    let n = v[0].len();
    for i in 0..n {
        let (vx, vy, vz) = (v[0][i], v[1][i], v[2][i]);
        out[0][i] = vy * b.z - vz * b.y;
        out[1][i] = vz * b.x - vx * b.z;
        out[2][i] = vx * b.y - vy * b.x;
    }
    let _ = n;
}

/// Zeroes the pinned displacement DOFs (Dirichlet faces).
pub fn pin_displacement(grid: &Grid, v: &mut VectorField) {
    let n = grid.n;
    for k in 0..3 {
        for iz in 0..n[2] {
            for iy in 0..n[1] {
                for ix in 0..n[0] {
                    if !grid.displacement_free(ix, iy, iz) {
                        v[k][grid.idx(ix, iy, iz)] = 0.0;
                    }
                }
            }
        }
    }
}

/// Zeroes the pinned magnetic DOFs: the normal component on each Dirichlet
/// face (h . n = 0 imposed strongly; the tangential curl condition is the
/// natural condition of the curl-curl form).
pub fn pin_h(grid: &Grid, h: &mut VectorField) {
    let n = grid.n;
    for a in 0..3 {
        if grid.bc[a] != AxisBc::Dirichlet || n[a] == 1 {
            continue;
        }
        for iz in 0..n[2] {
            for iy in 0..n[1] {
                for ix in 0..n[0] {
                    let i = [ix, iy, iz];
                    if i[a] == 0 || i[a] == n[a] - 1 {
                        h[a][grid.idx(ix, iy, iz)] = 0.0;
                    }
                }
            }
        }
    }
}

/// Curl-curl with the strong normal condition folded in:
/// C h = pin(curl^T(curl(pin h))).
pub fn apply_curl_curl(
    grid: &Grid,
    h: &VectorField,
    out: &mut VectorField,
    work_v: &mut VectorField,
    work_s: &mut Vec<f64>,
) {
    curl(grid, h, work_v, work_s);
    curl_transpose(grid, work_v, out, work_s);
    pin_h(grid, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{vdot, vnorm2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_field(grid: &Grid, rng: &mut impl Rng) -> Vec<f64> {
        (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rand_vfield(grid: &Grid, rng: &mut impl Rng) -> VectorField {
        [rand_field(grid, rng), rand_field(grid, rng), rand_field(grid, rng)]
    }

    fn grids() -> Vec<Grid> {
        vec![
            Grid::cube(10, 1.0, AxisBc::Dirichlet),
            Grid::cube(9, 2.0, AxisBc::Periodic),
            Grid::new(
                [10, 12, 1],
                [1.0, 1.3, 1.0],
                [AxisBc::Dirichlet, AxisBc::Dirichlet, AxisBc::Periodic],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn d1_transpose_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for grid in grids() {
            for axis in 0..3 {
                let x = rand_field(&grid, &mut rng);
                let y = rand_field(&grid, &mut rng);
                let mut dx = grid.scalar_field();
                let mut dty = grid.scalar_field();
                diff_axis(&grid, axis, &x, &mut dx);
                diff_axis_transpose(&grid, axis, &y, &mut dty);
                let lhs = super::super::dot(&dx, &y);
                let rhs = super::super::dot(&x, &dty);
                assert!(
                    (lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()),
                    "axis {axis}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn curl_transpose_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for grid in grids() {
            let x = rand_vfield(&grid, &mut rng);
            let y = rand_vfield(&grid, &mut rng);
            let mut cx = grid.vector_field();
            let mut cty = grid.vector_field();
            let mut w = Vec::new();
            curl(&grid, &x, &mut cx, &mut w);
            curl_transpose(&grid, &y, &mut cty, &mut w);
            let lhs = vdot(&cx, &y);
            let rhs = vdot(&x, &cty);
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn curl_curl_is_symmetric_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = Grid::cube(10, 1.0, AxisBc::Dirichlet);
        let mut x = rand_vfield(&grid, &mut rng);
        let mut y = rand_vfield(&grid, &mut rng);
        pin_h(&grid, &mut x);
        pin_h(&grid, &mut y);
        let mut cx = grid.vector_field();
        let mut cy = grid.vector_field();
        let mut wv = grid.vector_field();
        let mut ws = Vec::new();
        apply_curl_curl(&grid, &x, &mut cx, &mut wv, &mut ws);
        apply_curl_curl(&grid, &y, &mut cy, &mut wv, &mut ws);
        let sxy = vdot(&cx, &y);
        let syx = vdot(&x, &cy);
        assert!((sxy - syx).abs() < 1e-10 * (1.0 + sxy.abs()));
        assert!(vdot(&cx, &x) >= -1e-12);
        // <C h, h> = |curl h|^2 exactly.
        let mut c = grid.vector_field();
        curl(&grid, &x, &mut c, &mut ws);
        assert!((vdot(&cx, &x) - vnorm2(&c)).abs() < 1e-10 * (1.0 + vnorm2(&c)));
    }

    #[test]
    fn elastic_is_symmetric_and_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let material = Material::new(2.0, 1.0, 0.5, 1.0, Vec3::EX).unwrap();
        for grid in grids() {
            let mut x = rand_vfield(&grid, &mut rng);
            let mut y = rand_vfield(&grid, &mut rng);
            pin_displacement(&grid, &mut x);
            pin_displacement(&grid, &mut y);
            let mut ax = grid.vector_field();
            let mut ay = grid.vector_field();
            apply_elastic(&grid, &material, &x, &mut ax);
            apply_elastic(&grid, &material, &y, &mut ay);
            let sxy = vdot(&ax, &y);
            let syx = vdot(&x, &ay);
            assert!(
                (sxy - syx).abs() < 1e-9 * (1.0 + sxy.abs()),
                "symmetry {sxy} vs {syx}"
            );
            // <-A x, x> = mu sum_k |grad_s x_k|^2 + (lam+mu)(|div_c x|^2 + sum_a |T_a x_a|^2).
            let mut shear = 0.0;
            for k in 0..3 {
                shear += staggered_gradient_energy(&grid, &x[k]);
            }
            let mut div = grid.scalar_field();
            divergence_centered(&grid, &x, &mut div);
            let mut comp = super::super::dot(&div, &div);
            let mut tbuf = grid.scalar_field();
            for a in 0..3 {
                t_second_diff(&grid, a, &x[a], &mut tbuf);
                comp += super::super::dot(&tbuf, &tbuf);
            }
            let form = material.mu * shear + (material.lambda + material.mu) * comp;
            let direct = -vdot(&ax, &x);
            assert!(
                (form - direct).abs() < 1e-9 * (1.0 + form.abs()),
                "quadratic form {form} vs {direct}"
            );
            assert!(direct >= 0.0);
        }
    }

    #[test]
    fn elastic_negative_definite_for_negative_lambda_plus_mu() {
        // lambda + mu < 0 but lambda + 2 mu > 0 stays dissipation-free.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let material = Material::new(-1.5, 1.0, 0.5, 1.0, Vec3::EX).unwrap();
        let grid = Grid::cube(10, 1.0, AxisBc::Dirichlet);
        for _ in 0..16 {
            let mut x = rand_vfield(&grid, &mut rng);
            pin_displacement(&grid, &mut x);
            let mut ax = grid.vector_field();
            apply_elastic(&grid, &material, &x, &mut ax);
            assert!(-vdot(&ax, &x) >= -1e-10 * vnorm2(&x));
        }
    }

    #[test]
    fn elastic_plane_wave_symbols() {
        // Periodic grid: longitudinal polarization sees -(lambda+2mu)|k_eff|^2,
        // transversal -(mu)|k_eff|^2 with the compact effective wavenumber.
        let material = Material::new(2.0, 1.0, 0.5, 1.0, Vec3::EX).unwrap();
        let n = 32;
        let grid = Grid::cube(n, 1.0, AxisBc::Periodic);
        let h = grid.h(0);
        let k = 2.0 * std::f64::consts::PI / grid.extents[0] * 3.0; // mode 3
        let keff2 = (2.0 - 2.0 * (k * h).cos()) / (h * h);
        for (pol, c2) in [(0usize, material.lambda + 2.0 * material.mu), (1usize, material.mu)] {
            let mut v = grid.vector_field();
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let x = ix as f64 * h;
                        v[pol][grid.idx(ix, iy, iz)] = (k * x).sin();
                    }
                }
            }
            let mut av = grid.vector_field();
            apply_elastic(&grid, &material, &v, &mut av);
            // av = eigenvalue * v with eigenvalue = -c2 keff2.
            let num = vdot(&av, &v);
            let den = vnorm2(&v);
            let eig = num / den;
            assert!(
                (eig + c2 * keff2).abs() < 1e-9 * c2 * keff2,
                "pol {pol}: {eig} vs {}",
                -c2 * keff2
            );
        }
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let material = Material::new(2.0, 1.0, 0.5, 1.0, Vec3::EX).unwrap();
        let grid = Grid::cube(8, 1.0, AxisBc::Dirichlet);
        let v = grid.vector_field();
        let mut av = grid.vector_field();
        apply_elastic(&grid, &material, &v, &mut av);
        assert!(vnorm2(&av) == 0.0);
    }
}
