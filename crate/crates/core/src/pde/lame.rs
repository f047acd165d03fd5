//! Leapfrog (velocity-Verlet) integrator of the pure elastic system.

use crate::error::SolveError;
use crate::material::Material;
use crate::pde::energy::{elastic_form, EnergyRecord};
use crate::pde::ops::{apply_elastic, pin_displacement};
use crate::pde::{vaxpy, vnorm2, FieldState, Grid, VectorField};

/// CFL bound of the explicit wave update.
pub fn cfl_limit(grid: &Grid, material: &Material) -> f64 {
    0.9 * grid.h_min() / (material.c_max() * 3.0f64.sqrt())
}

pub struct LameSolver {
    pub grid: Grid,
    pub material: Material,
    pub v: VectorField,
    pub w: VectorField,
    accel: VectorField,
    pub t: f64,
    pub dt: f64,
}

impl LameSolver {
    pub fn new(
        grid: Grid,
        material: Material,
        mut v0: VectorField,
        mut v1: VectorField,
        dt: f64,
    ) -> Result<LameSolver, SolveError> {
        let limit = cfl_limit(&grid, &material);
        if dt > limit * (1.0 + 1e-12) {
            return Err(SolveError::CflViolation { dt, limit });
        }
        pin_displacement(&grid, &mut v0);
        pin_displacement(&grid, &mut v1);
        let mut accel = grid.vector_field();
        apply_elastic(&grid, &material, &v0, &mut accel);
        Ok(LameSolver {
            grid,
            material,
            v: v0,
            w: v1,
            accel,
            t: 0.0,
            dt,
        })
    }

    /// One velocity-Verlet step; time-reversible, conserves the discrete
    /// energy form of [`EnergyRecord`] to round-off.
    pub fn step(&mut self) {
        let dt = self.dt;
        // w_half = w + dt/2 a; v += dt w_half; a = A v; w = w_half + dt/2 a.
        vaxpy(&mut self.w, 0.5 * dt, &self.accel);
        vaxpy(&mut self.v, dt, &self.w);
        apply_elastic(&self.grid, &self.material, &self.v, &mut self.accel);
        vaxpy(&mut self.w, 0.5 * dt, &self.accel);
        self.t += dt;
    }

    /// Flips the arrow of time in place.
    pub fn reverse(&mut self) {
        for c in self.w.iter_mut() {
            for x in c.iter_mut() {
                *x = -*x;
            }
        }
    }

    pub fn energy(&self) -> EnergyRecord {
        let vol = self.grid.cell_volume();
        let (shear, comp) = elastic_form(&self.grid, &self.material, &self.v);
        let kinetic = 0.5 * vnorm2(&self.w) * vol;
        let corr = (self.dt * self.dt / 8.0) * vnorm2(&self.accel) * vol;
        let point = 0.5 * (shear + comp) * vol;
        // Scale the parts to the time-discrete invariant total; see
        // `energy` module docs.
        let scale = if point > 0.0 { (point - corr) / point } else { 1.0 };
        EnergyRecord {
            t: self.t,
            e: kinetic + point * scale,
            kinetic,
            shear: 0.5 * shear * vol * scale,
            compressional: 0.5 * comp * vol * scale,
            magnetic: 0.0,
            dissipation_rate: 0.0,
            dissipated: 0.0,
            e_orders: Vec::new(),
        }
    }

    pub fn state(&self) -> FieldState {
        FieldState {
            grid: self.grid,
            t: self.t,
            v: self.v.clone(),
            vt: self.w.clone(),
            h_field: self.grid.vector_field(),
        }
    }

    /// Initial data of the time-differentiated trajectory: (v, w) -> (w, A v).
    pub fn differentiated_data(
        grid: &Grid,
        material: &Material,
        v0: &VectorField,
        v1: &VectorField,
    ) -> (VectorField, VectorField) {
        let mut a = grid.vector_field();
        apply_elastic(grid, material, v0, &mut a);
        (v1.clone(), a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::AxisBc;
    use crate::vec3::Vec3;

    fn mat() -> Material {
        Material::new(2.0, 1.0, 0.5, 1.0, Vec3::EX).unwrap()
    }

    /// Smooth Dirichlet eigenmode-ish data (products of sines).
    fn sine_data(grid: &Grid, modes: [usize; 3], comp: usize) -> VectorField {
        let mut v = grid.vector_field();
        let n = grid.n;
        for iz in 0..n[2] {
            for iy in 0..n[1] {
                for ix in 0..n[0] {
                    let f = |i: usize, na: usize, m: usize| {
                        if na == 1 {
                            1.0
                        } else {
                            (std::f64::consts::PI * m as f64 * i as f64 / (na - 1) as f64).sin()
                        }
                    };
                    v[comp][grid.idx(ix, iy, iz)] =
                        f(ix, n[0], modes[0]) * f(iy, n[1], modes[1]) * f(iz, n[2], modes[2]);
                }
            }
        }
        v
    }

    #[test]
    fn rejects_cfl_violation() {
        let grid = Grid::cube(8, 1.0, AxisBc::Dirichlet);
        let m = mat();
        let dt = cfl_limit(&grid, &m) * 1.5;
        assert!(matches!(
            LameSolver::new(grid, m, grid.vector_field(), grid.vector_field(), dt),
            Err(SolveError::CflViolation { .. })
        ));
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = Grid::cube(8, 1.0, AxisBc::Dirichlet);
        let m = mat();
        let dt = cfl_limit(&grid, &m);
        let mut s = LameSolver::new(grid, m, grid.vector_field(), grid.vector_field(), dt).unwrap();
        for _ in 0..10 {
            s.step();
        }
        assert_eq!(vnorm2(&s.v), 0.0);
        assert_eq!(vnorm2(&s.w), 0.0);
    }

    #[test]
    fn energy_conserved_over_thousand_steps() {
        let grid = Grid::cube(12, 1.0, AxisBc::Dirichlet);
        let m = mat();
        let dt = cfl_limit(&grid, &m);
        let v0 = sine_data(&grid, [1, 1, 1], 0);
        let mut s = LameSolver::new(grid, m, v0, grid.vector_field(), dt).unwrap();
        let e0 = s.energy().e;
        assert!(e0 > 0.0);
        let mut max_drift = 0.0f64;
        for _ in 0..1000 {
            s.step();
            max_drift = max_drift.max((s.energy().e - e0).abs() / e0);
        }
        assert!(max_drift <= 1e-6, "drift {max_drift:.3e}");
    }

    #[test]
    fn reversed_run_recovers_initial_data() {
        let grid = Grid::cube(10, 1.0, AxisBc::Dirichlet);
        let m = mat();
        let dt = cfl_limit(&grid, &m) * 0.7;
        let v0 = sine_data(&grid, [1, 2, 1], 1);
        let mut s = LameSolver::new(grid, m, v0.clone(), grid.vector_field(), dt).unwrap();
        for _ in 0..500 {
            s.step();
        }
        s.reverse();
        for _ in 0..500 {
            s.step();
        }
        s.reverse();
        let diff: f64 = (0..3)
            .map(|c| {
                s.v[c]
                    .iter()
                    .zip(&v0[c])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        assert!(diff.sqrt() <= 1e-10 * vnorm2(&v0).sqrt().max(1.0), "gap {:.3e}", diff.sqrt());
    }
}
