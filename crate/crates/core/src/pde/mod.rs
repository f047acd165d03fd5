//! Desk-scale finite-difference solver for the elastic system and the
//! coupled elastic/magnetic system on a box, with energy and dissipation
//! bookkeeping, Helmholtz splitting, negative-order norms and the
//! observability functionals.
//!
//! All spatial operators are built from explicit difference/transpose pairs
//! so that the discrete quadratic forms match the update scheme exactly;
//! see `ops` for the summation-by-parts identities this buys.

pub mod checkpoint;
pub mod energy;
pub mod helmholtz;
pub mod lame;
pub mod magneto;
pub mod norms;
pub mod ops;
pub mod transforms;

pub use energy::EnergyRecord;
pub use helmholtz::{helmholtz_decompose, HelmholtzRoute};
pub use lame::LameSolver;
pub use magneto::{ImplicitScheme, MagnetoSolver};
pub use norms::{hminus1_norm, observability_functional, ObservabilityConfig, ObservabilityReport};

use crate::error::ValidationError;
use serde::{Deserialize, Serialize};

/// Per-axis boundary handling of the grid.
///
/// An axis with a single node is an invariant axis: all derivatives along
/// it vanish (the 2.5D reduction).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisBc {
    Dirichlet,
    Periodic,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub n: [usize; 3],
    pub extents: [f64; 3],
    pub bc: [AxisBc; 3],
}

impl Grid {
    pub fn new(n: [usize; 3], extents: [f64; 3], bc: [AxisBc; 3]) -> Result<Grid, ValidationError> {
        for a in 0..3 {
            if n[a] != 1 && n[a] < 8 {
                return Err(ValidationError::new(
                    "grid",
                    format!("axis {a}: need at least 8 points (or exactly 1 for an invariant axis)"),
                ));
            }
            if !(extents[a] > 0.0) {
                return Err(ValidationError::new("grid", "extents must be positive"));
            }
        }
        Ok(Grid { n, extents, bc })
    }

    pub fn cube(n: usize, extent: f64, bc: AxisBc) -> Grid {
        Grid::new([n, n, n], [extent, extent, extent], [bc, bc, bc]).expect("valid cube grid")
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node spacing along an axis. An invariant axis reports its extent
    /// (used only as a thickness factor in quadrature).
    pub fn h(&self, axis: usize) -> f64 {
        if self.n[axis] == 1 {
            self.extents[axis]
        } else {
            match self.bc[axis] {
                AxisBc::Dirichlet => self.extents[axis] / (self.n[axis] - 1) as f64,
                AxisBc::Periodic => self.extents[axis] / self.n[axis] as f64,
            }
        }
    }

    pub fn h_min(&self) -> f64 {
        (0..3)
            .filter(|&a| self.n[a] > 1)
            .map(|a| self.h(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.h(0) * self.h(1) * self.h(2)
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n[1] + iy) * self.n[0] + ix
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.n[0], self.n[0] * self.n[1]]
    }

    /// Whether the node is a pinned Dirichlet boundary node along `axis`.
    #[inline]
    pub fn on_dirichlet_face(&self, axis: usize, i: usize) -> bool {
        self.bc[axis] == AxisBc::Dirichlet && self.n[axis] > 1 && (i == 0 || i == self.n[axis] - 1)
    }

    /// Whether a displacement DOF at (ix, iy, iz) is free (zero otherwise).
    #[inline]
    pub fn displacement_free(&self, ix: usize, iy: usize, iz: usize) -> bool {
        !self.on_dirichlet_face(0, ix)
            && !self.on_dirichlet_face(1, iy)
            && !self.on_dirichlet_face(2, iz)
    }

    pub fn scalar_field(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    pub fn vector_field(&self) -> VectorField {
        [self.scalar_field(), self.scalar_field(), self.scalar_field()]
    }
}

/// Vector field on the grid, one flat array per component, x-fastest.
pub type VectorField = [Vec<f64>; 3];

/// Snapshot of the evolving fields.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub grid: Grid,
    pub t: f64,
    /// Displacement.
    pub v: VectorField,
    /// Velocity.
    pub vt: VectorField,
    /// Magnetic perturbation.
    pub h_field: VectorField,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn vdot(a: &VectorField, b: &VectorField) -> f64 {
    dot(&a[0], &b[0]) + dot(&a[1], &b[1]) + dot(&a[2], &b[2])
}

pub(crate) fn vnorm2(a: &VectorField) -> f64 {
    vdot(a, a)
}

pub(crate) fn vaxpy(y: &mut VectorField, alpha: f64, x: &VectorField) {
    for c in 0..3 {
        for (yi, xi) in y[c].iter_mut().zip(&x[c]) {
            *yi += alpha * xi;
        }
    }
}

pub(crate) fn vscale_add(y: &mut VectorField, beta: f64, x: &VectorField, alpha: f64) {
    // y := alpha x + beta y
    for c in 0..3 {
        for (yi, xi) in y[c].iter_mut().zip(&x[c]) {
            *yi = alpha * xi + beta * *yi;
        }
    }
}

pub(crate) fn vzero(a: &mut VectorField) {
    for c in a.iter_mut() {
        c.fill(0.0);
    }
}
