//! Uniform periodic grids, the incident wavefunction, and its diagnostics.

mod init;
mod io;
mod observables;
mod probe;

pub use init::{make_gaussian, make_product, make_rect_sheet, AxisProfile};
pub use io::{read_snapshot, write_snapshot, write_text};
pub use observables::{observables, region_content, Observables, RegionContent};
pub use probe::{probe_uncertainty, ProbeSignal, Uncertainty};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in one or two dimensions; the second entry is unused in 1D.
pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
}

impl Grid {
    pub fn new(lo: &[f64], hi: &[f64], n: &[usize]) -> Result<Self> {
        let dim = n.len();
        if !(dim == 1 || dim == 2) || lo.len() != dim || hi.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 with one extent and count per axis (got {} / {} / {})",
                lo.len(),
                hi.len(),
                dim
            )));
        }
        for a in 0..dim {
            if n[a] < 8 {
                return Err(Error::InvalidGrid(format!("axis {a}: {} points, need at least 8", n[a])));
            }
            if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(Error::InvalidGrid(format!("axis {a}: empty extent [{}, {}]", lo[a], hi[a])));
            }
        }
        Ok(Grid { lo: lo.to_vec(), hi: hi.to_vec(), n: n.to_vec() })
    }

    pub fn new_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo], &[hi], &[n])
    }

    pub fn new_2d(lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(&lo, &hi, &n)
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.spacing(axis)
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Index along `axis` of the flat (row-major) index `idx`.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        if self.dim() == 1 {
            idx
        } else if axis == 0 {
            idx / self.n[1]
        } else {
            idx % self.n[1]
        }
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        if self.dim() == 1 {
            i
        } else {
            i * self.n[1] + j
        }
    }

    pub fn point(&self, idx: usize) -> Point {
        if self.dim() == 1 {
            [self.coord(0, idx), 0.0]
        } else {
            [self.coord(0, idx / self.n[1]), self.coord(1, idx % self.n[1])]
        }
    }

    /// Largest representable wavenumber on the coarsest axis, pi / spacing.
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.min_spacing()
    }

    /// Nearest grid index along `axis`, wrapped periodically.
    pub fn nearest_index(&self, axis: usize, x: f64) -> usize {
        let n = self.n[axis] as i64;
        let i = ((x - self.lo[axis]) / self.spacing(axis)).round() as i64;
        i.rem_euclid(n) as usize
    }

    pub fn nearest_flat(&self, p: &Point) -> usize {
        if self.dim() == 1 {
            self.nearest_index(0, p[0])
        } else {
            self.flat(self.nearest_index(0, p[0]), self.nearest_index(1, p[1]))
        }
    }

    /// Flat indices of the cells within `cells` samples of the periodic seam on any axis.
    pub fn seam_cells(&self, cells: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&idx| {
                (0..self.dim()).any(|a| {
                    let i = self.axis_index(idx, a);
                    i < cells || i + cells >= self.n[a]
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, mass: f64, hbar: f64) -> Self {
        assert_eq!(grid.len(), values.len(), "field size must match grid");
        WaveField { grid, values, time: 0.0, mass, hbar }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        WaveField::new(grid, vec![Complex64::new(0.0, 0.0); n], 1.0, 1.0)
    }

    pub fn with_units(mut self, mass: f64, hbar: f64) -> Self {
        self.mass = mass;
        self.hbar = hbar;
        self
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm().sqrt();
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Norm carried by the cells within four samples of the wrap seam.
    pub fn seam_norm(&self) -> f64 {
        self.grid
            .seam_cells(4)
            .into_iter()
            .map(|i| self.values[i].norm_sqr())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}
