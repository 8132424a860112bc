//! FFT plans on the periodic grid. Forward is unnormalized, inverse carries 1/N.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid_field::Grid;

pub struct SpectralPlan {
    n: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    scale: f64,
}

impl SpectralPlan {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n: Vec<usize> = (0..grid.dim()).map(|a| grid.n(a)).collect();
        let fwd = n.iter().map(|&m| planner.plan_fft_forward(m)).collect();
        let inv = n.iter().map(|&m| planner.plan_fft_inverse(m)).collect();
        let scale = 1.0 / n.iter().product::<usize>() as f64;
        SpectralPlan { n, fwd, inv, scale }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let s = self.scale;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        match self.n.len() {
            1 => plans[0].process(data),
            _ => {
                let (nx, ny) = (self.n[0], self.n[1]);
                rows(data, ny, &plans[1]);
                let mut t = transpose(data, nx, ny);
                rows(&mut t, nx, &plans[0]);
                let back = transpose(&t, ny, nx);
                data.copy_from_slice(&back);
            }
        }
    }
}

// Each row is transformed independently with its own scratch, so the result
// does not depend on how rows are distributed over threads.
fn rows(data: &mut [Complex64], len: usize, plan: &Arc<dyn Fft<f64>>) {
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

fn transpose(data: &[Complex64], nr: usize, nc: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for r0 in (0..nr).step_by(B) {
        for c0 in (0..nc).step_by(B) {
            for r in r0..(r0 + B).min(nr) {
                for c in c0..(c0 + B).min(nc) {
                    out[c * nr + r] = data[r * nc + c];
                }
            }
        }
    }
    out
}

/// Angular wavenumbers in FFT order for `n` samples spaced `h`.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|i| {
            let j = if i < (n + 1) / 2 { i as i64 } else { i as i64 - n as i64 };
            j as f64 * dk
        })
        .collect()
}

/// Spectral gradient of `values`; returns one component per axis. Each component only
/// needs transforms along its own axis.
pub fn gradient(plan: &SpectralPlan, grid: &Grid, values: &[Complex64]) -> Vec<Vec<Complex64>> {
    let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| wavenumbers(grid.n(a), grid.spacing(a))).collect();
    if grid.dim() == 1 {
        let mut g = values.to_vec();
        plan.forward(&mut g);
        for (v, k) in g.iter_mut().zip(&ks[0]) {
            *v *= Complex64::new(0.0, *k);
        }
        plan.inverse(&mut g);
        return vec![g];
    }
    let (nx, ny) = (grid.n(0), grid.n(1));
    let along_rows = |data: &mut [Complex64], len: usize, axis: usize| {
        rows(data, len, &plan.fwd[axis]);
        let s = 1.0 / len as f64;
        for row in data.chunks_mut(len) {
            for (v, k) in row.iter_mut().zip(&ks[axis]) {
                *v *= Complex64::new(0.0, k * s);
            }
        }
        rows(data, len, &plan.inv[axis]);
    };
    let mut gy = values.to_vec();
    along_rows(&mut gy, ny, 1);
    let mut t = transpose(values, nx, ny);
    along_rows(&mut t, nx, 0);
    let gx = transpose(&t, ny, nx);
    vec![gx, gy]
}
