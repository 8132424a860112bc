use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::WaveField;
use crate::spectral::{gradient, wavenumbers, SpectralPlan};

/// Expectation values of a field, normalized by its norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub norm: f64,
    pub mean_x: Vec<f64>,
    pub sigma_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub sigma_p: Vec<f64>,
    pub energy: f64,
}

impl Observables {
    /// Absolute content (norm-weighted) of momentum and energy.
    pub fn content(&self) -> RegionContent {
        let mut momentum = [0.0; 2];
        for (a, p) in self.mean_p.iter().enumerate() {
            momentum[a] = p * self.norm;
        }
        RegionContent { norm: self.norm, momentum, energy: self.energy * self.norm }
    }
}

/// Norm, momentum and energy carried by a subset of grid cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionContent {
    pub norm: f64,
    pub momentum: [f64; 2],
    pub energy: f64,
}

/// Moments of `field`; `potential` (one value per cell) enters the energy.
pub fn observables(field: &WaveField, potential: Option<&[f64]>) -> Observables {
    let g = &field.grid;
    let dv = g.cell_volume();
    let dim = g.dim();
    let dens = field.density();
    let norm = dens.iter().sum::<f64>() * dv;

    let mut mean_x = vec![0.0; dim];
    let mut sigma_x = vec![0.0; dim];
    for a in 0..dim {
        let xs = g.coords(a);
        let (mut s1, mut s2) = (0.0, 0.0);
        for (idx, r) in dens.iter().enumerate() {
            let x = xs[g.axis_index(idx, a)];
            s1 += x * r;
            s2 += x * x * r;
        }
        let m1 = s1 * dv / norm;
        mean_x[a] = m1;
        sigma_x[a] = (s2 * dv / norm - m1 * m1).max(0.0).sqrt();
    }

    let plan = SpectralPlan::new(g);
    let mut hat = field.values.clone();
    plan.forward(&mut hat);
    let pow: Vec<f64> = hat.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = pow.iter().sum();
    let hbar = field.hbar;
    let mut mean_p = vec![0.0; dim];
    let mut sigma_p = vec![0.0; dim];
    let mut k2 = 0.0;
    for a in 0..dim {
        let ks = wavenumbers(g.n(a), g.spacing(a));
        let (mut s1, mut s2) = (0.0, 0.0);
        for (idx, w) in pow.iter().enumerate() {
            let k = ks[g.axis_index(idx, a)];
            s1 += k * w;
            s2 += k * k * w;
        }
        let m1 = s1 / total;
        mean_p[a] = hbar * m1;
        sigma_p[a] = hbar * (s2 / total - m1 * m1).max(0.0).sqrt();
        k2 += s2 / total;
    }
    let mut energy = hbar * hbar * k2 / (2.0 * field.mass);
    if let Some(v) = potential {
        energy += dens.iter().zip(v).map(|(r, v)| r * v).sum::<f64>() * dv / norm;
    }
    Observables { norm, mean_x, sigma_x, mean_p, sigma_p, energy }
}

/// Content of the cells selected by `keep`, from local densities with a spectral gradient:
/// momentum density hbar Im(psi* grad psi), energy density (hbar^2/2m)|grad psi|^2 + V|psi|^2.
pub fn region_content(
    field: &WaveField,
    potential: Option<&[f64]>,
    keep: impl Fn(usize) -> bool,
) -> RegionContent {
    let g = &field.grid;
    let plan = SpectralPlan::new(g);
    let grad = gradient(&plan, g, &field.values);
    let dv = g.cell_volume();
    let hbar = field.hbar;
    let kin = hbar * hbar / (2.0 * field.mass);
    let mut out = RegionContent::default();
    for (idx, psi) in field.values.iter().enumerate() {
        if !keep(idx) {
            continue;
        }
        out.norm += psi.norm_sqr();
        for (a, ga) in grad.iter().enumerate() {
            let d: Complex64 = ga[idx];
            out.momentum[a] += hbar * (psi.conj() * d).im;
            out.energy += kin * d.norm_sqr();
        }
        if let Some(v) = potential {
            out.energy += v[idx] * psi.norm_sqr();
        }
    }
    out.norm *= dv;
    out.energy *= dv;
    out.momentum[0] *= dv;
    out.momentum[1] *= dv;
    out
}
