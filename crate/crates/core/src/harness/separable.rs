use num_complex::Complex64;

use super::config::TransverseSpec;
use crate::error::{Error, Result};
use crate::grid_field::{make_product, Grid};
use crate::measurement::{Credit, SliceLedger};
use crate::spectral::{wavenumbers, SpectralPlan};

/// Per-panel content of the transverse factor at one instant.
#[derive(Clone, Debug, Default)]
pub struct Panels {
    pub prob: Vec<f64>,
    pub energy: Vec<f64>,
    pub momentum: Vec<f64>,
    pub phase: Vec<f64>,
}

/// Freely evolving transverse factor of a separable state, evaluated exactly in k-space.
pub struct Transverse {
    grid: Grid,
    plan: SpectralPlan,
    spectrum: Vec<Complex64>,
    k: Vec<f64>,
    t0: f64,
    mass: f64,
    hbar: f64,
    panel: Vec<usize>,
    site_cell: Vec<usize>,
    pub positions: Vec<f64>,
}

impl Transverse {
    pub fn new(spec: &TransverseSpec, d: f64, t0: f64, mass: f64, hbar: f64) -> Result<Self> {
        let grid = Grid::new_1d(spec.lo, spec.hi, spec.n)?;
        let field = make_product(&grid, std::slice::from_ref(&spec.profile))
            .map_err(|e| Error::config(format!("transverse profile: {e}")))?;
        let plan = SpectralPlan::new(&grid);
        let mut spectrum = field.values;
        plan.forward(&mut spectrum);
        let k = wavenumbers(grid.n(0), grid.spacing(0));
        let first_edge = -0.5 * spec.sites as f64 * d;
        let panel = grid
            .coords(0)
            .iter()
            .map(|&y| ((y - first_edge) / d).floor().clamp(0.0, spec.sites as f64 - 1.0) as usize)
            .collect();
        let positions: Vec<f64> = (0..spec.sites).map(|s| spec.site_position(s, d)).collect();
        let site_cell = positions.iter().map(|&y| grid.nearest_index(0, y)).collect();
        Ok(Transverse { grid, plan, spectrum, k, t0, mass, hbar, panel, site_cell, positions })
    }

    pub fn sites(&self) -> usize {
        self.positions.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn state(&self, t: f64) -> Vec<Complex64> {
        let tau = t - self.t0;
        let mut v: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.k)
            .map(|(a, k)| a * Complex64::from_polar(1.0, -self.hbar * k * k * tau / (2.0 * self.mass)))
            .collect();
        self.plan.inverse(&mut v);
        v
    }

    /// Value at the grid point nearest each site.
    pub fn site_values(&self, t: f64) -> Vec<Complex64> {
        let psi = self.state(t);
        self.site_cell.iter().map(|&i| psi[i]).collect()
    }

    pub fn panels(&self, t: f64) -> Panels {
        let tau = t - self.t0;
        let mut psi = Vec::with_capacity(self.k.len());
        let mut grad = Vec::with_capacity(self.k.len());
        for (a, k) in self.spectrum.iter().zip(&self.k) {
            let v = a * Complex64::from_polar(1.0, -self.hbar * k * k * tau / (2.0 * self.mass));
            psi.push(v);
            grad.push(v * Complex64::new(0.0, *k));
        }
        self.plan.inverse(&mut psi);
        self.plan.inverse(&mut grad);
        let n = self.sites();
        let h = self.grid.spacing(0);
        let mut p = Panels { prob: vec![0.0; n], energy: vec![0.0; n], momentum: vec![0.0; n], phase: vec![0.0; n] };
        let kin = self.hbar * self.hbar / (2.0 * self.mass);
        for (i, &s) in self.panel.iter().enumerate() {
            p.prob[s] += psi[i].norm_sqr() * h;
            p.energy[s] += kin * grad[i].norm_sqr() * h;
            p.momentum[s] += self.hbar * (psi[i].conj() * grad[i]).im * h;
        }
        for (s, &i) in self.site_cell.iter().enumerate() {
            p.phase[s] = psi[i].arg();
        }
        p
    }

    /// Books longitudinal credits against the transverse panels at the credits' times.
    pub fn distribute(&self, credits: &[Credit], ledger: &mut SliceLedger) {
        let mut cache: Option<(f64, Panels)> = None;
        for c in credits {
            if cache.as_ref().map_or(true, |(t, _)| *t != c.t) {
                cache = Some((c.t, self.panels(c.t)));
            }
            let panels = &cache.as_ref().expect("filled above").1;
            for s in 0..self.sites() {
                let w = panels.prob[s];
                let dp = c.dp * w;
                if dp == 0.0 {
                    continue;
                }
                let energy = c.energy * w + c.dp * panels.energy[s];
                let momentum = [c.momentum[0] * w, c.dp * panels.momentum[s]];
                match c.site {
                    Some(_) => ledger.credit(s, c.t, dp, c.phase + panels.phase[s], energy, momentum),
                    None => ledger.credit_unassigned(dp, energy, momentum),
                }
            }
        }
    }
}
