//! Strang split-operator propagation on the periodic grid.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid_field::{Grid, Point, WaveField};
use crate::spectral::{wavenumbers, SpectralPlan};

type PotentialFn = dyn Fn(&Point, f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Potential {
    Free,
    /// Fixed values, one per grid cell.
    Static { values: Vec<f64>, bound: f64 },
    /// V(x, t), sampled at each step midpoint; `bound` caps |V| for the step audit.
    TimeDependent { f: Arc<PotentialFn>, bound: f64 },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Free => write!(f, "Free"),
            Potential::Static { bound, .. } => write!(f, "Static {{ bound: {bound} }}"),
            Potential::TimeDependent { bound, .. } => write!(f, "TimeDependent {{ bound: {bound} }}"),
        }
    }
}

impl Potential {
    pub fn static_grid(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config("potential values do not match the grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("potential values must be finite"));
        }
        let bound = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Potential::Static { values, bound })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::static_grid(grid, values)
    }

    pub fn time_dependent(bound: f64, f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::TimeDependent { f: Arc::new(f), bound }
    }

    pub fn bound(&self) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Static { bound, .. } | Potential::TimeDependent { bound, .. } => *bound,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Potential::Free)
    }

    /// Values on the grid at time `t` (zeros for the free case).
    pub fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        match self {
            Potential::Free => vec![0.0; grid.len()],
            Potential::Static { values, .. } => values.clone(),
            Potential::TimeDependent { f, .. } => (0..grid.len()).map(|i| f(&grid.point(i), t)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    SplitOperatorStrang,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub max_steps: usize,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        StepperConfig { dt, scheme: Scheme::SplitOperatorStrang, max_steps: 10_000_000 }
    }
}

/// Phase-wrap and kinetic-resolution limits on dt.
pub fn audit_step(grid: &Grid, pot: &Potential, dt: f64, mass: f64, hbar: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::StepAudit(format!("dt must be positive, got {dt}")));
    }
    let phase = dt * pot.bound() / hbar;
    if phase >= 0.5 {
        return Err(Error::StepAudit(format!("dt*max|V|/hbar = {phase:.4} >= 0.5")));
    }
    let km = grid.k_max();
    let kin = dt * hbar * km * km / (2.0 * mass);
    if kin >= 1.5 {
        return Err(Error::StepAudit(format!("dt*hbar*k_max^2/2m = {kin:.4} >= 1.5")));
    }
    Ok(())
}

/// Cached plan and phase factors for repeated steps of fixed size.
pub struct Propagator {
    grid: Grid,
    dt: f64,
    hbar: f64,
    plan: SpectralPlan,
    kin_full: Vec<Complex64>,
    kin_half: Vec<Complex64>,
    pot: Potential,
    pot_phase: Option<Vec<Complex64>>,
}

impl Propagator {
    pub fn new(grid: &Grid, pot: Potential, dt: f64, mass: f64, hbar: f64) -> Result<Self> {
        audit_step(grid, &pot, dt, mass, hbar)?;
        let k2 = squared_wavenumbers(grid);
        let phases = |tau: f64| -> Vec<Complex64> {
            k2.iter()
                .map(|k2| Complex64::from_polar(1.0, -hbar * k2 * tau / (2.0 * mass)))
                .collect()
        };
        let pot_phase = match &pot {
            Potential::Static { values, .. } => Some(
                values
                    .iter()
                    .map(|v| Complex64::from_polar(1.0, -v * dt / hbar))
                    .collect(),
            ),
            _ => None,
        };
        Ok(Propagator {
            grid: grid.clone(),
            dt,
            hbar,
            plan: SpectralPlan::new(grid),
            kin_full: phases(dt),
            kin_half: phases(0.5 * dt),
            pot,
            pot_phase,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    /// Advances `values` from time `t` by one step.
    pub fn step_values(&self, values: &mut [Complex64], t: f64) {
        if self.pot.is_free() {
            self.kinetic(values, &self.kin_full);
            return;
        }
        self.kinetic(values, &self.kin_half);
        match (&self.pot, &self.pot_phase) {
            (_, Some(ph)) => {
                for (v, p) in values.iter_mut().zip(ph) {
                    *v *= p;
                }
            }
            (Potential::TimeDependent { f, .. }, None) => {
                let tm = t + 0.5 * self.dt;
                for (idx, v) in values.iter_mut().enumerate() {
                    let vx = f(&self.grid.point(idx), tm);
                    *v *= Complex64::from_polar(1.0, -vx * self.dt / self.hbar);
                }
            }
            _ => {}
        }
        self.kinetic(values, &self.kin_half);
    }

    pub fn step_in_place(&self, field: &mut WaveField, steps_done: usize, t0: f64) {
        self.step_values(&mut field.values, field.time);
        field.time = t0 + (steps_done + 1) as f64 * self.dt;
    }

    fn kinetic(&self, values: &mut [Complex64], phase: &[Complex64]) {
        self.plan.forward(values);
        for (v, p) in values.iter_mut().zip(phase) {
            *v *= p;
        }
        self.plan.inverse(values);
    }
}

fn squared_wavenumbers(grid: &Grid) -> Vec<f64> {
    let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| wavenumbers(grid.n(a), grid.spacing(a))).collect();
    (0..grid.len())
        .map(|idx| (0..grid.dim()).map(|a| ks[a][grid.axis_index(idx, a)].powi(2)).sum())
        .collect()
}

/// One step as a pure function of the field.
pub fn step(field: &WaveField, pot: &Potential, cfg: &StepperConfig) -> Result<WaveField> {
    let prop = Propagator::new(&field.grid, pot.clone(), cfg.dt, field.mass, field.hbar)?;
    let mut out = field.clone();
    prop.step_values(&mut out.values, field.time);
    out.time = field.time + cfg.dt;
    Ok(out)
}

/// Read-only hook called every `cadence()` steps (and once at the start).
pub trait Observer {
    fn cadence(&self) -> usize {
        1
    }
    fn observe(&mut self, field: &WaveField, step: usize);
}

/// Number of whole steps of size `dt` spanning `span`, rejecting non-integral spans.
pub fn step_count(span: f64, dt: f64) -> Result<usize> {
    if span < 0.0 {
        return Err(Error::StepAudit(format!("negative time span {span}")));
    }
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(dt) {
        return Err(Error::StepAudit(format!("time span {span} is not a whole number of steps of {dt}")));
    }
    Ok(n as usize)
}

pub fn evolve(
    field: &WaveField,
    pot: &Potential,
    cfg: &StepperConfig,
    t_final: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<WaveField> {
    let n = step_count(t_final - field.time, cfg.dt)?;
    if n > cfg.max_steps {
        return Err(Error::StepAudit(format!("{n} steps exceed max_steps {}", cfg.max_steps)));
    }
    let mut out = field.clone();
    if n == 0 {
        return Ok(out);
    }
    let prop = Propagator::new(&field.grid, pot.clone(), cfg.dt, field.mass, field.hbar)?;
    let t0 = field.time;
    for obs in observers.iter_mut() {
        obs.observe(&out, 0);
    }
    for k in 0..n {
        prop.step_in_place(&mut out, k, t0);
        for obs in observers.iter_mut() {
            if (k + 1) % obs.cadence().max(1) == 0 {
                obs.observe(&out, k + 1);
            }
        }
    }
    Ok(out)
}

/// Records the field at a point every cadence steps.
pub struct ProbeRecorder {
    pub signal: crate::grid_field::ProbeSignal,
    index: usize,
    cadence: usize,
}

impl ProbeRecorder {
    pub fn new(grid: &Grid, position: &[f64], t0: f64, dt: f64, cadence: usize) -> Self {
        let mut p = [0.0; 2];
        p[..position.len()].copy_from_slice(position);
        ProbeRecorder {
            signal: crate::grid_field::ProbeSignal::new(position.to_vec(), t0, dt * cadence as f64),
            index: grid.nearest_flat(&p),
            cadence,
        }
    }
}

impl Observer for ProbeRecorder {
    fn cadence(&self) -> usize {
        self.cadence
    }

    fn observe(&mut self, field: &WaveField, _step: usize) {
        self.signal.samples.push(field.values[self.index]);
    }
}
