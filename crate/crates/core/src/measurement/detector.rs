use std::sync::Arc;

use num_complex::Complex64;

use super::frame::Frame;
use super::ledger::SliceLedger;
use crate::body::{BodyMap, BodyState, Interaction, Pose};
use crate::error::{Error, Result};
use crate::grid_field::{Grid, RegionContent, WaveField};
use crate::spectral::{gradient, SpectralPlan};

/// Interior amplitude beyond the absorbing shell that counts as a sink failure.
pub const LEAK_LIMIT: f64 = 1e-6;

/// Below this cell probability near every body, energy and momentum deposits are not
/// resolved (the spectral gradients are skipped); norms are always exact.
const ACTIVE_FLOOR: f64 = 1e-24;

/// Absorbing-shell parameters for a design wavenumber `k`: depth 2.5 wavelengths,
/// peak rate twice the design kinetic energy (in units of 1/time after dividing by hbar).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub depth: f64,
    pub strength: f64,
}

impl Shell {
    pub fn for_wavenumber(k: f64, mass: f64, hbar: f64) -> Self {
        let k = k.abs();
        Shell { depth: 2.5 * 2.0 * std::f64::consts::PI / k, strength: hbar * k * k / mass }
    }

    /// Depth that sets the absorption of an interior cell `front` below the front or back face
    /// and `lateral` from the nearest end or hole edge. Amplitude entering near an end is
    /// ramped down by the front face alone; the ends only ramp cells past the front shell.
    pub fn effective_depth(&self, front: f64, lateral: f64) -> f64 {
        if front < self.depth {
            front
        } else {
            front.min(lateral)
        }
    }

    /// Amplitude survival factor over `h` at `depth` below the surface (0 past the shell).
    pub fn factor(&self, depth: f64, h: f64) -> f64 {
        if depth >= self.depth {
            0.0
        } else {
            let s = depth / self.depth;
            (-self.strength * s * s * h).exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Sink {
    Absorb(Shell),
    /// Smooth slab of peak rate `peak`; sin^2 profile across `thickness`.
    Transmit { peak: f64, thickness: f64 },
}

/// One per-site capture increment within a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Credit {
    /// Global site index (bodies' sites numbered consecutively).
    pub site: Option<usize>,
    pub t: f64,
    pub dp: f64,
    pub phase: f64,
    pub energy: f64,
    pub momentum: [f64; 2],
}

#[derive(Clone, Debug, Default)]
pub struct StepCapture {
    pub captured: f64,
    pub exterior_norm: f64,
    /// Change of (exterior norm + total captured) over the step.
    pub residual: f64,
    pub leak: f64,
    pub credits: Vec<Credit>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CaptureStats {
    pub steps: usize,
    pub max_step_residual: f64,
    pub max_leak: f64,
    pub min_step_capture: f64,
    pub negative_capture: f64,
}

pub struct Pending {
    t0: f64,
    t1: f64,
    maps0: Vec<Arc<BodyMap>>,
    maps1: Vec<Arc<BodyMap>>,
    core: Vec<Vec<usize>>,
    before: Vec<RegionContent>,
    start_total: f64,
    active: bool,
}

/// Applies the bodies' sinks around each propagator step and books the captures.
pub struct Detector {
    grid: Grid,
    mass: f64,
    hbar: f64,
    bodies: Vec<BodyState>,
    sinks: Vec<Sink>,
    site_offset: Vec<usize>,
    cache: Vec<Option<(Pose, Arc<BodyMap>)>>,
    segment: Vec<usize>,
    frame: Frame,
    potential: Option<Vec<f64>>,
    plan: SpectralPlan,
    exterior_norm: f64,
    captured: f64,
    pub stats: CaptureStats,
}

fn intersect(a: &[(usize, f64)], b: &[(usize, f64)]) -> Vec<usize> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i].0);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Positions (into `a`) of entries of `a` absent from `b`.
fn difference(a: &[(usize, f64)], b: &[(usize, f64)]) -> Vec<usize> {
    let (mut j, mut out) = (0, Vec::new());
    for (i, &(idx, _)) in a.iter().enumerate() {
        while j < b.len() && b[j].0 < idx {
            j += 1;
        }
        if j >= b.len() || b[j].0 != idx {
            out.push(i);
        }
    }
    out
}

struct Densities<'a> {
    values: &'a [Complex64],
    grad: &'a [Vec<Complex64>],
    kin: f64,
    hbar: f64,
    pot: Option<&'a [f64]>,
    dv: f64,
}

impl Densities<'_> {
    fn cell(&self, idx: usize) -> RegionContent {
        let psi = self.values[idx];
        let rho = psi.norm_sqr();
        let mut c = RegionContent { norm: rho * self.dv, ..Default::default() };
        for (a, g) in self.grad.iter().enumerate() {
            c.momentum[a] = self.hbar * (psi.conj() * g[idx]).im * self.dv;
            c.energy += self.kin * g[idx].norm_sqr() * self.dv;
        }
        if let Some(v) = self.pot {
            c.energy += v[idx] * rho * self.dv;
        }
        c
    }

    fn sum(&self, cells: impl Iterator<Item = usize>) -> RegionContent {
        let mut s = RegionContent::default();
        for idx in cells {
            add(&mut s, &self.cell(idx), 1.0);
        }
        s
    }
}

fn add(a: &mut RegionContent, b: &RegionContent, sign: f64) {
    a.norm += sign * b.norm;
    a.energy += sign * b.energy;
    a.momentum[0] += sign * b.momentum[0];
    a.momentum[1] += sign * b.momentum[1];
}

impl Detector {
    /// `design_k[b]` is the wavenumber each body's sink is tuned for.
    pub fn new(grid: &Grid, bodies: Vec<BodyState>, design_k: &[f64], mass: f64, hbar: f64, frame: Frame) -> Result<Self> {
        if design_k.len() != bodies.len() {
            return Err(Error::config("one design wavenumber per body is required"));
        }
        let mut sinks = Vec::new();
        for (b, k) in bodies.iter().zip(design_k) {
            if !(k.abs() > 0.0) {
                return Err(Error::config(format!("body {}: design wavenumber must be non-zero", b.name)));
            }
            sinks.push(match b.interaction {
                Interaction::Absorb => {
                    let shell = Shell::for_wavenumber(*k, mass, hbar);
                    // the shell grows in from both faces and must leave a zeroed core
                    if b.thickness < 2.0 * shell.depth {
                        return Err(Error::config(format!(
                            "body {}: thickness {} is less than twice the absorbing shell depth {:.4}",
                            b.name, b.thickness, shell.depth
                        )));
                    }
                    Sink::Absorb(shell)
                }
                Interaction::Transmit { eta } => {
                    let v = hbar * k.abs() / mass;
                    Sink::Transmit { peak: -v * (1.0 - eta).ln() / b.thickness, thickness: b.thickness }
                }
            });
        }
        let mut site_offset = Vec::new();
        let mut n = 0;
        for b in &bodies {
            site_offset.push(n);
            n += b.sites.len();
        }
        let nb = bodies.len();
        Ok(Detector {
            grid: grid.clone(),
            mass,
            hbar,
            segment: bodies.iter().map(|b| b.trajectory.segment_index(b.trajectory.start())).collect(),
            bodies,
            sinks,
            site_offset,
            cache: vec![None; nb],
            frame,
            potential: None,
            plan: SpectralPlan::new(grid),
            exterior_norm: 0.0,
            captured: 0.0,
            stats: CaptureStats::default(),
        })
    }

    pub fn with_potential(mut self, values: Option<Vec<f64>>) -> Self {
        self.potential = values;
        self
    }

    pub fn bodies(&self) -> &[BodyState] {
        &self.bodies
    }

    pub fn site_offset(&self, body: usize) -> usize {
        self.site_offset[body]
    }

    pub fn site_count(&self) -> usize {
        self.bodies.iter().map(|b| b.sites.len()).sum()
    }

    /// (body, local site) for a global site index.
    pub fn locate(&self, site: usize) -> Option<(usize, usize)> {
        let b = self.site_offset.iter().rposition(|&o| o <= site)?;
        let s = site - self.site_offset[b];
        (s < self.bodies[b].sites.len()).then_some((b, s))
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn frame_mut(&mut self) -> &mut Frame {
        &mut self.frame
    }

    pub fn exterior_norm(&self) -> f64 {
        self.exterior_norm
    }

    pub fn max_body_speed(&self) -> f64 {
        self.bodies.iter().map(|b| b.max_speed()).fold(0.0, f64::max)
    }

    fn map(&mut self, b: usize, t: f64) -> Arc<BodyMap> {
        let pose = self.bodies[b].pose(t);
        if let Some((p, m)) = &self.cache[b] {
            if *p == pose {
                return m.clone();
            }
        }
        let m = Arc::new(self.bodies[b].classify(&self.grid, t));
        self.cache[b] = Some((pose, m.clone()));
        m
    }

    /// Cells of absorbing bodies at `t`, for masking exterior-only diagnostics.
    pub fn interior_mask(&mut self, t: f64) -> Vec<bool> {
        let mut mask = vec![false; self.grid.len()];
        for b in 0..self.bodies.len() {
            if matches!(self.sinks[b], Sink::Absorb(_)) {
                for &(idx, _) in &self.map(b, t).inside {
                    mask[idx] = true;
                }
            }
        }
        mask
    }

    fn owner_of(&self, b: usize, map: &BodyMap, pos: usize) -> Option<usize> {
        map.inside_owner[pos].map(|s| s + self.site_offset[b])
    }

    fn gradient(&self, values: &[Complex64]) -> Vec<Vec<Complex64>> {
        gradient(&self.plan, &self.grid, values)
    }

    fn densities<'a>(&'a self, values: &'a [Complex64], grad: &'a [Vec<Complex64>]) -> Densities<'a> {
        Densities {
            values,
            grad,
            kin: self.hbar * self.hbar / (2.0 * self.mass),
            hbar: self.hbar,
            pot: self.potential.as_deref(),
            dv: self.grid.cell_volume(),
        }
    }

    fn phase_at(&self, field: &WaveField, map: &BodyMap, s: usize, t: f64) -> f64 {
        match map.site_cell.get(s).copied().flatten() {
            Some(idx) => self.frame.lab_phase(field.values[idx].arg(), self.grid.point(idx), t),
            None => 0.0,
        }
    }

    fn emit(&mut self, credit: Credit, ledger: &mut SliceLedger, out: &mut StepCapture) {
        let (e, p) = self.frame.to_lab(credit.energy, credit.momentum, credit.dp, credit.t);
        let c = Credit { energy: e, momentum: p, ..credit };
        match c.site {
            Some(s) => ledger.credit(s, c.t, c.dp, c.phase, c.energy, c.momentum),
            None => ledger.credit_unassigned(c.dp, c.energy, c.momentum),
        }
        out.captured += c.dp;
        out.credits.push(c);
    }

    /// Captures whatever starts inside an absorbing body and sets the exterior norm.
    pub fn begin(&mut self, field: &mut WaveField, ledger: &mut SliceLedger) -> Result<StepCapture> {
        let t = field.time;
        for b in 0..self.bodies.len() {
            self.segment[b] = self.bodies[b].trajectory.segment_index(t);
        }
        let grad = self.gradient(&field.values);
        let mut out = StepCapture::default();
        let mut credits = Vec::new();
        for b in 0..self.bodies.len() {
            if !matches!(self.sinks[b], Sink::Absorb(_)) {
                continue;
            }
            let map = self.map(b, t);
            let dens = self.densities(&field.values, &grad);
            for (pos, &(idx, _)) in map.inside.iter().enumerate() {
                let c = dens.cell(idx);
                if c.norm == 0.0 {
                    continue;
                }
                let site = self.owner_of(b, &map, pos);
                let phase = site.map_or(0.0, |s| self.phase_at(field, &map, s - self.site_offset[b], t));
                credits.push(Credit { site, t, dp: c.norm, phase, energy: c.energy, momentum: c.momentum });
            }
            for &(idx, _) in &map.inside {
                field.values[idx] = Complex64::new(0.0, 0.0);
            }
        }
        for c in credits {
            self.emit(c, ledger, &mut out);
        }
        self.captured = ledger.total_captured();
        self.exterior_norm = field.norm();
        out.exterior_norm = self.exterior_norm;
        Ok(out)
    }

    /// Housekeeping before a step from `t0` to `t1`: ghost flush at velocity changes,
    /// clearing of cells the bodies uncover, and the in-body content before the step.
    pub fn prepare(&mut self, field: &mut WaveField, t0: f64, t1: f64) -> Result<Pending> {
        let nb = self.bodies.len();
        let mut maps0 = Vec::with_capacity(nb);
        let mut maps1 = Vec::with_capacity(nb);
        let mut core = Vec::with_capacity(nb);
        let zero = Complex64::new(0.0, 0.0);
        for b in 0..nb {
            let map0 = self.map(b, t0);
            let map1 = self.map(b, t1);
            let absorbing = matches!(self.sinks[b], Sink::Absorb(_));
            let seg = self.bodies[b].trajectory.segment_index(t0);
            if seg != self.segment[b] {
                self.segment[b] = seg;
                if absorbing {
                    for &(idx, _) in &map0.inside {
                        field.values[idx] = zero;
                    }
                }
            }
            if absorbing {
                for pos in difference(&map0.inside, &map1.inside) {
                    field.values[map0.inside[pos].0] = zero;
                }
                core.push(intersect(&map0.inside, &map1.inside));
            } else {
                core.push(Vec::new());
            }
            maps0.push(map0);
            maps1.push(map1);
        }
        let active = self.active(&field.values, &maps0, &maps1);
        let before = if core.iter().any(|c| !c.is_empty()) {
            let grad = if active { self.gradient(&field.values) } else { Vec::new() };
            let dens = self.densities(&field.values, &grad);
            core.iter().map(|c| dens.sum(c.iter().copied())).collect()
        } else {
            vec![RegionContent::default(); nb]
        };
        Ok(Pending { t0, t1, maps0, maps1, core, before, start_total: self.exterior_norm + self.captured, active })
    }

    fn active(&self, values: &[Complex64], maps0: &[Arc<BodyMap>], maps1: &[Arc<BodyMap>]) -> bool {
        let floor = ACTIVE_FLOOR / self.grid.cell_volume();
        let hot = |idx: usize| values[idx].norm_sqr() > floor;
        maps0.iter().chain(maps1).any(|m| m.inside.iter().any(|c| hot(c.0)) || m.face.iter().any(|f| hot(f.idx)))
    }

    /// Books the captures of the step just taken and applies the sinks.
    pub fn capture_flux(&mut self, field: &mut WaveField, pending: Pending, ledger: &mut SliceLedger) -> Result<StepCapture> {
        let Pending { t0, t1, maps0, maps1, core, before, start_total, active } = pending;
        let h = t1 - t0;
        let tm = 0.5 * (t0 + t1);
        let mut out = StepCapture::default();
        let active = active || self.active(&field.values, &maps0, &maps1);
        let grad = if active { self.gradient(&field.values) } else { Vec::new() };
        let mut credits: Vec<Credit> = Vec::new();
        let dv = self.grid.cell_volume();
        let v_over_m = self.hbar / self.mass;

        for b in 0..self.bodies.len() {
            let map0 = &maps0[b];
            let map1 = &maps1[b];
            if map1.inside.is_empty() && core[b].is_empty() {
                continue;
            }
            let dens = self.densities(&field.values, &grad);
            match self.sinks[b] {
                Sink::Absorb(shell) => {
                    // amplitude that reached past the shell during this step
                    let deep: f64 = map1
                        .inside
                        .iter()
                        .zip(&map1.inside_lateral)
                        .filter(|(c, &l)| shell.effective_depth(c.1, l) >= shell.depth)
                        .filter(|(c, _)| map0.contains(c.0))
                        .map(|(c, _)| field.values[c.0].norm_sqr())
                        .sum::<f64>()
                        * dv;
                    out.leak = out.leak.max(deep);
                    if deep > LEAK_LIMIT {
                        return Err(Error::InteriorLeak { body: b, norm: deep });
                    }
                    let mut inflow = dens.sum(core[b].iter().copied());
                    add(&mut inflow, &before[b], -1.0);

                    for pos in difference(&map1.inside, &map0.inside) {
                        let idx = map1.inside[pos].0;
                        let c = dens.cell(idx);
                        if c.norm == 0.0 {
                            continue;
                        }
                        let site = self.owner_of(b, map1, pos);
                        let phase = site.map_or(0.0, |s| self.phase_at(field, map1, s - self.site_offset[b], t1));
                        credits.push(Credit { site, t: tm, dp: c.norm, phase, energy: c.energy, momentum: c.momentum });
                    }

                    if inflow.norm != 0.0 {
                        let n_sites = self.bodies[b].sites.len();
                        let mut w_in = vec![0.0; n_sites];
                        let mut w_out = vec![0.0; n_sites];
                        let mut w_rho = vec![0.0; n_sites];
                        for f in &map1.face {
                            let Some(s) = f.owner else { continue };
                            let psi = field.values[f.idx];
                            let rho = psi.norm_sqr();
                            let mut jn = 0.0;
                            for (a, g) in grad.iter().enumerate() {
                                let j = v_over_m * (psi.conj() * g[f.idx]).im - rho * f.velocity[a];
                                jn += j * f.toward[a];
                            }
                            w_in[s] += jn.max(0.0);
                            w_out[s] += (-jn).max(0.0);
                            w_rho[s] += rho;
                        }
                        let primary = if inflow.norm > 0.0 { &w_in } else { &w_out };
                        let weights = if primary.iter().sum::<f64>() > 0.0 { primary } else { &w_rho };
                        let wsum: f64 = weights.iter().sum();
                        if wsum > 0.0 {
                            for (s, &w) in weights.iter().enumerate() {
                                if w == 0.0 {
                                    continue;
                                }
                                let f = w / wsum;
                                credits.push(Credit {
                                    site: Some(s + self.site_offset[b]),
                                    t: tm,
                                    dp: f * inflow.norm,
                                    phase: self.phase_at(field, map1, s, t1),
                                    energy: f * inflow.energy,
                                    momentum: [f * inflow.momentum[0], f * inflow.momentum[1]],
                                });
                            }
                        } else {
                            credits.push(Credit {
                                site: None,
                                t: tm,
                                dp: inflow.norm,
                                phase: 0.0,
                                energy: inflow.energy,
                                momentum: inflow.momentum,
                            });
                        }
                    }
                    for (&(idx, depth), &l) in map1.inside.iter().zip(&map1.inside_lateral) {
                        let f = shell.factor(shell.effective_depth(depth, l), h);
                        field.values[idx] *= f;
                    }
                }
                Sink::Transmit { peak, thickness } => {
                    let mut removed = Vec::new();
                    for (pos, &(idx, depth)) in map1.inside.iter().enumerate() {
                        let w = peak * (std::f64::consts::PI * depth / thickness).sin().powi(2);
                        let f = (-w * h).exp();
                        let loss = 1.0 - f * f;
                        if loss == 0.0 {
                            continue;
                        }
                        let c = dens.cell(idx);
                        removed.push((pos, idx, f, c, loss));
                    }
                    for (pos, idx, f, c, loss) in removed {
                        let site = self.owner_of(b, map1, pos);
                        let phase = site.map_or(0.0, |s| self.phase_at(field, map1, s - self.site_offset[b], t1));
                        credits.push(Credit {
                            site,
                            t: tm,
                            dp: c.norm * loss,
                            phase,
                            energy: c.energy * loss,
                            momentum: [c.momentum[0] * loss, c.momentum[1] * loss],
                        });
                        field.values[idx] *= f;
                    }
                }
            }
        }
        for c in credits {
            self.emit(c, ledger, &mut out);
        }
        self.captured = ledger.total_captured();
        let total: f64 = field.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dv;
        let mut inside = 0.0;
        for (b, map) in maps1.iter().enumerate() {
            if matches!(self.sinks[b], Sink::Absorb(_)) {
                inside += map.inside.iter().map(|c| field.values[c.0].norm_sqr()).sum::<f64>() * dv;
            }
        }
        self.exterior_norm = total - inside;
        out.exterior_norm = self.exterior_norm;
        out.residual = self.exterior_norm + self.captured - start_total;
        let st = &mut self.stats;
        st.steps += 1;
        st.max_step_residual = st.max_step_residual.max(out.residual.abs());
        st.max_leak = st.max_leak.max(out.leak);
        st.min_step_capture = st.min_step_capture.min(out.captured);
        if out.captured < 0.0 {
            st.negative_capture += out.captured;
        }
        Ok(out)
    }

    /// Inward relative normal flux (j - rho v).n_in read at each active site's phase cell.
    pub fn site_flux(&mut self, field: &WaveField, t: f64) -> Vec<Option<f64>> {
        let grad = self.gradient(&field.values);
        let mut out = Vec::new();
        for b in 0..self.bodies.len() {
            let map = self.map(b, t);
            for s in 0..self.bodies[b].sites.len() {
                let cell = map.site_cell[s].and_then(|idx| map.face.iter().find(|f| f.idx == idx));
                out.push(cell.map(|f| {
                    let psi = field.values[f.idx];
                    let rho = psi.norm_sqr();
                    (0..self.grid.dim())
                        .map(|a| {
                            (self.hbar / self.mass * (psi.conj() * grad[a][f.idx]).im - rho * f.velocity[a]) * f.toward[a]
                        })
                        .sum()
                }));
            }
        }
        out
    }
}
