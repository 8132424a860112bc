use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::body::{BodyState, Hole, Interaction, SlabSpec, Trajectory};
use crate::error::{Error, Result};
use crate::grid_field::{make_product, AxisProfile, Grid, Point, WaveField};
use crate::measurement::{AuditTolerances, Frame};
use crate::tdse::{audit_step, step_count, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { hbar: 1.0, mass: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// One profile per grid axis; the initial state is their product.
    pub axes: Vec<AxisProfile>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Free,
    /// m omega^2 |x - center|^2 / 2
    Harmonic { omega: f64, center: Vec<f64> },
    /// Constant `height` for lo <= x_axis < hi.
    Barrier { axis: usize, lo: f64, hi: f64, height: f64 },
}

impl PotentialSpec {
    pub fn is_free(&self) -> bool {
        matches!(self, PotentialSpec::Free)
    }

    /// V at a lab point.
    pub fn value(&self, p: &Point, mass: f64) -> f64 {
        match self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { omega, center } => {
                let r2: f64 = center.iter().enumerate().map(|(a, c)| (p[a] - c).powi(2)).sum();
                0.5 * mass * omega * omega * r2
            }
            PotentialSpec::Barrier { axis, lo, hi, height } => {
                if p[*axis] >= *lo && p[*axis] < *hi {
                    *height
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSpec {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub t_start: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameSpec {
    #[default]
    Lab,
    /// The grid rides with the translation of body `index`.
    Body { index: usize },
}

fn default_floor() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(default = "default_floor")]
    pub record_floor: f64,
}

impl Default for LedgerSpec {
    fn default() -> Self {
        LedgerSpec { bin_width: None, record_floor: default_floor() }
    }
}

fn absorb() -> Interaction {
    Interaction::Absorb
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub name: String,
    /// Point on the front face (one entry per grid axis).
    pub face: Vec<f64>,
    /// Outward normal of the front face.
    pub normal: Vec<f64>,
    pub thickness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    pub d: f64,
    pub v_s: f64,
    /// Wavenumber the sink is tuned for; defaults to |k0| of the initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Hole>,
    #[serde(default = "absorb")]
    pub interaction: Interaction,
    pub trajectory: Trajectory,
}

fn point(v: &[f64]) -> Point {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

impl BodySpec {
    pub fn stationary(name: &str, face: Vec<f64>, normal: Vec<f64>, thickness: f64, d: f64, v_s: f64) -> Self {
        BodySpec {
            name: name.into(),
            face,
            normal,
            thickness,
            half_length: None,
            d,
            v_s,
            design_k: None,
            holes: vec![],
            interaction: Interaction::Absorb,
            trajectory: Trajectory::stationary(0.0),
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<BodyState> {
        let dim = grid.dim();
        if self.face.len() != dim || self.normal.len() != dim {
            return Err(Error::config(format!("body {}: face and normal need {dim} components", self.name)));
        }
        BodyState::slab(
            SlabSpec {
                name: self.name.clone(),
                face: point(&self.face),
                normal: point(&self.normal),
                thickness: self.thickness,
                half_length: self.half_length,
                d: self.d,
                v_s: self.v_s,
                holes: self.holes.clone(),
                trajectory: self.trajectory.clone(),
                interaction: self.interaction.clone(),
            },
            grid,
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Binary,
    Text,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Lab position (one entry per grid axis).
    pub position: Vec<f64>,
    /// Sample every this many steps.
    #[serde(default = "one")]
    pub every: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Snapshot cadence in steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub snapshot_format: SnapshotFormat,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    /// Accumulated |free norm + captured - initial norm|.
    pub norm: f64,
    /// Per-step residual of the same identity.
    pub step: f64,
    pub energy: f64,
    pub momentum: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        AuditSpec { norm: 1e-6, step: 1e-10, energy: 0.05, momentum: 0.05 }
    }
}

impl AuditSpec {
    pub fn tolerances(&self) -> AuditTolerances {
        AuditTolerances { norm: self.norm, energy: self.energy, momentum: self.momentum }
    }
}

/// Separable flat-screen mode: the 1D grid is the longitudinal axis; a second, freely
/// evolving 1D factor carries the transverse profile and a row of `sites` panels of width
/// `d` (of body 0) centred on 0. The outermost panels extend to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransverseSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub profile: AxisProfile,
    pub sites: usize,
}

impl TransverseSpec {
    pub fn site_position(&self, s: usize, d: f64) -> f64 {
        (s as f64 - 0.5 * (self.sites as f64 - 1.0)) * d
    }
}

/// What a scenario's ledger is compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    /// Time-integrated free current through body 0's front plane from a body-free run (1D,
    /// lab frame); compared per site (separable mode) or per time bin (single site).
    FreeFlux,
    /// |psi_perp(R_s, t1)|^2 d at the contact time of a thin sheet (separable mode).
    InstantSheet { t1: f64 },
    /// Norm beyond `plane` at time `t` of the freely evolved initial state, compared with
    /// body 0's total capture; body `late_body` is checked for arrivals before `x1 / v_g`.
    SweptOverlap { t: f64, plane: f64, late_body: Option<usize>, x1: f64, v_g: f64 },
    /// Two-source fringes on body `collector`: hole separation `a`, plate-collector distance.
    Fringes { collector: usize, separation: f64, distance: f64, k: f64 },
    /// Spread of arrival times on body `body`.
    ArrivalSpread { body: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Reserved; every scenario is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub units: Units,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub stepper: StepperSpec,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(default)]
    pub ledger: LedgerSpec,
    #[serde(default)]
    pub audit: AuditSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transverse: Option<TransverseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bodies: Vec<BodySpec>,
}

/// Everything a run needs, built and cross-checked from a config.
pub struct Setup {
    pub grid: Grid,
    pub field: WaveField,
    pub bodies: Vec<BodyState>,
    pub design_k: Vec<f64>,
    pub steps: usize,
    pub bin_width: f64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        if g.lo.len() != g.hi.len() || g.lo.len() != g.n.len() {
            return Err(Error::config("grid lo, hi and n must have the same length"));
        }
        Grid::new(&g.lo, &g.hi, &g.n).map_err(|e| Error::config(e.to_string()))
    }

    /// |k0| of the initial state.
    pub fn initial_k(&self) -> f64 {
        let mut k2: f64 = self.initial.axes.iter().map(|a| a.k0().powi(2)).sum();
        if let Some(t) = &self.transverse {
            k2 += t.profile.k0().powi(2);
        }
        k2.sqrt()
    }

    pub fn frame(&self, bodies: &[BodyState]) -> Frame {
        let u = self.units;
        match self.frame {
            FrameSpec::Lab => Frame::lab(u.mass, u.hbar),
            FrameSpec::Body { index } => Frame::following(bodies[index].trajectory.clone(), u.mass, u.hbar),
        }
    }

    /// The potential as seen on the (possibly moving) grid.
    pub fn potential(&self, grid: &Grid, frame: &Frame) -> Result<Potential> {
        if self.potential.is_free() {
            return Ok(Potential::Free);
        }
        let mass = self.units.mass;
        let spec = self.potential.clone();
        match frame.trajectory() {
            Some(tr) if !frame.is_lab() => {
                let bound = (0..grid.len()).map(|i| spec.value(&grid.point(i), mass).abs()).fold(0.0, f64::max);
                let tr = tr.clone();
                Ok(Potential::time_dependent(bound, move |p, t| {
                    let x = tr.offset(t);
                    spec.value(&[p[0] + x[0], p[1] + x[1]], mass)
                }))
            }
            _ => Potential::from_fn(grid, |p| spec.value(p, mass)),
        }
    }

    /// Builds the run objects and checks everything that can be checked before stepping.
    pub fn setup(&self) -> Result<Setup> {
        let cfg = |m: String| Error::config(m);
        let u = self.units;
        if !(u.hbar > 0.0) || !(u.mass > 0.0) {
            return Err(cfg("hbar and mass must be positive".into()));
        }
        let grid = self.grid()?;
        let dim = grid.dim();
        if self.initial.axes.len() != dim {
            return Err(cfg(format!("initial state needs {dim} axis profiles")));
        }
        let field = make_product(&grid, &self.initial.axes)
            .map_err(|e| cfg(format!("initial state: {e}")))?
            .with_units(u.mass, u.hbar)
            .with_time(self.stepper.t_start);
        let st = &self.stepper;
        if !(st.t_final > st.t_start) {
            return Err(cfg("t_final must exceed t_start".into()));
        }
        let steps = step_count(st.t_final - st.t_start, st.dt).map_err(|e| cfg(e.to_string()))?;
        match &self.potential {
            PotentialSpec::Harmonic { omega, center } if center.len() != dim || !(*omega > 0.0) => {
                return Err(cfg("harmonic potential needs omega > 0 and a center per axis".into()));
            }
            PotentialSpec::Barrier { axis, lo, hi, .. } if *axis >= dim || !(hi > lo) => {
                return Err(cfg("barrier axis out of range or empty interval".into()));
            }
            _ => {}
        }
        let mut bodies = Vec::new();
        for b in &self.bodies {
            bodies.push(b.build(&grid)?);
        }
        let on_step = |t: f64| {
            let k = (t - st.t_start) / st.dt;
            (k - k.round()).abs() < 1e-6
        };
        for b in &bodies {
            for s in &b.trajectory.segments[1..] {
                if !on_step(s.t_start) {
                    return Err(cfg(format!("body {}: velocity change at t={} is not on a step boundary", b.name, s.t_start)));
                }
            }
            if b.trajectory.t_end.is_finite() && !on_step(b.trajectory.t_end) {
                return Err(cfg(format!("body {}: removal time {} is not on a step boundary", b.name, b.trajectory.t_end)));
            }
            for h in &b.holes {
                for t in [h.open_at, h.close_at] {
                    if t.is_finite() && !on_step(t) {
                        return Err(cfg(format!("body {}: hole switch at t={t} is not on a step boundary", b.name)));
                    }
                }
            }
            if b.trajectory.start() > st.t_start + 1e-12 {
                return Err(cfg(format!("body {}: script starts after the run", b.name)));
            }
            let mut checkpoints: Vec<f64> = b.trajectory.segments.iter().map(|s| s.t_start.max(st.t_start)).collect();
            checkpoints.push(st.t_final.min(b.trajectory.t_end));
            for t in checkpoints {
                for (p, _, _) in b.site_positions(t)? {
                    for a in 0..dim {
                        if p[a] < grid.lo(a) || p[a] > grid.hi(a) {
                            return Err(cfg(format!("body {}: site leaves the domain at t={t}", b.name)));
                        }
                    }
                }
            }
        }
        if let FrameSpec::Body { index } = self.frame {
            if index >= bodies.len() {
                return Err(cfg(format!("frame follows body {index}, which does not exist")));
            }
            if bodies[index].trajectory.rotation.is_some() {
                return Err(cfg("the frame can follow translations only".into()));
            }
        }
        let frame = self.frame(&bodies);
        let pot = self.potential(&grid, &frame)?;
        audit_step(&grid, &pot, st.dt, u.mass, u.hbar).map_err(|e| cfg(e.to_string()))?;
        let k = self.initial_k();
        let design_k = self
            .bodies
            .iter()
            .map(|b| match b.design_k.unwrap_or(k) {
                k if k > 0.0 => Ok(k),
                _ => Err(cfg(format!("body {}: design_k needed for an initial state at rest", b.name))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let bin_width = match self.ledger.bin_width {
            Some(w) if w > 0.0 => w,
            Some(w) => return Err(cfg(format!("ledger bin width must be positive, got {w}"))),
            None => bodies.iter().map(BodyState::bin_width).fold(f64::INFINITY, f64::min),
        };
        let bin_width = if bin_width.is_finite() { bin_width } else { st.t_final - st.t_start };
        for p in &self.outputs.probes {
            if p.position.len() != dim || p.every == 0 {
                return Err(cfg("probe needs a position per axis and every >= 1".into()));
            }
            for a in 0..dim {
                if p.position[a] < grid.lo(a) || p.position[a] >= grid.hi(a) {
                    return Err(cfg(format!("probe at {:?} outside the grid", p.position)));
                }
            }
        }
        if let Some(t) = &self.transverse {
            if dim != 1 {
                return Err(cfg("separable mode needs a 1D longitudinal grid".into()));
            }
            if bodies.is_empty() || t.sites == 0 {
                return Err(cfg("separable mode needs a screen and at least one site".into()));
            }
            if !matches!(self.frame, FrameSpec::Lab) {
                return Err(cfg("separable mode runs in the lab frame".into()));
            }
            Grid::new_1d(t.lo, t.hi, t.n).map_err(|e| cfg(format!("transverse grid: {e}")))?;
            let span = 0.5 * t.sites as f64 * bodies[0].d;
            if t.lo > -span || t.hi < span {
                return Err(cfg("transverse site row does not fit the transverse grid".into()));
            }
        }
        match &self.reference {
            Some(Reference::InstantSheet { .. }) if self.transverse.is_none() => {
                return Err(cfg("instant_sheet reference needs separable mode".into()));
            }
            Some(Reference::FreeFlux) | Some(Reference::SweptOverlap { .. }) if bodies.is_empty() => {
                return Err(cfg("reference needs at least one body".into()));
            }
            Some(Reference::FreeFlux) if dim != 1 || !matches!(self.frame, FrameSpec::Lab) => {
                return Err(cfg("free_flux reference needs a 1D grid in the lab frame".into()));
            }
            Some(Reference::Fringes { collector: b, .. }) | Some(Reference::ArrivalSpread { body: b })
                if *b >= bodies.len() =>
            {
                return Err(cfg(format!("reference names body {b}, which does not exist")));
            }
            Some(Reference::SweptOverlap { late_body: Some(b), .. }) if *b >= bodies.len() => {
                return Err(cfg(format!("reference names body {b}, which does not exist")));
            }
            _ => {}
        }
        Ok(Setup { grid, field, bodies, design_k, steps, bin_width })
    }

    pub fn validate(&self) -> Result<()> {
        self.setup().map(|_| ())
    }
}
