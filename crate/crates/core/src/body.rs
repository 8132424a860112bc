//! Classical absorbing bodies: slab panels with surface sites, holes, and scripted rigid motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_field::{Grid, Point};

/// An interval of the tangent coordinate with no solid material while open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hole {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "neg_inf")]
    pub open_at: f64,
    #[serde(default = "pos_inf")]
    pub close_at: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl Hole {
    pub fn new(lo: f64, hi: f64) -> Self {
        Hole { lo, hi, open_at: f64::NEG_INFINITY, close_at: f64::INFINITY }
    }

    pub fn is_open(&self, t: f64) -> bool {
        self.open_at <= t && t < self.close_at
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_start: f64,
    pub velocity: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rotation {
    /// Pivot in rest coordinates; it is carried along by the translation.
    pub pivot: Point,
    /// Angular velocity (radians per unit time), counter-clockwise.
    pub rate: f64,
}

/// Piecewise-constant translation velocity, optional steady rotation, finite lifetime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Rotation>,
    /// The body ceases to exist at this time.
    #[serde(default = "pos_inf")]
    pub t_end: f64,
}

impl Trajectory {
    pub fn stationary(t_start: f64) -> Self {
        Trajectory {
            segments: vec![Segment { t_start, velocity: [0.0, 0.0] }],
            rotation: None,
            t_end: f64::INFINITY,
        }
    }

    pub fn moving(t_start: f64, velocity: Point) -> Self {
        Trajectory { segments: vec![Segment { t_start, velocity }], rotation: None, t_end: f64::INFINITY }
    }

    pub fn with_impulse(mut self, t: f64, velocity: Point) -> Self {
        self.segments.push(Segment { t_start: t, velocity });
        self
    }

    pub fn start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::config("trajectory needs at least one segment"));
        }
        for w in self.segments.windows(2) {
            if !(w[1].t_start > w[0].t_start) {
                return Err(Error::config("trajectory segments must be strictly time-ordered"));
            }
        }
        if !(self.t_end > self.start()) {
            return Err(Error::config("trajectory ends before it starts"));
        }
        Ok(())
    }

    fn eps(t: f64) -> f64 {
        1e-9 * t.abs().max(1.0)
    }

    /// Index of the segment in force at `t`; a segment takes over at its own start time.
    pub fn segment_index(&self, t: f64) -> usize {
        let e = Self::eps(t);
        self.segments
            .iter()
            .rposition(|s| s.t_start <= t + e)
            .unwrap_or(0)
    }

    pub fn in_range(&self, t: f64) -> bool {
        let e = Self::eps(t);
        t >= self.start() - e && t <= self.t_end + e
    }

    /// Present (solid) at `t`: scripted and not yet removed.
    pub fn present(&self, t: f64) -> bool {
        t >= self.start() - Self::eps(t) && t < self.t_end - Self::eps(t)
    }

    pub fn translation_velocity(&self, t: f64) -> Point {
        self.segments[self.segment_index(t)].velocity
    }

    /// Displacement since the start of the script.
    pub fn offset(&self, t: f64) -> Point {
        let mut off = [0.0, 0.0];
        for (i, s) in self.segments.iter().enumerate() {
            if t <= s.t_start {
                break;
            }
            let end = self.segments.get(i + 1).map_or(t, |n| n.t_start.min(t));
            off[0] += s.velocity[0] * (end - s.t_start);
            off[1] += s.velocity[1] * (end - s.t_start);
        }
        off
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.rotation.as_ref().map_or(0.0, |r| r.rate * (t - self.start()))
    }

    /// The same motion seen from a frame that itself follows `frame`'s translation.
    pub fn relative_to(&self, frame: &Trajectory) -> Trajectory {
        let mut times: Vec<f64> = self
            .segments
            .iter()
            .chain(frame.segments.iter())
            .map(|s| s.t_start)
            .filter(|&t| t >= self.start())
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let segments = times
            .into_iter()
            .map(|t| {
                let a = self.translation_velocity(t);
                let b = frame.translation_velocity(t);
                Segment { t_start: t, velocity: [a[0] - b[0], a[1] - b[1]] }
            })
            .collect();
        let start_shift = frame.offset(self.start());
        let rotation = self.rotation.as_ref().map(|r| Rotation {
            pivot: [r.pivot[0] - start_shift[0], r.pivot[1] - start_shift[1]],
            rate: r.rate,
        });
        Trajectory { segments, rotation, t_end: self.t_end }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Interaction {
    /// Perfect absorber: everything crossing the surface is captured.
    Absorb,
    /// Thin plate removing a fraction `eta` of normally incident flux.
    Transmit { eta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSite {
    pub id: usize,
    pub rest_position: Point,
    pub rest_normal: Point,
    /// Tangent coordinate of the site on its face.
    pub v: f64,
}

/// Geometry of a flat slab body. `face` is a point on the front face, `normal` its outward
/// unit normal; the slab extends `thickness` behind the face. In 2D the slab either has a
/// finite `half_length` along the face or spans the periodic tangent axis.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyState {
    pub name: String,
    pub dim: usize,
    pub face: Point,
    pub normal: Point,
    pub tangent: Point,
    pub thickness: f64,
    pub half_length: Option<f64>,
    /// Tangent-coordinate period for spanning slabs.
    pub period: Option<(f64, f64)>,
    pub d: f64,
    pub v_s: f64,
    pub holes: Vec<Hole>,
    pub trajectory: Trajectory,
    pub interaction: Interaction,
    pub sites: Vec<SurfaceSite>,
}

pub struct SlabSpec {
    pub name: String,
    pub face: Point,
    pub normal: Point,
    pub thickness: f64,
    pub half_length: Option<f64>,
    pub d: f64,
    pub v_s: f64,
    pub holes: Vec<Hole>,
    pub trajectory: Trajectory,
    pub interaction: Interaction,
}

fn rot(p: Point, a: f64) -> Point {
    if a == 0.0 {
        return p;
    }
    let (s, c) = a.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn tangent_of(n: Point) -> Point {
    let t = [-n[1], n[0]];
    let dominant = if t[0].abs() >= t[1].abs() { t[0] } else { t[1] };
    if dominant < 0.0 {
        [-t[0], -t[1]]
    } else {
        t
    }
}

/// Where a grid point sits relative to one slab at one instant.
#[derive(Clone, Copy, Debug)]
pub struct LocalQuery {
    pub inside: bool,
    /// Distance to the nearer of the front and back faces (inside points).
    pub depth: f64,
    /// Distance to the nearest end or hole edge (inside points; infinite when there is none).
    pub lateral: f64,
    /// Distance to the body (outside points).
    pub gap: f64,
    /// Unit vector from an outside point toward the body, lab frame.
    pub toward: Point,
}

/// Cells occupied by a body at one instant and its exterior face layer.
#[derive(Clone, Debug, Default)]
pub struct BodyMap {
    /// Sorted interior cells with their depth below the front or back face.
    pub inside: Vec<(usize, f64)>,
    /// Distance of each interior cell to the nearest end or hole edge (parallel to `inside`).
    pub inside_lateral: Vec<f64>,
    /// Nearest active site of each interior cell (parallel to `inside`).
    pub inside_owner: Vec<Option<usize>>,
    /// Exterior cells within one spacing of the body.
    pub face: Vec<FaceCell>,
    /// Per site: exterior cell whose phase is read at capture (None if inactive).
    pub site_cell: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug)]
pub struct FaceCell {
    pub idx: usize,
    pub toward: Point,
    pub owner: Option<usize>,
    pub velocity: Point,
}

impl BodyMap {
    pub fn contains(&self, idx: usize) -> bool {
        self.inside.binary_search_by_key(&idx, |c| c.0).is_ok()
    }
}

/// Pose of a body: everything the cell classification depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    present: bool,
    offset: Point,
    angle: f64,
    open: Vec<bool>,
}

impl BodyState {
    pub fn slab(spec: SlabSpec, grid: &Grid) -> Result<Self> {
        let dim = grid.dim();
        let nn = spec.normal[0].hypot(spec.normal[1]);
        if !(nn > 0.0) {
            return Err(Error::config(format!("body {}: zero normal", spec.name)));
        }
        let normal = [spec.normal[0] / nn, spec.normal[1] / nn];
        if dim == 1 && (normal[1] != 0.0 || spec.half_length.is_some()) {
            return Err(Error::config(format!("body {}: 1D bodies have normal (+-1) and no length", spec.name)));
        }
        if !(spec.d > 0.0) || !(spec.v_s > 0.0) || !(spec.thickness > 0.0) {
            return Err(Error::config(format!("body {}: d, v_s and thickness must be positive", spec.name)));
        }
        spec.trajectory.validate()?;
        if let Interaction::Transmit { eta } = spec.interaction {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::config(format!("body {}: transmitting eta must lie in (0, 1)", spec.name)));
            }
        }
        let tangent = tangent_of(normal);
        let mut period = None;
        let (v_lo, v_hi) = if dim == 1 {
            (0.0, 0.0)
        } else {
            match spec.half_length {
                Some(h) if h > 0.0 => (-h, h),
                Some(_) => return Err(Error::config(format!("body {}: half_length must be positive", spec.name))),
                None => {
                    let axis = if tangent[1].abs() == 1.0 {
                        1
                    } else if tangent[0].abs() == 1.0 {
                        0
                    } else {
                        return Err(Error::config(format!(
                            "body {}: a slab without half_length must be axis-aligned",
                            spec.name
                        )));
                    };
                    if spec.trajectory.rotation.is_some() {
                        return Err(Error::config(format!("body {}: spanning slabs cannot rotate", spec.name)));
                    }
                    let shift = spec.face[axis];
                    let p = (grid.lo(axis) - shift, grid.hi(axis) - shift);
                    period = Some(p);
                    p
                }
            }
        };
        let mut holes = spec.holes.clone();
        holes.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for h in &holes {
            if !(h.hi > h.lo) || !(h.close_at > h.open_at) {
                return Err(Error::config(format!("body {}: empty hole [{}, {}]", spec.name, h.lo, h.hi)));
            }
            if dim == 2 && (h.lo < v_lo || h.hi > v_hi) {
                return Err(Error::config(format!("body {}: hole [{}, {}] outside the face", spec.name, h.lo, h.hi)));
            }
        }
        for w in holes.windows(2) {
            let overlap_t = w[0].open_at < w[1].close_at && w[1].open_at < w[0].close_at;
            if w[1].lo < w[0].hi && overlap_t {
                return Err(Error::config(format!("body {}: holes overlap", spec.name)));
            }
        }
        let sites = if dim == 1 {
            vec![SurfaceSite { id: 0, rest_position: spec.face, rest_normal: normal, v: 0.0 }]
        } else {
            let len = v_hi - v_lo;
            let n = (len / spec.d).round();
            if n < 1.0 || (n * spec.d - len).abs() > 1e-9 * len.max(1.0) {
                return Err(Error::config(format!(
                    "body {}: face length {len} is not a whole number of site spacings {}",
                    spec.name, spec.d
                )));
            }
            (0..n as usize)
                .map(|i| {
                    let v = v_lo + (i as f64 + 0.5) * spec.d;
                    SurfaceSite {
                        id: i,
                        rest_position: [spec.face[0] + v * tangent[0], spec.face[1] + v * tangent[1]],
                        rest_normal: normal,
                        v,
                    }
                })
                .collect()
        };
        Ok(BodyState {
            name: spec.name,
            dim,
            face: spec.face,
            normal,
            tangent,
            thickness: spec.thickness,
            half_length: spec.half_length,
            period,
            d: spec.d,
            v_s: spec.v_s,
            holes,
            trajectory: spec.trajectory,
            interaction: spec.interaction,
            sites,
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.d / self.v_s
    }

    pub fn is_absorbing(&self) -> bool {
        matches!(self.interaction, Interaction::Absorb)
    }

    pub fn site_active(&self, s: usize, t: f64) -> bool {
        let v = self.sites[s].v;
        !self.holes.iter().any(|h| h.is_open(t) && v > h.lo && v < h.hi)
    }

    fn to_lab(&self, rest: Point, t: f64) -> Point {
        let off = self.trajectory.offset(t);
        match &self.trajectory.rotation {
            Some(r) => {
                let q = rot([rest[0] - r.pivot[0], rest[1] - r.pivot[1]], self.trajectory.angle(t));
                [q[0] + r.pivot[0] + off[0], q[1] + r.pivot[1] + off[1]]
            }
            None => [rest[0] + off[0], rest[1] + off[1]],
        }
    }

    fn to_rest(&self, lab: Point, t: f64) -> Point {
        let off = self.trajectory.offset(t);
        let p = [lab[0] - off[0], lab[1] - off[1]];
        match &self.trajectory.rotation {
            Some(r) => {
                let q = rot([p[0] - r.pivot[0], p[1] - r.pivot[1]], -self.trajectory.angle(t));
                [q[0] + r.pivot[0], q[1] + r.pivot[1]]
            }
            None => p,
        }
    }

    fn velocity_at(&self, lab: Point, t: f64) -> Point {
        let v = self.trajectory.translation_velocity(t);
        match &self.trajectory.rotation {
            Some(r) => {
                let off = self.trajectory.offset(t);
                let c = [r.pivot[0] + off[0], r.pivot[1] + off[1]];
                [v[0] - r.rate * (lab[1] - c[1]), v[1] + r.rate * (lab[0] - c[0])]
            }
            None => v,
        }
    }

    /// Lab position, outward normal and velocity of every site at `t`.
    pub fn site_positions(&self, t: f64) -> Result<Vec<(Point, Point, Point)>> {
        if !self.trajectory.in_range(t) {
            return Err(Error::OutsideScript { t, lo: self.trajectory.start(), hi: self.trajectory.t_end });
        }
        let a = self.trajectory.angle(t);
        Ok(self
            .sites
            .iter()
            .map(|s| {
                let p = self.to_lab(s.rest_position, t);
                (p, rot(s.rest_normal, a), self.velocity_at(p, t))
            })
            .collect())
    }

    pub fn pose(&self, t: f64) -> Pose {
        Pose {
            present: self.trajectory.present(t),
            offset: self.trajectory.offset(t),
            angle: self.trajectory.angle(t),
            open: self.holes.iter().map(|h| h.is_open(t)).collect(),
        }
    }

    /// Distances along the tangent from `v` to the nearest exposed edge below and above,
    /// or `None` when `v` lies in an open hole or beyond a finite face.
    fn tangent_edges(&self, v: f64, t: f64) -> std::result::Result<(f64, f64), (f64, f64)> {
        let mut below = f64::INFINITY;
        let mut above = f64::INFINITY;
        match self.period {
            Some((lo, hi)) => {
                let l = hi - lo;
                for h in self.holes.iter().filter(|h| h.is_open(t)) {
                    let into = (v - h.lo).rem_euclid(l);
                    if into < h.hi - h.lo {
                        return Err((into, h.hi - h.lo - into));
                    }
                    below = below.min((v - h.hi).rem_euclid(l));
                    above = above.min((h.lo - v).rem_euclid(l));
                }
            }
            None => {
                if self.dim == 2 {
                    let hl = self.half_length.unwrap_or(f64::INFINITY);
                    if v < -hl {
                        return Err((f64::INFINITY, -hl - v));
                    }
                    if v > hl {
                        return Err((v - hl, f64::INFINITY));
                    }
                    below = v + hl;
                    above = hl - v;
                }
                for h in self.holes.iter().filter(|h| h.is_open(t)) {
                    if v > h.lo && v < h.hi {
                        return Err((v - h.lo, h.hi - v));
                    }
                    if v >= h.hi {
                        below = below.min(v - h.hi);
                    }
                    if v <= h.lo {
                        above = above.min(h.lo - v);
                    }
                }
            }
        }
        Ok((below, above))
    }

    /// Position of a lab point relative to the slab at `t` (slab assumed present).
    pub fn query(&self, p: Point, t: f64) -> LocalQuery {
        let q = self.to_rest(p, t);
        let rel = [q[0] - self.face[0], q[1] - self.face[1]];
        let u = -dot(rel, self.normal);
        let v = if self.dim == 1 { 0.0 } else { dot(rel, self.tangent) };
        let tk = self.thickness;
        let edges = self.tangent_edges(v, t);
        let in_u = u >= 0.0 && u < tk;
        if let (true, Ok((below, above))) = (in_u, edges) {
            return LocalQuery { inside: true, depth: u.min(tk - u), lateral: below.min(above), gap: 0.0, toward: [0.0, 0.0] };
        }
        // displacement (in u, v) from the point to the nearest body point
        let du = if u < 0.0 {
            -u
        } else if u >= tk {
            tk - u
        } else {
            0.0
        };
        let dv = match edges {
            Ok(_) => 0.0,
            Err((back, fwd)) => {
                if back <= fwd {
                    -back
                } else {
                    fwd
                }
            }
        };
        let gap = du.hypot(dv);
        let local = if gap > 0.0 { [du / gap, dv / gap] } else { [1.0, 0.0] };
        // u grows against the outward normal
        let rest_dir = [
            -local[0] * self.normal[0] + local[1] * self.tangent[0],
            -local[0] * self.normal[1] + local[1] * self.tangent[1],
        ];
        LocalQuery { inside: false, depth: 0.0, lateral: 0.0, gap, toward: rot(rest_dir, self.trajectory.angle(t)) }
    }

    /// Index ranges per axis that can hold body or face cells at `t`.
    fn cell_box(&self, grid: &Grid, t: f64, margin: f64) -> Vec<(usize, usize)> {
        let mut corners = Vec::new();
        let (v_lo, v_hi) = match (self.dim, self.half_length) {
            (1, _) => (0.0, 0.0),
            (_, Some(h)) => (-h, h),
            _ => (0.0, 0.0),
        };
        for u in [0.0, self.thickness] {
            for v in [v_lo, v_hi] {
                let rest = [
                    self.face[0] - u * self.normal[0] + v * self.tangent[0],
                    self.face[1] - u * self.normal[1] + v * self.tangent[1],
                ];
                corners.push(self.to_lab(rest, t));
            }
        }
        (0..grid.dim())
            .map(|a| {
                let spans_axis = self.period.is_some() && self.tangent[a].abs() == 1.0;
                if spans_axis {
                    return (0, grid.n(a));
                }
                let lo = corners.iter().map(|c| c[a]).fold(f64::INFINITY, f64::min) - margin;
                let hi = corners.iter().map(|c| c[a]).fold(f64::NEG_INFINITY, f64::max) + margin;
                let h = grid.spacing(a);
                let i0 = ((lo - grid.lo(a)) / h).floor().max(0.0) as usize;
                let i1 = (((hi - grid.lo(a)) / h).ceil() + 1.0).clamp(0.0, grid.n(a) as f64) as usize;
                (i0.min(grid.n(a)), i1)
            })
            .collect()
    }

    fn box_cells(&self, grid: &Grid, t: f64, margin: f64) -> Vec<usize> {
        let b = self.cell_box(grid, t, margin);
        if grid.dim() == 1 {
            (b[0].0..b[0].1).collect()
        } else {
            let mut out = Vec::new();
            for i in b[0].0..b[0].1 {
                for j in b[1].0..b[1].1 {
                    out.push(grid.flat(i, j));
                }
            }
            out
        }
    }

    /// Nearest active site to a lab point at `t`, given site positions. Distances equal to
    /// within roundoff go to the lower site index, so cells midway between two sites are
    /// shared out regularly.
    fn owner(&self, p: Point, sites: &[(Point, Point, Point)], active: &[bool]) -> Option<usize> {
        let tie = 1e-9 * self.d;
        let mut best = None;
        let mut bd = f64::INFINITY;
        for (s, (q, _, _)) in sites.iter().enumerate() {
            if !active[s] {
                continue;
            }
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            if d < bd - tie {
                bd = d;
                best = Some(s);
            }
        }
        best
    }

    /// Interior cells, exterior face layer and phase-read cells at `t`.
    pub fn classify(&self, grid: &Grid, t: f64) -> BodyMap {
        if !self.trajectory.present(t) {
            return BodyMap { site_cell: vec![None; self.sites.len()], ..Default::default() };
        }
        let h = grid.min_spacing();
        let hmax = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
        let reach = hmax * 1.0001;
        let sites = self.site_positions(t).unwrap_or_default();
        let active: Vec<bool> = (0..self.sites.len()).map(|s| self.site_active(s, t)).collect();
        let mut map = BodyMap::default();
        for idx in self.box_cells(grid, t, 2.0 * hmax + h) {
            let p = grid.point(idx);
            let q = self.query(p, t);
            if q.inside {
                map.inside.push((idx, q.depth));
                map.inside_lateral.push(q.lateral);
            } else if q.gap <= reach {
                map.face.push(FaceCell {
                    idx,
                    toward: q.toward,
                    owner: self.owner(p, &sites, &active),
                    velocity: self.velocity_at(p, t),
                });
            }
        }
        let mut order: Vec<usize> = (0..map.inside.len()).collect();
        order.sort_by_key(|&i| map.inside[i].0);
        map.inside = order.iter().map(|&i| map.inside[i]).collect();
        map.inside_lateral = order.iter().map(|&i| map.inside_lateral[i]).collect();
        map.face.sort_by_key(|c| c.idx);
        map.inside_owner = map.inside.iter().map(|c| self.owner(grid.point(c.0), &sites, &active)).collect();
        map.site_cell = (0..self.sites.len())
            .map(|s| {
                if !active[s] {
                    return None;
                }
                let (pos, n, _) = sites[s];
                let probe = [pos[0] + 0.5 * h * n[0], pos[1] + 0.5 * h * n[1]];
                map.face
                    .iter()
                    .filter(|f| f.owner == Some(s))
                    .min_by(|a, b| {
                        let pa = grid.point(a.idx);
                        let pb = grid.point(b.idx);
                        let da = (pa[0] - probe[0]).hypot(pa[1] - probe[1]);
                        let db = (pb[0] - probe[0]).hypot(pb[1] - probe[1]);
                        da.total_cmp(&db)
                    })
                    .map(|f| f.idx)
            })
            .collect();
        map
    }

    /// Largest displacement of any site between `t0` and `t1`.
    pub fn max_site_displacement(&self, t0: f64, t1: f64) -> f64 {
        let (Ok(a), Ok(b)) = (self.site_positions(t0), self.site_positions(t1)) else {
            return 0.0;
        };
        a.iter()
            .zip(&b)
            .map(|(p, q)| (p.0[0] - q.0[0]).hypot(p.0[1] - q.0[1]))
            .fold(0.0, f64::max)
    }

    /// Largest site speed anywhere on the script (translation plus rotation).
    pub fn max_speed(&self) -> f64 {
        let vmax = self
            .trajectory
            .segments
            .iter()
            .map(|s| s.velocity[0].hypot(s.velocity[1]))
            .fold(0.0, f64::max);
        vmax + self.rotation_speed()
    }

    /// Bound on site speed during the segment in force at `t` (0 once removed).
    pub fn speed_at(&self, t: f64) -> f64 {
        if !self.trajectory.present(t) {
            return 0.0;
        }
        let v = self.trajectory.translation_velocity(t);
        v[0].hypot(v[1]) + self.rotation_speed()
    }

    fn rotation_speed(&self) -> f64 {
        match &self.trajectory.rotation {
            Some(r) => {
                let reach = self
                    .sites
                    .iter()
                    .map(|s| (s.rest_position[0] - r.pivot[0]).hypot(s.rest_position[1] - r.pivot[1]))
                    .fold(0.0, f64::max)
                    + self.thickness
                    + self.half_length.unwrap_or(0.0);
                r.rate.abs() * reach
            }
            None => 0.0,
        }
    }
}

/// Cells that are exterior at `t0` and inside the body at `t1`, each with its owning site
/// (nearest active site at `t1`; `None` when every site is covered by holes).
pub fn swept_cells(body: &BodyState, grid: &Grid, t0: f64, t1: f64) -> Result<Vec<(usize, Option<usize>)>> {
    if !(t1 > t0) {
        return Err(Error::config(format!("swept_cells needs t1 > t0 (got {t0}, {t1})")));
    }
    let moved = body.max_site_displacement(t0, t1);
    let h = grid.min_spacing();
    if moved > h * (1.0 + 1e-9) {
        return Err(Error::SweepTooFast { moved, spacing: h });
    }
    let before = body.classify(grid, t0);
    let after = body.classify(grid, t1);
    let sites = body.site_positions(t1).unwrap_or_default();
    let active: Vec<bool> = (0..body.sites.len()).map(|s| body.site_active(s, t1)).collect();
    Ok(after
        .inside
        .iter()
        .filter(|(idx, _)| !before.contains(*idx))
        .map(|&(idx, _)| (idx, body.owner(grid.point(idx), &sites, &active)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn screen_1d(grid: &Grid, x: f64, traj: Trajectory) -> BodyState {
        BodyState::slab(
            SlabSpec {
                name: "s".into(),
                face: [x, 0.0],
                normal: [-1.0, 0.0],
                thickness: 2.0,
                half_length: None,
                d: 0.1,
                v_s: 1.0,
                holes: vec![],
                trajectory: traj,
                interaction: Interaction::Absorb,
            },
            grid,
        )
        .unwrap()
    }

    #[test]
    fn static_screen_positions_constant() {
        let g = Grid::new_1d(-10.0, 10.0, 256).unwrap();
        let b = screen_1d(&g, 0.0, Trajectory::stationary(0.0));
        for t in [0.0, 1.0, 7.5] {
            let s = b.site_positions(t).unwrap();
            assert_eq!(s[0].0, [0.0, 0.0]);
            assert_eq!(s[0].2, [0.0, 0.0]);
        }
    }

    #[test]
    fn impulse_kinematics() {
        let g = Grid::new_1d(-10.0, 10.0, 256).unwrap();
        let b = screen_1d(&g, 0.0, Trajectory::stationary(0.0).with_impulse(4.0, [3.0, 0.0]));
        let s = b.site_positions(6.0).unwrap();
        assert!((s[0].0[0] - 6.0).abs() < 1e-12);
        assert_eq!(s[0].2[0], 3.0);
        assert!(b.site_positions(-1.0).is_err());
    }

    #[test]
    fn rotated_plate_keeps_normals_perpendicular() {
        let g = Grid::new_2d([-10.0, -10.0], [10.0, 10.0], [64, 64]).unwrap();
        let mut traj = Trajectory::stationary(0.0);
        traj.rotation = Some(Rotation { pivot: [0.0, 0.0], rate: std::f64::consts::FRAC_PI_2 });
        let b = BodyState::slab(
            SlabSpec {
                name: "p".into(),
                face: [0.0, 0.0],
                normal: [-1.0, 0.0],
                thickness: 1.0,
                half_length: Some(2.0),
                d: 0.5,
                v_s: 1.0,
                holes: vec![],
                trajectory: traj,
                interaction: Interaction::Absorb,
            },
            &g,
        )
        .unwrap();
        let s = b.site_positions(1.0).unwrap();
        let tan = [s[1].0[0] - s[0].0[0], s[1].0[1] - s[0].0[1]];
        for (_, n, _) in &s {
            assert!((n[0] * tan[0] + n[1] * tan[1]).abs() < 1e-12);
            assert!((n[1] + 1.0).abs() < 1e-12, "normal turned to -y, got {n:?}");
        }
    }

    #[test]
    fn stationary_body_sweeps_nothing() {
        let g = Grid::new_1d(-10.0, 10.0, 500).unwrap();
        let b = screen_1d(&g, 0.01, Trajectory::stationary(0.0));
        assert!(swept_cells(&b, &g, 0.0, 0.01).unwrap().is_empty());
    }

    #[test]
    fn moving_screen_sweeps_half_a_cell_per_step() {
        // spacing 0.04, v = -2, dt = 0.01: the face advances half a cell per step
        let g = Grid::new_1d(-10.0, 10.48, 512).unwrap();
        let b = screen_1d(&g, 0.013, Trajectory::moving(0.0, [-2.0, 0.0]));
        let counts: Vec<usize> = (0..200)
            .map(|k| swept_cells(&b, &g, k as f64 * 0.01, (k + 1) as f64 * 0.01).unwrap().len())
            .collect();
        assert!(counts.iter().all(|&c| c <= 1));
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn fast_motion_is_rejected() {
        let g = Grid::new_1d(-10.0, 10.0, 500).unwrap();
        let b = screen_1d(&g, 0.0, Trajectory::moving(0.0, [-10.0, 0.0]));
        assert!(matches!(swept_cells(&b, &g, 0.0, 0.01), Err(Error::SweepTooFast { .. })));
    }
}
