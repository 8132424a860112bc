use num_complex::Complex64;

use crate::body::Trajectory;
use crate::grid_field::{Point, WaveField};

/// Galilean frame the grid is attached to. The lab wavefunction is
/// psi_lab(x, t) = psi(x - X(t), t) exp(i (m u.x - m u^2 t / 2) / hbar + i c),
/// with X(t) the frame displacement and u its current velocity.
#[derive(Clone, Debug)]
pub struct Frame {
    trajectory: Option<Trajectory>,
    mass: f64,
    hbar: f64,
    phase: f64,
    segment: usize,
}

impl Frame {
    pub fn lab(mass: f64, hbar: f64) -> Self {
        Frame { trajectory: None, mass, hbar, phase: 0.0, segment: 0 }
    }

    pub fn following(trajectory: Trajectory, mass: f64, hbar: f64) -> Self {
        Frame { trajectory: Some(trajectory), mass, hbar, phase: 0.0, segment: 0 }
    }

    pub fn is_lab(&self) -> bool {
        self.trajectory.as_ref().map_or(true, |t| t.segments.iter().all(|s| s.velocity == [0.0, 0.0]))
    }

    pub fn trajectory(&self) -> Option<&Trajectory> {
        self.trajectory.as_ref()
    }

    pub fn velocity(&self, t: f64) -> Point {
        self.trajectory.as_ref().map_or([0.0, 0.0], |tr| tr.translation_velocity(t))
    }

    pub fn displacement(&self, t: f64) -> Point {
        self.trajectory.as_ref().map_or([0.0, 0.0], |tr| tr.offset(t))
    }

    pub fn lab_point(&self, p: Point, t: f64) -> Point {
        let x = self.displacement(t);
        [p[0] + x[0], p[1] + x[1]]
    }

    fn gauge(&self, x_lab: Point, t: f64) -> f64 {
        let u = self.velocity(t);
        let u2 = u[0] * u[0] + u[1] * u[1];
        (self.mass * (u[0] * x_lab[0] + u[1] * x_lab[1]) - 0.5 * self.mass * u2 * t) / self.hbar + self.phase
    }

    /// Lab phase of a value read at grid point `p` at time `t`.
    pub fn lab_phase(&self, phase: f64, p: Point, t: f64) -> f64 {
        phase + self.gauge(self.lab_point(p, t), t)
    }

    pub fn lab_value(&self, v: Complex64, p: Point, t: f64) -> Complex64 {
        v * Complex64::from_polar(1.0, self.gauge(self.lab_point(p, t), t))
    }

    /// Energy and momentum of captured amplitude `dn` as seen in the lab.
    pub fn to_lab(&self, energy: f64, momentum: [f64; 2], dn: f64, t: f64) -> (f64, [f64; 2]) {
        let u = self.velocity(t);
        let m = self.mass;
        let e = energy + u[0] * momentum[0] + u[1] * momentum[1] + 0.5 * m * (u[0] * u[0] + u[1] * u[1]) * dn;
        (e, [momentum[0] + m * u[0] * dn, momentum[1] + m * u[1] * dn])
    }

    /// Moves a lab-frame field into this frame at the field's time.
    pub fn enter(&mut self, field: &mut WaveField) {
        let t = field.time;
        self.segment = self.trajectory.as_ref().map_or(0, |tr| tr.segment_index(t));
        self.phase = 0.0;
        let g = field.grid.clone();
        for (idx, v) in field.values.iter_mut().enumerate() {
            let p = g.point(idx);
            *v *= Complex64::from_polar(1.0, -self.gauge(self.lab_point(p, t), t));
        }
    }

    /// Applies the boost for a frame velocity change at the field's time, if one is due.
    /// Returns true when a boost happened.
    pub fn update(&mut self, field: &mut WaveField) -> bool {
        let Some(tr) = &self.trajectory else {
            return false;
        };
        let t = field.time;
        let seg = tr.segment_index(t);
        if seg == self.segment {
            return false;
        }
        let u1 = tr.segments[self.segment].velocity;
        let u2 = tr.segments[seg].velocity;
        let x = tr.offset(t);
        let m = self.mass;
        let du = [u2[0] - u1[0], u2[1] - u1[1]];
        // keep psi_lab continuous: psi' picks up exp(-i m du.x' / hbar)
        self.phase += (m * (-du[0] * x[0] - du[1] * x[1])
            - 0.5 * m * ((u1[0] * u1[0] + u1[1] * u1[1]) - (u2[0] * u2[0] + u2[1] * u2[1])) * t)
            / self.hbar;
        let g = field.grid.clone();
        for (idx, v) in field.values.iter_mut().enumerate() {
            let p = g.point(idx);
            *v *= Complex64::from_polar(1.0, -m * (du[0] * p[0] + du[1] * p[1]) / self.hbar);
        }
        self.segment = seg;
        true
    }
}
