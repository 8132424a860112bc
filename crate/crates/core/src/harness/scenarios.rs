//! Bundled scenarios. Each is also shipped as a TOML file under `configs/`.

use super::config::*;
use crate::body::{Hole, Interaction, Trajectory};
use crate::grid_field::AxisProfile;

fn gaussian(center: f64, sigma: f64, k0: f64) -> AxisProfile {
    AxisProfile::Gaussian { center, sigma, k0 }
}

fn line(lo: f64, hi: f64, n: usize) -> GridSpec {
    GridSpec { lo: vec![lo], hi: vec![hi], n: vec![n] }
}

fn base(name: &str, grid: GridSpec, axes: Vec<AxisProfile>, dt: f64, t_final: f64) -> RunConfig {
    RunConfig {
        name: name.into(),
        seed: 0,
        units: Units::default(),
        grid,
        initial: InitialSpec { axes },
        potential: PotentialSpec::Free,
        stepper: StepperSpec { dt, t_final, t_start: 0.0 },
        frame: FrameSpec::Lab,
        ledger: LedgerSpec::default(),
        audit: AuditSpec::default(),
        outputs: OutputSpec::default(),
        transverse: None,
        reference: None,
        bodies: vec![],
    }
}

fn transverse(n: usize) -> TransverseSpec {
    TransverseSpec { lo: -32.0, hi: 32.0, n, profile: gaussian(0.0, 1.5, 0.0), sites: 64 }
}

/// Gaussian packet on a static flat screen, 64 sites across the packet (separable mode).
pub fn scenario_flat_screen() -> RunConfig {
    let mut c = base("flat_screen", line(-40.0, 40.0, 2048), vec![gaussian(-15.0, 2.0, 3.0)], 4e-4, 12.0);
    c.transverse = Some(transverse(2048));
    c.reference = Some(Reference::FreeFlux);
    c.bodies = vec![BodySpec::stationary("screen", vec![0.0], vec![-1.0], 20.0, 0.5, 2.0)];
    c
}

/// Thin fast sheet meeting the screen: the capture is the transverse density at contact.
pub fn scenario_flat_screen_instant() -> RunConfig {
    let mut c = base(
        "flat_screen_instant",
        line(-40.0, 40.0, 2048),
        vec![AxisProfile::Sheet { lo: -7.0, hi: -4.0, k0: 20.0 }],
        2e-4,
        1.5,
    );
    c.transverse = Some(transverse(2048));
    c.reference = Some(Reference::InstantSheet { t1: 0.275 });
    c.bodies = vec![BodySpec::stationary("screen", vec![0.0], vec![-1.0], 20.0, 0.5, 2.0)];
    c
}

/// Long single-site run with a probe ahead of the screen; compared per time bin.
pub fn scenario_elongated_packet() -> RunConfig {
    let mut c = base("elongated", line(-60.0, 60.0, 2048), vec![gaussian(-35.0, 3.0, 4.0)], 1e-3, 24.0);
    c.reference = Some(Reference::FreeFlux);
    // far enough from the screen that its weak echo returns after the passage has died out
    c.outputs.probes = vec![ProbeSpec { position: vec![-11.0], every: 4 }];
    c.bodies = vec![BodySpec::stationary("screen", vec![25.0], vec![-1.0], 20.0, 0.5, 2.0)];
    c
}

/// Sheet running into a plate that is kicked away at t = 4; a second screen downstream.
pub fn scenario_accelerating_surface() -> RunConfig {
    let mut c = base(
        "accelerating",
        line(-11.0, 9.0, 12288),
        vec![AxisProfile::Sheet { lo: -10.0, hi: 0.0, k0: 1000.0 }],
        5e-4,
        11.0,
    );
    c.units = Units { hbar: 1.0, mass: 1000.0 };
    let mut plate = BodySpec::stationary("plate", vec![0.0], vec![-1.0], 0.5, 0.1, 1.0);
    plate.trajectory = Trajectory::stationary(0.0).with_impulse(4.0, [5.0, 0.0]);
    plate.trajectory.t_end = 4.85;
    let screen = BodySpec::stationary("screen", vec![5.0], vec![-1.0], 2.0, 0.1, 1.0);
    c.bodies = vec![plate, screen];
    c.reference = Some(Reference::SweptOverlap { t: 4.0, plane: 0.0, late_body: Some(1), x1: 5.0, v_g: 1.0 });
    c
}

/// Half-transmitting plate followed by an absorbing screen `gap` further on.
pub fn two_plates_with_gap(gap: f64) -> RunConfig {
    let name = format!("two_plates_{gap}");
    let mut c = base(&name, line(-40.0, 40.0, 2048), vec![gaussian(-25.0, 2.0, 5.0)], 4e-4, 12.0);
    let mut plate = BodySpec::stationary("plate", vec![0.0], vec![-1.0], 3.0, 0.5, 2.0);
    plate.interaction = Interaction::Transmit { eta: 0.5 };
    let screen = BodySpec::stationary("screen", vec![gap], vec![-1.0], 8.0, 0.5, 2.0);
    c.bodies = vec![plate, screen];
    c.reference = Some(Reference::ArrivalSpread { body: 1 });
    c
}

/// Plates 10 apart.
pub fn scenario_two_plates() -> RunConfig {
    two_plates_with_gap(10.0)
}

/// Two holes in a spanning plate, collector screen behind it (512 x 512).
pub fn scenario_holes_interference() -> RunConfig {
    let l = 30.72;
    let grid = GridSpec { lo: vec![-l, -l], hi: vec![l, l], n: vec![512, 512] };
    let axes = vec![gaussian(-20.0, 1.5, 10.0), AxisProfile::Sheet { lo: -15.0, hi: 15.0, k0: 0.0 }];
    let mut c = base("holes", grid, axes, 4e-3, 5.0);
    let hole = |lo: f64, hi: f64| Hole { lo, hi, open_at: f64::NEG_INFINITY, close_at: f64::INFINITY };
    let mut plate = BodySpec::stationary("plate", vec![-12.0, 0.0], vec![-1.0, 0.0], 4.0, 0.24, 5.0);
    plate.holes = vec![hole(-2.4, -1.6), hole(1.6, 2.4)];
    let collector = BodySpec::stationary("collector", vec![12.0, 0.0], vec![-1.0, 0.0], 16.0, 0.24, 5.0);
    c.bodies = vec![plate, collector];
    c.reference = Some(Reference::Fringes { collector: 1, separation: 4.0, distance: 20.0, k: 10.0 });
    c
}

fn galilean(name: &str, k0: f64, screen_velocity: f64) -> RunConfig {
    let mut c = base(name, line(-40.0, 40.0, 1024), vec![gaussian(-15.0, 2.0, k0)], 1e-3, 12.0);
    let mut screen = BodySpec::stationary("screen", vec![0.0], vec![-1.0], 20.0, 0.5, 2.0);
    screen.design_k = Some(2.0);
    screen.trajectory = Trajectory::moving(0.0, [screen_velocity, 0.0]);
    c.bodies = vec![screen];
    c.frame = FrameSpec::Body { index: 0 };
    c
}

/// Packet at k0 = 2 on a screen at rest.
pub fn scenario_galilean_rest() -> RunConfig {
    galilean("galilean_rest", 2.0, 0.0)
}

/// The same collision seen from a frame where everything moves at +1.
pub fn scenario_galilean_boost() -> RunConfig {
    galilean("galilean_boost", 3.0, 1.0)
}

/// Every bundled scenario, in a fixed order.
pub fn bundled() -> Vec<RunConfig> {
    vec![
        scenario_flat_screen(),
        scenario_flat_screen_instant(),
        scenario_elongated_packet(),
        scenario_accelerating_surface(),
        scenario_two_plates(),
        scenario_holes_interference(),
        scenario_galilean_rest(),
        scenario_galilean_boost(),
    ]
}

pub fn by_name(name: &str) -> Option<RunConfig> {
    bundled().into_iter().find(|c| c.name == name)
}
