use std::f64::consts::PI;

use num_complex::Complex64;
use surfslice::body::{BodyState, Interaction, SlabSpec, Trajectory};
use surfslice::grid_field::{AxisProfile, Grid, WaveField};
use surfslice::harness::{run, BodySpec, FrameSpec, GridSpec, InitialSpec, RunConfig, StepperSpec};
use surfslice::measurement::{born_distribution, Detector, Frame};

fn screen(trajectory: Trajectory) -> SlabSpec {
    SlabSpec {
        name: "screen".into(),
        face: [0.0, 0.0],
        normal: [-1.0, 0.0],
        thickness: 8.0,
        half_length: None,
        d: 0.5,
        v_s: 2.0,
        holes: vec![],
        trajectory,
        interaction: Interaction::Absorb,
    }
}

fn flux_on(values: impl Fn(f64) -> Complex64, trajectory: Trajectory) -> f64 {
    let grid = Grid::new_1d(-5.0 * PI, 5.0 * PI, 512).unwrap();
    let psi: Vec<Complex64> = grid.coords(0).into_iter().map(values).collect();
    let field = WaveField::new(grid.clone(), psi, 1.0, 1.0);
    let body = BodyState::slab(screen(trajectory), &grid).unwrap();
    let mut det = Detector::new(&grid, vec![body], &[4.0], 1.0, 1.0, Frame::lab(1.0, 1.0)).unwrap();
    let f = det.site_flux(&field, 0.0);
    assert_eq!(f.len(), 1);
    f[0].expect("site is active")
}

#[test]
fn plane_wave_flux_is_two_amplitude_squared() {
    let a = Complex64::new(0.3, -0.2);
    let j = flux_on(|x| a * Complex64::from_polar(1.0, 2.0 * x), Trajectory::stationary(0.0));
    assert!((j - 2.0 * a.norm_sqr()).abs() < 1e-10, "{j}");
}

#[test]
fn real_gaussian_carries_no_flux() {
    let j = flux_on(|x| Complex64::new((-(x + 1.0) * (x + 1.0) / 4.0).exp(), 0.0), Trajectory::stationary(0.0));
    assert!(j.abs() < 1e-14, "{j}");
}

#[test]
fn receding_screen_sees_outflow() {
    let j = flux_on(|x| Complex64::from_polar(1.0, 2.0 * x), Trajectory::moving(0.0, [3.0, 0.0]));
    assert!((j + 1.0).abs() < 1e-10, "{j}");
}

fn base(grid: GridSpec, axes: Vec<AxisProfile>, dt: f64, t_final: f64) -> RunConfig {
    let mut c = surfslice::harness::scenario_galilean_rest();
    c.name = "test".into();
    c.grid = grid;
    c.initial = InitialSpec { axes };
    c.stepper = StepperSpec { dt, t_final, t_start: 0.0 };
    c.frame = FrameSpec::Lab;
    c.bodies = vec![];
    c
}

#[test]
fn full_absorption_captures_everything() {
    // the ~1e-6 the front face reflects wraps round the periodic box and lands on the back face
    let mut c = base(
        GridSpec { lo: vec![-40.0], hi: vec![40.0], n: vec![2048] },
        vec![AxisProfile::Gaussian { center: -15.0, sigma: 2.0, k0: 5.0 }],
        4e-4,
        20.0,
    );
    c.bodies = vec![BodySpec::stationary("screen", vec![0.0], vec![-1.0], 20.0, 0.5, 2.0)];
    let out = run(&c).unwrap();
    let born = born_distribution(&out.ledger);
    assert!((out.report.total_captured - 1.0).abs() < 1e-6, "{}", out.report.total_captured);
    assert!((born.total - out.report.total_captured).abs() < 1e-10);
    assert!(out.report.max_norm_identity < 1e-6);
}

// y = 0 falls midway between grid rows, so a packet centred there splits evenly across it
fn half_cell_grid() -> GridSpec {
    GridSpec { lo: vec![-20.48, -20.4], hi: vec![20.48, 20.56], n: vec![256, 256] }
}

#[test]
fn half_screen_captures_half() {
    // fast and wide, so that diffraction into the screen's end stays well under a percent
    let mut c = base(
        GridSpec { lo: vec![-12.8, -63.92], hi: vec![12.8, 64.08], n: vec![160, 800] },
        vec![
            AxisProfile::Gaussian { center: -5.0, sigma: 1.0, k0: 14.0 },
            AxisProfile::Gaussian { center: 0.0, sigma: 9.0, k0: 0.0 },
        ],
        2e-3,
        0.9,
    );
    let mut s = BodySpec::stationary("half", vec![0.0, 30.0], vec![-1.0, 0.0], 2.4, 0.4, 4.0);
    s.half_length = Some(30.0);
    c.bodies = vec![s];
    let out = run(&c).unwrap();
    let p = out.report.total_captured;
    assert!((p - 0.5).abs() < 0.005, "{p}");
}

#[test]
fn symmetric_packet_gives_symmetric_sites() {
    let mut c = base(
        half_cell_grid(),
        vec![
            AxisProfile::Gaussian { center: -8.0, sigma: 1.5, k0: 6.0 },
            AxisProfile::Gaussian { center: 0.0, sigma: 2.0, k0: 0.0 },
        ],
        4e-3,
        3.2,
    );
    let mut s = BodySpec::stationary("three", vec![0.0, 0.0], vec![-1.0, 0.0], 8.0, 0.96, 4.0);
    s.half_length = Some(1.44);
    c.bodies = vec![s];
    let out = run(&c).unwrap();
    let born = born_distribution(&out.ledger);
    let p: Vec<f64> = born.per_site.values().copied().collect();
    assert_eq!(p.len(), 3, "{p:?}");
    assert!((p[0] - p[2]).abs() < 1e-6, "{p:?}");
}
