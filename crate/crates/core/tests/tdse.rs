mod common;

use surfslice::grid_field::{make_gaussian, observables, Grid, WaveField};
use surfslice::tdse::{evolve, step, Observer, Potential, ProbeRecorder, StepperConfig};

#[test]
fn free_gaussian_spreads_by_the_analytic_law() {
    let (s, exact) = common::free_sigma_at_5();
    assert!((s - exact).abs() / exact < 0.01, "{s} vs {exact}");
}

#[test]
fn strang_step_is_second_order() {
    let r = common::richardson_ratio();
    assert!((3.5..=4.5).contains(&r), "{r}");
}

#[test]
fn packet_moves_at_group_velocity() {
    let g = Grid::new_1d(-40.0, 40.0, 1024).unwrap();
    let f = make_gaussian(&g, &[-10.0], 2.0, &[5.0]).unwrap();
    let out = evolve(&f, &Potential::Free, &StepperConfig::new(1e-3), 2.0, &mut []).unwrap();
    let shift = observables(&out, None).mean_x[0] - observables(&f, None).mean_x[0];
    assert!((shift - 10.0).abs() < 0.1, "{shift}");
}

#[test]
fn constant_potential_is_a_phase() {
    let g = Grid::new_1d(-20.0, 20.0, 256).unwrap();
    let f = make_gaussian(&g, &[0.0], 1.5, &[1.0]).unwrap();
    let pot = Potential::from_fn(&g, |_| 0.7).unwrap();
    let a = evolve(&f, &Potential::Free, &StepperConfig::new(0.005), 1.0, &mut []).unwrap();
    let b = evolve(&f, &pot, &StepperConfig::new(0.005), 1.0, &mut []).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-12);
    }
}

#[test]
fn observers_do_not_change_the_result() {
    let g = Grid::new_1d(-20.0, 20.0, 256).unwrap();
    let f = make_gaussian(&g, &[-3.0], 1.5, &[2.0]).unwrap();
    let cfg = StepperConfig::new(0.005);
    let plain = evolve(&f, &Potential::Free, &cfg, 2.0, &mut []).unwrap();
    let mut p1 = ProbeRecorder::new(&g, &[0.0], 0.0, 0.005, 1);
    let mut p2 = ProbeRecorder::new(&g, &[1.0], 0.0, 0.005, 3);
    let mut p3 = ProbeRecorder::new(&g, &[-5.0], 0.0, 0.005, 7);
    let observed = {
        let mut obs: [&mut dyn Observer; 3] = [&mut p1, &mut p2, &mut p3];
        evolve(&f, &Potential::Free, &cfg, 2.0, &mut obs).unwrap()
    };
    assert_eq!(plain.values, observed.values);
    assert_eq!(p1.signal.samples.len(), 401);
    let same = evolve(&f, &Potential::Free, &cfg, 0.0, &mut []).unwrap();
    assert_eq!(same.values, f.values);
}

#[test]
fn coherent_state_follows_the_classical_orbit() {
    let g = Grid::new_1d(-10.0, 10.0, 256).unwrap();
    // ground-state width of V = x^2/2 is sigma = 1/sqrt(2)
    let f = make_gaussian(&g, &[2.0], 0.5_f64.sqrt(), &[0.0]).unwrap();
    let pot = Potential::from_fn(&g, |p| 0.5 * p[0] * p[0]).unwrap();
    let cfg = StepperConfig::new(1e-3);
    let mut field = f;
    for i in 1..=(2.0 * std::f64::consts::PI / 1e-3).round() as usize {
        field = step(&field, &pot, &cfg).unwrap();
        if i % 50 == 0 {
            let x = observables(&field, None).mean_x[0];
            assert!((x - 2.0 * field.time.cos()).abs() < 0.02, "t {} x {x}", field.time);
        }
    }
}

fn moments(f: &WaveField, force: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let o = observables(f, None);
    let dv = f.grid.cell_volume();
    let grad_v: f64 = f.grid.coords(0).iter().zip(&f.values).map(|(x, v)| -force(*x) * v.norm_sqr() * dv).sum();
    (o.mean_x[0], o.mean_p[0], grad_v)
}

#[test]
fn ehrenfest_relations_hold() {
    let g = Grid::new_1d(-20.0, 20.0, 512).unwrap();
    let cases: [(Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>); 2] = [
        (Box::new(|x: f64| 0.5 * x * x), Box::new(|x: f64| -x)),
        (Box::new(|x: f64| 0.3 * x), Box::new(|_| -0.3)),
    ];
    for (v, force) in cases.iter() {
        let pot = Potential::from_fn(&g, |p| v(p[0])).unwrap();
        let dt = 1e-3;
        let cfg = StepperConfig::new(dt);
        let mut f = make_gaussian(&g, &[1.0], 1.0, &[0.8]).unwrap();
        for _ in 0..300 {
            f = step(&f, &pot, &cfg).unwrap();
        }
        let a = moments(&f, force);
        let mid = step(&f, &pot, &cfg).unwrap();
        let b = step(&mid, &pot, &cfg).unwrap();
        let b = moments(&b, force);
        let m = moments(&mid, force);
        let dx = (b.0 - a.0) / (2.0 * dt);
        let dp = (b.1 - a.1) / (2.0 * dt);
        assert!((dx - m.1).abs() <= 0.01 * m.1.abs().max(1e-3), "{dx} vs {}", m.1);
        assert!((dp + m.2).abs() <= 0.01 * m.2.abs().max(1e-3), "{dp} vs {}", -m.2);
    }
}

#[test]
fn long_runs_conserve_norm_and_energy() {
    let g = Grid::new_1d(-20.0, 20.0, 256).unwrap();
    let f = make_gaussian(&g, &[1.0], 1.0, &[1.0]).unwrap();
    let free = evolve(&f, &Potential::Free, &StepperConfig::new(1e-3), 10.0, &mut []).unwrap();
    assert!((free.norm() - f.norm()).abs() < 1e-9);
    let values: Vec<f64> = g.coords(0).iter().map(|x| 0.1 * x * x).collect();
    let pot = Potential::static_grid(&g, values.clone()).unwrap();
    let out = evolve(&f, &pot, &StepperConfig::new(1e-3), 10.0, &mut []).unwrap();
    let e0 = observables(&f, Some(&values)).energy;
    let e1 = observables(&out, Some(&values)).energy;
    assert!((e1 - e0).abs() / e0 < 1e-6, "{e0} {e1}");
}

