#![allow(dead_code)]

use num_complex::Complex64;
use surfslice::grid_field::{make_gaussian, observables, Grid, WaveField};
use surfslice::tdse::{evolve, Potential, StepperConfig};

/// sigma_x at t = 5 for a free Gaussian of sigma 1 (m = hbar = 1), numerical and analytic.
pub fn free_sigma_at_5() -> (f64, f64) {
    let g = Grid::new_1d(-40.0, 40.0, 512).unwrap();
    let f = make_gaussian(&g, &[0.0], 1.0, &[0.0]).unwrap();
    let out = evolve(&f, &Potential::Free, &StepperConfig::new(0.005), 5.0, &mut []).unwrap();
    let s = observables(&out, None).sigma_x[0];
    let exact = (1.0_f64 + (5.0 / 2.0_f64).powi(2)).sqrt();
    (s, exact)
}

fn l2_diff(a: &WaveField, b: &WaveField) -> f64 {
    let dv = a.grid.cell_volume();
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt() * dv.sqrt()
}

/// e(dt)/e(dt/2) for a displaced Gaussian in V = x^2/2, errors against a dt/64 run.
pub fn richardson_ratio() -> f64 {
    let g = Grid::new_1d(-8.0, 8.0, 128).unwrap();
    let f = make_gaussian(&g, &[1.0], 0.8, &[0.5]).unwrap();
    let pot = Potential::from_fn(&g, |p| 0.5 * p[0] * p[0]).unwrap();
    let run = |dt: f64| evolve(&f, &pot, &StepperConfig::new(dt), 2.0, &mut []).unwrap();
    let dt = 0.004;
    let reference = run(dt / 64.0);
    l2_diff(&run(dt), &reference) / l2_diff(&run(dt / 2.0), &reference)
}

pub fn plane(g: &Grid, k: f64) -> Vec<Complex64> {
    g.coords(0).into_iter().map(|x| Complex64::from_polar(1.0, k * x)).collect()
}
