use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use surfslice::body::{swept_cells, BodyState, Interaction, SlabSpec, Trajectory};
use surfslice::fock_kernel::{annihilate, create, number, random_state};
use surfslice::grid_field::{make_gaussian, make_rect_sheet, observables, Grid};
use surfslice::harness::{bundled, RunConfig};
use surfslice::measurement::SliceLedger;
use surfslice::tdse::{step, Potential, StepperConfig};

fn grid() -> Grid {
    Grid::new_1d(-20.0, 20.0, 256).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stepping_preserves_norm(
        center in -3.0..3.0f64,
        sigma in 0.8..2.5f64,
        k0 in -4.0..4.0f64,
        depth in 0.0..3.0f64,
        dt in 1e-3..7e-3f64,
    ) {
        let g = grid();
        let f = make_gaussian(&g, &[center], sigma, &[k0]).unwrap();
        let pot = Potential::from_fn(&g, |p| -depth * (-p[0] * p[0] / 8.0).exp()).unwrap();
        let mut out = f.clone();
        for _ in 0..20 {
            out = step(&out, &pot, &StepperConfig::new(dt)).unwrap();
        }
        prop_assert!((out.norm() - f.norm()).abs() < 1e-12);
    }

    #[test]
    fn uncertainty_holds(
        center in -3.0..3.0f64,
        sigma in 0.8..2.5f64,
        k0 in -4.0..4.0f64,
        half in 1.0..6.0f64,
        sheet in any::<bool>(),
    ) {
        let g = grid();
        let f = if sheet {
            make_rect_sheet(&g, &[center - half], &[center + half], &[k0]).unwrap()
        } else {
            make_gaussian(&g, &[center], sigma, &[k0]).unwrap()
        };
        let o = observables(&f, None);
        prop_assert!(o.sigma_x[0] * o.sigma_p[0] >= 0.5 - 1e-9);
    }

    #[test]
    fn config_round_trips(
        which in 0usize..8,
        dt_scale in 0.5..2.0f64,
        shift in -1.0..1.0f64,
        seed in any::<u32>(),
        bin in proptest::option::of(0.01..1.0f64),
    ) {
        let mut c: RunConfig = bundled()[which].clone();
        c.stepper.dt *= dt_scale;
        c.seed = seed as u64;
        c.ledger.bin_width = bin;
        c.bodies[0].face[0] += shift;
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn sweeps_compose(v in 0.5..3.0f64, t0 in 0.0..1.0f64, tau in 0.001..0.01f64) {
        let g = Grid::new_2d([-8.0, -8.0], [8.0, 8.0], [64, 64]).unwrap();
        let body = BodyState::slab(
            SlabSpec {
                name: "s".into(),
                face: [-2.0, 0.0],
                normal: [-1.0, 0.0],
                thickness: 3.0,
                half_length: Some(3.0),
                d: 1.0,
                v_s: 1.0,
                holes: vec![],
                trajectory: Trajectory::moving(0.0, [v, 0.0]),
                interaction: Interaction::Absorb,
            },
            &g,
        )
        .unwrap();
        let (t1, t2) = (t0 + tau, t0 + 2.0 * tau);
        let set = |a: f64, b: f64| -> BTreeSet<usize> {
            swept_cells(&body, &g, a, b).unwrap().into_iter().map(|c| c.0).collect()
        };
        let whole = set(t0, t2);
        let first = set(t0, t1);
        let second = set(t1, t2);
        prop_assert!(first.is_disjoint(&second));
        let union: BTreeSet<usize> = first.union(&second).copied().collect();
        prop_assert_eq!(union, whole);
    }

    #[test]
    fn fock_identities(seed in any::<u64>(), s in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_state(&mut rng, 4, 4, 8, 10);
        let (raised, dropped) = create(s, &c).unwrap();
        prop_assert_eq!(dropped, 0.0);
        // create is one-to-one on keys
        prop_assert_eq!(raised.len(), c.len());
        // a_s a+_s = n_s + 1
        let lhs = annihilate(s, &raised).unwrap();
        let n = number(s, &c).unwrap();
        for (k, v) in c.terms() {
            prop_assert!((lhs.get(k) - (n.get(k) + v)).norm() < 1e-12);
        }
        for (k, v) in c.terms() {
            let count = k.iter().filter(|&&i| i == s).count() as f64;
            prop_assert_eq!(n.get(k), v * count);
        }
    }

    #[test]
    fn rebinning_matches_coarse_ledger(
        credits in proptest::collection::vec((0usize..5, 0u32..4000, 1e-6..1e-2f64, -3.0..3.0f64), 1..60),
    ) {
        let w = 0.25;
        let mut fine = SliceLedger::new(w / 2.0);
        let mut coarse = SliceLedger::new(w);
        for &(site, slot, dp, phase) in &credits {
            // slot centres keep every time clear of a bin edge
            let t = (slot as f64 + 0.5) * w / 16.0;
            fine.credit(site, t, dp, phase, dp, [dp, 0.0]);
            coarse.credit(site, t, dp, phase, dp, [dp, 0.0]);
        }
        let merged = fine.coarsen(2);
        let a = merged.raw_probabilities();
        let b = coarse.raw_probabilities();
        prop_assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
        for (k, p) in &a {
            prop_assert!((p - b[k]).abs() < 1e-15);
        }
        let ra = merged.records();
        let rb = coarse.records();
        prop_assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert!((x.weight - y.weight).norm() < 1e-12);
            prop_assert_eq!((x.site, x.t_bin), (y.site, y.t_bin));
        }
    }
}

#[test]
fn weights_carry_capture_phase() {
    let mut l = SliceLedger::new(0.5);
    l.credit(2, 0.1, 0.25, 1.0, 0.0, [0.0; 2]);
    let r = &l.records()[0];
    assert!((r.weight - Complex64::from_polar(0.5, 1.0)).norm() < 1e-12);
}
