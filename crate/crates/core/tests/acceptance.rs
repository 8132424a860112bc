//! One line per acceptance criterion. Runs every bundled scenario twice (several minutes
//! in release mode on one core).

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use itertools::Itertools;
use num_complex::Complex64;
use surfslice::fock_kernel::{commutator_battery, number, phonon_raise, raising_overlap, OccupancyCoefficients};
use surfslice::harness::{bundled, run_to_dir, two_plates_with_gap, RunOutput, TIMING_FLOOR};
use surfslice::lattice_phonon::{mode_width, normal_modes, Boundary, LatticeModel, PhononOccupancy};
use surfslice::measurement::born_distribution;

struct Verdicts(Vec<(usize, bool, String)>);

impl Verdicts {
    fn record(&mut self, n: usize, ok: bool, detail: String) {
        println!("criterion {n:>2}: {} | {detail}", if ok { "PASS" } else { "FAIL" });
        self.0.push((n, ok, detail));
    }
}

struct Scenario {
    out: RunOutput,
    ledger_bytes: Vec<u8>,
    wall: f64,
}

fn run_all() -> BTreeMap<String, Scenario> {
    let mut map = BTreeMap::new();
    for c in bundled() {
        let dir = tempfile::tempdir().unwrap();
        let t = Instant::now();
        let out = run_to_dir(&c, dir.path()).unwrap_or_else(|e| panic!("{}: {e}", c.name));
        let wall = t.elapsed().as_secs_f64();
        let ledger_bytes = std::fs::read(dir.path().join("ledger.csv")).unwrap();
        map.insert(c.name.clone(), Scenario { out, ledger_bytes, wall });
    }
    map
}

fn extra(s: &Scenario, key: &str) -> f64 {
    s.out.report.extra(key).unwrap_or(f64::NAN)
}

#[test]
fn acceptance() {
    let mut v = Verdicts(Vec::new());
    let first = run_all();

    // 1. Born recovery on the static screen
    let flat = &first["flat_screen"];
    let inst = &first["flat_screen_instant"];
    let l1 = flat.out.report.born_l1.unwrap_or(f64::NAN);
    let l1_inst = inst.out.report.born_l1.unwrap_or(f64::NAN);
    v.record(
        1,
        l1 < 0.02 && l1_inst < 0.02 && flat.wall < 60.0 && flat.out.report.sites == 64,
        format!("L1 flux {l1:.3e}, L1 instant {l1_inst:.3e}, {} sites, {:.1} s", flat.out.report.sites, flat.wall),
    );

    // 2. norm ledger identity everywhere
    let worst_id = first.values().map(|s| s.out.report.max_norm_identity).fold(0.0, f64::max);
    let worst_step = first.values().map(|s| s.out.report.max_step_residual).fold(0.0, f64::max);
    v.record(
        2,
        worst_id <= 1e-6 && worst_step < 1e-10,
        format!("max identity {worst_id:.2e}, max step residual {worst_step:.2e} over {} scenarios", first.len()),
    );

    // 3. accelerating surface
    let acc = &first["accelerating"];
    let rel = extra(acc, "relative_error");
    let post = extra(acc, "post_t1_max_bin");
    let early = extra(acc, "second_early_max_bin");
    v.record(
        3,
        rel < 0.01 && post < TIMING_FLOOR && early < TIMING_FLOOR && extra(acc, "second_captured") > 0.0,
        format!(
            "captured {:.6} vs oracle {:.6} (rel {rel:.2e}); max bin after t1 {post:.1e}; second screen max bin before arrival {early:.1e}",
            extra(acc, "captured_first"),
            extra(acc, "oracle")
        ),
    );

    // 4. Galilean invariance of the joint distribution
    let rest = born_distribution(&first["galilean_rest"].out.ledger).joint;
    let boost = born_distribution(&first["galilean_boost"].out.ledger).joint;
    let keys: BTreeSet<_> = rest.keys().chain(boost.keys()).collect();
    let gal = keys
        .iter()
        .map(|k| (rest.get(k).copied().unwrap_or(0.0) - boost.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    v.record(4, gal < 1e-6 && !rest.is_empty(), format!("max |dP| {gal:.2e} over {} (site, bin) keys", keys.len()));

    // 5. free propagation and order of the step
    let t = Instant::now();
    let (sigma, exact) = common::free_sigma_at_5();
    let ratio = common::richardson_ratio();
    let secs = t.elapsed().as_secs_f64();
    let err = (sigma - exact).abs() / exact;
    v.record(
        5,
        err < 0.01 && (3.5..=4.5).contains(&ratio) && secs < 10.0,
        format!("sigma_x(5) {sigma:.5} vs {exact:.5} (rel {err:.1e}); Richardson ratio {ratio:.3}; {secs:.2} s"),
    );

    // 6. interference
    let holes = &first["holes"];
    let contrast = extra(holes, "contrast");
    let spacing = extra(holes, "spacing");
    let far = extra(holes, "spacing_far_field");
    let sp_err = (spacing - far).abs() / far;
    v.record(
        6,
        contrast > 0.5 && sp_err < 0.05 && holes.wall < 300.0,
        format!("contrast {contrast:.3}, spacing {spacing:.4} vs lambda D/a {far:.4} ({:.1}%), {:.1} s", 100.0 * sp_err, holes.wall),
    );

    // 7. normal modes of the free chain
    let chain = normal_modes(&LatticeModel::chain(8, 1.0, 1.0, 1.0, Boundary::Free), 1.0).unwrap();
    let mut omegas: Vec<f64> = chain.modes.iter().map(|m| m.omega).collect();
    omegas.sort_by(f64::total_cmp);
    let disp = omegas
        .iter()
        .enumerate()
        .map(|(i, w)| (w - 2.0 * ((i + 1) as f64 * std::f64::consts::PI / 16.0).sin()).abs())
        .fold(0.0, f64::max);
    let stiff = normal_modes(&LatticeModel::chain(8, 0.5, 2.0, 1.0, Boundary::Free), 1.0).unwrap();
    let width = chain
        .modes
        .iter()
        .zip(&stiff.modes)
        .map(|(a, b)| (mode_width(a, 1.0) - mode_width(b, 1.0)).abs())
        .fold(0.0, f64::max);
    v.record(
        7,
        disp < 1e-9 && chain.removed.len() == 1 && omegas.len() == 7 && width < 1e-10,
        format!("max dispersion error {disp:.1e}; {} zero mode removed; max width change {width:.1e}", chain.removed.len()),
    );

    // 8. Fock algebra
    let battery = commutator_battery(7, 100).unwrap();
    let mut number_exact = true;
    for total in 0..=5 {
        for key in (0..4).combinations_with_replacement(total) {
            let mut c = OccupancyCoefficients::new(4, 5);
            c.set(&key, Complex64::new(1.0, 0.0)).unwrap();
            for s in 0..4 {
                let n = key.iter().filter(|&&i| i == s).count() as f64;
                let out = number(s, &c).unwrap();
                number_exact &= out.get(&key) == Complex64::new(n, 0.0) && out.len() == usize::from(n > 0.0);
            }
        }
    }
    let worst = battery.max_mixed.max(battery.max_aa).max(battery.max_cc);
    v.record(
        8,
        worst < 1e-12 && number_exact,
        format!(
            "[a,a+]-delta {:.1e}, [a,a] {:.1e}, [a+,a+] {:.1e} over {} states; number operator exact on basis keys: {number_exact}",
            battery.max_mixed, battery.max_aa, battery.max_cc, battery.trials
        ),
    );

    // 9. raise factor against quadrature
    let pinned = normal_modes(&LatticeModel::single_oscillator(1.0, 1.0), 1.0).unwrap();
    let s = pinned.modes[0].index;
    let mut raise = 0.0_f64;
    for n in 0..5u32 {
        let mut occ = PhononOccupancy::new();
        if n > 0 {
            occ.insert(s, n);
        }
        let (_, factor) = phonon_raise(&pinned, s, &occ).unwrap();
        raise = raise.max((factor - raising_overlap(n, 1.0, 1.0, 1.0).unwrap()).abs());
    }
    v.record(9, raise < 1e-8, format!("max |factor - overlap| {raise:.1e} for n = 0..4"));

    // 10. temporal uncertainty on recorded probes
    let mut probes = Vec::new();
    for (name, s) in &first {
        for i in 0..s.out.probes.len() {
            probes.push((name.clone(), extra(s, &format!("probe{i}_product")), extra(s, &format!("probe{i}_bound"))));
        }
    }
    let probes_ok = !probes.is_empty() && probes.iter().all(|(_, p, b)| p >= b);
    let listing = probes.iter().map(|(n, p, b)| format!("{n}: {p:.4} >= {b:.4}")).join(", ");
    v.record(10, probes_ok, format!("{} probe(s): {listing}", probes.len()));

    // 11. determinism
    let second = run_all();
    let differing: Vec<&String> = first.keys().filter(|k| first[*k].ledger_bytes != second[*k].ledger_bytes).collect();
    let reports_same = first.keys().all(|k| first[k].out.report.without_clock() == second[k].out.report.without_clock());
    v.record(
        11,
        differing.is_empty() && reports_same,
        format!("{} scenarios run twice; differing ledgers {differing:?}; reports equal minus clock: {reports_same}", first.len()),
    );

    // arrival-time spread against plate separation
    for gap in [5.0, 10.0, 20.0] {
        let c = two_plates_with_gap(gap);
        let dir = tempfile::tempdir().unwrap();
        let out = run_to_dir(&c, dir.path()).unwrap();
        println!(
            "two plates S = {gap:>4}: arrival sigma {:.4}, mean {:.4}, granularity d/v_s {:.3}, first plate captured {:.4}",
            out.report.extra("arrival_sigma").unwrap_or(f64::NAN),
            out.report.extra("arrival_mean").unwrap_or(f64::NAN),
            out.report.extra("granularity").unwrap_or(f64::NAN),
            out.report.extra("captured_elsewhere").unwrap_or(f64::NAN),
        );
    }

    let failed: Vec<usize> = v.0.iter().filter(|c| !c.1).map(|c| c.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
