use std::collections::BTreeMap;

use num_complex::Complex64;

use super::config::{Reference, RunConfig};
use super::run::RunOutput;
use super::separable::Transverse;
use crate::error::Result;
use crate::grid_field::probe_uncertainty;
use crate::measurement::born_distribution;
use crate::spectral::{wavenumbers, SpectralPlan};
use crate::tdse::Propagator;

/// Threshold above which a record counts as a capture in the timing checks.
pub const TIMING_FLOOR: f64 = 1e-6;

/// Fills the report's reference comparisons and probe diagnostics.
pub fn evaluate(config: &RunConfig, out: &mut RunOutput) -> Result<()> {
    probe_diagnostics(out);
    match &config.reference {
        None => {}
        Some(Reference::FreeFlux) => free_flux(config, out)?,
        Some(Reference::InstantSheet { t1 }) => instant_sheet(config, out, *t1)?,
        Some(Reference::SweptOverlap { t, plane, late_body, x1, v_g }) => {
            swept_overlap(config, out, *t, *plane, *late_body, *x1, *v_g)?
        }
        Some(Reference::Fringes { collector, separation, distance, k }) => {
            fringes(out, *collector, *separation, *distance, *k)
        }
        Some(Reference::ArrivalSpread { body }) => arrival_spread(out, *body),
    }
    Ok(())
}

fn probe_diagnostics(out: &mut RunOutput) {
    for (i, p) in out.probes.iter().enumerate() {
        let w = p.passage_window(1e-7);
        match probe_uncertainty(&w) {
            Ok(u) => {
                out.report.extras.insert(format!("probe{i}_sigma_t"), u.sigma_t);
                out.report.extras.insert(format!("probe{i}_sigma_omega"), u.sigma_omega);
                out.report.extras.insert(format!("probe{i}_product"), u.product);
                out.report.extras.insert(format!("probe{i}_bound"), u.bound);
                out.report.extras.insert(format!("probe{i}_ok"), if u.satisfied { 1.0 } else { 0.0 });
            }
            Err(_) => {
                out.report.extras.insert(format!("probe{i}_ok"), 0.0);
            }
        }
    }
}

fn l1(p: &BTreeMap<i64, f64>, q: &BTreeMap<i64, f64>) -> f64 {
    let keys: std::collections::BTreeSet<i64> = p.keys().chain(q.keys()).copied().collect();
    keys.iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum()
}

fn per_site(out: &RunOutput) -> BTreeMap<i64, f64> {
    let born = born_distribution(&out.ledger);
    born.per_site.iter().map(|(&s, &p)| (s as i64, p)).collect()
}

/// Free probability current through body 0's front plane (into the body) in a body-free
/// run, integrated over each step by the trapezoid rule and paired with the step midpoints.
fn free_inflow(config: &RunConfig) -> Result<Vec<(f64, f64)>> {
    let setup = config.setup()?;
    let u = config.units;
    let st = &config.stepper;
    let frame = config.frame(&setup.bodies);
    let pot = config.potential(&setup.grid, &frame)?;
    let prop = Propagator::new(&setup.grid, pot, st.dt, u.mass, u.hbar)?;
    let grid = &setup.grid;
    let body = &config.bodies[0];
    let plan = SpectralPlan::new(grid);
    let k = wavenumbers(grid.n(0), grid.spacing(0));
    let h = grid.spacing(0);
    let s = (body.face[0] - grid.lo(0)) / h;
    let i0 = s.floor() as usize;
    let frac = s - i0 as f64;
    let i1 = (i0 + 1) % grid.n(0);
    let inward = -body.normal[0].signum();
    let current = |v: &[Complex64]| {
        let mut g = v.to_vec();
        plan.forward(&mut g);
        for (x, kk) in g.iter_mut().zip(&k) {
            *x *= Complex64::new(0.0, *kk);
        }
        plan.inverse(&mut g);
        let j = |i: usize| u.hbar / u.mass * (v[i].conj() * g[i]).im;
        inward * ((1.0 - frac) * j(i0) + frac * j(i1))
    };
    let mut field = setup.field;
    let mut prev = current(&field.values);
    let mut out = Vec::with_capacity(setup.steps);
    for n in 0..setup.steps {
        let t0 = st.t_start + n as f64 * st.dt;
        prop.step_values(&mut field.values, t0);
        let now = current(&field.values);
        out.push((t0 + 0.5 * st.dt, 0.5 * (prev + now) * st.dt));
        prev = now;
    }
    Ok(out)
}

fn free_flux(config: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let inflow = free_inflow(config)?;
    let bw = out.ledger.bin_width();
    let (p, q) = match &config.transverse {
        Some(spec) => {
            let u = config.units;
            let tr = Transverse::new(spec, out.bodies[0].d, config.stepper.t_start, u.mass, u.hbar)?;
            let mut q = BTreeMap::new();
            for (t, dq) in &inflow {
                if *dq == 0.0 {
                    continue;
                }
                for (s, w) in tr.panels(*t).prob.iter().enumerate() {
                    *q.entry(s as i64).or_insert(0.0) += dq * w;
                }
            }
            (per_site(out), q)
        }
        None => {
            let mut q = BTreeMap::new();
            for (t, dq) in &inflow {
                *q.entry(out.ledger.bin_of(*t)).or_insert(0.0) += dq;
            }
            let mut p = BTreeMap::new();
            for ((site, bin), v) in out.ledger.raw_probabilities() {
                if out.site_body.get(site) == Some(&0) {
                    *p.entry(bin).or_insert(0.0) += v;
                }
            }
            (p, q)
        }
    };
    let dist = l1(&p, &q);
    out.report.born_l1 = Some(dist);
    out.report.extras.insert("reference_total".into(), q.values().sum());
    out.report.extras.insert("ledger_total".into(), p.values().sum());
    out.report.extras.insert("bin_width".into(), bw);
    Ok(())
}

fn instant_sheet(config: &RunConfig, out: &mut RunOutput, t1: f64) -> Result<()> {
    let spec = config.transverse.as_ref().expect("validated");
    let u = config.units;
    let d = out.bodies[0].d;
    let tr = Transverse::new(spec, d, config.stepper.t_start, u.mass, u.hbar)?;
    let q: BTreeMap<i64, f64> =
        tr.site_values(t1).iter().enumerate().map(|(s, v)| (s as i64, v.norm_sqr() * d)).collect();
    let p = per_site(out);
    out.report.born_l1 = Some(l1(&p, &q));
    out.report.extras.insert("reference_total".into(), q.values().sum());
    out.report.extras.insert("ledger_total".into(), p.values().sum());
    Ok(())
}

/// Exact free evolution of the initial state to `t` in k-space; returns the norm at x >= plane.
fn free_norm_beyond(config: &RunConfig, t: f64, plane: f64) -> Result<f64> {
    let setup = config.setup()?;
    let grid = &setup.grid;
    let u = config.units;
    let plan = SpectralPlan::new(grid);
    let mut v = setup.field.values;
    plan.forward(&mut v);
    let ks: Vec<Vec<f64>> = (0..grid.dim()).map(|a| wavenumbers(grid.n(a), grid.spacing(a))).collect();
    let tau = t - config.stepper.t_start;
    for (idx, x) in v.iter_mut().enumerate() {
        let k2: f64 = (0..grid.dim()).map(|a| ks[a][grid.axis_index(idx, a)].powi(2)).sum();
        *x *= Complex64::from_polar(1.0, -u.hbar * k2 * tau / (2.0 * u.mass));
    }
    plan.inverse(&mut v);
    Ok((0..grid.len()).filter(|&i| grid.point(i)[0] >= plane).map(|i| v[i].norm_sqr()).sum::<f64>() * grid.cell_volume())
}

#[allow(clippy::too_many_arguments)]
fn swept_overlap(
    config: &RunConfig,
    out: &mut RunOutput,
    t1: f64,
    plane: f64,
    late_body: Option<usize>,
    x1: f64,
    v_g: f64,
) -> Result<()> {
    let oracle = free_norm_beyond(config, t1, plane)?;
    let raw = out.ledger.raw_probabilities();
    let bw = out.ledger.bin_width();
    let body_of = |s: usize| out.site_body.get(s).copied();
    let captured: f64 = raw.iter().filter(|((s, _), _)| body_of(*s) == Some(0)).map(|(_, v)| v).sum();
    let t1_bin = out.ledger.bin_of(t1);
    let mut post_max = 0.0_f64;
    let mut post_sum = 0.0;
    for ((s, bin), v) in &raw {
        if body_of(*s) == Some(0) && *bin > t1_bin {
            post_max = post_max.max(*v);
            post_sum += v;
        }
    }
    let e = &mut out.report.extras;
    e.insert("oracle".into(), oracle);
    e.insert("captured_first".into(), captured);
    e.insert("relative_error".into(), (captured - oracle).abs() / oracle);
    e.insert("post_t1_max_bin".into(), post_max);
    e.insert("post_t1_sum".into(), post_sum);
    if let Some(b) = late_body {
        let t_arrive = x1 / v_g;
        let mut early_max = 0.0_f64;
        let mut early_sum = 0.0;
        let mut late_total = 0.0;
        for ((s, bin), v) in &raw {
            if body_of(*s) != Some(b) {
                continue;
            }
            late_total += v;
            if (*bin as f64 + 1.0) * bw <= t_arrive - bw {
                early_max = early_max.max(*v);
                early_sum += v;
            }
        }
        e.insert("second_captured".into(), late_total);
        e.insert("second_early_max_bin".into(), early_max);
        e.insert("second_early_sum".into(), early_sum);
        e.insert("second_arrival".into(), t_arrive);
    }
    e.insert("timing_floor".into(), TIMING_FLOOR);
    Ok(())
}

/// Fringe contrast and spacing on a collector's site row within two predicted spacings of
/// the axis.
pub fn fringe_metrics(v: &[f64], p: &[f64], window: f64) -> (f64, f64, usize) {
    let idx: Vec<usize> = (0..v.len()).filter(|&i| v[i].abs() <= window).collect();
    if idx.len() < 3 {
        return (0.0, 0.0, 0);
    }
    let max = idx.iter().map(|&i| p[i]).fold(f64::NEG_INFINITY, f64::max);
    let min = idx.iter().map(|&i| p[i]).fold(f64::INFINITY, f64::min);
    let contrast = if max + min > 0.0 { (max - min) / (max + min) } else { 0.0 };
    let mut peaks = Vec::new();
    for w in idx.windows(3) {
        let (a, b, c) = (p[w[0]], p[w[1]], p[w[2]]);
        if b > a && b >= c {
            // parabolic vertex through three equally spaced samples
            let h = v[w[2]] - v[w[1]];
            let den = a - 2.0 * b + c;
            let shift = if den != 0.0 { 0.5 * h * (a - c) / den } else { 0.0 };
            peaks.push(v[w[1]] + shift);
        }
    }
    let spacing = if peaks.len() >= 2 { (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64 } else { 0.0 };
    (contrast, spacing, peaks.len())
}

fn fringes(out: &mut RunOutput, collector: usize, a: f64, dist: f64, k: f64) {
    let lambda = 2.0 * std::f64::consts::PI / k;
    let predicted = lambda * dist / a * (1.0 + a * a / (4.0 * dist * dist)).sqrt();
    let born = born_distribution(&out.ledger);
    let body = &out.bodies[collector];
    let range = out.sites_of(collector);
    let v: Vec<f64> = body.sites.iter().map(|s| s.v).collect();
    let p: Vec<f64> = range.clone().map(|s| born.per_site.get(&s).copied().unwrap_or(0.0)).collect();
    let (contrast, spacing, peaks) = fringe_metrics(&v, &p, 2.0 * predicted);
    let e = &mut out.report.extras;
    e.insert("contrast".into(), contrast);
    e.insert("spacing".into(), spacing);
    e.insert("spacing_predicted".into(), predicted);
    e.insert("spacing_far_field".into(), lambda * dist / a);
    e.insert("spacing_error".into(), (spacing - predicted).abs() / predicted);
    e.insert("peaks".into(), peaks as f64);
    e.insert("collector_captured".into(), p.iter().sum());
}

fn arrival_spread(out: &mut RunOutput, b: usize) {
    let mut w = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for r in out.ledger.records() {
        if out.site_body.get(r.site) != Some(&b) {
            continue;
        }
        let p = r.deposits.norm;
        w += p;
        m1 += p * r.t_center;
        m2 += p * r.t_center * r.t_center;
    }
    let mean = if w > 0.0 { m1 / w } else { 0.0 };
    let var = if w > 0.0 { (m2 / w - mean * mean).max(0.0) } else { 0.0 };
    let body = &out.bodies[b];
    let first: f64 = out
        .ledger
        .raw_probabilities()
        .iter()
        .filter(|((s, _), _)| out.site_body.get(*s) != Some(&b))
        .map(|(_, v)| v)
        .sum();
    // energy left behind on the other bodies, reported without attribution
    let first_energy: f64 = out
        .ledger
        .records()
        .iter()
        .filter(|r| out.site_body.get(r.site) != Some(&b))
        .map(|r| r.deposits.energy)
        .sum();
    let e = &mut out.report.extras;
    e.insert("arrival_mean".into(), mean);
    e.insert("arrival_sigma".into(), var.sqrt());
    e.insert("arrival_weight".into(), w);
    e.insert("granularity".into(), body.d / body.v_s);
    e.insert("captured_elsewhere".into(), first);
    e.insert("energy_elsewhere".into(), first_energy);
}
