use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use super::analysis::evaluate;
use super::config::{RunConfig, SnapshotFormat};
use super::report::ScenarioReport;
use super::separable::Transverse;
use crate::body::BodyState;
use crate::error::{Error, Result};
use crate::grid_field::{observables, region_content, write_snapshot, write_text, Point, ProbeSignal, RegionContent, WaveField};
use crate::measurement::{conservation_audit, overlap_metric, Detector, SliceLedger, StepCapture};
use crate::tdse::{Potential, Propagator};

pub struct RunOutput {
    pub report: ScenarioReport,
    pub ledger: SliceLedger,
    pub probes: Vec<ProbeSignal>,
    /// Final field on the grid (in the grid's frame).
    pub field: WaveField,
    /// Rest position of every ledger site.
    pub site_positions: Vec<Point>,
    /// Owning body of every ledger site.
    pub site_body: Vec<usize>,
    /// Bodies as configured (lab frame).
    pub bodies: Vec<BodyState>,
}

impl RunOutput {
    /// Ledger sites of body `b` as a global index range.
    pub fn sites_of(&self, b: usize) -> std::ops::Range<usize> {
        let lo = self.site_body.iter().position(|&x| x == b).unwrap_or(0);
        let hi = self.site_body.iter().rposition(|&x| x == b).map_or(lo, |i| i + 1);
        lo..hi
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    execute(config, None)
}

/// Runs and writes ledger.csv, report.toml, config.toml, probe and snapshot files into `dir`.
pub fn run_to_dir(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let out = execute(config, Some(dir))?;
    config.save(&dir.join("config.toml"))?;
    out.ledger.write(&dir.join("ledger.csv"), ledger_dim(config), &ledger_summary(&out.report))?;
    out.report.save(&dir.join("report.toml"))?;
    for (i, p) in out.probes.iter().enumerate() {
        let mut text = String::from("t,re,im\n");
        for (k, s) in p.samples.iter().enumerate() {
            text.push_str(&format!("{:.12e},{:.17e},{:.17e}\n", p.t0 + k as f64 * p.dt_sample, s.re, s.im));
        }
        let path = dir.join(format!("probe_{i}.csv"));
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(out)
}

fn ledger_dim(config: &RunConfig) -> usize {
    if config.transverse.is_some() {
        2
    } else {
        config.grid.n.len()
    }
}

/// Deterministic key/value lines written at the top of the ledger file.
pub fn ledger_summary(r: &ScenarioReport) -> Vec<(String, String)> {
    let mut v = vec![
        ("name".to_string(), r.name.clone()),
        ("free_norm".into(), format!("{:.17e}", r.free_norm)),
        ("unassigned".into(), format!("{:.17e}", r.unassigned)),
        ("norm_residual".into(), format!("{:.6e}", r.audit.norm_residual)),
        ("energy_residual".into(), format!("{:.6e}", r.audit.energy_residual)),
        ("momentum_residual".into(), format!("{:.6e},{:.6e}", r.audit.momentum_residual[0], r.audit.momentum_residual[1])),
        ("max_step_residual".into(), format!("{:.6e}", r.max_step_residual)),
        ("overlap_metric".into(), format!("{:e}", r.overlap_metric)),
    ];
    if let Some(l1) = r.born_l1 {
        v.push(("born_l1".into(), format!("{l1:.6e}")));
    }
    v
}

/// Bound on how many substeps keep every site within one cell per call.
fn substeps(bodies: &[BodyState], t: f64, dt: f64, h: f64) -> usize {
    let v = bodies.iter().map(|b| b.speed_at(t)).fold(0.0, f64::max);
    ((v * dt / (0.999 * h)).ceil() as usize).max(1)
}

fn sample_probe(field: &WaveField, det: &Detector, lab: &[f64], t: f64) -> num_complex::Complex64 {
    let frame = det.frame();
    let x = frame.displacement(t);
    let p = [lab[0] - x[0], lab.get(1).copied().unwrap_or(0.0) - x[1]];
    let idx = field.grid.nearest_flat(&p);
    frame.lab_value(field.values[idx], field.grid.point(idx), t)
}

fn execute(config: &RunConfig, dir: Option<&Path>) -> Result<RunOutput> {
    let clock = Instant::now();
    let setup = config.setup()?;
    let grid = setup.grid.clone();
    let mut field = setup.field;
    let u = config.units;
    let st = &config.stepper;
    let mut frame = config.frame(&setup.bodies);
    let pot = config.potential(&grid, &frame)?;
    let pot_values = match &pot {
        Potential::Static { values, .. } => Some(values.clone()),
        _ => None,
    };
    let transverse = match &config.transverse {
        Some(t) => Some(Transverse::new(t, setup.bodies[0].d, st.t_start, u.mass, u.hbar)?),
        None => None,
    };
    let transverse_content = |tr: &Transverse, t: f64| {
        let p = tr.panels(t);
        (p.energy.iter().sum::<f64>(), p.momentum.iter().sum::<f64>())
    };
    let lift = |c: RegionContent, t: f64| -> RegionContent {
        match &transverse {
            Some(tr) => {
                let (e, p) = transverse_content(tr, t);
                RegionContent { norm: c.norm, energy: c.energy + c.norm * e, momentum: [c.momentum[0], c.norm * p] }
            }
            None => c,
        }
    };
    let initial = lift(observables(&field, pot_values.as_deref()).content(), st.t_start);

    frame.enter(&mut field);
    let grid_bodies: Vec<BodyState> = setup
        .bodies
        .iter()
        .map(|b| {
            let mut b = b.clone();
            if let Some(tr) = frame.trajectory() {
                b.trajectory = b.trajectory.relative_to(tr);
            }
            b
        })
        .collect();
    let mut det = Detector::new(&grid, grid_bodies, &setup.design_k, u.mass, u.hbar, frame)?.with_potential(pot_values.clone());
    let floor = config.ledger.record_floor;
    let mut ledger = SliceLedger::new(setup.bin_width).with_floor(floor);
    let mut scratch = SliceLedger::new(setup.bin_width).with_floor(floor);

    let audit = &config.audit;
    let mut max_identity = 0.0_f64;
    let mut book = |sc: &StepCapture, det: &Detector, ledger: &mut SliceLedger| -> Result<()> {
        if let Some(tr) = &transverse {
            tr.distribute(&sc.credits, ledger);
        }
        if sc.residual.abs() > audit.step {
            return Err(Error::NormAudit { residual: sc.residual, tolerance: audit.step });
        }
        let identity = det.exterior_norm() + ledger.total_captured() - initial.norm;
        max_identity = max_identity.max(identity.abs());
        if identity.abs() > audit.norm {
            return Err(Error::NormAudit { residual: identity, tolerance: audit.norm });
        }
        if ledger.total_captured() < -audit.norm {
            return Err(Error::NegativeCapture(ledger.total_captured()));
        }
        Ok(())
    };

    {
        let target = if transverse.is_some() { &mut scratch } else { &mut ledger };
        let sc = det.begin(&mut field, target)?;
        book(&sc, &det, &mut ledger)?;
    }

    let mut probes: Vec<ProbeSignal> = config
        .outputs
        .probes
        .iter()
        .map(|p| ProbeSignal::new(p.position.clone(), st.t_start, p.every as f64 * st.dt))
        .collect();
    for (spec, sig) in config.outputs.probes.iter().zip(&mut probes) {
        sig.samples.push(sample_probe(&field, &det, &spec.position, st.t_start));
    }
    let snap_dir = match (dir, config.outputs.snapshot_every) {
        (Some(d), n) if n > 0 => {
            let s = d.join("snapshots");
            std::fs::create_dir_all(&s).map_err(|e| Error::io(&s, e))?;
            Some(s)
        }
        _ => None,
    };
    let snapshot = |field: &WaveField, n: usize| -> Result<()> {
        if let Some(sd) = &snap_dir {
            match config.outputs.snapshot_format {
                SnapshotFormat::Binary => write_snapshot(&sd.join(format!("snap_{n:07}.wfld")), field)?,
                SnapshotFormat::Text => write_text(&sd.join(format!("snap_{n:07}.csv")), field)?,
            }
        }
        Ok(())
    };
    snapshot(&field, 0)?;

    let h = grid.min_spacing();
    let mut props: HashMap<usize, Propagator> = HashMap::new();
    for n in 0..setup.steps {
        let t0 = st.t_start + n as f64 * st.dt;
        field.time = t0;
        det.frame_mut().update(&mut field);
        let nsub = substeps(det.bodies(), t0, st.dt, h);
        if !props.contains_key(&nsub) {
            props.insert(nsub, Propagator::new(&grid, pot.clone(), st.dt / nsub as f64, u.mass, u.hbar)?);
        }
        let prop = &props[&nsub];
        let sub = st.dt / nsub as f64;
        for k in 0..nsub {
            let ta = t0 + k as f64 * sub;
            let tb = if k + 1 == nsub { t0 + st.dt } else { ta + sub };
            let pending = det.prepare(&mut field, ta, tb)?;
            prop.step_values(&mut field.values, ta);
            field.time = tb;
            let target = if transverse.is_some() { &mut scratch } else { &mut ledger };
            let sc = det.capture_flux(&mut field, pending, target)?;
            book(&sc, &det, &mut ledger)?;
        }
        let t1 = st.t_start + (n + 1) as f64 * st.dt;
        field.time = t1;
        for (spec, sig) in config.outputs.probes.iter().zip(&mut probes) {
            if (n + 1) % spec.every == 0 {
                sig.samples.push(sample_probe(&field, &det, &spec.position, t1));
            }
        }
        if config.outputs.snapshot_every > 0 && (n + 1) % config.outputs.snapshot_every == 0 {
            snapshot(&field, n + 1)?;
        }
    }

    let t_end = st.t_start + setup.steps as f64 * st.dt;
    let mask = det.interior_mask(t_end);
    let ext = region_content(&field, pot_values.as_deref(), |i| !mask[i]);
    let (e_lab, p_lab) = det.frame().to_lab(ext.energy, ext.momentum, ext.norm, t_end);
    let last = lift(RegionContent { norm: ext.norm, energy: e_lab, momentum: p_lab }, t_end);
    let audit_report = conservation_audit(&initial, &ledger, &last, &audit.tolerances())?;

    let mut site_positions = Vec::new();
    let mut site_body = Vec::new();
    match &transverse {
        Some(tr) => {
            let x = setup.bodies[0].face[0];
            site_positions.extend(tr.positions.iter().map(|&y| [x, y]));
            site_body.extend(std::iter::repeat(0).take(tr.sites()));
        }
        None => {
            for (b, body) in setup.bodies.iter().enumerate() {
                site_positions.extend(body.sites.iter().map(|s| s.rest_position));
                site_body.extend(std::iter::repeat(b).take(body.sites.len()));
            }
        }
    }
    let records = ledger.records();
    let mut overlap = f64::INFINITY;
    for (b, body) in setup.bodies.iter().enumerate() {
        let sites: Vec<usize> = (0..site_body.len()).filter(|&s| site_body[s] == b).collect();
        let Some(&first) = sites.first() else { continue };
        let pos: Vec<Point> = sites.iter().map(|&s| site_positions[s]).collect();
        let local: Vec<_> = records
            .iter()
            .filter(|r| site_body.get(r.site) == Some(&b))
            .map(|r| {
                let mut r = r.clone();
                r.site -= first;
                r
            })
            .collect();
        overlap = overlap.min(overlap_metric(&local, &pos, body.d, body.v_s, setup.bin_width));
    }

    let stats = det.stats;
    let report = ScenarioReport {
        name: config.name.clone(),
        steps: setup.steps,
        dt: st.dt,
        t_final: t_end,
        bin_width: setup.bin_width,
        sites: site_positions.len(),
        records: records.len(),
        total_captured: ledger.total_captured(),
        unassigned: ledger.unassigned(),
        unresolved: ledger.unresolved(),
        free_norm: det.exterior_norm(),
        max_norm_identity: max_identity,
        max_step_residual: stats.max_step_residual,
        max_interior_leak: stats.max_leak,
        negative_capture: stats.negative_capture,
        overlap_metric: overlap,
        overlap_flag: overlap <= 1.0,
        born_l1: None,
        wall_clock_s: 0.0,
        audit: audit_report,
        extras: Default::default(),
    };
    let mut out = RunOutput { report, ledger, probes, field, site_positions, site_body, bodies: setup.bodies };
    evaluate(config, &mut out)?;
    out.report.wall_clock_s = clock.elapsed().as_secs_f64();
    Ok(out)
}
