use serde::{Deserialize, Serialize};

use super::ledger::{SliceLedger, SliceRecord};
use crate::body::BodyState;
use crate::error::{Error, Result};
use crate::grid_field::RegionContent;

/// Tolerances for the end-of-run bookkeeping check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditTolerances {
    pub norm: f64,
    pub energy: f64,
    pub momentum: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        AuditTolerances { norm: 1e-6, energy: 0.05, momentum: 0.05 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub norm_residual: f64,
    pub energy_residual: f64,
    pub momentum_residual: [f64; 2],
    pub captured: f64,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn norm_ok(&self, tol: f64) -> bool {
        self.norm_residual.abs() <= tol
    }
}

/// Compares the initial content with the final free field plus everything deposited.
///
/// The norm residual beyond `tol.norm` is an error; energy and momentum residuals beyond
/// theirs (relative) are returned as warnings.
pub fn conservation_audit(
    initial: &RegionContent,
    ledger: &SliceLedger,
    last: &RegionContent,
    tol: &AuditTolerances,
) -> Result<AuditReport> {
    let dep = ledger.deposit_totals();
    let captured = ledger.total_captured();
    let report = AuditReport {
        norm_residual: last.norm + captured - initial.norm,
        energy_residual: last.energy + dep.energy - initial.energy,
        momentum_residual: [
            last.momentum[0] + dep.momentum[0] - initial.momentum[0],
            last.momentum[1] + dep.momentum[1] - initial.momentum[1],
        ],
        captured,
        warnings: Vec::new(),
    };
    if !report.norm_ok(tol.norm) {
        return Err(Error::NormAudit { residual: report.norm_residual, tolerance: tol.norm });
    }
    let mut report = report;
    // energy and momentum tolerances are relative to the initial content (absolute if it is zero)
    let scale = |x: f64| if x > 0.0 { x } else { 1.0 };
    let e_rel = report.energy_residual.abs() / scale(initial.energy.abs());
    if e_rel > tol.energy {
        report.warnings.push(format!("relative energy residual {e_rel:.3e} exceeds {:.3e}", tol.energy));
    }
    let pm = report.momentum_residual[0].hypot(report.momentum_residual[1]);
    let p_rel = pm / scale(initial.momentum[0].hypot(initial.momentum[1]));
    if p_rel > tol.momentum {
        report.warnings.push(format!("relative momentum residual {p_rel:.3e} exceeds {:.3e}", tol.momentum));
    }
    Ok(report)
}

/// Smallest separation between two records of one body in units of the slice size: for
/// each pair the larger of (distance / d) and (bin gap * bin width * v_s / d), minimised over
/// pairs. Infinite with fewer than two records. Record sites index `body.sites`.
pub fn slice_overlap_monitor(records: &[SliceRecord], body: &BodyState, bin_width: f64) -> f64 {
    let pos: Vec<[f64; 2]> = body.sites.iter().map(|s| s.rest_position).collect();
    overlap_metric(records, &pos, body.d, body.v_s, bin_width)
}

/// The same metric for sites at arbitrary positions.
pub fn overlap_metric(records: &[SliceRecord], pos: &[[f64; 2]], d: f64, v_s: f64, bin_width: f64) -> f64 {
    let recs: Vec<&SliceRecord> = records.iter().filter(|r| r.site < pos.len()).collect();
    let space = |a: usize, b: usize| (pos[a][0] - pos[b][0]).hypot(pos[a][1] - pos[b][1]) / d;
    let metric = |a: &SliceRecord, b: &SliceRecord| {
        let time = (a.t_bin - b.t_bin).abs() as f64 * bin_width * v_s / d;
        space(a.site, b.site).max(time)
    };
    let mut best = f64::INFINITY;
    if recs.len() <= 2000 {
        for i in 0..recs.len() {
            for j in i + 1..recs.len() {
                best = best.min(metric(recs[i], recs[j]));
            }
        }
        return best;
    }
    // large ledgers: on a site row the minimum is attained by neighbours in time at one
    // site or by neighbouring sites within one bin
    let mut by_bin: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for r in &recs {
        by_bin.entry(r.t_bin).or_default().push(r.site);
    }
    for w in recs.windows(2) {
        best = best.min(metric(w[0], w[1]));
    }
    for sites in by_bin.values_mut() {
        sites.sort_by(|&a, &b| pos[a][0].total_cmp(&pos[b][0]).then(pos[a][1].total_cmp(&pos[b][1])));
        for w in sites.windows(2) {
            best = best.min(space(w[0], w[1]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{Interaction, SlabSpec, Trajectory};
    use crate::grid_field::Grid;

    fn screen() -> BodyState {
        let g = Grid::new_2d([-8.0, -8.0], [8.0, 8.0], [64, 64]).unwrap();
        BodyState::slab(
            SlabSpec {
                name: "s".into(),
                face: [0.0, 0.0],
                normal: [-1.0, 0.0],
                thickness: 2.0,
                half_length: None,
                d: 1.0,
                v_s: 2.0,
                holes: vec![],
                trajectory: Trajectory::stationary(0.0),
                interaction: Interaction::Absorb,
            },
            &g,
        )
        .unwrap()
    }

    fn ledger(entries: &[(usize, f64)], bw: f64) -> SliceLedger {
        let mut l = SliceLedger::new(bw);
        for &(s, t) in entries {
            l.credit(s, t, 0.1, 0.0, 0.0, [0.0, 0.0]);
        }
        l
    }

    #[test]
    fn overlap_cases() {
        let b = screen();
        let bw = b.bin_width();
        let single = ledger(&[(3, 0.1)], bw);
        assert!(slice_overlap_monitor(&single.records(), &b, bw).is_infinite());
        let adjacent = ledger(&[(3, 0.1 * bw), (3, 1.1 * bw)], bw);
        assert!((slice_overlap_monitor(&adjacent.records(), &b, bw) - 1.0).abs() < 1e-12);
        let apart = ledger(&[(3, 0.1 * bw), (6, 0.2 * bw)], bw);
        assert!((slice_overlap_monitor(&apart.records(), &b, bw) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn audit_without_body() {
        let c = RegionContent { norm: 1.0, momentum: [2.0, 0.0], energy: 3.0 };
        let l = SliceLedger::new(0.5);
        let r = conservation_audit(&c, &l, &c, &AuditTolerances::default()).unwrap();
        assert!(r.norm_residual.abs() < 1e-9 && r.energy_residual.abs() < 1e-9 && r.warnings.is_empty());
    }

    #[test]
    fn norm_failure_is_fatal() {
        let c = RegionContent { norm: 1.0, ..Default::default() };
        let lost = RegionContent { norm: 0.9, ..Default::default() };
        let l = SliceLedger::new(0.5);
        assert!(matches!(
            conservation_audit(&c, &l, &lost, &AuditTolerances::default()),
            Err(Error::NormAudit { .. })
        ));
    }
}
