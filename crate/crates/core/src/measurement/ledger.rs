use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deposits {
    pub norm: f64,
    pub energy: f64,
    pub momentum: [f64; 2],
}

/// One capture history: a site and a time bin with its weight and deposits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub site: usize,
    pub t_bin: i64,
    pub t_center: f64,
    /// sqrt(P) e^{i phase}; |weight|^2 is the captured probability.
    pub weight: Complex64,
    pub phase: f64,
    pub deposits: Deposits,
    pub t_first: f64,
    pub t_last: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Accum {
    prob: f64,
    z: Complex64,
    energy: f64,
    momentum: [f64; 2],
    t_first: f64,
    t_last: f64,
}

/// Running ledger of captures keyed by (site, time bin).
///
/// Per-step increments may be negative (backflow out of a surface); they are booked
/// against the same key so the totals stay exact. Keys whose accumulated probability
/// does not exceed `record_floor` are not reported as records.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceLedger {
    bin_width: f64,
    record_floor: f64,
    accum: BTreeMap<(usize, i64), Accum>,
    unassigned: Deposits,
    total: f64,
}

impl SliceLedger {
    pub fn new(bin_width: f64) -> Self {
        assert!(bin_width > 0.0, "bin width must be positive");
        SliceLedger { bin_width, record_floor: 1e-12, accum: BTreeMap::new(), unassigned: Deposits::default(), total: 0.0 }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.record_floor = floor;
        self
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn record_floor(&self) -> f64 {
        self.record_floor
    }

    pub fn bin_of(&self, t: f64) -> i64 {
        (t / self.bin_width).floor() as i64
    }

    pub fn credit(&mut self, site: usize, t: f64, dp: f64, phase: f64, energy: f64, momentum: [f64; 2]) {
        let key = (site, self.bin_of(t));
        let a = self.accum.entry(key).or_insert(Accum {
            prob: 0.0,
            z: Complex64::new(0.0, 0.0),
            energy: 0.0,
            momentum: [0.0; 2],
            t_first: t,
            t_last: t,
        });
        a.prob += dp;
        a.z += Complex64::from_polar(dp, phase);
        a.energy += energy;
        a.momentum[0] += momentum[0];
        a.momentum[1] += momentum[1];
        a.t_first = a.t_first.min(t);
        a.t_last = a.t_last.max(t);
        self.total += dp;
    }

    /// Capture that could not be attributed to any site (all sites covered by holes).
    /// Books capture that no site can own (e.g. every site covered by open holes).
    pub fn credit_unassigned(&mut self, dp: f64, energy: f64, momentum: [f64; 2]) {
        self.unassigned.norm += dp;
        self.unassigned.energy += energy;
        self.unassigned.momentum[0] += momentum[0];
        self.unassigned.momentum[1] += momentum[1];
        self.total += dp;
    }

    pub fn total_captured(&self) -> f64 {
        self.total
    }

    pub fn unassigned(&self) -> f64 {
        self.unassigned.norm
    }

    /// Sum of all deposits, including sub-floor keys and unassigned capture.
    pub fn deposit_totals(&self) -> Deposits {
        let mut d = self.unassigned;
        for a in self.accum.values() {
            d.norm += a.prob;
            d.energy += a.energy;
            d.momentum[0] += a.momentum[0];
            d.momentum[1] += a.momentum[1];
        }
        d
    }

    /// Captured probability not carried by reported records.
    pub fn unresolved(&self) -> f64 {
        self.total - self.records().iter().map(|r| r.deposits.norm).sum::<f64>()
    }

    pub fn is_empty(&self) -> bool {
        self.records().is_empty()
    }

    pub fn records(&self) -> Vec<SliceRecord> {
        self.accum
            .iter()
            .filter(|(_, a)| a.prob > self.record_floor)
            .map(|(&(site, t_bin), a)| {
                let phase = a.z.arg();
                SliceRecord {
                    site,
                    t_bin,
                    t_center: (t_bin as f64 + 0.5) * self.bin_width,
                    weight: Complex64::from_polar(a.prob.sqrt(), phase),
                    phase,
                    deposits: Deposits { norm: a.prob, energy: a.energy, momentum: a.momentum },
                    t_first: a.t_first,
                    t_last: a.t_last,
                }
            })
            .collect()
    }

    /// Raw accumulated probability for every key, including sub-floor and negative ones.
    pub fn raw_probabilities(&self) -> BTreeMap<(usize, i64), f64> {
        self.accum.iter().map(|(k, a)| (*k, a.prob)).collect()
    }

    /// Merge `factor` consecutive bins into one.
    pub fn coarsen(&self, factor: i64) -> SliceLedger {
        assert!(factor >= 1);
        let mut out = SliceLedger {
            bin_width: self.bin_width * factor as f64,
            record_floor: self.record_floor,
            accum: BTreeMap::new(),
            unassigned: self.unassigned,
            total: self.total,
        };
        for (&(site, bin), a) in &self.accum {
            let key = (site, bin.div_euclid(factor));
            match out.accum.get_mut(&key) {
                Some(b) => {
                    b.prob += a.prob;
                    b.z += a.z;
                    b.energy += a.energy;
                    b.momentum[0] += a.momentum[0];
                    b.momentum[1] += a.momentum[1];
                    b.t_first = b.t_first.min(a.t_first);
                    b.t_last = b.t_last.max(a.t_last);
                }
                None => {
                    out.accum.insert(key, a.clone());
                }
            }
        }
        out
    }

    /// Delimited export: header, one line per record, then `#`-prefixed summary lines.
    pub fn to_delimited(&self, dim: usize, summary: &[(String, String)]) -> String {
        let mut s = String::new();
        if dim == 2 {
            s.push_str("site_id,t_bin,t_bin_center,re_weight,im_weight,probability,e_deposit,px_deposit,py_deposit\n");
        } else {
            s.push_str("site_id,t_bin,t_bin_center,re_weight,im_weight,probability,e_deposit,px_deposit\n");
        }
        for r in self.records() {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.site,
                r.t_bin,
                r.t_center,
                r.weight.re,
                r.weight.im,
                r.deposits.norm,
                r.deposits.energy,
                r.deposits.momentum[0]
            );
            if dim == 2 {
                let _ = write!(s, ",{}", r.deposits.momentum[1]);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "# bin_width = {}", self.bin_width);
        let _ = writeln!(s, "# total_captured = {}", self.total);
        let _ = writeln!(s, "# unresolved = {}", self.unresolved());
        for (k, v) in summary {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }

    pub fn write(&self, path: &Path, dim: usize, summary: &[(String, String)]) -> Result<()> {
        std::fs::write(path, self.to_delimited(dim, summary)).map_err(|e| Error::io(path, e))
    }
}

/// Records parsed back from a delimited ledger file, plus its summary lines.
#[derive(Clone, Debug, Default)]
pub struct LedgerFile {
    pub records: Vec<SliceRecord>,
    pub summary: Vec<(String, String)>,
}

pub fn read_ledger(path: &Path) -> Result<LedgerFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ledger(&text)
}

pub fn parse_ledger(text: &str) -> Result<LedgerFile> {
    let mut out = LedgerFile::default();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty ledger".into()))?;
    let cols = header.split(',').count();
    for line in lines {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                out.summary.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols {
            return Err(Error::Parse(format!("ledger line has {} fields, expected {cols}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse::<f64>().map_err(|_| Error::Parse(format!("bad number {:?}", f[i])))
        };
        let site = f[0].parse::<usize>().map_err(|_| Error::Parse(format!("bad site {:?}", f[0])))?;
        let t_bin = f[1].parse::<i64>().map_err(|_| Error::Parse(format!("bad bin {:?}", f[1])))?;
        let weight = Complex64::new(num(3)?, num(4)?);
        let py = if cols > 8 { num(8)? } else { 0.0 };
        out.records.push(SliceRecord {
            site,
            t_bin,
            t_center: num(2)?,
            weight,
            phase: weight.arg(),
            deposits: Deposits { norm: num(5)?, energy: num(6)?, momentum: [num(7)?, py] },
            t_first: f64::NAN,
            t_last: f64::NAN,
        });
    }
    Ok(out)
}

/// Per-site marginal and joint (site, bin) probabilities of the reported records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BornDistribution {
    pub per_site: BTreeMap<usize, f64>,
    pub joint: BTreeMap<(usize, i64), f64>,
    pub total: f64,
}

pub fn born_distribution(ledger: &SliceLedger) -> BornDistribution {
    born_from_records(&ledger.records())
}

pub fn born_from_records(records: &[SliceRecord]) -> BornDistribution {
    let mut out = BornDistribution::default();
    for r in records {
        let p = r.weight.norm_sqr();
        *out.per_site.entry(r.site).or_insert(0.0) += p;
        *out.joint.entry((r.site, r.t_bin)).or_insert(0.0) += p;
        out.total += p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ledger_gives_empty_maps() {
        let b = born_distribution(&SliceLedger::new(0.1));
        assert!(b.per_site.is_empty() && b.joint.is_empty());
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn single_record_probability_is_weight_squared() {
        let mut l = SliceLedger::new(0.1);
        let w = Complex64::new(0.3, 0.4);
        l.credit(2, 0.05, w.norm_sqr(), w.arg(), 0.0, [0.0; 2]);
        let r = &l.records()[0];
        assert!((r.weight - w).norm() < 1e-15);
        assert!((born_distribution(&l).per_site[&2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn distinct_keys_are_not_merged() {
        let mut l = SliceLedger::new(0.1);
        l.credit(0, 0.05, 0.1, 0.0, 0.0, [0.0; 2]);
        l.credit(0, 0.15, 0.1, 0.0, 0.0, [0.0; 2]);
        l.credit(1, 0.05, 0.1, 0.0, 0.0, [0.0; 2]);
        assert_eq!(l.records().len(), 3);
    }

    #[test]
    fn coarsening_adds_pairs() {
        let mut fine = SliceLedger::new(0.05);
        let mut coarse = SliceLedger::new(0.1);
        for k in 0..40 {
            let t = 0.0125 + k as f64 * 0.025;
            let dp = 1e-3 * (1.0 + (k as f64).sin().abs());
            fine.credit(k % 3, t, dp, k as f64 * 0.3, 0.0, [0.0; 2]);
            coarse.credit(k % 3, t, dp, k as f64 * 0.3, 0.0, [0.0; 2]);
        }
        let merged = born_distribution(&fine.coarsen(2));
        let direct = born_distribution(&coarse);
        assert_eq!(merged.joint.len(), direct.joint.len());
        for (k, p) in &direct.joint {
            assert!((merged.joint[k] - p).abs() < 1e-15);
        }
    }

    #[test]
    fn delimited_round_trip() {
        let mut l = SliceLedger::new(0.1);
        l.credit(3, 0.25, 0.125, 1.0, 0.5, [0.25, -0.5]);
        let text = l.to_delimited(2, &[("overlap".into(), "inf".into())]);
        let back = parse_ledger(&text).unwrap();
        let r = &l.records()[0];
        assert_eq!(back.records[0].weight, r.weight);
        assert_eq!(back.records[0].deposits.momentum, [0.25, -0.5]);
        assert!(back.summary.iter().any(|(k, v)| k == "overlap" && v == "inf"));
    }
}
