//! Second quantization on sorted index multisets: bosonic creation, annihilation and
//! number operators with truncation by total particle number.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid_field::Grid;
use crate::lattice_phonon::{oscillator_eigenfunction, NormalModeSet, PhononOccupancy};
use crate::spectral::{wavenumbers, SpectralPlan};

/// Coefficients b_{i1..iN} on non-decreasing index keys; the empty key is the vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyCoefficients {
    mode_count: usize,
    max_total: usize,
    terms: BTreeMap<Vec<usize>, Complex64>,
}

/// Occupation numbers of one basis key.
pub type OccupancyVector = BTreeMap<usize, usize>;

pub fn occupancy(key: &[usize]) -> OccupancyVector {
    let mut n = OccupancyVector::new();
    for &i in key {
        *n.entry(i).or_insert(0) += 1;
    }
    n
}

fn count(key: &[usize], s: usize) -> usize {
    key.iter().filter(|&&i| i == s).count()
}

impl OccupancyCoefficients {
    pub fn new(mode_count: usize, max_total: usize) -> Self {
        OccupancyCoefficients { mode_count, max_total, terms: BTreeMap::new() }
    }

    pub fn vacuum(mode_count: usize, max_total: usize) -> Self {
        let mut c = Self::new(mode_count, max_total);
        c.terms.insert(Vec::new(), Complex64::new(1.0, 0.0));
        c
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, key: &[usize]) -> Complex64 {
        let mut k = key.to_vec();
        k.sort_unstable();
        self.terms.get(&k).copied().unwrap_or_default()
    }

    /// Sets a coefficient; the key is sorted first and zeros are not stored.
    pub fn set(&mut self, key: &[usize], value: Complex64) -> Result<()> {
        let mut k = key.to_vec();
        k.sort_unstable();
        if let Some(&bad) = k.iter().find(|&&i| i >= self.mode_count) {
            return Err(Error::InvalidMode(bad));
        }
        if k.len() > self.max_total {
            return Err(Error::TruncationEdge { n: k.len(), max_total: self.max_total });
        }
        if value == Complex64::new(0.0, 0.0) {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, value);
        }
        Ok(())
    }

    fn add(&mut self, key: Vec<usize>, value: Complex64) {
        use std::collections::btree_map::Entry;
        let zero = Complex64::new(0.0, 0.0);
        match self.terms.entry(key) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += value;
                if *e.get() == zero {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if value != zero {
                    e.insert(value);
                }
            }
        }
    }

    fn empty_like(&self) -> Self {
        Self::new(self.mode_count, self.max_total)
    }

    fn check_mode(&self, s: usize) -> Result<()> {
        if s >= self.mode_count {
            Err(Error::InvalidMode(s))
        } else {
            Ok(())
        }
    }

    /// Largest particle number among stored keys.
    pub fn max_n(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|v| v.norm_sqr()).sum()
    }

    /// Largest coefficient-wise difference to `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for (k, v) in &self.terms {
            worst = worst.max((v - other.terms.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, v) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    fn combine(&self, other: &Self, a: f64) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add(k.clone(), v * a);
        }
        out
    }

    /// Delimited dump: N, key (dash-joined indices), re, im.
    pub fn dump(&self) -> String {
        let mut out = String::from("N,key,re,im\n");
        for (k, v) in &self.terms {
            let key = k.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
            let _ = writeln!(out, "{},{},{:.17e},{:.17e}", k.len(), key, v.re, v.im);
        }
        out
    }
}

/// Creation operator on mode `s`. Terms pushed past `max_total` are dropped; their
/// squared weight is returned alongside the result.
pub fn create(s: usize, c: &OccupancyCoefficients) -> Result<(OccupancyCoefficients, f64)> {
    c.check_mode(s)?;
    let mut out = c.empty_like();
    let mut dropped = 0.0;
    for (k, v) in &c.terms {
        let n = count(k, s);
        let w = v * ((n + 1) as f64).sqrt();
        if k.len() + 1 > c.max_total {
            dropped += w.norm_sqr();
            continue;
        }
        let mut key = k.clone();
        let pos = key.partition_point(|&i| i <= s);
        key.insert(pos, s);
        out.add(key, w);
    }
    Ok((out, dropped))
}

pub fn annihilate(s: usize, c: &OccupancyCoefficients) -> Result<OccupancyCoefficients> {
    c.check_mode(s)?;
    let mut out = c.empty_like();
    for (k, v) in &c.terms {
        let n = count(k, s);
        if n == 0 {
            continue;
        }
        let mut key = k.clone();
        let pos = key.iter().position(|&i| i == s).expect("counted above");
        key.remove(pos);
        out.add(key, v * (n as f64).sqrt());
    }
    Ok(out)
}

/// n_s = a+_s a_s. Diagonal in the key basis, so each key is scaled by its count of s
/// directly (the composed sqrt factors would round).
pub fn number(s: usize, c: &OccupancyCoefficients) -> Result<OccupancyCoefficients> {
    c.check_mode(s)?;
    let mut out = c.empty_like();
    for (k, v) in &c.terms {
        let n = count(k, s);
        if n > 0 {
            out.add(k.clone(), v * n as f64);
        }
    }
    Ok(out)
}

fn require_headroom(c: &OccupancyCoefficients, room: usize) -> Result<()> {
    let n = c.max_n();
    if n + room > c.max_total {
        return Err(Error::TruncationEdge { n, max_total: c.max_total });
    }
    Ok(())
}

/// max |([a_s, a+_t] - delta_st) c| over coefficients.
pub fn commutator_check(s: usize, t: usize, c: &OccupancyCoefficients) -> Result<f64> {
    c.check_mode(s)?;
    c.check_mode(t)?;
    require_headroom(c, 1)?;
    let ac = annihilate(s, &create(t, c)?.0)?;
    let ca = create(t, &annihilate(s, c)?)?.0;
    let mut r = ac.combine(&ca, -1.0);
    if s == t {
        r = r.combine(c, -1.0);
    }
    Ok(r.terms.values().map(|v| v.norm()).fold(0.0, f64::max))
}

/// max |[a_s, a_t] c|.
pub fn annihilator_commutator(s: usize, t: usize, c: &OccupancyCoefficients) -> Result<f64> {
    let a = annihilate(s, &annihilate(t, c)?)?;
    let b = annihilate(t, &annihilate(s, c)?)?;
    Ok(a.max_diff(&b))
}

/// max |[a+_s, a+_t] c|; needs two quanta of headroom.
pub fn creator_commutator(s: usize, t: usize, c: &OccupancyCoefficients) -> Result<f64> {
    require_headroom(c, 2)?;
    let a = create(s, &create(t, c)?.0)?.0;
    let b = create(t, &create(s, c)?.0)?.0;
    Ok(a.max_diff(&b))
}

/// Raises mode `s` of a phonon occupancy; returns the new occupancy and sqrt(n_s + 1).
pub fn phonon_raise(modes: &NormalModeSet, s: usize, occ: &PhononOccupancy) -> Result<(PhononOccupancy, f64)> {
    modes.mode(s)?;
    let mut out = occ.clone();
    let n = out.entry(s).or_insert(0);
    *n += 1;
    let factor = (*n as f64).sqrt();
    Ok((out, factor))
}

/// Quadrature check of the raising action on a single oscillator:
/// returns <f_{n+1}, a+ f_n> with a+ = sqrt(m w / 2 hbar) (u - (hbar / m w) d/du), the
/// derivative taken spectrally on a periodic grid wide enough for the eigenfunctions to vanish.
pub fn raising_overlap(n: u32, mass: f64, omega: f64, hbar: f64) -> Result<f64> {
    let w = (hbar / (mass * omega)).sqrt();
    let half = w * (2.0 * (n as f64 + 2.0)).sqrt().max(1.0) * 6.0;
    let points = 1024;
    let grid = Grid::new_1d(-half, half, points)?;
    let h = grid.spacing(0);
    let xs = grid.coords(0);
    let plan = SpectralPlan::new(&grid);
    let mut f: Vec<Complex64> =
        xs.iter().map(|&u| Complex64::new(oscillator_eigenfunction(n, u, mass, omega, hbar), 0.0)).collect();
    plan.forward(&mut f);
    for (v, k) in f.iter_mut().zip(wavenumbers(points, h)) {
        *v *= Complex64::new(0.0, k);
    }
    plan.inverse(&mut f);
    let pref = (mass * omega / (2.0 * hbar)).sqrt();
    let mut overlap = 0.0;
    for (i, &u) in xs.iter().enumerate() {
        let fu = oscillator_eigenfunction(n, u, mass, omega, hbar);
        let raised = pref * (u * fu - hbar / (mass * omega) * f[i].re);
        overlap += oscillator_eigenfunction(n + 1, u, mass, omega, hbar) * raised * h;
    }
    Ok(overlap)
}

/// Random coefficients on `modes` modes with at most `max_n` quanta per key.
pub fn random_state(rng: &mut impl Rng, modes: usize, max_n: usize, max_total: usize, terms: usize) -> OccupancyCoefficients {
    let mut c = OccupancyCoefficients::new(modes, max_total);
    for _ in 0..terms {
        let n = rng.gen_range(0..=max_n);
        let key: Vec<usize> = (0..n).map(|_| rng.gen_range(0..modes)).collect();
        let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        c.set(&key, v).expect("generated within bounds");
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatteryResult {
    pub trials: usize,
    pub max_mixed: f64,
    pub max_aa: f64,
    pub max_cc: f64,
}

/// Commutator battery over `trials` seeded random states on 4 modes with N <= 5.
pub fn commutator_battery(seed: u64, trials: usize) -> Result<BatteryResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = BatteryResult { trials, max_mixed: 0.0, max_aa: 0.0, max_cc: 0.0 };
    for _ in 0..trials {
        let c = random_state(&mut rng, 4, 5, 7, 12);
        for s in 0..4 {
            for t in 0..4 {
                r.max_mixed = r.max_mixed.max(commutator_check(s, t, &c)?);
                r.max_aa = r.max_aa.max(annihilator_commutator(s, t, &c)?);
                r.max_cc = r.max_cc.max(creator_commutator(s, t, &c)?);
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_phonon::{normal_modes, LatticeModel};

    fn one(key: &[usize], modes: usize) -> OccupancyCoefficients {
        let mut c = OccupancyCoefficients::new(modes, 8);
        c.set(key, Complex64::new(1.0, 0.0)).unwrap();
        c
    }

    #[test]
    fn create_examples() {
        let (c, _) = create(2, &one(&[1, 3], 4)).unwrap();
        assert_eq!(c.get(&[1, 2, 3]), Complex64::new(1.0, 0.0));
        let (c, _) = create(1, &one(&[1, 1], 4)).unwrap();
        assert!((c.get(&[1, 1, 1]).re - 3f64.sqrt()).abs() < 1e-15);
        let (c, _) = create(0, &OccupancyCoefficients::vacuum(4, 8)).unwrap();
        assert_eq!(c.get(&[0]), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn annihilate_examples() {
        let c = annihilate(2, &one(&[1, 2, 2], 6)).unwrap();
        assert!((c.get(&[1, 2]).re - 2f64.sqrt()).abs() < 1e-15);
        assert!(annihilate(5, &one(&[1, 2], 6)).unwrap().is_empty());
        assert!(annihilate(0, &OccupancyCoefficients::vacuum(6, 8)).unwrap().is_empty());
    }

    #[test]
    fn number_examples() {
        assert_eq!(number(2, &one(&[2, 2, 2], 4)).unwrap().get(&[2, 2, 2]).re, 3.0);
        assert!(number(0, &OccupancyCoefficients::vacuum(4, 8)).unwrap().is_empty());
        assert!(number(2, &one(&[1, 3], 4)).unwrap().is_empty());
    }

    #[test]
    fn truncation_reports_drop() {
        let mut c = OccupancyCoefficients::new(2, 2);
        c.set(&[0, 1], Complex64::new(0.5, 0.0)).unwrap();
        let (out, dropped) = create(0, &c).unwrap();
        assert!(out.is_empty());
        assert!((dropped - 0.5).abs() < 1e-15);
        assert!(matches!(commutator_check(0, 0, &c), Err(Error::TruncationEdge { .. })));
    }

    #[test]
    fn invalid_mode() {
        assert!(matches!(create(4, &one(&[1], 4)), Err(Error::InvalidMode(4))));
    }

    #[test]
    fn raise_examples() {
        let modes = normal_modes(&LatticeModel::single_oscillator(1.0, 1.0), 1.0).unwrap();
        let (o, f) = phonon_raise(&modes, 0, &PhononOccupancy::new()).unwrap();
        assert_eq!(o.get(&0), Some(&1));
        assert_eq!(f, 1.0);
        let (o, f) = phonon_raise(&modes, 0, &PhononOccupancy::from([(0, 2)])).unwrap();
        assert_eq!(o.get(&0), Some(&3));
        assert!((f - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quadrature_raise_ground() {
        assert!((raising_overlap(0, 1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dump_format() {
        let d = one(&[2, 0], 3).dump();
        assert!(d.contains("2,0-2,1.0"));
    }
}
