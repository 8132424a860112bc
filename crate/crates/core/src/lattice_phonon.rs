//! Harmonic lattice toolkit: normal modes, oscillator amplitudes of the classical
//! solid wavefunction, and the order-of-magnitude classicality energies.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_field::Point;

/// Relative cutoff on omega^2 below which a mode counts as a rigid motion.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spring {
    pub i: usize,
    pub j: usize,
    pub kappa: f64,
}

/// Isotropic spring tying one atom to its rest position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub atom: usize,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Boundary {
    Free,
    Pinned { anchors: Vec<Anchor> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeModel {
    pub dim: usize,
    pub positions: Vec<Point>,
    pub masses: Vec<f64>,
    pub springs: Vec<Spring>,
    pub boundary: Boundary,
}

impl LatticeModel {
    /// Uniform 1D chain with nearest-neighbour springs.
    pub fn chain(n: usize, mass: f64, kappa: f64, spacing: f64, boundary: Boundary) -> Self {
        LatticeModel {
            dim: 1,
            positions: (0..n).map(|i| [i as f64 * spacing, 0.0]).collect(),
            masses: vec![mass; n],
            springs: (1..n).map(|i| Spring { i: i - 1, j: i, kappa }).collect(),
            boundary,
        }
    }

    /// One atom on an anchor spring.
    pub fn single_oscillator(mass: f64, kappa: f64) -> Self {
        LatticeModel {
            dim: 1,
            positions: vec![[0.0, 0.0]],
            masses: vec![mass],
            springs: vec![],
            boundary: Boundary::Pinned { anchors: vec![Anchor { atom: 0, kappa }] },
        }
    }

    pub fn atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.atoms();
        let bad = |m: String| Err(Error::InvalidLattice(m));
        if !(1..=2).contains(&self.dim) {
            return bad(format!("dimension {} not supported", self.dim));
        }
        if n == 0 {
            return bad("no atoms".into());
        }
        if self.masses.len() != n {
            return bad(format!("{} masses for {} atoms", self.masses.len(), n));
        }
        if self.masses.iter().any(|m| !(*m > 0.0)) {
            return bad("masses must be positive".into());
        }
        for (a, b) in (0..n).tuple_combinations() {
            let (p, q) = (self.positions[a], self.positions[b]);
            if (p[0] - q[0]).hypot(p[1] - q[1]) == 0.0 {
                return bad(format!("atoms {a} and {b} coincide"));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for s in &self.springs {
            if s.i >= n || s.j >= n || s.i == s.j {
                return bad(format!("spring ({}, {}) is not between two distinct atoms", s.i, s.j));
            }
            if !(s.kappa > 0.0) {
                return bad("spring constants must be positive".into());
            }
            adj[s.i].push(s.j);
            adj[s.j].push(s.i);
        }
        if let Boundary::Pinned { anchors } = &self.boundary {
            if anchors.is_empty() {
                return bad("pinned boundary without anchors".into());
            }
            if anchors.iter().any(|a| a.atom >= n || !(a.kappa > 0.0)) {
                return bad("anchor with bad atom index or non-positive kappa".into());
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("spring graph is not connected".into());
        }
        Ok(())
    }

    /// Force-constant matrix of size (dim * N)^2, coordinates ordered atom-major.
    pub fn hessian(&self) -> DMatrix<f64> {
        let d = self.dim;
        let n = d * self.atoms();
        let mut h = DMatrix::zeros(n, n);
        for s in &self.springs {
            let block = if d == 1 {
                vec![vec![s.kappa]]
            } else {
                let (p, q) = (self.positions[s.i], self.positions[s.j]);
                let l = (q[0] - p[0]).hypot(q[1] - p[1]);
                let e = [(q[0] - p[0]) / l, (q[1] - p[1]) / l];
                (0..2).map(|a| (0..2).map(|b| s.kappa * e[a] * e[b]).collect()).collect()
            };
            for a in 0..d {
                for b in 0..d {
                    let v = block[a][b];
                    h[(d * s.i + a, d * s.i + b)] += v;
                    h[(d * s.j + a, d * s.j + b)] += v;
                    h[(d * s.i + a, d * s.j + b)] -= v;
                    h[(d * s.j + a, d * s.i + b)] -= v;
                }
            }
        }
        if let Boundary::Pinned { anchors } = &self.boundary {
            for an in anchors {
                for a in 0..d {
                    h[(d * an.atom + a, d * an.atom + a)] += an.kappa;
                }
            }
        }
        h
    }

    fn mass_diag(&self) -> Vec<f64> {
        self.masses.iter().flat_map(|&m| std::iter::repeat(m).take(self.dim)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Position in the ascending spectrum of all dim * N eigenvalues.
    pub index: usize,
    /// Unit direction k in configuration space.
    pub direction: Vec<f64>,
    pub omega: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalModeSet {
    pub dim: usize,
    pub modes: Vec<Mode>,
    /// Spectrum indices of the removed rigid motions.
    pub removed: Vec<usize>,
    /// Unit directions of the removed modes.
    pub zero_directions: Vec<Vec<f64>>,
    pub hbar: f64,
    /// Width of the localisation Gaussians over removed coordinates.
    pub zero_width: f64,
}

/// Occupation numbers keyed by spectrum index; absent modes are in their ground state.
pub type PhononOccupancy = BTreeMap<usize, u32>;

pub fn normal_modes(lat: &LatticeModel, hbar: f64) -> Result<NormalModeSet> {
    lat.validate()?;
    let h = lat.hessian();
    let m = lat.mass_diag();
    let n = m.len();
    let inv = m.iter().map(|x| 1.0 / x.sqrt()).collect::<Vec<_>>();
    let dm = DMatrix::from_fn(n, n, |i, j| h[(i, j)] * inv[i] * inv[j]);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    if !(max > 0.0) {
        return Err(Error::UnstableLattice(format!("largest omega^2 is {max:e}")));
    }
    let mut modes = Vec::new();
    let mut removed = Vec::new();
    let mut zero_directions = Vec::new();
    for (pos, &c) in order.iter().enumerate() {
        let lam = eig.eigenvalues[c];
        let q = eig.eigenvectors.column(c);
        let raw: Vec<f64> = (0..n).map(|i| q[i] * m[i].sqrt()).collect();
        let c2: f64 = raw.iter().map(|x| x * x).sum();
        let direction: Vec<f64> = raw.iter().map(|x| x / c2.sqrt()).collect();
        if lam.abs() < ZERO_MODE_THRESHOLD * max {
            removed.push(pos);
            zero_directions.push(direction);
        } else if lam < 0.0 {
            return Err(Error::UnstableLattice(format!("negative omega^2 {lam:e} in mode {pos}")));
        } else {
            modes.push(Mode { index: pos, direction, omega: lam.sqrt(), mass: c2 });
        }
    }
    let zero_width = modes.first().map_or(1.0, |md| (hbar / (md.mass * md.omega)).sqrt());
    Ok(NormalModeSet { dim: lat.dim, modes, removed, zero_directions, hbar, zero_width })
}

impl NormalModeSet {
    pub fn with_zero_width(mut self, w: f64) -> Self {
        self.zero_width = w;
        self
    }

    pub fn total(&self) -> usize {
        self.modes.len() + self.removed.len()
    }

    /// The retained mode at spectrum index `s`.
    pub fn mode(&self, s: usize) -> Result<&Mode> {
        if self.removed.contains(&s) {
            return Err(Error::ZeroModeOccupied(s));
        }
        self.modes.iter().find(|m| m.index == s).ok_or(Error::InvalidMode(s))
    }

    /// Mode table as delimited text: index, omega, m_eff, width.
    pub fn table(&self) -> String {
        let mut out = String::from("index,omega,m_eff,width\n");
        for m in &self.modes {
            let _ = writeln!(out, "{},{:.12e},{:.12e},{:.12e}", m.index, m.omega, m.mass, mode_width(m, self.hbar));
        }
        out
    }
}

pub fn mode_width(mode: &Mode, hbar: f64) -> f64 {
    (hbar / (mode.mass * mode.omega)).sqrt()
}

/// Normalized oscillator eigenfunction of order `n` for mass `m`, frequency `omega`.
pub fn oscillator_eigenfunction(n: u32, u: f64, m: f64, omega: f64, hbar: f64) -> f64 {
    let a = (m * omega / hbar).sqrt();
    let xi = a * u;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for k in 0..n {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * xi * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    a.sqrt() * cur
}

fn displacement(rest: &[Point], x: &[Point], dim: usize) -> Result<Vec<f64>> {
    if rest.len() != x.len() {
        return Err(Error::InvalidLattice(format!("{} rest positions vs {} coordinates", rest.len(), x.len())));
    }
    Ok(x.iter().zip(rest).flat_map(|(p, r)| (0..dim).map(move |a| p[a] - r[a])).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Core factor of the classical-solid wavefunction at configuration `x`: the product of
/// oscillator eigenfunctions over retained modes and unit-normalized Gaussians over the
/// removed coordinates.
pub fn phonon_amplitude(modes: &NormalModeSet, rest: &[Point], occ: &PhononOccupancy, x: &[Point]) -> Result<Complex64> {
    for &s in occ.keys() {
        modes.mode(s)?;
    }
    let dx = displacement(rest, x, modes.dim)?;
    let mut amp = 1.0;
    for m in &modes.modes {
        let n = occ.get(&m.index).copied().unwrap_or(0);
        amp *= oscillator_eigenfunction(n, dot(&dx, &m.direction), m.mass, m.omega, modes.hbar);
    }
    let w = modes.zero_width;
    for z in &modes.zero_directions {
        let u = dot(&dx, z) / w;
        amp *= (std::f64::consts::PI * w * w).powf(-0.25) * (-0.5 * u * u).exp();
    }
    Ok(Complex64::new(amp, 0.0))
}

fn check_identical(masses: &[f64]) -> Result<()> {
    if masses.len() > 6 {
        return Err(Error::InvalidLattice(format!("symmetrizer limited to 6 atoms, got {}", masses.len())));
    }
    if masses.iter().any(|m| *m != masses[0]) {
        return Err(Error::InvalidLattice("symmetrizer needs identical atoms".into()));
    }
    Ok(())
}

/// Bosonic symmetrization over all atom permutations, (1/sqrt N!) sum_P Psi(P x).
pub fn symmetrized_amplitude(
    modes: &NormalModeSet,
    masses: &[f64],
    rest: &[Point],
    occ: &PhononOccupancy,
    x: &[Point],
) -> Result<Complex64> {
    check_identical(masses)?;
    let n = x.len();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for p in (0..n).permutations(n) {
        let px: Vec<Point> = p.iter().map(|&i| x[i]).collect();
        sum += phonon_amplitude(modes, rest, occ, &px)?;
        count += 1;
    }
    Ok(sum / (count as f64).sqrt())
}

/// Largest |Psi(P R)| / |Psi(R)| over non-identity permutations of the rest configuration:
/// how strongly the permuted peaks overlap the original one.
pub fn permutation_overlap(modes: &NormalModeSet, masses: &[f64], rest: &[Point]) -> Result<f64> {
    check_identical(masses)?;
    let occ = PhononOccupancy::new();
    let peak = phonon_amplitude(modes, rest, &occ, rest)?.norm();
    let n = rest.len();
    let mut worst = 0.0_f64;
    for p in (0..n).permutations(n) {
        if p.iter().enumerate().all(|(i, &j)| i == j) {
            continue;
        }
        let px: Vec<Point> = p.iter().map(|&i| rest[i]).collect();
        worst = worst.max(phonon_amplitude(modes, rest, &occ, &px)?.norm() / peak);
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalityEnergies {
    pub u_surf: f64,
    pub u_r: f64,
    pub u_el: f64,
}

/// Surface, rigid-localisation and elastic energy scales of a body of size `l`,
/// total mass `m`, atomic length `d`, bond energy `e_b` and modulus `y`.
pub fn classicality_energies(e_b: f64, l: f64, m: f64, d: f64, y: f64, hbar: f64) -> Result<ClassicalityEnergies> {
    for (name, v) in [("E_b", e_b), ("L", l), ("M", m), ("d", d), ("Y", y), ("hbar", hbar)] {
        if !(v > 0.0) {
            return Err(Error::NonPositive(format!("{name} = {v}")));
        }
    }
    Ok(ClassicalityEnergies {
        u_surf: e_b * l * l,
        u_r: hbar * hbar / (m * d * d),
        u_el: hbar * hbar / (m * y * d * d * l.powi(3)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn omegas(s: &NormalModeSet) -> Vec<f64> {
        s.modes.iter().map(|m| m.omega).collect()
    }

    #[test]
    fn three_atom_chain() {
        let s = normal_modes(&LatticeModel::chain(3, 1.0, 1.0, 1.0, Boundary::Free), 1.0).unwrap();
        assert_eq!(s.removed.len(), 1);
        let w = omegas(&s);
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w[1], 3f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn pinned_single_mass() {
        let s = normal_modes(&LatticeModel::single_oscillator(1.0, 4.0), 1.0).unwrap();
        assert!(s.removed.is_empty());
        assert_abs_diff_eq!(s.modes[0].omega, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eight_atom_chain_dispersion() {
        let s = normal_modes(&LatticeModel::chain(8, 1.0, 1.0, 1.0, Boundary::Free), 1.0).unwrap();
        for (i, w) in omegas(&s).iter().enumerate() {
            let n = (i + 1) as f64;
            assert_abs_diff_eq!(*w, 2.0 * (n * std::f64::consts::PI / 16.0).sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn width_formula() {
        let m = |mass, omega| Mode { index: 0, direction: vec![1.0], omega, mass };
        assert_abs_diff_eq!(mode_width(&m(1.0, 1.0), 1.0), 1.0);
        assert_abs_diff_eq!(mode_width(&m(4.0, 1.0), 1.0), 0.5);
    }

    #[test]
    fn hermite_nodes() {
        let s = normal_modes(&LatticeModel::single_oscillator(1.0, 4.0), 1.0).unwrap();
        let rest = [[0.0, 0.0]];
        let occ1 = PhononOccupancy::from([(0, 1)]);
        assert_eq!(phonon_amplitude(&s, &rest, &occ1, &rest).unwrap().norm(), 0.0);
        // H2 roots at xi = +-1/sqrt2, i.e. u = +-sqrt(hbar / (2 m omega))
        let root = (1.0 / (2.0 * 1.0 * 2.0f64)).sqrt();
        for u in [root, -root] {
            assert!(oscillator_eigenfunction(2, u, 1.0, 2.0, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mode_occupation_rejected() {
        let s = normal_modes(&LatticeModel::chain(3, 1.0, 1.0, 1.0, Boundary::Free), 1.0).unwrap();
        let rest: Vec<Point> = (0..3).map(|i| [i as f64, 0.0]).collect();
        let occ = PhononOccupancy::from([(s.removed[0], 1)]);
        assert!(matches!(phonon_amplitude(&s, &rest, &occ, &rest), Err(Error::ZeroModeOccupied(_))));
    }

    #[test]
    fn classicality_examples() {
        let e = classicality_energies(1.0, 2.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(e.u_surf, 4.0);
        assert_eq!(classicality_energies(1.0, 1.0, 1.0, 1.0, 2.0, 1.0).unwrap().u_r, 1.0);
        assert_eq!(classicality_energies(1.0, 1.0, 1.0, 1.0, 2.0, 1.0).unwrap().u_el, 0.5);
        assert!(classicality_energies(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn disconnected_lattice_rejected() {
        let mut lat = LatticeModel::chain(4, 1.0, 1.0, 1.0, Boundary::Free);
        lat.springs.remove(1);
        assert!(matches!(normal_modes(&lat, 1.0), Err(Error::InvalidLattice(_))));
    }
}
