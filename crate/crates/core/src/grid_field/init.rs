use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, WaveField};
use crate::error::{Error, Result};

/// One factor of a product initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisProfile {
    Gaussian { center: f64, sigma: f64, k0: f64 },
    /// Flat envelope on [lo, hi] with raised-cosine edges four samples wide.
    Sheet { lo: f64, hi: f64, k0: f64 },
}

impl AxisProfile {
    pub fn k0(&self) -> f64 {
        match *self {
            AxisProfile::Gaussian { k0, .. } | AxisProfile::Sheet { k0, .. } => k0,
        }
    }

    fn check(&self, spacing: f64) -> Result<()> {
        match *self {
            AxisProfile::Gaussian { sigma, .. } => {
                if !(sigma >= 2.0 * spacing) {
                    return Err(Error::UnderResolved { sigma, spacing });
                }
            }
            AxisProfile::Sheet { lo, hi, .. } => {
                if !(hi - lo >= 4.0 * spacing) {
                    return Err(Error::Degenerate(format!(
                        "sheet [{lo}, {hi}] shorter than four samples ({spacing})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, x: f64, spacing: f64) -> Complex64 {
        match *self {
            AxisProfile::Gaussian { center, sigma, k0 } => {
                let d = x - center;
                Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * x)
            }
            AxisProfile::Sheet { lo, hi, k0 } => {
                Complex64::from_polar(sheet_envelope(x, lo, hi, 4.0 * spacing), k0 * x)
            }
        }
    }
}

/// Flat-top envelope with raised-cosine shoulders of total width `w` centred on each end.
pub fn sheet_envelope(x: f64, lo: f64, hi: f64, w: f64) -> f64 {
    let h = 0.5 * w;
    if x <= lo - h || x >= hi + h {
        0.0
    } else if x < lo + h {
        0.5 * (1.0 - (PI * (x - (lo - h)) / w).cos())
    } else if x > hi - h {
        0.5 * (1.0 + (PI * (x - (hi - h)) / w).cos())
    } else {
        1.0
    }
}

/// Normalized product state, one profile per grid axis.
pub fn make_product(grid: &Grid, profiles: &[AxisProfile]) -> Result<WaveField> {
    if profiles.len() != grid.dim() {
        return Err(Error::config(format!(
            "{} axis profiles for a {}D grid",
            profiles.len(),
            grid.dim()
        )));
    }
    for (a, p) in profiles.iter().enumerate() {
        p.check(grid.spacing(a))?;
    }
    let factors: Vec<Vec<Complex64>> = profiles
        .iter()
        .enumerate()
        .map(|(a, p)| grid.coords(a).into_iter().map(|x| p.sample(x, grid.spacing(a))).collect())
        .collect();
    let values = (0..grid.len())
        .map(|idx| {
            (0..grid.dim())
                .map(|a| factors[a][grid.axis_index(idx, a)])
                .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f)
        })
        .collect();
    let mut field = WaveField::new(grid.clone(), values, 1.0, 1.0);
    let norm = field.norm();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("initial state vanishes on the grid".into()));
    }
    field.normalize();
    let seam = field.seam_norm();
    if seam > 1e-10 {
        return Err(Error::Clipped { norm: seam });
    }
    Ok(field)
}

/// Isotropic Gaussian packet exp(-(x-c)^2/4 sigma^2 + i k0 x), normalized.
pub fn make_gaussian(grid: &Grid, center: &[f64], sigma: f64, k0: &[f64]) -> Result<WaveField> {
    if center.len() != grid.dim() || k0.len() != grid.dim() {
        return Err(Error::config("center and k0 need one entry per axis"));
    }
    let profiles: Vec<AxisProfile> = (0..grid.dim())
        .map(|a| AxisProfile::Gaussian { center: center[a], sigma, k0: k0[a] })
        .collect();
    make_product(grid, &profiles)
}

/// Flat rectangular sheet on [lo, hi] (per axis) carrying plane-wave phase k0.
pub fn make_rect_sheet(grid: &Grid, lo: &[f64], hi: &[f64], k0: &[f64]) -> Result<WaveField> {
    if lo.len() != grid.dim() || hi.len() != grid.dim() || k0.len() != grid.dim() {
        return Err(Error::config("lo, hi and k0 need one entry per axis"));
    }
    let profiles: Vec<AxisProfile> = (0..grid.dim())
        .map(|a| AxisProfile::Sheet { lo: lo[a], hi: hi[a], k0: k0[a] })
        .collect();
    make_product(grid, &profiles)
}
