use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time series of the field at a fixed point, sampled every `dt_sample` from `t0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSignal {
    pub position: Vec<f64>,
    pub t0: f64,
    pub dt_sample: f64,
    pub samples: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub sigma_t: f64,
    pub sigma_omega: f64,
    pub product: f64,
    /// 0.5 - 2/n, the discretization-corrected lower bound.
    pub bound: f64,
    pub satisfied: bool,
}

impl ProbeSignal {
    pub fn new(position: Vec<f64>, t0: f64, dt_sample: f64) -> Self {
        ProbeSignal { position, t0, dt_sample, samples: Vec::new() }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// The contiguous stretch around the peak where |s| exceeds `rel` x peak,
    /// plus one sample on each side. Later echoes separated by a quiet gap are dropped.
    pub fn passage_window(&self, rel: f64) -> ProbeSignal {
        let mags: Vec<f64> = self.samples.iter().map(|s| s.norm()).collect();
        let Some((ip, &peak)) = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
        else {
            return self.clone();
        };
        let thr = rel * peak;
        let mut lo = ip;
        while lo > 0 && mags[lo] > thr {
            lo -= 1;
        }
        let mut hi = ip;
        while hi + 1 < mags.len() && mags[hi] > thr {
            hi += 1;
        }
        ProbeSignal {
            position: self.position.clone(),
            t0: self.t0 + lo as f64 * self.dt_sample,
            dt_sample: self.dt_sample,
            samples: self.samples[lo..=hi].to_vec(),
        }
    }
}

/// Spreads of |s(t)|^2 in time and |s(omega)|^2 in angular frequency.
pub fn probe_uncertainty(signal: &ProbeSignal) -> Result<Uncertainty> {
    let n = signal.samples.len();
    if n < 64 {
        return Err(Error::TooFewSamples(n));
    }
    let peak = signal.peak();
    let ends = signal.samples[0].norm().max(signal.samples[n - 1].norm());
    if !(peak > 0.0) || ends >= 1e-6 * peak {
        return Err(Error::NotDecayed { ratio: if peak > 0.0 { ends / peak } else { f64::NAN } });
    }
    let dt = signal.dt_sample;
    let sigma_t = spread(signal.samples.iter().enumerate().map(|(i, s)| (i as f64 * dt, s.norm_sqr())));

    let mut hat = signal.samples.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut hat);
    let pow: Vec<f64> = hat.iter().map(|v| v.norm_sqr()).collect();
    let ipk = pow
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let half = (n / 2) as i64;
    let sigma_omega = spread(pow.iter().enumerate().map(|(j, &w)| {
        // offset from the peak bin folded into [-n/2, n/2)
        let off = (j as i64 - ipk as i64 + half).rem_euclid(n as i64) - half;
        (off as f64 * dw, w)
    }));
    let product = sigma_t * sigma_omega;
    let bound = 0.5 - 2.0 / n as f64;
    Ok(Uncertainty { sigma_t, sigma_omega, product, bound, satisfied: product >= bound })
}

fn spread(it: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
    let pts: Vec<(f64, f64)> = it.collect();
    for &(x, w) in &pts {
        w0 += w;
        w1 += x * w;
    }
    let mean = w1 / w0;
    for &(x, w) in &pts {
        w2 += (x - mean) * (x - mean) * w;
    }
    (w2 / w0).sqrt()
}
