use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Grid, WaveField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WFLD";
const VERSION: u32 = 1;

/// Binary snapshot: "WFLD", version, dim, per-axis counts (u32), per-axis lo/hi (f64),
/// then (re, im) pairs in row-major order; all little-endian.
pub fn write_snapshot(path: &Path, field: &WaveField) -> Result<()> {
    let g = &field.grid;
    let mut buf = Vec::with_capacity(16 + 20 * g.dim() + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for a in 0..g.dim() {
        buf.extend_from_slice(&(g.n(a) as u32).to_le_bytes());
    }
    for a in 0..g.dim() {
        buf.extend_from_slice(&g.lo(a).to_le_bytes());
        buf.extend_from_slice(&g.hi(a).to_le_bytes());
    }
    for v in &field.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(Grid, Vec<Complex64>)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut r = Reader { b: &bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Parse("not a WFLD snapshot".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported snapshot version {version}")));
    }
    let dim = r.u32()? as usize;
    if !(dim == 1 || dim == 2) {
        return Err(Error::Parse(format!("bad dimension {dim}")));
    }
    let n: Vec<usize> = (0..dim).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    for a in 0..dim {
        lo[a] = r.f64()?;
        hi[a] = r.f64()?;
    }
    let grid = Grid::new(&lo, &hi, &n)?;
    let values = (0..grid.len())
        .map(|_| Ok(Complex64::new(r.f64()?, r.f64()?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, values))
}

struct Reader<'a> {
    b: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let s = self
            .b
            .get(self.at..self.at + n)
            .ok_or_else(|| Error::Parse("truncated snapshot".into()))?;
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Whitespace-free comma-separated export: x[, y], re, im, |psi|^2.
pub fn write_text(path: &Path, field: &WaveField) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let g = &field.grid;
    let head = if g.dim() == 1 { "x,re,im,density" } else { "x,y,re,im,density" };
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{head}")?;
        for (idx, v) in field.values.iter().enumerate() {
            let p = g.point(idx);
            if g.dim() == 1 {
                writeln!(w, "{},{},{},{}", p[0], v.re, v.im, v.norm_sqr())?;
            } else {
                writeln!(w, "{},{},{},{},{}", p[0], p[1], v.re, v.im, v.norm_sqr())?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
