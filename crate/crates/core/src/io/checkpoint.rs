//! Binary state snapshots.
//!
//! Layout, little-endian: magic `CBLB`, version `u32 = 1`, `K u32`, `J u32`, `L_Y f64`,
//! `t f64`, then `û₁, û₂, θ̂` as interleaved `(re, im)` f64 pairs in row-major order
//! (`k` outer, `j` inner).

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::dynamics::FlowState;
use crate::error::{Error, Result};
use crate::grid::{SpectralField, SpectralGrid};

pub const MAGIC: [u8; 4] = *b"CBLB";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, state: &FlowState<f64>) -> Result<()> {
    let g = state.grid();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.k_max() as u32).to_le_bytes())?;
    w.write_all(&(g.j_max() as u32).to_le_bytes())?;
    w.write_all(&g.l_y().to_le_bytes())?;
    w.write_all(&state.t.to_le_bytes())?;
    for f in state.fields() {
        for c in f.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn fill<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::Checkpoint(format!("truncated while reading {what}")),
        _ => Error::Io(e),
    })
}

fn u32_at<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    fill(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn f64_at<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    fill(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot. The format does not record the dealiasing fraction, so the caller
/// supplies it.
pub fn read_checkpoint<R: Read>(mut r: R, dealias_fraction: f64) -> Result<FlowState<f64>> {
    let mut magic = [0u8; 4];
    fill(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}, expected \"CBLB\"")));
    }
    let version = u32_at(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let k = u32_at(&mut r, "K")?;
    let j = u32_at(&mut r, "J")?;
    let l_y = f64_at(&mut r, "L_Y")?;
    let t = f64_at(&mut r, "t")?;
    let grid = SpectralGrid::new(k as i64, j as i64, l_y)?.with_dealias_fraction(dealias_fraction)?;
    let mut field = |name: &str| -> Result<SpectralField<f64>> {
        let mut bytes = vec![0u8; grid.len() * 16];
        fill(&mut r, &mut bytes, name)?;
        let coeffs = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex::new(re, im)
            })
            .collect();
        SpectralField::from_coeffs(&grid, coeffs)
    };
    let u1 = field("u1")?;
    let u2 = field("u2")?;
    let theta = field("theta")?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after the last field".into()));
    }
    FlowState::new(t, u1, u2, theta)
}

pub fn save_checkpoint(path: &Path, state: &FlowState<f64>) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), state)
}

pub fn load_checkpoint(path: &Path, dealias_fraction: f64) -> Result<FlowState<f64>> {
    read_checkpoint(BufReader::new(File::open(path)?), dealias_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FlowState<f64> {
        let g = SpectralGrid::new(2, 3, 5.0).unwrap();
        let mut s = FlowState::zeros(&g, 1.25);
        for (i, c) in s.u1.coeffs_mut().iter_mut().enumerate() {
            *c = Complex::new(i as f64 * 0.1, -(i as f64));
        }
        s.theta.coeffs_mut()[4] = Complex::new(f64::MIN_POSITIVE, 3.0);
        s
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let s = sample();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 + 8 + 8 + 3 * s.grid().len() * 16);
        let back = read_checkpoint(&buf[..], 2.0 / 3.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &sample()).unwrap();
        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_checkpoint(short, 2.0 / 3.0), Err(Error::Checkpoint(_))));
        let mut v2 = buf.clone();
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(read_checkpoint(&v2[..], 2.0 / 3.0), Err(Error::UnsupportedVersion(2))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(&bad[..], 2.0 / 3.0), Err(Error::Checkpoint(_))));
        assert!(matches!(read_checkpoint(&buf[..2], 2.0 / 3.0), Err(Error::Checkpoint(_))));
    }
}
