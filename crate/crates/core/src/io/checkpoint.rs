//! Binary checkpoint: header, little-endian `f64` samples in row-major order,
//! CRC-32 of the payload.
//!
//! Header: `b"FKSL"`, version `u32`, `d: u32`, `n: u32`, `t: f64`, `dt: f64`,
//! `alpha, chi, r, eps: f64`; all little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::IoError;
use crate::constants::ModelParams;
use crate::torus::{Field, TorusGrid};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FKSL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub dt: f64,
    pub params: ModelParams,
    pub field: Field,
}

fn take<const N: usize>(buf: &[u8], pos: &mut usize) -> Result<[u8; N], IoError> {
    let end = *pos + N;
    let bytes = buf
        .get(*pos..end)
        .ok_or_else(|| IoError::Checkpoint("truncated header".into()))?;
    *pos = end;
    Ok(bytes.try_into().expect("slice of length N"))
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.field.grid();
        let mut out = Vec::with_capacity(64 + 8 * g.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(g.d() as u32).to_le_bytes());
        out.extend_from_slice(&(g.n() as u32).to_le_bytes());
        let p = &self.params;
        for x in [self.t, self.dt, p.alpha, p.chi, p.r, p.eps] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let start = out.len();
        for v in self.field.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, IoError> {
        let bad = |m: String| Err(IoError::Checkpoint(m));
        let mut pos = 0;
        if &take::<4>(buf, &mut pos)? != CHECKPOINT_MAGIC {
            return bad("bad magic".into());
        }
        let version = u32::from_le_bytes(take(buf, &mut pos)?);
        if version != CHECKPOINT_VERSION {
            return bad(format!("unsupported version {version}"));
        }
        let d = u32::from_le_bytes(take(buf, &mut pos)?) as usize;
        let n = u32::from_le_bytes(take(buf, &mut pos)?) as usize;
        let mut f = [0.0; 6];
        for x in &mut f {
            *x = f64::from_le_bytes(take(buf, &mut pos)?);
        }
        let [t, dt, alpha, chi, r, eps] = f;
        let grid = TorusGrid::new(d, n)?;
        let params = ModelParams::new(d, alpha, chi, r, eps)?;
        let len = 8 * grid.len();
        if buf.len() != pos + len + 4 {
            return bad(format!("expected {} bytes, found {}", pos + len + 4, buf.len()));
        }
        let payload = &buf[pos..pos + len];
        let stored = u32::from_le_bytes(buf[pos + len..].try_into().expect("4 bytes"));
        if crc32fast::hash(payload) != stored {
            return bad("CRC mismatch".into());
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { t, dt, params, field: Field::new(grid, values)? })
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let mut f = std::fs::File::create(path).map_err(|e| IoError::at(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| IoError::at(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| IoError::at(path, e))?;
        Self::from_bytes(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(d: usize, n: usize, seed: u64) -> Checkpoint {
        let grid = TorusGrid::new(d, n).unwrap();
        Checkpoint {
            t: 1.25,
            dt: 1e-3,
            params: ModelParams::new(d, 1.5, 1.0, 0.6, 0.1).unwrap(),
            field: crate::torus::random_trig(grid, 3, 5, 2.0, seed),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.fksl");
        let c = sample(2, 16, 4);
        c.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), c);
        assert_eq!(std::fs::read(&path).unwrap(), c.to_bytes());
    }

    #[test]
    fn corruption_is_detected() {
        let c = sample(1, 32, 1);
        let bytes = c.to_bytes();
        let mut flipped = bytes.clone();
        let mid = bytes.len() - 20;
        flipped[mid] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&flipped), Err(IoError::Checkpoint(m)) if m.contains("CRC")));
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&magic).is_err());
        assert_eq!(&bytes[..4], b"FKSL");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), CHECKPOINT_VERSION);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(seed in 0u64..1000, two_d in proptest::bool::ANY) {
            let c = if two_d { sample(2, 8, seed) } else { sample(1, 64, seed) };
            let back = Checkpoint::from_bytes(&c.to_bytes()).unwrap();
            for (a, b) in back.field.values().iter().zip(c.field.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.to_bytes(), c.to_bytes());
        }
    }
}
