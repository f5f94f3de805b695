//! Flat binary parameter container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "SIMPCCKP"
//! version  u32
//! meta     u32 length + UTF-8 bytes (free-form, JSON by convention)
//! count    u32
//! manifest count × { name: u32 len + bytes, ndim: u32, dims: ndim × u64, offset: u64 }
//! data     row-major f64 values; `offset` is relative to the data start
//! ```

use std::fs;
use std::path::Path;

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SIMPCCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: String,
    pub params: ParamStore,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_u32(&mut out, ckpt.meta.len() as u32);
    out.extend_from_slice(ckpt.meta.as_bytes());
    put_u32(&mut out, ckpt.params.len() as u32);
    let mut offset = 0u64;
    for (name, t) in ckpt.params.names().iter().zip(ckpt.params.tensors()) {
        put_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, t.shape.len() as u32);
        for &d in &t.shape {
            put_u64(&mut out, d as u64);
        }
        put_u64(&mut out, offset);
        offset += 8 * t.len() as u64;
    }
    for t in ckpt.params.tensors() {
        for v in &t.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::State("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::State("checkpoint string is not UTF-8".into()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::State("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::State(format!("unsupported checkpoint version {version}")));
    }
    let meta = r.string()?;
    let count = r.u32()? as usize;
    let mut manifest = Vec::with_capacity(count);
    for _ in 0..count {
        let name = r.string()?;
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let offset = r.u64()? as usize;
        manifest.push((name, shape, offset));
    }
    let data = &bytes[r.pos..];
    let mut params = ParamStore::new();
    for (name, shape, offset) in manifest {
        let n: usize = shape.iter().product();
        let end = offset + 8 * n;
        if end > data.len() {
            return Err(Error::State(format!("checkpoint data for '{name}' is truncated")));
        }
        let values = data[offset..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.push(name, Tensor::new(shape, values)?)?;
    }
    Ok(Checkpoint { meta, params })
}

/// Writes through a temporary sibling and renames, so an interrupted write
/// never replaces a good checkpoint with a partial one.
pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_checkpoint(ckpt)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut p = ParamStore::new();
        p.push("enc.w", Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.5, 0.0, 1e-300, -7.25]).unwrap())
            .unwrap();
        p.push("enc.b", Tensor::new(vec![3], vec![0.5, 0.25, 0.125]).unwrap()).unwrap();
        let c = Checkpoint {
            meta: "{\"k\":8}".into(),
            params: p,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        write_checkpoint(&path, &c).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), c);
        assert!(!path.with_extension("tmp").exists());
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_checkpoint(b"NOTACKPT\x01\x00\x00\x00").is_err());
        let mut p = ParamStore::new();
        p.push("w", Tensor::zeros(vec![4])).unwrap();
        let mut bytes = encode_checkpoint(&Checkpoint {
            meta: String::new(),
            params: p,
        });
        bytes.truncate(bytes.len() - 4);
        assert!(decode_checkpoint(&bytes).is_err());
    }
}
