//! Binary tensor and weight-store files.
//!
//! Tensor: `ATTO`, version byte, u32 rank, u32 dims, f32 values.
//! Weights: `ATTW`, version byte, u32 entry count, then per entry a u16
//! name length, the UTF-8 name, u32 rank, u32 dims, f32 values.
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::arch::TensorShape;

use super::{EngineError, Tensor, WeightEntry, WeightStore};

pub const TENSOR_MAGIC: &[u8; 4] = b"ATTO";
pub const WEIGHTS_MAGIC: &[u8; 4] = b"ATTW";
pub const FORMAT_VERSION: u8 = 1;

fn write_array<W: Write>(w: &mut W, dims: &[usize], values: &[f32]) -> std::io::Result<()> {
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, EngineError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<(), EngineError> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head)?;
    if &head[..4] != magic {
        return Err(EngineError::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&head[..4])
        )));
    }
    if head[4] != FORMAT_VERSION {
        return Err(EngineError::Format(format!("unsupported version {}", head[4])));
    }
    Ok(())
}

fn read_array<R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<f32>), EngineError> {
    let rank = read_u32(r)? as usize;
    if rank > 8 {
        return Err(EngineError::Format(format!("rank {rank} too large")));
    }
    let dims = (0..rank)
        .map(|_| read_u32(r).map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| EngineError::Format("element count overflows".into()))?;
    let mut bytes = vec![
        0u8;
        n.checked_mul(4)
            .ok_or_else(|| EngineError::Format("too large".into()))?
    ];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((dims, values))
}

pub fn write_tensor<W: Write>(w: &mut W, t: &Tensor) -> std::io::Result<()> {
    let s = t.shape();
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    write_array(w, &[s.channels, s.height, s.width], t.data())
}

/// Reads a rank-3 `[C, H, W]` tensor; a rank-1 `[N]` tensor is read as `N×1×1`.
pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor, EngineError> {
    read_header(r, TENSOR_MAGIC)?;
    let (dims, values) = read_array(r)?;
    let shape = match dims[..] {
        [c, h, w] => TensorShape::new(c, h, w),
        [n] => TensorShape::new(n, 1, 1),
        _ => return Err(EngineError::Format(format!("tensor rank {} unsupported", dims.len()))),
    };
    Tensor::new(shape, values)
}

pub fn write_weights<W: Write>(w: &mut W, store: &WeightStore) -> std::io::Result<()> {
    w.write_all(WEIGHTS_MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    w.write_all(&(store.entries.len() as u32).to_le_bytes())?;
    for (name, entry) in &store.entries {
        let bytes = name.as_bytes();
        let len = u16::try_from(bytes.len())
            .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "entry name too long"))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(bytes)?;
        write_array(w, &entry.dims, &entry.values)?;
    }
    Ok(())
}

pub fn read_weights<R: Read>(r: &mut R) -> Result<WeightStore, EngineError> {
    read_header(r, WEIGHTS_MAGIC)?;
    let count = read_u32(r)?;
    let mut store = WeightStore::default();
    for _ in 0..count {
        let mut len = [0u8; 2];
        r.read_exact(&mut len)?;
        let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| EngineError::Format(e.to_string()))?;
        let (dims, values) = read_array(r)?;
        store.insert(name, WeightEntry::new(dims, values)?);
    }
    Ok(store)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor, EngineError> {
    read_tensor(&mut BufReader::new(File::open(path)?))
}

pub fn save_weights(path: impl AsRef<Path>, store: &WeightStore) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_weights(&mut w, store)?;
    w.flush()
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightStore, EngineError> {
    read_weights(&mut BufReader::new(File::open(path)?))
}
