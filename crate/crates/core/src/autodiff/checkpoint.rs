//! Binary tensor container for checkpoints.
//!
//! Layout, all integers little-endian u32:
//! magic `ONL1` · version · entry count, then per entry
//! name length · name bytes (utf-8) · rank · dims · f64 data.
//! Values are written as raw `f64` bit patterns, so a save/load round trip
//! is exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::autodiff::params::ParameterSet;
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ONL1";
pub const VERSION: u32 = 1;

pub fn write_tensors<W: Write>(w: &mut W, entries: &[(String, Tensor)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, t) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_tensors<R: Read>(r: &mut R) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data(format!("bad checkpoint magic {magic:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let count = read_u32(r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes).map_err(|_| Error::Data("checkpoint name is not utf-8".into()))?;
        let rank = read_u32(r)? as usize;
        if rank > 8 {
            return Err(Error::Data(format!("implausible tensor rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = vec![0.0f64; numel];
        let mut b = [0u8; 8];
        for v in &mut data {
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        out.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(out)
}

pub fn save_file(path: &Path, entries: &[(String, Tensor)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensors(&mut w, entries)?;
    w.flush()?;
    Ok(())
}

pub fn load_file(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let mut r = BufReader::new(File::open(path)?);
    read_tensors(&mut r)
}

/// Copy checkpoint values into an existing parameter set. Every parameter
/// must be present with a matching element count; extra tensors (optimizer
/// state and the like) are ignored.
pub fn apply_to_params(ps: &mut ParameterSet, tensors: &[(String, Tensor)]) -> Result<()> {
    for id in ps.ids().collect::<Vec<_>>() {
        let name = ps.name(id).to_string();
        let t = tensors
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Data(format!("checkpoint missing parameter {name}")))?;
        if t.numel() != ps.value(id).numel() {
            return Err(Error::Data(format!(
                "checkpoint tensor {name} has {} values, parameter expects {}",
                t.numel(),
                ps.value(id).numel()
            )));
        }
        ps.value_mut(id).data_mut().copy_from_slice(t.data());
    }
    Ok(())
}

/// Collect current parameter values as named tensors, insertion order.
pub fn params_to_tensors(ps: &ParameterSet) -> Vec<(String, Tensor)> {
    ps.iter().map(|(n, t)| (n.to_string(), t.clone())).collect()
}
