//! Little-endian binary container for named `f64` tensors.
//!
//! Layout: magic `SALPRM01`, `u32` entry count, then per entry a `u32` name
//! length, UTF-8 name, `u8` dtype tag (1 = f64), `u32` rank, `u64` dims and
//! the row-major payload.

use super::tensor::Tensor;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"SALPRM01";
const DTYPE_F64: u8 = 1;

pub fn write_tensors<W: Write>(mut w: W, entries: &[(&str, &Tensor)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, t) in entries {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[DTYPE_F64])?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &x in t.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data("not a parameter file".into()));
    }
    let n = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::Data(e.to_string()))?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        if tag[0] != DTYPE_F64 {
            return Err(Error::Data(format!("unsupported dtype tag {} for {name}", tag[0])));
        }
        let rank = read_u32(&mut r)? as usize;
        let shape = (0..rank).map(|_| read_u64(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(read_u64(&mut r)?.to_le_bytes()));
        }
        out.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(out)
}

pub fn save_tensors(path: &Path, entries: &[(&str, &Tensor)]) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tensors(f, entries)
}

pub fn load_tensors(path: &Path) -> Result<Vec<(String, Tensor)>> {
    read_tensors(std::io::BufReader::new(std::fs::File::open(path)?))
}
