//! Matrix files.
//!
//! Text form: CSV with header `i,j,re,im` (zero-based) plus a JSON sidecar
//! `{"m": .., "n": ..}`. Binary snapshot: magic `DQSM`, little-endian u32
//! format version, u64 `m`, `n`, `nnz`, then `nnz` records of
//! `(u64 i, u64 j, f64 re, f64 im)` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SampledMatrix;
use crate::error::{Error, Result};
use crate::linalg::C64;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"DQSM";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Triplet {
    i: usize,
    j: usize,
    re: f64,
    im: f64,
}

/// `matrix.csv` -> `matrix.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn read_csv(csv_path: &Path, sidecar: &Path) -> Result<SampledMatrix> {
    let dims: Dims = serde_json::from_reader(BufReader::new(File::open(sidecar)?))?;
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(["i", "j", "re", "im"]) {
        return Err(Error::Parse(format!(
            "{}: expected header i,j,re,im, found {}",
            csv_path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut triplets = Vec::new();
    for rec in rdr.deserialize() {
        let t: Triplet = rec?;
        triplets.push((t.i, t.j, C64::new(t.re, t.im)));
    }
    SampledMatrix::build(dims.m, dims.n, triplets)
}

pub fn write_csv(a: &SampledMatrix, csv_path: &Path, sidecar: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    for (i, j, v) in a.entries() {
        w.serialize(Triplet { i, j, re: v.re, im: v.im })?;
    }
    if a.nnz() == 0 {
        w.write_record(["i", "j", "re", "im"])?;
    }
    w.flush()?;
    let dims = Dims { m: a.nrows(), n: a.ncols() };
    let mut f = BufWriter::new(File::create(sidecar)?);
    serde_json::to_writer(&mut f, &dims)?;
    f.flush()?;
    Ok(())
}

pub fn write_snapshot(a: &SampledMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    let entries = a.entries();
    for x in [a.nrows(), a.ncols(), entries.len()] {
        w.write_all(&(x as u64).to_le_bytes())?;
    }
    for (i, j, v) in entries {
        w.write_all(&(i as u64).to_le_bytes())?;
        w.write_all(&(j as u64).to_le_bytes())?;
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Snapshot(format!("truncated: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_snapshot(path: &Path) -> Result<SampledMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 8];
    r.read_exact(&mut head).map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    if head[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[4..].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let m = read_u64(&mut r)? as usize;
    let n = read_u64(&mut r)? as usize;
    let nnz = read_u64(&mut r)?;
    let mut t = Vec::new();
    for _ in 0..nnz {
        let i = read_u64(&mut r)? as usize;
        let j = read_u64(&mut r)? as usize;
        let re = f64::from_bits(read_u64(&mut r)?);
        let im = f64::from_bits(read_u64(&mut r)?);
        t.push((i, j, C64::new(re, im)));
    }
    SampledMatrix::build(m, n, t)
}
