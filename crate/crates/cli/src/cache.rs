//! On-disk cache of enumerated coset tables and their orbit partitions,
//! keyed by (p, n, case). The format is a little-endian binary with a
//! versioned header; loading revalidates the table (pairwise freshness and
//! the index count), so a cache hit produces exactly the same report as a
//! cold run.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use zeta_core::coset::CosetTable;
use zeta_core::double_coset::OrbitPartition;
use zeta_core::group::Mat4;
use zeta_core::ring::Case;

const MAGIC: &[u8; 8] = b"ZVCACHE1";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic or version stamp")]
    BadHeader,
    #[error("cache key mismatch")]
    KeyMismatch,
    #[error("stored table fails revalidation: {0}")]
    Invalid(#[from] zeta_core::coset::CosetError),
}

pub struct CachedTables {
    pub table: CosetTable,
    /// Orbit partitions indexed by m.
    pub partitions: Vec<OrbitPartition>,
}

pub fn cache_path(dir: &Path, p: u64, n: u32, case: Case) -> PathBuf {
    dir.join(format!("table_p{p}_n{n}_{case}.zvc"))
}

fn w64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn w32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn store(path: &Path, p: u64, n: u32, case: Case, data: &CachedTables) -> Result<(), CacheError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    w32(&mut out, VERSION);
    w64(&mut out, p);
    w32(&mut out, n);
    out.push(case.legendre() as u8);
    w64(&mut out, data.table.len() as u64);
    for rep in data.table.space.reps() {
        for v in rep.0 {
            w64(&mut out, v);
        }
    }
    w32(&mut out, data.partitions.len() as u32);
    for part in &data.partitions {
        w64(&mut out, part.orbit_of.len() as u64);
        for v in &part.orbit_of {
            w32(&mut out, *v);
        }
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path, p: u64, n: u32, case: Case) -> Result<CachedTables, CacheError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8], CacheError> {
        if *pos + len > buf.len() {
            return Err(CacheError::BadHeader);
        }
        let s = &buf[*pos..*pos + len];
        *pos += len;
        Ok(s)
    };
    if take(&mut pos, 8)? != MAGIC {
        return Err(CacheError::BadHeader);
    }
    let r32 = |pos: &mut usize| -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
    };
    let r64 = |pos: &mut usize| -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(take(pos, 8)?.try_into().unwrap()))
    };
    if r32(&mut pos)? != VERSION {
        return Err(CacheError::BadHeader);
    }
    if r64(&mut pos)? != p || r32(&mut pos)? != n {
        return Err(CacheError::KeyMismatch);
    }
    let case_tag = take(&mut pos, 1)?[0];
    if case_tag != case.legendre() as u8 {
        return Err(CacheError::KeyMismatch);
    }
    let count = r64(&mut pos)? as usize;
    let mut reps = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = [0u64; 16];
        for v in m.iter_mut() {
            *v = r64(&mut pos)?;
        }
        reps.push(Mat4(m));
    }
    let table = CosetTable::from_reps(p, n, reps)?;
    let parts = r32(&mut pos)? as usize;
    let mut partitions = Vec::with_capacity(parts);
    for _ in 0..parts {
        let len = r64(&mut pos)? as usize;
        let mut orbit_of = Vec::with_capacity(len);
        for _ in 0..len {
            orbit_of.push(r32(&mut pos)?);
        }
        partitions.push(OrbitPartition::from_orbit_of(orbit_of));
    }
    Ok(CachedTables { table, partitions })
}
