//! Reference solutions shared between sweep points, in memory and optionally
//! on disk.
//!
//! On-disk layout (little endian): magic `NKGEREF1`, `u64` M, `f64` T, `f64`
//! eps, `f64` beta, `u64` key length, key bytes, M `f64` values, then the
//! SHA-256 of the value bytes.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"NKGEREF1";

/// Everything that determines a reference solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceKey {
    pub preset: String,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub beta: f64,
    /// Final time in the standard (unscaled) time variable.
    pub t_final: f64,
    pub m: usize,
    pub tau: f64,
}

impl ReferenceKey {
    /// Canonical text form; floats are written as exact bit patterns.
    pub fn canonical(&self) -> String {
        format!(
            "{}|{:016x}|{:016x}|{:016x}|{:016x}|{:016x}|{}|{:016x}",
            self.preset,
            self.a.to_bits(),
            self.b.to_bits(),
            self.eps.to_bits(),
            self.beta.to_bits(),
            self.t_final.to_bits(),
            self.m,
            self.tau.to_bits()
        )
    }

    fn file_name(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let hex: String = digest[..12].iter().map(|b| format!("{b:02x}")).collect();
        format!("ref-{hex}.bin")
    }
}

fn checksum(values: &[f64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Writes `values` for `key` to `path` through a temporary file and a rename.
pub fn write_reference(path: &Path, key: &ReferenceKey, values: &[f64]) -> Result<()> {
    if values.len() != key.m {
        return Err(Error::structural(format!(
            "reference has {} values, key says M = {}",
            values.len(),
            key.m
        )));
    }
    let canonical = key.canonical();
    let mut buf = Vec::with_capacity(64 + canonical.len() + 8 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(key.m as u64).to_le_bytes());
    buf.extend_from_slice(&key.t_final.to_le_bytes());
    buf.extend_from_slice(&key.eps.to_le_bytes());
    buf.extend_from_slice(&key.beta.to_le_bytes());
    buf.extend_from_slice(&(canonical.len() as u64).to_le_bytes());
    buf.extend_from_slice(canonical.as_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&checksum(values));

    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&buf)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a reference file. Returns `Ok(None)` when the file belongs to a
/// different key and an error when it is damaged.
pub fn read_reference(path: &Path, key: &ReferenceKey) -> Result<Option<Vec<f64>>> {
    let bytes = fs::read(path)?;
    let corrupt = |what: &str| Error::config(format!("reference cache {}: {what}", path.display()));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let slice = bytes.get(pos..pos + n).ok_or_else(|| corrupt("truncated"))?;
        pos += n;
        Ok(slice)
    };
    let word = |s: &[u8]| -> [u8; 8] { s.try_into().expect("8-byte slice") };
    if take(8)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let m = u64::from_le_bytes(word(take(8)?)) as usize;
    let _t = f64::from_le_bytes(word(take(8)?));
    let _eps = f64::from_le_bytes(word(take(8)?));
    let _beta = f64::from_le_bytes(word(take(8)?));
    let key_len = u64::from_le_bytes(word(take(8)?)) as usize;
    let stored_key = take(key_len)?.to_vec();
    if stored_key != key.canonical().as_bytes() || m != key.m {
        return Ok(None);
    }
    let mut values = Vec::with_capacity(m);
    for _ in 0..m {
        values.push(f64::from_le_bytes(word(take(8)?)));
    }
    let stored_sum = take(32)?.to_vec();
    if stored_sum != checksum(&values) {
        return Err(corrupt("checksum mismatch"));
    }
    Ok(Some(values))
}

/// Process-wide store of computed references, optionally persisted in `dir`.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    dir: Option<PathBuf>,
    entries: Mutex<Vec<(ReferenceKey, Arc<Vec<f64>>)>>,
    hits: Mutex<HashMap<String, usize>>,
}

impl ReferenceCache {
    pub fn in_memory() -> Self {
        ReferenceCache::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ReferenceCache {
            dir: Some(dir),
            ..ReferenceCache::default()
        })
    }

    pub fn path_for(&self, key: &ReferenceKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(key.file_name()))
    }

    fn lookup(&self, key: &ReferenceKey) -> Option<Arc<Vec<f64>>> {
        let entries = self.entries.lock().expect("cache lock");
        entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone())
    }

    /// Number of times `key` was served without recomputation.
    pub fn hits(&self, key: &ReferenceKey) -> usize {
        let hits = self.hits.lock().expect("cache lock");
        hits.get(&key.canonical()).copied().unwrap_or(0)
    }

    fn record_hit(&self, key: &ReferenceKey) {
        let mut hits = self.hits.lock().expect("cache lock");
        *hits.entry(key.canonical()).or_insert(0) += 1;
    }

    /// Returns the cached values for `key`, computing (and persisting) them on a miss.
    pub fn get_or_compute(
        &self,
        key: &ReferenceKey,
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.lookup(key) {
            self.record_hit(key);
            return Ok(v);
        }
        let path = self.path_for(key);
        let values = match &path {
            Some(p) if p.exists() => match read_reference(p, key)? {
                Some(v) => {
                    self.record_hit(key);
                    v
                }
                None => compute()?,
            },
            _ => compute()?,
        };
        if values.len() != key.m {
            return Err(Error::structural(format!(
                "reference has {} values, expected {}",
                values.len(),
                key.m
            )));
        }
        if let Some(p) = &path {
            if !p.exists() {
                write_reference(p, key, &values)?;
            }
        }
        let values = Arc::new(values);
        let mut entries = self.entries.lock().expect("cache lock");
        if let Some((_, existing)) = entries.iter().find(|(k, _)| k == key) {
            return Ok(existing.clone());
        }
        entries.push((key.clone(), values.clone()));
        Ok(values)
    }
}
