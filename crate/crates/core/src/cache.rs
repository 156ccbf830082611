//! Content-addressed result cache and the binary matrix grid format.
//!
//! Grid layout (little endian): magic `FLTGRID1`, `u64` size, `u64` level,
//! 32-byte SHA-256 of the payload, then `size * size` `f64` values row-major.
//! Files are named by the SHA-256 of the key material and never evicted
//! automatically.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{structural, Result};
use crate::mmspace::SemimetricMatrix;

const MAGIC: &[u8; 8] = b"FLTGRID1";

/// A matrix with the filtration level it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMatrix {
    pub level: u64,
    pub size: usize,
    pub d: Vec<f64>,
}

impl LevelMatrix {
    pub fn new(level: u64, m: &SemimetricMatrix) -> Self {
        LevelMatrix {
            level,
            size: m.size(),
            d: m.as_slice().to_vec(),
        }
    }

    pub fn matrix(&self) -> Result<SemimetricMatrix> {
        SemimetricMatrix::new(self.size, self.d.clone())
    }
}

pub fn write_grid<W: Write>(mut w: W, m: &LevelMatrix) -> Result<()> {
    let mut payload = Vec::with_capacity(m.d.len() * 8);
    for v in &m.d {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(MAGIC)?;
    w.write_all(&(m.size as u64).to_le_bytes())?;
    w.write_all(&m.level.to_le_bytes())?;
    w.write_all(&Sha256::digest(&payload))?;
    w.write_all(&payload)?;
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R) -> Result<LevelMatrix> {
    let mut head = [0u8; 8 + 8 + 8 + 32];
    r.read_exact(&mut head)?;
    if &head[..8] != MAGIC {
        return Err(structural("not a matrix grid (bad magic)"));
    }
    let size = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let level = u64::from_le_bytes(head[16..24].try_into().unwrap());
    let len = size
        .checked_mul(size)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| structural("grid size overflows"))?;
    let mut payload = Vec::with_capacity(len);
    r.take(len as u64).read_to_end(&mut payload)?;
    if payload.len() != len {
        return Err(structural(format!(
            "truncated grid: {} of {len} payload bytes",
            payload.len()
        )));
    }
    if Sha256::digest(&payload).as_slice() != &head[24..56] {
        return Err(structural("grid checksum mismatch"));
    }
    let d = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(LevelMatrix { level, size, d })
}

/// Hex SHA-256 of the JSON encoding of `material`.
pub fn content_key<T: Serialize>(material: &T) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(material)?)))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{key}.{ext}"))
    }

    /// Cached grid under `key`, if present and intact. A corrupt entry is
    /// treated as a miss.
    pub fn load_grid(&self, key: &str) -> Option<LevelMatrix> {
        let f = fs::File::open(self.path(key, "grid")).ok()?;
        read_grid(std::io::BufReader::new(f)).ok()
    }

    pub fn store_grid(&self, key: &str, m: &LevelMatrix) -> Result<()> {
        let mut buf = Vec::new();
        write_grid(&mut buf, m)?;
        write_atomic(&self.path(key, "grid"), &buf)
    }

    pub fn load_json<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let bytes = fs::read(self.path(key, "json")).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn store_json<T: Serialize>(&self, key: &str, value: &T) -> Result<()> {
        write_atomic(&self.path(key, "json"), &serde_json::to_vec(value)?)
    }
}
