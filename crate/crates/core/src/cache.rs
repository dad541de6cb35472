//! On-disk cache of eigendecompositions keyed by model parameters.
//!
//! File layout (little-endian): magic, key digest, dimension as `u64`,
//! eigenvalues, column-major eigenvectors, then a SHA-256 of everything
//! before it. The key digest folds in [`SOLVER_VERSION`], so entries written
//! by an older solver never match.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};

/// Bump whenever the eigensolver output can change.
pub const SOLVER_VERSION: u32 = 1;

pub const CACHE_ENV: &str = "BOSEWELL_CACHE";

const MAGIC: &[u8; 8] = b"BWSPEC\x00\x01";
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey([u8; DIGEST_LEN]);

impl CacheKey {
    pub fn new(n_particles: usize, j_over_u: f64, delta_over_u: f64) -> Self {
        Self::with_version(n_particles, j_over_u, delta_over_u, SOLVER_VERSION)
    }

    pub fn with_version(
        n_particles: usize,
        j_over_u: f64,
        delta_over_u: f64,
        version: u32,
    ) -> Self {
        let mut h = Sha256::new();
        h.update(b"bosewell-spectrum");
        h.update((n_particles as u64).to_le_bytes());
        h.update(j_over_u.to_bits().to_le_bytes());
        h.update(delta_over_u.to_bits().to_le_bytes());
        h.update(version.to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }

    fn file_name(&self) -> String {
        format!("spectrum-{}.bin", self.hex())
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache rooted at `explicit`, else at `$BOSEWELL_CACHE`, else none.
    pub fn from_option_or_env(explicit: Option<&Path>) -> Option<Self> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .filter(|p| !p.as_os_str().is_empty())
            .map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn cache_spectrum(&self, key: &CacheKey, spectrum: &Spectrum) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let bytes = encode(key, spectrum);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        let path = self.path_for(key);
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        Ok(path)
    }

    /// `Ok(None)` on a miss; `Err(Error::Cache)` when the file is unreadable
    /// as a spectrum for this key.
    pub fn load_spectrum(&self, key: &CacheKey) -> Result<Option<Spectrum>> {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        decode(key, &bytes).map(Some)
    }

    /// Load, or compute and store. A corrupt entry is reported on stderr and
    /// overwritten; a failed store is reported and otherwise ignored.
    pub fn load_or_compute(
        &self,
        key: &CacheKey,
        compute: impl FnOnce() -> Result<Spectrum>,
    ) -> Result<Spectrum> {
        match self.load_spectrum(key) {
            Ok(Some(s)) => return Ok(s),
            Ok(None) => {}
            Err(e) => eprintln!(
                "warning: ignoring cache entry {}: {e}",
                self.path_for(key).display()
            ),
        }
        let spectrum = compute()?;
        if let Err(e) = self.cache_spectrum(key, &spectrum) {
            eprintln!("warning: could not write cache entry: {e}");
        }
        Ok(spectrum)
    }
}

fn encode(key: &CacheKey, spectrum: &Spectrum) -> Vec<u8> {
    let n = spectrum.dim();
    let mut out = Vec::with_capacity(MAGIC.len() + 2 * DIGEST_LEN + 8 + 8 * n * (n + 1));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&key.0);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for x in spectrum
        .values()
        .iter()
        .chain(spectrum.vectors_column_major())
    {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let checksum = Sha256::digest(&out);
    out.extend_from_slice(&checksum);
    out
}

fn decode(key: &CacheKey, bytes: &[u8]) -> Result<Spectrum> {
    let corrupt = |why: &str| Error::Cache(why.to_string());
    let header = MAGIC.len() + DIGEST_LEN + 8;
    if bytes.len() < header + DIGEST_LEN {
        return Err(corrupt("file truncated"));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(corrupt("checksum mismatch"));
    }
    if &body[..MAGIC.len()] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    if body[MAGIC.len()..MAGIC.len() + DIGEST_LEN] != key.0 {
        return Err(corrupt("key mismatch"));
    }
    let dim_bytes: [u8; 8] = body[header - 8..header].try_into().unwrap();
    let n = usize::try_from(u64::from_le_bytes(dim_bytes)).map_err(|_| corrupt("bad dimension"))?;
    let expected = n
        .checked_mul(n + 1)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| corrupt("bad dimension"))?;
    if body.len() - header != expected {
        return Err(corrupt("length does not match dimension"));
    }
    let mut reals = body[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let values: Vec<f64> = reals.by_ref().take(n).collect();
    let vectors: Vec<f64> = reals.collect();
    Spectrum::from_parts(values, vectors).map_err(|e| Error::Cache(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::eigh_tridiagonal;
    use crate::model::{build_hamiltonian, ModelParams};

    fn small_spectrum() -> Spectrum {
        eigh_tridiagonal(&build_hamiltonian(&ModelParams::symmetric(6, 0.7).unwrap())).unwrap()
    }

    #[test]
    fn keys_separate_every_field() {
        let base = CacheKey::new(100, 3.333, 0.0);
        assert_eq!(base, CacheKey::new(100, 3.333, 0.0));
        assert_ne!(base, CacheKey::new(101, 3.333, 0.0));
        assert_ne!(base, CacheKey::new(100, 3.334, 0.0));
        assert_ne!(base, CacheKey::new(100, 3.333, -0.0));
        assert_ne!(
            base,
            CacheKey::with_version(100, 3.333, 0.0, SOLVER_VERSION + 1)
        );
        assert_eq!(base.hex().len(), 64);
    }

    #[test]
    fn encode_decode_round_trip() {
        let s = small_spectrum();
        let key = CacheKey::new(6, 0.7, 0.0);
        let back = decode(&key, &encode(&key, &s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn decode_rejects_damage() {
        let s = small_spectrum();
        let key = CacheKey::new(6, 0.7, 0.0);
        let bytes = encode(&key, &s);
        let mut flipped = bytes.clone();
        flipped[100] ^= 1;
        assert!(matches!(decode(&key, &flipped), Err(Error::Cache(_))));
        assert!(matches!(decode(&key, &bytes[..50]), Err(Error::Cache(_))));
        let other = CacheKey::new(6, 0.8, 0.0);
        assert!(matches!(decode(&other, &bytes), Err(Error::Cache(_))));
    }
}
