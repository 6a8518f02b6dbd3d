//! Binary embedding cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic          8 bytes   "ZSHAREMB"
//! version        u32       1
//! model_len      u32
//! model_name     model_len bytes, UTF-8
//! dim            u32
//! records        repeated until EOF:
//!                  digest  32 bytes  SHA-256 of the exact text
//!                  vector  dim × f32 (IEEE-754)
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use super::{Backend, EmbedError, Embedding, EmbeddingProvider, TextDigest, NORM_TOLERANCE};

pub const CACHE_MAGIC: &[u8; 8] = b"ZSHAREMB";
pub const CACHE_VERSION: u32 = 1;

/// Read-only digest → vector table loaded from a cache file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCache {
    pub model_name: String,
    pub dim: usize,
    order: Vec<TextDigest>,
    vectors: HashMap<TextDigest, Vec<f32>>,
}

impl EmbeddingCache {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn get(&self, digest: &TextDigest) -> Option<&[f32]> {
        self.vectors.get(digest).map(Vec::as_slice)
    }

    pub fn get_text(&self, text: &str) -> Option<&[f32]> {
        self.get(&TextDigest::of(text))
    }

    /// Records in file order.
    pub fn iter(&self) -> impl Iterator<Item = (&TextDigest, &[f32])> {
        self.order.iter().map(|d| (d, self.vectors[d].as_slice()))
    }
}

/// Serializes entries; repeated texts keep their first vector.
pub fn write_cache_bytes(
    model_name: &str,
    dim: usize,
    entries: &[(String, Embedding)],
) -> Result<Vec<u8>, EmbedError> {
    let dim32 = u32::try_from(dim).map_err(|_| EmbedError::Config("dim too large".into()))?;
    let mut out = Vec::with_capacity(24 + model_name.len() + entries.len() * (32 + 4 * dim));
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(model_name.len() as u32).to_le_bytes());
    out.extend_from_slice(model_name.as_bytes());
    out.extend_from_slice(&dim32.to_le_bytes());
    let mut seen = std::collections::HashSet::new();
    for (text, emb) in entries {
        if emb.dim() != dim {
            return Err(EmbedError::DimMismatch {
                expected: dim,
                found: emb.dim(),
            });
        }
        let digest = TextDigest::of(text);
        if digest != emb.source_text_hash() {
            return Err(EmbedError::Config(format!(
                "embedding does not belong to text with digest {digest}"
            )));
        }
        if !seen.insert(digest) {
            continue;
        }
        out.extend_from_slice(&digest.0);
        for x in emb.vector() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

/// Writes a cache file. An empty entry list produces a valid header-only cache.
pub fn cache_write(
    path: impl AsRef<Path>,
    model_name: &str,
    dim: usize,
    entries: &[(String, Embedding)],
) -> Result<(), EmbedError> {
    let path = path.as_ref();
    let bytes = write_cache_bytes(model_name, dim, entries)?;
    let io = |source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)?;
    f.sync_all().map_err(io)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], EmbedError> {
        if self.bytes.len() - self.pos < n {
            return Err(corrupt(self.pos, format!("truncated {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, EmbedError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("four bytes")))
    }
}

fn corrupt(offset: usize, reason: impl Into<String>) -> EmbedError {
    EmbedError::CorruptCache {
        offset: offset as u64,
        reason: reason.into(),
    }
}

pub fn read_cache_bytes(bytes: &[u8]) -> Result<EmbeddingCache, EmbedError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8, "magic")? != CACHE_MAGIC {
        return Err(corrupt(0, "bad magic"));
    }
    let version = cur.u32("version")?;
    if version != CACHE_VERSION {
        return Err(corrupt(8, format!("unsupported version {version}")));
    }
    let name_len = cur.u32("model name length")? as usize;
    let name_at = cur.pos;
    let model_name = std::str::from_utf8(cur.take(name_len, "model name")?)
        .map_err(|_| corrupt(name_at, "model name is not UTF-8"))?
        .to_string();
    let dim_at = cur.pos;
    let dim = cur.u32("dim")? as usize;
    if dim == 0 {
        return Err(corrupt(dim_at, "dim is zero"));
    }
    let record_len = 32 + 4 * dim;
    let mut order = Vec::new();
    let mut vectors = HashMap::new();
    while cur.pos < bytes.len() {
        let at = cur.pos;
        if bytes.len() - at < record_len {
            return Err(corrupt(
                at,
                format!(
                    "truncated record: {} bytes left, dim {dim} needs {record_len}",
                    bytes.len() - at
                ),
            ));
        }
        let digest = TextDigest(cur.take(32, "digest")?.try_into().expect("32 bytes"));
        let v: Vec<f32> = cur
            .take(4 * dim, "vector")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
            .collect();
        if !v.iter().all(|x| x.is_finite()) {
            return Err(corrupt(at, "non-finite component"));
        }
        let norm = super::l2_norm(&v);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(corrupt(at, format!("vector norm {norm} is not one")));
        }
        if vectors.insert(digest, v).is_some() {
            return Err(corrupt(at, format!("duplicate record {digest}")));
        }
        order.push(digest);
    }
    Ok(EmbeddingCache {
        model_name,
        dim,
        order,
        vectors,
    })
}

pub fn cache_read(path: impl AsRef<Path>) -> Result<EmbeddingCache, EmbedError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_cache_bytes(&bytes)
}

/// Serves embeddings from a loaded cache; a miss is an error.
#[derive(Debug, Clone)]
pub struct CacheProvider {
    cache: EmbeddingCache,
}

impl CacheProvider {
    /// Checks the cache header against the expected model and dimension.
    pub fn new(cache: EmbeddingCache, model_name: &str, dim: usize) -> Result<Self, EmbedError> {
        if cache.model_name != model_name {
            return Err(EmbedError::ModelMismatch {
                expected: model_name.to_string(),
                found: cache.model_name,
            });
        }
        if cache.dim != dim {
            return Err(EmbedError::DimMismatch {
                expected: dim,
                found: cache.dim,
            });
        }
        Ok(CacheProvider { cache })
    }

    pub fn from_cache(cache: EmbeddingCache) -> Self {
        CacheProvider { cache }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl EmbeddingProvider for CacheProvider {
    fn backend(&self) -> Backend {
        Backend::Cache
    }

    fn model_name(&self) -> &str {
        &self.cache.model_name
    }

    fn dim(&self) -> usize {
        self.cache.dim
    }

    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        let mut missing = Vec::new();
        for t in texts {
            let d = TextDigest::of(t);
            match self.cache.get(&d) {
                Some(v) => out.push(v.to_vec()),
                None => {
                    if !missing.contains(&d) {
                        missing.push(d);
                    }
                }
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(EmbedError::CacheMiss { digests: missing })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::test_embed;

    fn entries(n: usize, dim: usize) -> Vec<(String, Embedding)> {
        (0..n)
            .map(|i| {
                let t = format!("text number {i}");
                let e = test_embed(&t, dim);
                (t, e)
            })
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let es = entries(3, 16);
        let bytes = write_cache_bytes("m", 16, &es).unwrap();
        let cache = read_cache_bytes(&bytes).unwrap();
        assert_eq!(cache.len(), 3);
        assert_eq!(cache.model_name, "m");
        for (t, e) in &es {
            let got = cache.get_text(t).unwrap();
            let same_bits = got
                .iter()
                .zip(e.vector())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same_bits);
        }
        let rewritten: Vec<(String, Embedding)> = es.clone();
        assert_eq!(write_cache_bytes("m", 16, &rewritten).unwrap(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = write_cache_bytes("ab", 3, &[]).unwrap();
        assert_eq!(
            bytes,
            [
                b"ZSHAREMB".as_slice(),
                &1u32.to_le_bytes(),
                &2u32.to_le_bytes(),
                b"ab",
                &3u32.to_le_bytes()
            ]
            .concat()
        );
        let cache = read_cache_bytes(&bytes).unwrap();
        assert!(cache.is_empty());
        assert_eq!(cache.dim, 3);
    }

    #[test]
    fn short_record_is_corrupt_with_offset() {
        // Header claims 768 but the record carries 512 floats.
        let mut bytes = write_cache_bytes("m", 768, &[]).unwrap();
        let header_len = bytes.len();
        let e = test_embed("x", 512);
        bytes.extend_from_slice(&TextDigest::of("x").0);
        for f in e.vector() {
            bytes.extend_from_slice(&f.to_le_bytes());
        }
        match read_cache_bytes(&bytes) {
            Err(EmbedError::CorruptCache { offset, .. }) => assert_eq!(offset, header_len as u64),
            other => panic!("expected corrupt cache, got {other:?}"),
        }
    }

    #[test]
    fn bad_header_is_corrupt() {
        assert!(matches!(
            read_cache_bytes(b"NOTACACHE-------"),
            Err(EmbedError::CorruptCache { offset: 0, .. })
        ));
        let mut bytes = write_cache_bytes("m", 4, &[]).unwrap();
        bytes[8] = 9;
        assert!(matches!(
            read_cache_bytes(&bytes),
            Err(EmbedError::CorruptCache { offset: 8, .. })
        ));
        assert!(read_cache_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn non_unit_record_rejected() {
        let mut bytes = write_cache_bytes("m", 2, &[]).unwrap();
        bytes.extend_from_slice(&[0u8; 32]);
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        bytes.extend_from_slice(&0.0f32.to_le_bytes());
        assert!(matches!(
            read_cache_bytes(&bytes),
            Err(EmbedError::CorruptCache { .. })
        ));
    }

    #[test]
    fn mixed_dims_rejected_on_write() {
        let mut es = entries(1, 8);
        es.push(("other".into(), test_embed("other", 4)));
        assert!(matches!(
            write_cache_bytes("m", 8, &es),
            Err(EmbedError::DimMismatch { .. })
        ));
    }

    #[test]
    fn provider_hits_and_misses() {
        let es = entries(2, 8);
        let cache = read_cache_bytes(&write_cache_bytes("m", 8, &es).unwrap()).unwrap();
        let p = CacheProvider::new(cache.clone(), "m", 8).unwrap();
        let got = p.embed_batch(&[es[1].0.clone(), es[0].0.clone()]).unwrap();
        assert_eq!(got[0].source_text_hash(), TextDigest::of(&es[1].0));
        match p.embed_batch(&["absent".into(), "absent".into()]) {
            Err(EmbedError::CacheMiss { digests }) => {
                assert_eq!(digests, vec![TextDigest::of("absent")])
            }
            other => panic!("expected miss, got {other:?}"),
        }
        assert!(matches!(
            CacheProvider::new(cache.clone(), "other", 8),
            Err(EmbedError::ModelMismatch { .. })
        ));
        assert!(matches!(
            CacheProvider::new(cache, "m", 9),
            Err(EmbedError::DimMismatch { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let es = entries(3, 8);
        cache_write(&path, "m", 8, &es).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes, write_cache_bytes("m", 8, &es).unwrap());
        assert_eq!(cache_read(&path).unwrap().len(), 3);
    }
}
