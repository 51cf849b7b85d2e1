//! Binary container for [`EmbeddingModel`]: magic, version, a JSON header
//! with dimensions and config, the token table, then row-major
//! little-endian `f32` document and context matrices.

use serde::{Deserialize, Serialize};

use super::{EmbedConfig, EmbeddingModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SOCPVEC\0";
pub const EMBEDDING_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    doc_count: usize,
    vocab_size: usize,
    config: EmbedConfig,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Schema("embedding container is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::Schema("matrix too large".into()))?,
        )?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Schema(
                "embedding matrix contains non-finite values".into(),
            ));
        }
        Ok(values)
    }
}

impl EmbeddingModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            dim: self.config.dim,
            doc_count: self.doc_count(),
            vocab_size: self.tokens.len(),
            config: self.config,
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(
            16 + header.len() + 4 * (self.doc_vectors.len() + self.context_vectors.len()),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&EMBEDDING_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (token, count) in self.tokens.iter().zip(&self.counts) {
            out.extend_from_slice(&(token.len() as u32).to_le_bytes());
            out.extend_from_slice(token.as_bytes());
            out.extend_from_slice(&count.to_le_bytes());
        }
        for x in self.doc_vectors.iter().chain(&self.context_vectors) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Schema("not an embedding container".into()));
        }
        let version = cur.u32()?;
        if version > EMBEDDING_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: EMBEDDING_FORMAT_VERSION,
            });
        }
        let header_len = cur.u32()? as usize;
        let header: Header = serde_json::from_slice(cur.take(header_len)?)?;
        header.config.validate()?;
        if header.dim != header.config.dim {
            return Err(Error::Schema("header dim disagrees with config".into()));
        }
        let mut tokens = Vec::with_capacity(header.vocab_size);
        let mut counts = Vec::with_capacity(header.vocab_size);
        for _ in 0..header.vocab_size {
            let len = cur.u32()? as usize;
            let token = std::str::from_utf8(cur.take(len)?)
                .map_err(|_| Error::Schema("token is not UTF-8".into()))?;
            tokens.push(token.to_string());
            counts.push(cur.u64()?);
        }
        let doc_vectors = cur.f32s(header.doc_count * header.dim)?;
        let context_vectors = cur.f32s(header.vocab_size * header.dim)?;
        if cur.pos != bytes.len() {
            return Err(Error::Schema(
                "trailing bytes after embedding matrices".into(),
            ));
        }
        Ok(EmbeddingModel::from_parts(
            header.config,
            tokens,
            counts,
            doc_vectors,
            context_vectors,
        ))
    }
}
