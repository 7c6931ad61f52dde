//! Versioned, checksummed binary container for pipeline artifacts.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 8    | magic `VIDVOTE\0`                  |
//! | 8      | 4    | format version (u32)               |
//! | 12     | 4    | type tag (u32)                     |
//! | 16     | 8    | payload length in bytes (u64)      |
//! | 24     | 4    | CRC-32 (IEEE) of the payload (u32) |
//! | 28     | n    | payload                            |
//!
//! Payloads are sequences of u32 dimensions, u64 seeds, IEEE-754 f64 reals
//! and length-prefixed (u32) UTF-8 strings, in the order documented on each
//! artifact type.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"VIDVOTE\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 28;

/// Type tags of the persisted artifact kinds.
pub mod tag {
    pub const CODEBOOK: u32 = 1;
    pub const CHANNEL_MODEL: u32 = 2;
    pub const EVAL_REPORT: u32 = 3;
    pub const DESCRIPTOR_DUMP: u32 = 4;
    pub const PCA_PROJECTION: u32 = 5;
    pub const VIDEO_FEATURES: u32 = 6;
}

/// A value that can be stored in the artifact container.
pub trait Artifact: Sized {
    const TAG: u32;
    const NAME: &'static str;

    fn encode(&self, w: &mut PayloadWriter);
    fn decode(r: &mut PayloadReader<'_>) -> Result<Self>;
}

#[derive(Default)]
pub struct PayloadWriter {
    buf: Vec<u8>,
}

impl PayloadWriter {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    /// Writes a length or dimension, which must fit in 32 bits.
    pub fn dim(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("dimension exceeds u32"));
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn str(&mut self, s: &str) {
        self.dim(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct PayloadReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        PayloadReader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corruption("payload ends early".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn dim(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::Corruption("real array length overflows".into())
        })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.dim()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Corruption("string field is not UTF-8".into()))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::Corruption(format!(
                "{} trailing payload bytes",
                self.buf.len() - self.pos
            )))
        }
    }
}

/// Serializes an artifact into container bytes.
pub fn to_bytes<A: Artifact>(artifact: &A) -> Vec<u8> {
    let mut w = PayloadWriter::default();
    artifact.encode(&mut w);
    let payload = w.into_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&A::TAG.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

/// Parses container bytes, verifying magic, version, tag, length and checksum.
pub fn from_bytes<A: Artifact>(bytes: &[u8]) -> Result<A> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corruption(format!(
            "{} bytes is shorter than the container header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("not a vidvote artifact (bad magic)".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(8);
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let found_tag = word(12);
    if found_tag != A::TAG {
        return Err(Error::Format(format!(
            "artifact has type tag {found_tag}, expected {} ({})",
            A::TAG,
            A::NAME
        )));
    }
    let len = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let crc = word(24);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != len {
        return Err(Error::Corruption(format!(
            "payload is {} bytes, header declares {len}",
            payload.len()
        )));
    }
    if crc32fast::hash(payload) != crc {
        return Err(Error::Corruption("checksum mismatch".into()));
    }
    let mut r = PayloadReader::new(payload);
    let value = A::decode(&mut r)?;
    r.finish()?;
    Ok(value)
}

pub fn store_artifact<A: Artifact>(artifact: &A, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, to_bytes(artifact)).map_err(|e| Error::io(path, e))
}

pub fn load_artifact<A: Artifact>(path: &Path) -> Result<A> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// A row-major matrix of local descriptors, the payload of a descriptor dump:
/// count (u32), dim (u32), then `count * dim` reals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DescriptorSet {
    dim: usize,
    data: Vec<f64>,
}

impl DescriptorSet {
    pub fn new(dim: usize) -> Self {
        DescriptorSet {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Contract(format!(
                "{} reals do not form rows of dimension {dim}",
                data.len()
            )));
        }
        Ok(DescriptorSet { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "descriptor dimension");
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn extend(&mut self, other: &DescriptorSet) {
        assert_eq!(other.dim, self.dim, "descriptor dimension");
        self.data.extend_from_slice(&other.data);
    }
}

impl Artifact for DescriptorSet {
    const TAG: u32 = tag::DESCRIPTOR_DUMP;
    const NAME: &'static str = "descriptor dump";

    fn encode(&self, w: &mut PayloadWriter) {
        w.dim(self.len());
        w.dim(self.dim);
        w.f64s(&self.data);
    }

    fn decode(r: &mut PayloadReader<'_>) -> Result<Self> {
        let count = r.dim()?;
        let dim = r.dim()?;
        let data = r.f64s(count.checked_mul(dim).ok_or_else(|| {
            Error::Corruption("descriptor dump size overflows".into())
        })?)?;
        Ok(DescriptorSet { dim, data })
    }
}
