//! Binary embedding file.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `CFSE` |
//! | 4 | version `u32` (= 1) |
//! | 4 | `d_f` `u32` |
//! | 8 | sample count `u64` |
//! | per record | label `u32`, then `d_f` × `f32` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"CFSE";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 4 + 4 + 4 + 8;

/// Header fields of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub version: u32,
    pub d_f: u32,
    pub sample_count: u64,
}

impl EmbeddingHeader {
    pub fn record_len(&self) -> u64 {
        4 + 4 * u64::from(self.d_f)
    }

    /// Exact file size implied by the header.
    pub fn file_len(&self) -> u64 {
        HEADER_LEN + self.sample_count * self.record_len()
    }
}

fn parse_header(bytes: &[u8]) -> Result<EmbeddingHeader> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN as usize {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            found: bytes.len() as u64,
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let d_f = u32_at(8);
    if d_f == 0 {
        return Err(Error::EmptyInput);
    }
    let sample_count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    Ok(EmbeddingHeader {
        version,
        d_f,
        sample_count,
    })
}

/// Decodes a complete embedding file image.
pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<Dataset<T>> {
    let header = parse_header(bytes)?;
    let found = bytes.len() as u64;
    let expected = header
        .sample_count
        .checked_mul(header.record_len())
        .and_then(|r| r.checked_add(HEADER_LEN))
        .ok_or(Error::TruncatedFile {
            expected: u64::MAX,
            found,
        })?;
    if found < expected {
        return Err(Error::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes {
            extra: found - expected,
        });
    }
    let d_f = header.d_f as usize;
    let mut samples = Vec::with_capacity(header.sample_count as usize);
    for record in bytes[HEADER_LEN as usize..].chunks_exact(header.record_len() as usize) {
        let label = u32::from_le_bytes(record[..4].try_into().expect("4 bytes"));
        let features = record[4..]
            .chunks_exact(4)
            .map(|b| T::lit(f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes")))))
            .collect();
        samples.push(Sample::new(label, features));
    }
    Dataset::new(d_f, samples)
}

/// Encodes a dataset; values are narrowed to `f32`.
pub fn encode<T: Scalar>(data: &Dataset<T>) -> Result<Vec<u8>> {
    let d_f = u32::try_from(data.dim()).map_err(|_| Error::InvalidConfig("d_f exceeds u32".into()))?;
    let header = EmbeddingHeader {
        version: VERSION,
        d_f,
        sample_count: data.len() as u64,
    };
    let mut out = Vec::with_capacity(header.file_len() as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&d_f.to_le_bytes());
    out.extend_from_slice(&header.sample_count.to_le_bytes());
    for s in data.samples() {
        out.extend_from_slice(&s.label.to_le_bytes());
        for &x in &s.features {
            out.extend_from_slice(&(x.as_f64() as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_embeddings<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_embeddings<T: Scalar>(path: impl AsRef<Path>, data: &Dataset<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode(data)?)?;
    w.flush()?;
    Ok(())
}

/// Reads and validates only what `inspect` needs: the header and the size.
pub fn read_header(path: impl AsRef<Path>) -> Result<EmbeddingHeader> {
    let mut file = File::open(path)?;
    let found = file.metadata()?.len();
    let mut buf = Vec::with_capacity(HEADER_LEN as usize);
    (&mut file).take(HEADER_LEN).read_to_end(&mut buf)?;
    let header = parse_header(&buf)?;
    let expected = header.file_len();
    if found < expected {
        return Err(Error::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes {
            extra: found - expected,
        });
    }
    Ok(header)
}
