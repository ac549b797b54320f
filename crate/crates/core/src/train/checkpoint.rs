//! Versioned binary checkpoints.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header (dtype, config, vocabulary, tensor names and shapes, payload size
//! and SHA-256), then every tensor's values in little-endian order.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ModelConfig, ModelParameters, ParamSet, Vocab};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"SPANDFL\0";
pub const FORMAT_VERSION: u32 = 1;

const PREFIX_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("truncated checkpoint: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint holds {found} values, requested {requested}")]
    DType {
        found: String,
        requested: &'static str,
    },
    #[error("tensor {name}: stored shape {stored:?}, config implies {expected:?}")]
    Shape {
        name: String,
        stored: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("payload checksum mismatch")]
    Checksum,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dtype: String,
    config: ModelConfig,
    vocab: Vocab,
    tensors: Vec<TensorEntry>,
    payload_bytes: usize,
    sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn checkpoint_bytes<S: Scalar>(params: &ModelParameters<S>) -> Vec<u8> {
    let named = params.weights.named();
    let mut payload = Vec::with_capacity(params.weights.num_values() * S::BYTES);
    for (_, t) in &named {
        for &v in t.iter() {
            v.write_le(&mut payload);
        }
    }
    let header = Header {
        dtype: S::DTYPE.to_string(),
        config: params.config.clone(),
        vocab: params.vocab.clone(),
        tensors: named
            .iter()
            .map(|(n, t)| TensorEntry {
                name: n.clone(),
                shape: t.shape().to_vec(),
            })
            .collect(),
        payload_bytes: payload.len(),
        sha256: hex(&Sha256::digest(&payload)),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(PREFIX_LEN + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

fn take(bytes: &[u8], at: usize, n: usize) -> Result<&[u8], CheckpointError> {
    bytes
        .get(at..at.saturating_add(n))
        .ok_or(CheckpointError::Truncated {
            needed: at.saturating_add(n),
            have: bytes.len(),
        })
}

pub fn checkpoint_from_bytes<S: Scalar>(
    bytes: &[u8],
) -> Result<ModelParameters<S>, CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(take(bytes, 8, 4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version { found: version });
    }
    let header_len = u64::from_le_bytes(take(bytes, 12, 8)?.try_into().unwrap());
    let header_len = usize::try_from(header_len)
        .map_err(|_| CheckpointError::Header("header length overflows".into()))?;
    let header: Header = serde_json::from_slice(take(bytes, PREFIX_LEN, header_len)?)
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    if header.dtype != S::DTYPE {
        return Err(CheckpointError::DType {
            found: header.dtype,
            requested: S::DTYPE,
        });
    }
    header.config.validate().map_err(CheckpointError::Header)?;
    let start = PREFIX_LEN + header_len;
    let payload = take(bytes, start, header.payload_bytes)?;
    if bytes.len() != start + header.payload_bytes {
        return Err(CheckpointError::Header(format!(
            "{} trailing bytes after payload",
            bytes.len() - start - header.payload_bytes
        )));
    }
    if hex(&Sha256::digest(payload)) != header.sha256 {
        return Err(CheckpointError::Checksum);
    }

    let mut weights = ParamSet::<S>::zeros(&header.config, header.vocab.len());
    let mut slots = weights.named_mut();
    if slots.len() != header.tensors.len() {
        return Err(CheckpointError::Header(format!(
            "{} tensors stored, config implies {}",
            header.tensors.len(),
            slots.len()
        )));
    }
    let mut offset = 0;
    for ((name, t), entry) in slots.iter_mut().zip(&header.tensors) {
        if *name != entry.name || t.shape() != entry.shape.as_slice() {
            return Err(CheckpointError::Shape {
                name: entry.name.clone(),
                stored: entry.shape.clone(),
                expected: t.shape().to_vec(),
            });
        }
        for v in t.iter_mut() {
            let chunk =
                payload
                    .get(offset..offset + S::BYTES)
                    .ok_or(CheckpointError::Truncated {
                        needed: start + offset + S::BYTES,
                        have: bytes.len(),
                    })?;
            *v = S::read_le(chunk);
            offset += S::BYTES;
        }
    }
    drop(slots);
    if offset != payload.len() {
        return Err(CheckpointError::Header(format!(
            "payload holds {} bytes, tensors need {offset}",
            payload.len()
        )));
    }
    Ok(ModelParameters {
        config: header.config,
        vocab: header.vocab,
        weights,
    })
}

pub fn save_checkpoint<S: Scalar>(
    params: &ModelParameters<S>,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    fs::write(path, checkpoint_bytes(params))?;
    Ok(())
}

pub fn load_checkpoint<S: Scalar>(
    path: impl AsRef<Path>,
) -> Result<ModelParameters<S>, CheckpointError> {
    checkpoint_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model<S: Scalar>() -> ModelParameters<S> {
        let cfg = ModelConfig {
            embed_dim: 3,
            hidden_dim: 4,
            length_dim: 2,
            max_span_len: 3,
            ..ModelConfig::default()
        };
        let vocab = Vocab::from(vec!["uh".to_string(), "the".to_string()]);
        ModelParameters::init(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(3))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = model::<f64>();
        let back: ModelParameters<f64> = checkpoint_from_bytes(&checkpoint_bytes(&p)).unwrap();
        assert_eq!(back, p);
        let p = model::<f32>();
        let back: ModelParameters<f32> = checkpoint_from_bytes(&checkpoint_bytes(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let p = model::<f64>();
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint::<f64>(&path).unwrap(), p);
    }

    #[test]
    fn corrupted_version_is_reported() {
        let mut bytes = checkpoint_bytes(&model::<f64>());
        bytes[8] = 0xEE;
        assert!(matches!(
            checkpoint_from_bytes::<f64>(&bytes),
            Err(CheckpointError::Version { .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(
            checkpoint_from_bytes::<f64>(&bytes),
            Err(CheckpointError::BadMagic)
        ));
    }

    #[test]
    fn truncation_is_reported() {
        let bytes = checkpoint_bytes(&model::<f64>());
        for cut in [10, 30, bytes.len() - 1] {
            let err = checkpoint_from_bytes::<f64>(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(
                    err,
                    CheckpointError::Truncated { .. } | CheckpointError::Header(_)
                ),
                "cut {cut}: {err}"
            );
        }
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let mut bytes = checkpoint_bytes(&model::<f64>());
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert!(matches!(
            checkpoint_from_bytes::<f64>(&bytes),
            Err(CheckpointError::Checksum)
        ));
    }

    #[test]
    fn dtype_mismatch() {
        let bytes = checkpoint_bytes(&model::<f64>());
        assert!(matches!(
            checkpoint_from_bytes::<f32>(&bytes),
            Err(CheckpointError::DType { .. })
        ));
    }
}
