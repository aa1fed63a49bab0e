//! Single-file container for a [`TrainedModel`].
//!
//! ```text
//! b"SPRINTM1" | header length (u64 LE) | JSON header | payload
//! ```
//!
//! The payload is `W` (row-major, `f x p`), then `b` (`p`), then `V`
//! (row-major, `LH x p`), each entry a little-endian IEEE-754 f64. The
//! header records dimensions, catalog, training config (seed included),
//! loss trace, payload length and the SHA-256 of the payload.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SprintError};
use crate::outcomes::HeadCatalog;
use crate::trainer::{HeadEmbeddings, LossPoint, QuestionEncoder, SprintParams, TrainConfig, TrainedModel};

pub const MAGIC: &[u8; 8] = b"SPRINTM1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    feature_dim: usize,
    embed_dim: usize,
    num_heads: usize,
    seed: u64,
    config: TrainConfig,
    catalog: HeadCatalog,
    excluded_questions: usize,
    loss_trace: Vec<LossPoint>,
    payload_bytes: usize,
    checksum: String,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

pub fn model_to_bytes(model: &TrainedModel) -> Vec<u8> {
    let enc = &model.params.encoder;
    let emb = &model.params.embeddings;
    let mut payload = Vec::with_capacity(8 * (enc.weight.len() + enc.bias.len() + emb.vectors.len()));
    for v in enc.weight.iter().chain(enc.bias.iter()).chain(emb.vectors.iter()) {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        feature_dim: enc.feature_dim(),
        embed_dim: enc.embed_dim(),
        num_heads: emb.num_heads(),
        seed: model.config.seed,
        config: model.config,
        catalog: model.catalog.clone(),
        excluded_questions: model.excluded_questions,
        loss_trace: model.loss_trace.clone(),
        payload_bytes: payload.len(),
        checksum: hex::encode(Sha256::digest(&payload)),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(SprintError::BadMagic("missing SPRINTM1 magic".into()));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let header_bytes = bytes
        .get(16..16usize.saturating_add(header_len))
        .ok_or(SprintError::Checksum)?;
    // Check the version before the full schema so newer files get a clear error.
    let probe: VersionProbe = serde_json::from_slice(header_bytes).map_err(|_| SprintError::Checksum)?;
    if probe.format_version != FORMAT_VERSION {
        return Err(SprintError::FormatVersion {
            found: probe.format_version,
            supported: FORMAT_VERSION,
        });
    }
    let header: Header =
        serde_json::from_slice(header_bytes).map_err(|e| SprintError::parse("model header", e))?;
    let payload = &bytes[16 + header_len..];
    if payload.len() != header.payload_bytes || hex::encode(Sha256::digest(payload)) != header.checksum {
        return Err(SprintError::Checksum);
    }
    let (f, p, lh) = (header.feature_dim, header.embed_dim, header.num_heads);
    if payload.len() != 8 * (f * p + p + lh * p) || header.catalog.len() != lh {
        return Err(SprintError::parse("model header", "dimensions do not match payload"));
    }
    let mut floats = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |count: usize| floats.by_ref().take(count).collect::<Vec<f64>>();
    let weight = Array2::from_shape_vec((f, p), take(f * p)).expect("sized");
    let bias = Array1::from(take(p));
    let vectors = Array2::from_shape_vec((lh, p), take(lh * p)).expect("sized");
    Ok(TrainedModel {
        params: SprintParams {
            encoder: QuestionEncoder::new(weight, bias)?,
            embeddings: HeadEmbeddings { vectors },
        },
        catalog: header.catalog,
        config: header.config,
        loss_trace: header.loss_trace,
        excluded_questions: header.excluded_questions,
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(model)).map_err(|e| SprintError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SprintError::io(path, e))?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use crate::trainer::LossPoint;

    fn model() -> TrainedModel {
        TrainedModel {
            params: SprintParams::random(3, 2, 4, 0.1, &mut rng_for(1, "t")),
            catalog: HeadCatalog::grid(&[5, 10], 2).unwrap(),
            config: TrainConfig::default(),
            loss_trace: vec![LossPoint {
                step: 0,
                loss: 1.0 / 3.0,
                alignment: 0.1 + 0.2,
            }],
            excluded_questions: 2,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = model_to_bytes(&m);
        assert_eq!(&bytes[..8], b"SPRINTM1");
        assert_eq!(model_from_bytes(&bytes).unwrap(), m);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sprint");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let bytes = model_to_bytes(&model());
        for cut in [bytes.len() - 1, bytes.len() - 9, 40] {
            assert!(matches!(model_from_bytes(&bytes[..cut]), Err(SprintError::Checksum)), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        let last = flipped.len() - 1;
        flipped[last] ^= 1;
        assert!(matches!(model_from_bytes(&flipped), Err(SprintError::Checksum)));
    }

    #[test]
    fn unknown_version_is_reported() {
        let bytes = model_to_bytes(&model());
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[16..16 + header_len]).unwrap();
        let bumped = header.replacen("\"format_version\":1", "\"format_version\":7", 1);
        let mut out = bytes[..8].to_vec();
        out.extend_from_slice(&(bumped.len() as u64).to_le_bytes());
        out.extend_from_slice(bumped.as_bytes());
        out.extend_from_slice(&bytes[16 + header_len..]);
        let err = model_from_bytes(&out).unwrap_err();
        assert!(matches!(err, SprintError::FormatVersion { found: 7, supported: 1 }));
        assert!(err.to_string().contains("version 7"));
    }

    #[test]
    fn wrong_magic() {
        assert!(matches!(model_from_bytes(b"NOTAMODEL......."), Err(SprintError::BadMagic(_))));
    }
}
