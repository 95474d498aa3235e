//! Model file container.
//!
//! Layout (little endian): `b"WPMD"`, `u16` version, `u8` kind tag,
//! `u32` length + schema JSON, `u32` length + parameter JSON (parameters and
//! training metadata), then a CRC-32 of every preceding byte.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelParams, TrainingMeta, WinProbError, WinProbModel};
use crate::features::FeatureSchema;

pub const MODEL_FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"WPMD";

#[derive(Serialize, Deserialize)]
struct Payload {
    params: ModelParams,
    meta: TrainingMeta,
}

pub fn write_model(model: &WinProbModel, out: &mut impl Write) -> Result<(), WinProbError> {
    let schema = serde_json::to_vec(&model.schema).expect("schemas serialize");
    let payload = serde_json::to_vec(&Payload {
        params: model.params.clone(),
        meta: model.meta.clone(),
    })
    .expect("model parameters serialize");
    let mut buf = Vec::with_capacity(schema.len() + payload.len() + 32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    buf.push(model.kind().tag());
    for blob in [&schema, &payload] {
        buf.extend_from_slice(&(blob.len() as u32).to_le_bytes());
        buf.extend_from_slice(blob);
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_model(input: &mut impl Read) -> Result<WinProbModel, WinProbError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() < 4 || &buf[..4] != MAGIC {
        return Err(WinProbError::BadMagic);
    }
    if buf.len() >= 6 {
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != MODEL_FORMAT_VERSION {
            return Err(WinProbError::VersionMismatch {
                found: version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
    }
    if buf.len() < 4 + 2 + 1 + 4 + 4 + 4 {
        return Err(WinProbError::Checksum);
    }
    let (body, tail) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(WinProbError::Checksum);
    }
    let kind = ModelKind::from_tag(body[6]).ok_or_else(|| WinProbError::Corrupt(format!("unknown model kind tag {}", body[6])))?;
    let mut pos = 7;
    let mut blob = || -> Result<&[u8], WinProbError> {
        let len_bytes = body.get(pos..pos + 4).ok_or_else(|| WinProbError::Corrupt("short blob header".into()))?;
        let len = u32::from_le_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
        let data = body
            .get(pos + 4..pos + 4 + len)
            .ok_or_else(|| WinProbError::Corrupt("blob extends past end of file".into()))?;
        pos += 4 + len;
        Ok(data)
    };
    let schema: FeatureSchema =
        serde_json::from_slice(blob()?).map_err(|e| WinProbError::Corrupt(format!("schema: {e}")))?;
    let payload: Payload =
        serde_json::from_slice(blob()?).map_err(|e| WinProbError::Corrupt(format!("parameters: {e}")))?;
    let model = WinProbModel {
        schema,
        params: payload.params,
        meta: payload.meta,
    };
    if model.kind() != kind {
        return Err(WinProbError::Corrupt(format!("kind tag says {kind}, parameters are {}", model.kind())));
    }
    Ok(model)
}

pub fn save_model(model: &WinProbModel, path: impl AsRef<Path>) -> Result<(), WinProbError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_model(model, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<WinProbModel, WinProbError> {
    read_model(&mut std::fs::File::open(path)?)
}
