//! On-disk model and vocabulary formats.
//!
//! Model file layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TKGE"
//!      4     2  format version (u16, currently 1)
//!      6     1  model kind (0 = TorusE, 1 = TransE)
//!      7     1  score kind (TorusE: 0 = L1, 1 = L2, 2 = eL2; TransE: 0 = L1, 1 = squared L2)
//!      8     4  dimension n (u32)
//!     12     4  entity count (u32)
//!     16     4  relation count (u32)
//!     20     .  entity table then relation table, row-major f64
//! ```
//!
//! The vocabulary is a JSON object with ordered `entities` and `relations`
//! name arrays; array index is the id.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_data::Vocabulary;
use crate::model::{EmbeddingModel, Scoring};

pub const MAGIC: &[u8; 4] = b"TKGE";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;

/// Parsed model file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelHeader {
    pub version: u16,
    pub scoring: Scoring,
    pub dim: usize,
    pub num_entities: usize,
    pub num_relations: usize,
}

fn to_u32(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::Format(format!("{what} {value} does not fit in u32")))
}

pub fn encode_model(model: &EmbeddingModel) -> Result<Vec<u8>> {
    let (kind, score) = model.scoring().to_codes();
    let body = (model.entity_table().len() + model.relation_table().len()) * 8;
    let mut out = Vec::with_capacity(HEADER_LEN + body);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind);
    out.push(score);
    out.extend_from_slice(&to_u32(model.dim(), "dimension")?.to_le_bytes());
    out.extend_from_slice(&to_u32(model.num_entities(), "entity count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(model.num_relations(), "relation count")?.to_le_bytes());
    for x in model.entity_table().iter().chain(model.relation_table()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_header(bytes: &[u8]) -> Result<ModelHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic bytes {:?}", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let scoring = Scoring::from_codes(bytes[6], bytes[7])?;
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    Ok(ModelHeader {
        version,
        scoring,
        dim: u32_at(8),
        num_entities: u32_at(12),
        num_relations: u32_at(16),
    })
}

pub fn decode_model(bytes: &[u8]) -> Result<EmbeddingModel> {
    let header = decode_header(bytes)?;
    let n_ent = header.num_entities * header.dim;
    let n_rel = header.num_relations * header.dim;
    let expected = HEADER_LEN + (n_ent + n_rel) * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "body length mismatch: header implies {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let entities: Vec<f64> = values.by_ref().take(n_ent).collect();
    let relations: Vec<f64> = values.collect();
    EmbeddingModel::from_tables(
        header.scoring,
        header.dim,
        header.num_entities,
        header.num_relations,
        entities,
        relations,
    )
    .map_err(|e| Error::Format(format!("invalid table contents: {e}")))
}

pub fn write_model(path: &Path, model: &EmbeddingModel) -> Result<()> {
    fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<EmbeddingModel> {
    decode_model(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn read_header(path: &Path) -> Result<ModelHeader> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_header(&bytes)
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    entities: Vec<String>,
    relations: Vec<String>,
}

pub fn vocab_to_json(vocab: &Vocabulary) -> Result<String> {
    let file = VocabFile {
        entities: vocab.entities().to_vec(),
        relations: vocab.relations().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn vocab_from_json(text: &str) -> Result<Vocabulary> {
    let file: VocabFile = serde_json::from_str(text)?;
    Vocabulary::from_names(file.entities, file.relations)
}

pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    fs::write(path, vocab_to_json(vocab)?).map_err(|e| Error::io(path, e))
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    vocab_from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
