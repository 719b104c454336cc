//! Versioned JSON model files.
//!
//! Every file is an envelope
//!
//! ```json
//! { "schema": "xfmr-aging.anfis", "version": 1, "model": { ... } }
//! ```
//!
//! Floats are written in shortest round-trip form and parsed back exactly,
//! so a saved model reloads bit-for-bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

pub trait ModelFile: Serialize + DeserializeOwned {
    const SCHEMA: &'static str;
}

#[derive(Serialize)]
struct EnvelopeRef<'a, M> {
    schema: &'a str,
    version: u64,
    model: &'a M,
}

#[derive(Deserialize)]
struct Envelope {
    schema: String,
    version: u64,
    model: Value,
}

pub fn to_string<M: ModelFile>(model: &M) -> Result<String> {
    let envelope = EnvelopeRef {
        schema: M::SCHEMA,
        version: FORMAT_VERSION,
        model,
    };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::Input(format!("model is not serializable: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn from_str<M: ModelFile>(text: &str) -> Result<M> {
    let envelope: Envelope = serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
    if envelope.schema != M::SCHEMA {
        return Err(Error::Schema {
            expected: M::SCHEMA.into(),
            found: envelope.schema,
        });
    }
    if envelope.version != FORMAT_VERSION {
        return Err(Error::Version {
            found: envelope.version,
            supported: FORMAT_VERSION,
        });
    }
    M::deserialize(envelope.model).map_err(|e| Error::Corrupt(e.to_string()))
}

pub fn save<M: ModelFile>(model: &M, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load<M: ModelFile>(path: impl AsRef<Path>) -> Result<M> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}
