//! Single-file model archive.
//!
//! Layout: the 8-byte magic `AUGBCKPT`, a little-endian `u32` format
//! version, a little-endian `u64` header length, a UTF-8 JSON header, and
//! finally every tensor as consecutive little-endian `f32` values. The
//! header records the model kind, free-form metadata (configs, history)
//! and each tensor's name, shape and element offset into the blob.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Layer;

pub const MAGIC: &[u8; 8] = b"AUGBCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// In-memory form of a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    pub kind: String,
    pub meta: serde_json::Value,
    entries: Vec<TensorEntry>,
    blob: Vec<f32>,
}

impl Archive {
    pub fn new(kind: &str, meta: serde_json::Value) -> Self {
        Self {
            kind: kind.to_string(),
            meta,
            entries: Vec::new(),
            blob: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn insert(&mut self, name: &str, shape: &[usize], values: &[f32]) -> Result<()> {
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::Checkpoint(format!("duplicate tensor {name}")));
        }
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::Checkpoint(format!("tensor {name}: shape does not match data")));
        }
        self.entries.push(TensorEntry {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset: self.blob.len(),
        });
        self.blob.extend_from_slice(values);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f32])> {
        self.entries.iter().find(|e| e.name == name).map(|e| {
            let len: usize = e.shape.iter().product();
            (e.shape.as_slice(), &self.blob[e.offset..e.offset + len])
        })
    }

    /// Stores every param (including buffers) of `model` under `prefix`.
    pub fn store_model(&mut self, prefix: &str, model: &mut dyn Layer<f32>) -> Result<()> {
        let mut result = Ok(());
        model.visit(prefix, &mut |name, p| {
            if result.is_ok() {
                result = self.insert(name, &p.shape, &p.value);
            }
        });
        result
    }

    /// Overwrites every param of `model` from tensors stored under `prefix`.
    pub fn restore_model(&self, prefix: &str, model: &mut dyn Layer<f32>) -> Result<()> {
        let mut result = Ok(());
        model.visit(prefix, &mut |name, p| {
            if result.is_err() {
                return;
            }
            match self.get(name) {
                Some((shape, values)) if shape == p.shape.as_slice() => p.value.copy_from_slice(values),
                Some((shape, _)) => {
                    result = Err(Error::Checkpoint(format!(
                        "tensor {name}: stored shape {shape:?}, model expects {:?}",
                        p.shape
                    )))
                }
                None => result = Err(Error::Checkpoint(format!("missing tensor {name}"))),
            }
        });
        result
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            tensors: self.entries.clone(),
        })?;
        let mut out = Vec::with_capacity(20 + header.len() + self.blob.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for v in &self.blob {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = &bytes[20..];
        if body.len() < header_len || (body.len() - header_len) % 4 != 0 {
            return Err(bad("truncated checkpoint"));
        }
        let header: Header = serde_json::from_slice(&body[..header_len])?;
        let blob: Vec<f32> = body[header_len..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        for e in &header.tensors {
            let len: usize = e.shape.iter().product();
            if e.offset + len > blob.len() {
                return Err(Error::Checkpoint(format!("tensor {} exceeds data section", e.name)));
            }
        }
        Ok(Self {
            kind: header.kind,
            meta: header.meta,
            entries: header.tensors,
            blob,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Checkpoint(format!("expected a {kind} checkpoint, found {}", self.kind)))
        }
    }
}
