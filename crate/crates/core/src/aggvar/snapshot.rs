//! Model snapshot file, framed like the feature pack:
//!
//! ```text
//! magic "CBCLMS01", u32 dimension, u32 num_class_models,
//! per class: u32 class_id, u32 num_centroids,
//!   per centroid: u32 count, dimension x f32 mean, dimension x f32 m2
//! ```
//!
//! The distance threshold is not stored; it is supplied on load.

use std::fs;
use std::path::Path;

use super::{Centroid, ClassModel, ModelStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 8] = b"CBCLMS01";

fn put(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&u32::try_from(n).expect("fits in u32").to_le_bytes());
}

pub fn encode_model<T: Scalar>(store: &ModelStore<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    put(&mut out, store.dimension());
    put(&mut out, store.num_classes());
    for m in store.models() {
        out.extend_from_slice(&m.class_id.to_le_bytes());
        put(&mut out, m.centroids().len());
        for c in m.centroids() {
            put(&mut out, c.count());
            for v in c.mean().iter().chain(c.m2()) {
                out.extend_from_slice(&v.as_f32().to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_model<T: Scalar>(bytes: &[u8], threshold: T) -> Result<ModelStore<T>> {
    if bytes.len() < 8 || &bytes[..8] != MODEL_MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: "missing CBCLMS01 magic".into(),
        });
    }
    let mut pos = 8;
    let u32_at = |pos: &mut usize| -> Result<u32> {
        let b = bytes.get(*pos..*pos + 4).ok_or(Error::Corrupt {
            offset: *pos,
            msg: "truncated model snapshot".into(),
        })?;
        *pos += 4;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    };
    let dimension = u32_at(&mut pos)? as usize;
    let num_models = u32_at(&mut pos)?;
    let mut store = ModelStore::new(dimension, threshold)?;
    for _ in 0..num_models {
        let class_id = u32_at(&mut pos)?;
        let n = u32_at(&mut pos)?;
        let mut centroids = Vec::new();
        for _ in 0..n {
            let count = u32_at(&mut pos)? as usize;
            let mut vals = Vec::with_capacity(2 * dimension);
            for _ in 0..2 * dimension {
                vals.push(T::of(f32::from_bits(u32_at(&mut pos)?) as f64));
            }
            let m2 = vals.split_off(dimension);
            centroids.push(Centroid::from_parts(vals, m2, count)?);
        }
        store.insert_model(ClassModel::new(class_id, centroids))?;
    }
    if pos != bytes.len() {
        return Err(Error::Corrupt {
            offset: pos,
            msg: "trailing bytes after model snapshot".into(),
        });
    }
    Ok(store)
}

pub fn save_model<T: Scalar>(store: &ModelStore<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(store)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>, threshold: T) -> Result<ModelStore<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, threshold)
}
