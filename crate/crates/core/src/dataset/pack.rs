//! Feature-pack binary format.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic       8 bytes  "CBCLFP01"
//! dimension   u32
//! num_classes u32
//! num_objects u32
//! records     num_objects x {
//!     object_id u32, class_id u32, session_id u32, n_images u32,
//!     n_images * dimension binary32 values, one row per image
//! }
//! ```
//!
//! Class names live in an optional JSON sidecar next to the pack
//! (`<pack>.names.json`, an array of strings).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ClassId, Dataset, FeatureVector, ObjectInstance, SessionId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PACK_MAGIC: &[u8; 8] = b"CBCLFP01";
const MAGIC_FAMILY: &[u8; 6] = b"CBCLFP";
pub const PACK_HEADER_LEN: usize = 20;
const RECORD_HEADER_LEN: usize = 16;

pub(crate) fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".names.json");
    PathBuf::from(name)
}

pub fn encode_feature_pack<T: Scalar>(ds: &Dataset<T>) -> Vec<u8> {
    let d = ds.dimension();
    let mut out = Vec::with_capacity(
        PACK_HEADER_LEN + ds.len() * RECORD_HEADER_LEN + ds.num_views() * d * 4,
    );
    out.extend_from_slice(PACK_MAGIC);
    put_u32(&mut out, d);
    out.extend_from_slice(&ds.num_classes().to_le_bytes());
    put_u32(&mut out, ds.len());
    for obj in ds.objects() {
        out.extend_from_slice(&obj.object_id.to_le_bytes());
        out.extend_from_slice(&obj.class_id.to_le_bytes());
        out.extend_from_slice(&obj.session_id.to_le_bytes());
        put_u32(&mut out, obj.views.len());
        for view in &obj.views {
            for v in view.as_slice() {
                out.extend_from_slice(&v.as_f32().to_le_bytes());
            }
        }
    }
    out
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    let n = u32::try_from(n).expect("pack counts fit in u32");
    out.extend_from_slice(&n.to_le_bytes());
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        if self.remaining() < 4 {
            return Err(Error::Corrupt {
                offset: self.pos,
                msg: format!("truncated while reading {what}"),
            });
        }
        let b = &self.buf[self.pos..self.pos + 4];
        self.pos += 4;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self) -> f32 {
        let b = &self.buf[self.pos..self.pos + 4];
        self.pos += 4;
        f32::from_le_bytes([b[0], b[1], b[2], b[3]])
    }
}

/// Parses a pack from memory. Values are widened or kept at binary32
/// depending on `T`.
pub fn decode_feature_pack<T: Scalar>(bytes: &[u8]) -> Result<Dataset<T>> {
    if bytes.len() < PACK_MAGIC.len() || !bytes.starts_with(MAGIC_FAMILY) {
        return Err(Error::Format {
            offset: 0,
            msg: "missing CBCLFP magic".into(),
        });
    }
    if &bytes[..8] != PACK_MAGIC {
        return Err(Error::Format {
            offset: 6,
            msg: format!(
                "unsupported version {:?}",
                String::from_utf8_lossy(&bytes[6..8])
            ),
        });
    }
    let mut cur = Cursor { buf: bytes, pos: 8 };
    let dimension = cur.u32("dimension")? as usize;
    let num_classes = cur.u32("num_classes")?;
    let num_objects = cur.u32("num_objects")? as usize;
    if dimension == 0 {
        return Err(Error::validation("pack declares dimension 0"));
    }

    let mut objects = Vec::with_capacity(num_objects.min(cur.remaining() / RECORD_HEADER_LEN));
    for _ in 0..num_objects {
        let record_at = cur.pos;
        let object_id = cur.u32("object_id")?;
        let class_id = cur.u32("class_id")?;
        let session_id = cur.u32("session_id")?;
        let n_images = cur.u32("n_images")? as usize;
        if n_images == 0 {
            return Err(Error::validation(format!(
                "object {object_id} at byte {record_at} has zero images"
            )));
        }
        let payload = n_images
            .checked_mul(dimension)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Corrupt {
                offset: cur.pos,
                msg: "image payload size overflows".into(),
            })?;
        if payload > cur.remaining() {
            return Err(Error::Corrupt {
                offset: cur.pos,
                msg: format!(
                    "object {object_id} needs {payload} payload bytes, {} remain",
                    cur.remaining()
                ),
            });
        }
        let mut views = Vec::with_capacity(n_images);
        for img in 0..n_images {
            let row_at = cur.pos;
            let row: Vec<T> = (0..dimension).map(|_| T::of(cur.f32() as f64)).collect();
            let fv = FeatureVector::new(row).map_err(|_| Error::Corrupt {
                offset: row_at,
                msg: format!("object {object_id} image {img} has a non-finite value"),
            })?;
            views.push(fv);
        }
        objects.push(ObjectInstance {
            object_id,
            class_id,
            session_id,
            views,
        });
    }
    if cur.remaining() != 0 {
        return Err(Error::Corrupt {
            offset: cur.pos,
            msg: format!("{} trailing bytes after the last record", cur.remaining()),
        });
    }
    Dataset::new(dimension, num_classes, objects, None)
}

pub fn read_feature_pack<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut ds = decode_feature_pack(&bytes)?;
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let names: Vec<String> = serde_json::from_str(&text)?;
        ds = Dataset::new(ds.dimension, ds.num_classes, ds.objects, Some(names))?;
    }
    Ok(ds)
}

/// Writes the pack, plus the names sidecar when the dataset carries names.
pub fn write_feature_pack<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ds.validate()?;
    fs::write(path, encode_feature_pack(ds)).map_err(|e| Error::io(path, e))?;
    if let Some(names) = ds.class_names() {
        let sidecar = sidecar_path(path);
        let text = serde_json::to_string_pretty(names)?;
        fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
    }
    Ok(())
}

/// What `verify` reports about a well-formed pack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PackSummary {
    pub dimension: usize,
    pub num_classes: u32,
    pub num_objects: usize,
    pub num_images: usize,
    pub sessions: Vec<SessionId>,
    pub objects_per_class: BTreeMap<ClassId, usize>,
}

/// Fully parses and validates a pack file.
pub fn verify_pack(path: impl AsRef<Path>) -> Result<PackSummary> {
    let ds: Dataset<f32> = read_feature_pack(path)?;
    Ok(PackSummary {
        dimension: ds.dimension(),
        num_classes: ds.num_classes(),
        num_objects: ds.len(),
        num_images: ds.num_views(),
        sessions: ds.sessions(),
        objects_per_class: ds.objects_per_class(),
    })
}
