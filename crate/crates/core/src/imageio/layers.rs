//! Decomposition directories: one file per layer plus `manifest.json`.
//!
//! The manifest schema is documented in `docs/manifest.md`; bump
//! [`MANIFEST_VERSION`] on any incompatible change.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{decode_image, encode_image, AlphaPolicy, Encoding};
use crate::error::{Error, Result};
use crate::plane::{ColorMode, Image};
use crate::pyramid::{Decomposition, LevelSpec, Schedule};

pub const MANIFEST_VERSION: &str = "svf-layers/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Offset added to signed detail layers stored as 8-bit PNG.
pub const DETAIL_OFFSET: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueEncoding {
    /// Little-endian `f32` PFM files.
    Float,
    /// 8-bit PNG; detail layers shifted by +0.5 and clamped.
    #[serde(rename = "offset-8bit")]
    Offset8Bit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerManifest {
    pub version: String,
    pub source: Option<SourceRef>,
    pub color_mode: ColorMode,
    pub width: usize,
    pub height: usize,
    pub schedule: Vec<LevelSpec>,
    pub base_file: String,
    pub detail_files: Vec<String>,
    pub value_encoding: ValueEncoding,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes every layer and the manifest into `dir`, creating it if needed.
pub fn save_decomposition(
    d: &Decomposition,
    dir: impl AsRef<Path>,
    encoding: ValueEncoding,
    source: Option<&Path>,
) -> Result<LayerManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = match encoding {
        ValueEncoding::Float => "pfm",
        ValueEncoding::Offset8Bit => "png",
    };

    let source = source
        .map(|p| {
            let sha256 = sha256_file(p)?;
            let file = fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
            Ok::<_, Error>(SourceRef {
                file: file.to_string_lossy().into_owned(),
                sha256,
            })
        })
        .transpose()?;

    let base_file = format!("base.{ext}");
    write_layer(&dir.join(&base_file), d.base(), encoding, 0.0)?;
    let mut detail_files = Vec::with_capacity(d.levels());
    for (k, layer) in d.details().iter().enumerate() {
        let name = format!("detail_{:02}.{ext}", k + 1);
        write_layer(&dir.join(&name), layer, encoding, DETAIL_OFFSET)?;
        detail_files.push(name);
    }

    let manifest = LayerManifest {
        version: MANIFEST_VERSION.to_string(),
        source,
        color_mode: d.color_mode(),
        width: d.base().width(),
        height: d.base().height(),
        schedule: d.schedule().to_specs(),
        base_file,
        detail_files,
        value_encoding: encoding,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_layer(path: &Path, layer: &Image, encoding: ValueEncoding, offset: f64) -> Result<()> {
    let bytes = match encoding {
        ValueEncoding::Float => encode_image(layer, Encoding::Pfm)?,
        ValueEncoding::Offset8Bit => encode_image(&layer.map(|v| v + offset)?, Encoding::Png8)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<LayerManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Integrity(format!("cannot read {}: {e}", path.display())))?;
    let manifest: LayerManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Integrity(format!("malformed {}: {e}", path.display())))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported manifest version {:?} (expected {MANIFEST_VERSION:?})",
            manifest.version
        )));
    }
    Ok(manifest)
}

/// Loads and cross-checks a directory written by [`save_decomposition`].
pub fn load_decomposition(dir: impl AsRef<Path>) -> Result<Decomposition> {
    let dir = dir.as_ref();
    let m = read_manifest(dir)?;
    if m.detail_files.len() != m.schedule.len() {
        return Err(Error::Integrity(format!(
            "manifest lists {} detail files for a {}-level schedule",
            m.detail_files.len(),
            m.schedule.len()
        )));
    }
    if let Some(src) = &m.source {
        let path = PathBuf::from(&src.file);
        if path.exists() {
            let actual = sha256_file(&path)?;
            if actual != src.sha256 {
                return Err(Error::Integrity(format!(
                    "source {} checksum {actual} does not match manifest {}",
                    src.file, src.sha256
                )));
            }
        }
    }
    let schedule = Schedule::from_specs(&m.schedule)
        .map_err(|e| Error::Integrity(format!("schedule: {e}")))?;

    let base = read_layer(dir, &m.base_file, &m, 0.0)?;
    let details = m
        .detail_files
        .iter()
        .map(|f| read_layer(dir, f, &m, DETAIL_OFFSET))
        .collect::<Result<Vec<_>>>()?;
    Decomposition::new(base, details, schedule, m.color_mode)
        .map_err(|e| Error::Integrity(e.to_string()))
}

fn read_layer(dir: &Path, name: &str, m: &LayerManifest, offset: f64) -> Result<Image> {
    let mut parts = Path::new(name).components();
    let plain = matches!(
        (parts.next(), parts.next()),
        (Some(std::path::Component::Normal(_)), None)
    );
    if !plain {
        return Err(Error::Integrity(format!(
            "layer name {name:?} is not a plain file name"
        )));
    }
    let path = dir.join(name);
    let bytes = fs::read(&path)
        .map_err(|e| Error::Integrity(format!("cannot read layer {}: {e}", path.display())))?;
    let image = decode_image(&bytes, AlphaPolicy::Reject)
        .map_err(|e| Error::Integrity(format!("layer {name}: {e}")))?;
    if image.dimensions() != (m.width, m.height) {
        return Err(Error::Integrity(format!(
            "layer {name} is {}x{}, manifest says {}x{}",
            image.width(),
            image.height(),
            m.width,
            m.height
        )));
    }
    match m.value_encoding {
        ValueEncoding::Float => Ok(image),
        ValueEncoding::Offset8Bit => image.map(|v| v - offset),
    }
}
