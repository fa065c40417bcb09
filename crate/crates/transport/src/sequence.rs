//! Sequence-on-disk: a directory with `manifest.json` plus one `.pframe`
//! blob per frame.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{decode_frame, encode_frame, Frame, FrameCodecError};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    frames: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    id: u64,
    timestamp_us: u64,
    blob: String,
    width: u16,
    height: u16,
    planes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed manifest: {0}")]
    MalformedManifest(#[from] serde_json::Error),
    #[error("manifest references missing blob {path}")]
    MissingBlob { path: PathBuf },
    #[error("duplicate frame id {id}")]
    DuplicateFrameId { id: u64 },
    #[error("frame {id}: {source}")]
    Codec { id: u64, source: FrameCodecError },
    #[error("frame {id}: blob {field} does not match the manifest")]
    MetadataMismatch { id: u64, field: &'static str },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SequenceError + '_ {
    move |source| SequenceError::Io { path: path.to_path_buf(), source }
}

/// Write frames (and a manifest) ordered by frame id. Write-then-read is the
/// identity.
pub fn write_sequence(frames: &[Frame], dir: &Path) -> Result<(), SequenceError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut ordered: Vec<&Frame> = frames.iter().collect();
    ordered.sort_by_key(|f| f.frame_id);
    for pair in ordered.windows(2) {
        if pair[0].frame_id == pair[1].frame_id {
            return Err(SequenceError::DuplicateFrameId { id: pair[0].frame_id });
        }
    }

    let mut entries = Vec::with_capacity(ordered.len());
    for frame in ordered {
        let blob = format!("{:06}.pframe", frame.frame_id);
        let bytes = encode_frame(frame)
            .map_err(|source| SequenceError::Codec { id: frame.frame_id, source })?;
        let path = dir.join(&blob);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        entries.push(ManifestEntry {
            id: frame.frame_id,
            timestamp_us: frame.timestamp_us,
            blob,
            width: frame.width,
            height: frame.height,
            planes: frame.plane_names(),
        });
    }
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&Manifest { frames: entries })?;
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(())
}

/// Read a sequence directory; frames come back ordered by frame id and are
/// cross-checked against the manifest metadata.
pub fn read_sequence(dir: &Path) -> Result<Vec<Frame>, SequenceError> {
    let manifest_path = dir.join("manifest.json");
    let json = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut manifest: Manifest = serde_json::from_str(&json)?;
    manifest.frames.sort_by_key(|e| e.id);
    for pair in manifest.frames.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(SequenceError::DuplicateFrameId { id: pair[0].id });
        }
    }

    let mut frames = Vec::with_capacity(manifest.frames.len());
    for entry in &manifest.frames {
        let path = dir.join(&entry.blob);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(SequenceError::MissingBlob { path })
            }
            Err(e) => return Err(SequenceError::Io { path, source: e }),
        };
        let frame = decode_frame(&bytes)
            .map_err(|source| SequenceError::Codec { id: entry.id, source })?;
        if frame.frame_id != entry.id {
            return Err(SequenceError::MetadataMismatch { id: entry.id, field: "id" });
        }
        if frame.timestamp_us != entry.timestamp_us {
            return Err(SequenceError::MetadataMismatch { id: entry.id, field: "timestamp_us" });
        }
        if frame.width != entry.width || frame.height != entry.height {
            return Err(SequenceError::MetadataMismatch { id: entry.id, field: "dimensions" });
        }
        if frame.plane_names() != entry.planes {
            return Err(SequenceError::MetadataMismatch { id: entry.id, field: "planes" });
        }
        frames.push(frame);
    }
    Ok(frames)
}
