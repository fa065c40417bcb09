//! Canonical binary frame encoding.
//!
//! Layout (all little-endian): frame_id u64 | timestamp_us u64 | width u16 |
//! height u16 | plane-presence u8, then each present plane in fixed order
//! (RGB, semantic, depth, panoptic, instances), length-prefixed with a u32.
//! The encoding is canonical: decode(encode(f)) == f and re-encoding a
//! decoded buffer reproduces it byte for byte.

use panoptic_core::fusion::{FusionError, PanopticMap, SemanticMap};
use panoptic_core::depth::DepthMap;
use panoptic_core::mask::{BBox, MaskError, RleMask};
use panoptic_core::InstancePrediction;
use thiserror::Error;

pub const PLANE_RGB: u8 = 0x01;
pub const PLANE_SEMANTIC: u8 = 0x02;
pub const PLANE_DEPTH: u8 = 0x04;
pub const PLANE_PANOPTIC: u8 = 0x08;
pub const PLANE_INSTANCES: u8 = 0x10;
const PLANE_ALL: u8 = 0x1F;

/// Confidence scale: 1.0 maps to 1_000_000.
pub const CONFIDENCE_SCALE: u32 = 1_000_000;

/// One serialized instance proposal. Confidence is kept in integer
/// micro-units so goldens stay bit-exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInstance {
    pub class_id: u16,
    pub confidence_micro: u32,
    pub bbox: Option<BBox>,
    pub mask: RleMask,
}

impl FrameInstance {
    pub fn confidence(&self) -> f64 {
        self.confidence_micro as f64 / CONFIDENCE_SCALE as f64
    }

    /// Convert to the in-memory prediction used by fusion.
    pub fn to_prediction(&self) -> Result<InstancePrediction, MaskError> {
        Ok(InstancePrediction {
            class_id: self.class_id,
            confidence: self.confidence(),
            mask: panoptic_core::rle_decode(&self.mask)?,
            bbox: self.bbox,
        })
    }

    /// Convert from a prediction, rounding confidence to micro-units.
    pub fn from_prediction(pred: &InstancePrediction) -> FrameInstance {
        FrameInstance {
            class_id: pred.class_id,
            confidence_micro: (pred.confidence * CONFIDENCE_SCALE as f64).round() as u32,
            bbox: pred.bbox,
            mask: panoptic_core::rle_encode(&pred.mask),
        }
    }
}

/// One captured or processed frame with its optional planes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub frame_id: u64,
    pub timestamp_us: u64,
    pub width: u16,
    pub height: u16,
    pub rgb: Option<Vec<u8>>,
    pub semantic: Option<SemanticMap>,
    pub depth: Option<DepthMap>,
    pub panoptic: Option<PanopticMap>,
    pub instances: Option<Vec<FrameInstance>>,
}

impl Frame {
    pub fn presence_bits(&self) -> u8 {
        let mut bits = 0;
        if self.rgb.is_some() {
            bits |= PLANE_RGB;
        }
        if self.semantic.is_some() {
            bits |= PLANE_SEMANTIC;
        }
        if self.depth.is_some() {
            bits |= PLANE_DEPTH;
        }
        if self.panoptic.is_some() {
            bits |= PLANE_PANOPTIC;
        }
        if self.instances.is_some() {
            bits |= PLANE_INSTANCES;
        }
        bits
    }

    /// Plane names in wire order, for manifests.
    pub fn plane_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.rgb.is_some() {
            names.push("rgb".to_string());
        }
        if self.semantic.is_some() {
            names.push("semantic".to_string());
        }
        if self.depth.is_some() {
            names.push("depth".to_string());
        }
        if self.panoptic.is_some() {
            names.push("panoptic".to_string());
        }
        if self.instances.is_some() {
            names.push("instances".to_string());
        }
        names
    }

    fn pixel_count(&self) -> usize {
        (self.width as usize) * (self.height as usize)
    }
}

#[derive(Debug, Error)]
pub enum FrameCodecError {
    #[error("frame dimensions {width}x{height} exceed 1920x1080 (or transposed)")]
    DimensionOverflow { width: u16, height: u16 },
    #[error("instance id {instance_id} does not fit the 16-bit packing")]
    InstanceIdOverflow { instance_id: u32 },
    #[error("class id or box coordinate {value} does not fit 16 bits")]
    ValueOverflow { value: u32 },
    #[error("confidence {micro} micro-units exceeds 1.0")]
    ConfidenceOverflow { micro: u32 },
    #[error("{plane} plane truncated: needed {needed} more bytes")]
    Truncated { plane: &'static str, needed: usize },
    #[error("{plane} plane length {declared} does not match expected {expected}")]
    PlaneLengthMismatch { plane: &'static str, declared: usize, expected: usize },
    #[error("unknown plane-presence bits {bits:#04x}")]
    UnknownPlaneBits { bits: u8 },
    #[error("{plane} plane size mismatch with frame dimensions")]
    PlaneDimensionMismatch { plane: &'static str },
    #[error("invalid instance mask: {0}")]
    InvalidMask(#[from] MaskError),
    #[error("invalid box encoding")]
    BadBox,
    #[error("invalid panoptic plane: {0}")]
    InvalidPanoptic(FusionError),
    #[error("{count} trailing bytes after the last plane")]
    TrailingBytes { count: usize },
    #[error("{plane} plane is too large to length-prefix")]
    OversizePlane { plane: &'static str },
}

fn check_dimensions(width: u16, height: u16) -> Result<(), FrameCodecError> {
    let landscape = width <= 1920 && height <= 1080;
    let portrait = width <= 1080 && height <= 1920;
    if landscape || portrait {
        Ok(())
    } else {
        Err(FrameCodecError::DimensionOverflow { width, height })
    }
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_plane(out: &mut Vec<u8>, plane: &'static str, payload: Vec<u8>) -> Result<(), FrameCodecError> {
    let len = u32::try_from(payload.len())
        .map_err(|_| FrameCodecError::OversizePlane { plane })?;
    push_u32(out, len);
    out.extend_from_slice(&payload);
    Ok(())
}

/// Serialize a frame to its canonical byte form.
pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, FrameCodecError> {
    check_dimensions(frame.width, frame.height)?;
    let px = frame.pixel_count();
    let mut out = Vec::new();
    out.extend_from_slice(&frame.frame_id.to_le_bytes());
    out.extend_from_slice(&frame.timestamp_us.to_le_bytes());
    out.extend_from_slice(&frame.width.to_le_bytes());
    out.extend_from_slice(&frame.height.to_le_bytes());
    out.push(frame.presence_bits());

    if let Some(rgb) = &frame.rgb {
        if rgb.len() != px * 3 {
            return Err(FrameCodecError::PlaneDimensionMismatch { plane: "rgb" });
        }
        push_plane(&mut out, "rgb", rgb.clone())?;
    }
    if let Some(semantic) = &frame.semantic {
        if semantic.width() != frame.width as u32 || semantic.height() != frame.height as u32 {
            return Err(FrameCodecError::PlaneDimensionMismatch { plane: "semantic" });
        }
        let mut payload = Vec::with_capacity(px * 2);
        for &id in semantic.ids() {
            payload.extend_from_slice(&id.to_le_bytes());
        }
        push_plane(&mut out, "semantic", payload)?;
    }
    if let Some(depth) = &frame.depth {
        if depth.width() != frame.width as u32 || depth.height() != frame.height as u32 {
            return Err(FrameCodecError::PlaneDimensionMismatch { plane: "depth" });
        }
        let mut payload = Vec::with_capacity(px * 2);
        for &d in depth.depths() {
            payload.extend_from_slice(&d.to_le_bytes());
        }
        push_plane(&mut out, "depth", payload)?;
    }
    if let Some(panoptic) = &frame.panoptic {
        if panoptic.width() != frame.width as u32 || panoptic.height() != frame.height as u32 {
            return Err(FrameCodecError::PlaneDimensionMismatch { plane: "panoptic" });
        }
        let mut payload = Vec::with_capacity(px * 4);
        for (&class_id, &instance_id) in panoptic.class_ids().iter().zip(panoptic.instance_ids()) {
            if instance_id > u16::MAX as u32 {
                return Err(FrameCodecError::InstanceIdOverflow { instance_id });
            }
            let packed = (class_id as u32) * 65536 + instance_id;
            payload.extend_from_slice(&packed.to_le_bytes());
        }
        push_plane(&mut out, "panoptic", payload)?;
    }
    if let Some(instances) = &frame.instances {
        let count = u16::try_from(instances.len())
            .map_err(|_| FrameCodecError::ValueOverflow { value: instances.len() as u32 })?;
        let mut payload = Vec::new();
        payload.extend_from_slice(&count.to_le_bytes());
        for inst in instances {
            if inst.confidence_micro > CONFIDENCE_SCALE {
                return Err(FrameCodecError::ConfidenceOverflow { micro: inst.confidence_micro });
            }
            if inst.mask.width != frame.width as u32 || inst.mask.height != frame.height as u32 {
                return Err(FrameCodecError::PlaneDimensionMismatch { plane: "instances" });
            }
            inst.mask.validate()?;
            payload.extend_from_slice(&inst.class_id.to_le_bytes());
            payload.extend_from_slice(&inst.confidence_micro.to_le_bytes());
            match inst.bbox {
                Some(b) => {
                    if !b.fits_in(frame.width as u32, frame.height as u32) {
                        return Err(FrameCodecError::BadBox);
                    }
                    payload.push(1);
                    for v in [b.x_min, b.y_min, b.x_max, b.y_max] {
                        let v16 = u16::try_from(v)
                            .map_err(|_| FrameCodecError::ValueOverflow { value: v })?;
                        payload.extend_from_slice(&v16.to_le_bytes());
                    }
                }
                None => {
                    payload.push(0);
                    payload.extend_from_slice(&[0u8; 8]);
                }
            }
            let run_count = u32::try_from(inst.mask.runs.len())
                .map_err(|_| FrameCodecError::OversizePlane { plane: "instances" })?;
            payload.extend_from_slice(&run_count.to_le_bytes());
            for &run in &inst.mask.runs {
                payload.extend_from_slice(&run.to_le_bytes());
            }
        }
        push_plane(&mut out, "instances", payload)?;
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, plane: &'static str) -> Result<&'a [u8], FrameCodecError> {
        if self.buf.len() - self.pos < n {
            return Err(FrameCodecError::Truncated {
                plane,
                needed: n - (self.buf.len() - self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, plane: &'static str) -> Result<u8, FrameCodecError> {
        Ok(self.take(1, plane)?[0])
    }

    fn u16(&mut self, plane: &'static str) -> Result<u16, FrameCodecError> {
        Ok(u16::from_le_bytes(self.take(2, plane)?.try_into().unwrap()))
    }

    fn u32(&mut self, plane: &'static str) -> Result<u32, FrameCodecError> {
        Ok(u32::from_le_bytes(self.take(4, plane)?.try_into().unwrap()))
    }

    fn u64(&mut self, plane: &'static str) -> Result<u64, FrameCodecError> {
        Ok(u64::from_le_bytes(self.take(8, plane)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Parse a canonical frame buffer. Total: every failure is a distinct,
/// recoverable error value.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameCodecError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let frame_id = cur.u64("header")?;
    let timestamp_us = cur.u64("header")?;
    let width = cur.u16("header")?;
    let height = cur.u16("header")?;
    let bits = cur.u8("header")?;
    check_dimensions(width, height)?;
    if bits & !PLANE_ALL != 0 {
        return Err(FrameCodecError::UnknownPlaneBits { bits });
    }
    let px = (width as usize) * (height as usize);

    let mut frame = Frame { frame_id, timestamp_us, width, height, ..Frame::default() };

    if bits & PLANE_RGB != 0 {
        let declared = cur.u32("rgb")? as usize;
        if declared != px * 3 {
            return Err(FrameCodecError::PlaneLengthMismatch {
                plane: "rgb",
                declared,
                expected: px * 3,
            });
        }
        frame.rgb = Some(cur.take(declared, "rgb")?.to_vec());
    }
    if bits & PLANE_SEMANTIC != 0 {
        let declared = cur.u32("semantic")? as usize;
        if declared != px * 2 {
            return Err(FrameCodecError::PlaneLengthMismatch {
                plane: "semantic",
                declared,
                expected: px * 2,
            });
        }
        let raw = cur.take(declared, "semantic")?;
        let ids: Vec<u16> =
            raw.chunks_exact(2).map(|c| u16::from_le_bytes(c.try_into().unwrap())).collect();
        frame.semantic = Some(
            SemanticMap::new(width as u32, height as u32, ids)
                .expect("length checked against dimensions"),
        );
    }
    if bits & PLANE_DEPTH != 0 {
        let declared = cur.u32("depth")? as usize;
        if declared != px * 2 {
            return Err(FrameCodecError::PlaneLengthMismatch {
                plane: "depth",
                declared,
                expected: px * 2,
            });
        }
        let raw = cur.take(declared, "depth")?;
        let depths: Vec<u16> =
            raw.chunks_exact(2).map(|c| u16::from_le_bytes(c.try_into().unwrap())).collect();
        frame.depth = Some(
            DepthMap::new(width as u32, height as u32, depths)
                .expect("length checked against dimensions"),
        );
    }
    if bits & PLANE_PANOPTIC != 0 {
        let declared = cur.u32("panoptic")? as usize;
        if declared != px * 4 {
            return Err(FrameCodecError::PlaneLengthMismatch {
                plane: "panoptic",
                declared,
                expected: px * 4,
            });
        }
        let raw = cur.take(declared, "panoptic")?;
        let mut classes = Vec::with_capacity(px);
        let mut instances = Vec::with_capacity(px);
        for chunk in raw.chunks_exact(4) {
            let packed = u32::from_le_bytes(chunk.try_into().unwrap());
            classes.push((packed >> 16) as u16);
            instances.push(packed & 0xFFFF);
        }
        frame.panoptic = Some(
            PanopticMap::from_planes(width as u32, height as u32, classes, instances)
                .map_err(FrameCodecError::InvalidPanoptic)?,
        );
    }
    if bits & PLANE_INSTANCES != 0 {
        let declared = cur.u32("instances")? as usize;
        let blob = cur.take(declared, "instances")?;
        let mut icur = Cursor { buf: blob, pos: 0 };
        let count = icur.u16("instances")?;
        let mut instances = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let class_id = icur.u16("instances")?;
            let confidence_micro = icur.u32("instances")?;
            if confidence_micro > CONFIDENCE_SCALE {
                return Err(FrameCodecError::ConfidenceOverflow { micro: confidence_micro });
            }
            let box_presence = icur.u8("instances")?;
            let coords = [
                icur.u16("instances")?,
                icur.u16("instances")?,
                icur.u16("instances")?,
                icur.u16("instances")?,
            ];
            let bbox = match box_presence {
                0 => {
                    if coords != [0, 0, 0, 0] {
                        return Err(FrameCodecError::BadBox);
                    }
                    None
                }
                1 => {
                    let b = BBox::new(
                        coords[0] as u32,
                        coords[1] as u32,
                        coords[2] as u32,
                        coords[3] as u32,
                    )
                    .ok_or(FrameCodecError::BadBox)?;
                    if !b.fits_in(width as u32, height as u32) {
                        return Err(FrameCodecError::BadBox);
                    }
                    Some(b)
                }
                _ => return Err(FrameCodecError::BadBox),
            };
            let run_count = icur.u32("instances")? as usize;
            // Guard the allocation against absurd declared counts.
            if run_count * 4 > icur.remaining() {
                return Err(FrameCodecError::Truncated {
                    plane: "instances",
                    needed: run_count * 4 - icur.remaining(),
                });
            }
            let mut runs = Vec::with_capacity(run_count);
            for _ in 0..run_count {
                runs.push(icur.u32("instances")?);
            }
            let mask = RleMask { width: width as u32, height: height as u32, runs };
            mask.validate()?;
            instances.push(FrameInstance { class_id, confidence_micro, bbox, mask });
        }
        if icur.remaining() != 0 {
            return Err(FrameCodecError::PlaneLengthMismatch {
                plane: "instances",
                declared,
                expected: declared - icur.remaining(),
            });
        }
        frame.instances = Some(instances);
    }

    if cur.remaining() != 0 {
        return Err(FrameCodecError::TrailingBytes { count: cur.remaining() });
    }
    Ok(frame)
}
