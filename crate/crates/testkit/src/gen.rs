//! Seeded random generators for maps, frames, and candidate streams.
//!
//! Everything takes an explicit `Rng` so suites stay reproducible from one
//! ChaCha seed.

use panoptic_core::depth::{DepthMap, Sector};
use panoptic_core::feedback::Candidate;
use panoptic_core::fusion::{InstancePrediction, PanopticMap, SemanticMap};
use panoptic_core::mask::{BBox, BitMask};
use panoptic_core::schema::{load_schema, ClassId, LabelSchema};
use panoptic_transport::{Frame, FrameInstance};
use rand::seq::SliceRandom;
use rand::Rng;

/// Schema with void + `stuff` stuff classes (ids 1..) + `things` thing
/// classes (ids 10..).
pub fn schema_with(stuff: usize, things: usize) -> LabelSchema {
    let mut classes = vec![
        r#"{"id": 0, "name": "void", "is_thing": false, "weight": 0.0, "color": [0,0,0]}"#
            .to_string(),
    ];
    for i in 0..stuff {
        let id = 1 + i;
        classes.push(format!(
            r#"{{"id": {id}, "name": "stuff_{i}", "is_thing": false, "weight": 0.0, "color": [10,{id},0]}}"#
        ));
    }
    for i in 0..things {
        let id = 10 + i;
        classes.push(format!(
            r#"{{"id": {id}, "name": "thing_{i}", "is_thing": true, "weight": {w}, "color": [200,{id},0]}}"#,
            w = 1.0 + i as f64 * 0.5
        ));
    }
    load_schema(&format!(r#"{{"classes": [{}], "void_id": 0}}"#, classes.join(",")))
        .expect("generated schema is valid")
}

/// Random mask, possibly empty.
pub fn random_mask<R: Rng>(rng: &mut R, width: u32, height: u32) -> BitMask {
    let density = rng.gen_range(0.0..1.0);
    let bits = (0..(width as usize) * (height as usize)).map(|_| rng.gen_bool(density)).collect();
    BitMask::from_bits(width, height, bits).expect("sized to fit")
}

/// Random rectangle mask, never empty (requires width, height >= 1).
pub fn random_rect_mask<R: Rng>(rng: &mut R, width: u32, height: u32) -> BitMask {
    let x0 = rng.gen_range(0..width);
    let y0 = rng.gen_range(0..height);
    let x1 = rng.gen_range(x0..width);
    let y1 = rng.gen_range(y0..height);
    BBox::new(x0, y0, x1, y1).expect("ordered coordinates").fill(width, height)
}

/// One (class, instance) palette entry for panoptic map synthesis.
#[derive(Debug, Clone, Copy)]
pub struct PaletteEntry {
    pub class_id: ClassId,
    pub instance_id: u32,
}

/// Palette of at most `max_segments` segments over the schema, always led by
/// void.
fn random_palette<R: Rng>(rng: &mut R, schema: &LabelSchema, max_segments: usize) -> Vec<PaletteEntry> {
    let stuff: Vec<ClassId> = schema.stuff_ids().filter(|&id| id != schema.void_id()).collect();
    let things: Vec<ClassId> = schema.thing_ids().collect();
    let mut palette = vec![PaletteEntry { class_id: schema.void_id(), instance_id: 0 }];
    let segments = rng.gen_range(1..=max_segments);
    let mut next_instance = 1u32;
    for _ in 0..segments {
        if !things.is_empty() && rng.gen_bool(0.5) {
            palette.push(PaletteEntry {
                class_id: *things.choose(rng).expect("nonempty"),
                instance_id: next_instance,
            });
            next_instance += 1;
        } else if !stuff.is_empty() {
            palette.push(PaletteEntry {
                class_id: *stuff.choose(rng).expect("nonempty"),
                instance_id: 0,
            });
        }
    }
    palette
}

fn map_from_palette<R: Rng>(
    rng: &mut R,
    width: u32,
    height: u32,
    palette: &[PaletteEntry],
) -> PanopticMap {
    let px = (width as usize) * (height as usize);
    let mut classes = Vec::with_capacity(px);
    let mut instances = Vec::with_capacity(px);
    for _ in 0..px {
        let e = palette.choose(rng).expect("palette nonempty");
        classes.push(e.class_id);
        instances.push(e.instance_id);
    }
    PanopticMap::from_planes(width, height, classes, instances).expect("palette maps are valid")
}

/// A (pred, gt, schema) triple for metric tests: maps up to 16x16 with at
/// most 6 segments over a schema of at least 3 classes including void. The
/// prediction is usually a pixel-level mutation of the ground truth so high
/// IoU matches actually occur.
pub fn random_panoptic_pair<R: Rng>(rng: &mut R) -> (PanopticMap, PanopticMap, LabelSchema) {
    let schema = schema_with(rng.gen_range(1..=2), rng.gen_range(1..=3));
    let width = rng.gen_range(2..=16);
    let height = rng.gen_range(2..=16);
    let palette = random_palette(rng, &schema, 6);
    let gt = map_from_palette(rng, width, height, &palette);
    let pred = if rng.gen_bool(0.7) {
        // Mutate a fraction of pixels onto other palette entries.
        let mutation = rng.gen_range(0.0..0.5);
        let mut classes = gt.class_ids().to_vec();
        let mut instances = gt.instance_ids().to_vec();
        for i in 0..classes.len() {
            if rng.gen_bool(mutation) {
                let e = palette.choose(rng).expect("palette nonempty");
                classes[i] = e.class_id;
                instances[i] = e.instance_id;
            }
        }
        PanopticMap::from_planes(width, height, classes, instances).expect("mutation keeps validity")
    } else {
        map_from_palette(rng, width, height, &palette)
    };
    (pred, gt, schema)
}

/// Random semantic map over the schema's classes (void included).
pub fn random_semantic<R: Rng>(
    rng: &mut R,
    schema: &LabelSchema,
    width: u32,
    height: u32,
) -> SemanticMap {
    let ids: Vec<ClassId> = schema.classes().iter().map(|c| c.id).collect();
    let px = (width as usize) * (height as usize);
    let plane: Vec<ClassId> = (0..px).map(|_| *ids.choose(rng).expect("nonempty")).collect();
    SemanticMap::new(width, height, plane).expect("sized to fit")
}

/// Fusion inputs: a semantic map up to 32x32 and up to 8 instance
/// predictions, some deliberately overlapping or duplicated.
pub fn random_fusion_inputs<R: Rng>(
    rng: &mut R,
) -> (SemanticMap, Vec<InstancePrediction>, LabelSchema) {
    let schema = schema_with(rng.gen_range(1..=3), rng.gen_range(1..=3));
    let width = rng.gen_range(4..=32);
    let height = rng.gen_range(4..=32);
    let semantic = random_semantic(rng, &schema, width, height);
    let things: Vec<ClassId> = schema.thing_ids().collect();
    let count = rng.gen_range(0..=8);
    let mut predictions = Vec::with_capacity(count);
    for _ in 0..count {
        let mask = random_rect_mask(rng, width, height);
        let confidence = if rng.gen_bool(0.2) {
            // Exact ties exercise the deterministic tie-break.
            0.5
        } else {
            rng.gen_range(0.0..=1.0)
        };
        predictions.push(InstancePrediction {
            class_id: *things.choose(rng).expect("things exist"),
            confidence,
            mask,
            bbox: None,
        });
        // Occasionally duplicate the previous mask at a lower confidence.
        if rng.gen_bool(0.25) && predictions.len() < count {
            let mut dup = predictions.last().expect("just pushed").clone();
            dup.confidence = (dup.confidence - 0.1).max(0.0);
            predictions.push(dup);
        }
    }
    (semantic, predictions, schema)
}

/// Random but valid transport frame with a random subset of planes,
/// dimensions up to 8x8.
pub fn random_frame<R: Rng>(rng: &mut R) -> Frame {
    let width = rng.gen_range(1..=8u16);
    let height = rng.gen_range(1..=8u16);
    let px = (width as usize) * (height as usize);
    let mut frame = Frame {
        frame_id: rng.gen(),
        timestamp_us: rng.gen(),
        width,
        height,
        ..Frame::default()
    };
    if rng.gen_bool(0.5) {
        frame.rgb = Some((0..px * 3).map(|_| rng.gen()).collect());
    }
    if rng.gen_bool(0.7) {
        let ids: Vec<u16> = (0..px).map(|_| rng.gen_range(0..100)).collect();
        frame.semantic = Some(SemanticMap::new(width as u32, height as u32, ids).expect("sized"));
    }
    if rng.gen_bool(0.5) {
        let depths: Vec<u16> = (0..px).map(|_| rng.gen()).collect();
        frame.depth = Some(DepthMap::new(width as u32, height as u32, depths).expect("sized"));
    }
    if rng.gen_bool(0.5) {
        let schema = schema_with(2, 2);
        let palette = random_palette(rng, &schema, 4);
        frame.panoptic = Some(map_from_palette(rng, width as u32, height as u32, &palette));
    }
    if rng.gen_bool(0.7) {
        let count = rng.gen_range(0..=4);
        let mut instances = Vec::with_capacity(count);
        for _ in 0..count {
            let mask = random_mask(rng, width as u32, height as u32);
            let bbox = if rng.gen_bool(0.5) { panoptic_core::bbox_of_mask(&mask) } else { None };
            instances.push(FrameInstance {
                class_id: rng.gen_range(0..50),
                confidence_micro: rng.gen_range(0..=1_000_000),
                bbox,
                mask: panoptic_core::rle_encode(&mask),
            });
        }
        frame.instances = Some(instances);
    }
    frame
}

/// Random per-frame candidate batches with ascending timestamps: the fuel
/// for scheduler oracle replay.
pub fn random_candidate_stream<R: Rng>(
    rng: &mut R,
    frames: usize,
) -> Vec<(u64, u64, Vec<Candidate>)> {
    let sectors = [Sector::Left, Sector::Center, Sector::Right];
    let mut out = Vec::with_capacity(frames);
    let mut ts = 0u64;
    for frame_id in 0..frames as u64 {
        ts += rng.gen_range(0..600_000);
        let count = rng.gen_range(0..=6);
        let mut candidates = Vec::with_capacity(count);
        for _ in 0..count {
            let distance_mm = if rng.gen_bool(0.8) { Some(rng.gen_range(300..10_000)) } else { None };
            candidates.push(Candidate {
                class_id: rng.gen_range(1..5),
                sector: *sectors.choose(rng).expect("nonempty"),
                distance_mm,
                // A small discrete set of priorities provokes ties.
                priority: rng.gen_range(0..8) as f64 * 0.25,
            });
        }
        out.push((frame_id, ts, candidates));
    }
    out
}
