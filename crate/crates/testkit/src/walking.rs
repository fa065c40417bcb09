//! Deterministic synthetic walking sequence: 40 frames at 0.25 s cadence,
//! 64x48, with semantic, depth, and instance planes over the builtin schema.
//!
//! The scene is a sidewalk walk: sky/building/road/sidewalk bands, two cars
//! crossing, a pedestrian slowly approaching, a pole drifting past, and a
//! traffic light appearing late. Everything is integer arithmetic on the
//! frame index, so the generator output never changes.

use panoptic_core::depth::DepthMap;
use panoptic_core::fusion::SemanticMap;
use panoptic_core::mask::BitMask;
use panoptic_core::schema::{ClassId, LabelSchema};
use panoptic_transport::{Frame, FrameInstance};

pub const WALKING_FRAMES: u64 = 40;
pub const WALKING_WIDTH: u16 = 64;
pub const WALKING_HEIGHT: u16 = 48;
pub const WALKING_CADENCE_US: u64 = 250_000;

struct Thing {
    class_id: ClassId,
    confidence_micro: u32,
    x_center: i64,
    bottom_row: i64,
    width: i64,
    height: i64,
    distance_mm: u16,
}

fn box_mask(width: u32, height: u32, t: &Thing) -> Option<BitMask> {
    let x0 = (t.x_center - t.width / 2).max(0);
    let x1 = (t.x_center + t.width / 2 - 1).min(width as i64 - 1);
    let y1 = t.bottom_row.min(height as i64 - 1);
    let y0 = (t.bottom_row - t.height + 1).max(0);
    if x0 > x1 || y0 > y1 || x1 < 0 || y1 < 0 {
        return None;
    }
    Some(BitMask::from_fn(width, height, |row, col| {
        (row as i64) >= y0 && (row as i64) <= y1 && (col as i64) >= x0 && (col as i64) <= x1
    }))
}

fn things_for_frame(schema: &LabelSchema, frame: u64) -> Vec<Thing> {
    let id = |name: &str| schema.find_by_name(name).expect("builtin class").id;
    let f = frame as i64;
    let mut things = Vec::new();

    for k in 0..2i64 {
        things.push(Thing {
            class_id: id("car"),
            confidence_micro: 600_000 + ((frame + k as u64 * 3) % 8) as u32 * 40_000,
            x_center: (f * 3 + k * 37) % 96 - 16,
            bottom_row: 32,
            width: 14,
            height: 8,
            distance_mm: (7000 - 100 * ((f * 5 + k * 11) % 30)) as u16,
        });
    }
    if (8..36).contains(&f) {
        things.push(Thing {
            class_id: id("person"),
            confidence_micro: 900_000,
            x_center: 34,
            bottom_row: 36,
            width: 5,
            height: 12,
            distance_mm: (6500 - 160 * (f - 8)) as u16,
        });
    }
    things.push(Thing {
        class_id: id("pole"),
        confidence_micro: 550_000 + (frame % 5) as u32 * 50_000,
        x_center: 78 - f * 2,
        bottom_row: 30,
        width: 2,
        height: 16,
        distance_mm: (9000 - 200 * f).max(1500) as u16,
    });
    if f >= 20 {
        things.push(Thing {
            class_id: id("traffic-light"),
            confidence_micro: 520_000,
            x_center: 50,
            bottom_row: 14,
            width: 4,
            height: 6,
            distance_mm: 8000,
        });
    }
    things
}

/// Build the 40-frame fixture.
pub fn walking_sequence() -> Vec<Frame> {
    let schema = LabelSchema::builtin();
    let id = |name: &str| schema.find_by_name(name).expect("builtin class").id;
    let width = WALKING_WIDTH as u32;
    let height = WALKING_HEIGHT as u32;
    let px = (width * height) as usize;

    (0..WALKING_FRAMES)
        .map(|frame| {
            // Static background bands.
            let mut semantic = Vec::with_capacity(px);
            for row in 0..height {
                let band = if row < 12 {
                    id("sky")
                } else if row < 20 {
                    id("building")
                } else if row < 34 {
                    id("road")
                } else {
                    id("sidewalk")
                };
                for _ in 0..width {
                    semantic.push(band);
                }
            }

            // Depth falls off with distance up the image; sky gives no
            // return, plus deterministic speckle.
            let mut depths = Vec::with_capacity(px);
            for row in 0..height as u64 {
                for col in 0..width as u64 {
                    let d = if row < 12 {
                        0
                    } else if (row * 31 + col * 17 + frame * 7) % 19 == 0 {
                        0
                    } else {
                        (20_000u64.saturating_sub(row * 400)).max(800) as u16
                    };
                    depths.push(d);
                }
            }

            let mut instances = Vec::new();
            for thing in things_for_frame(&schema, frame) {
                let Some(mask) = box_mask(width, height, &thing) else {
                    continue;
                };
                if mask.area() == 0 {
                    continue;
                }
                // Objects override the background depth.
                for (i, &bit) in mask.bits().iter().enumerate() {
                    if bit {
                        depths[i] = thing.distance_mm;
                    }
                }
                instances.push(FrameInstance {
                    class_id: thing.class_id,
                    confidence_micro: thing.confidence_micro,
                    bbox: panoptic_core::bbox_of_mask(&mask),
                    mask: panoptic_core::rle_encode(&mask),
                });
            }
            // A throwaway low-confidence duplicate every fourth frame; the
            // default threshold must reject it.
            if frame % 4 == 0 {
                if let Some(first) = instances.first().cloned() {
                    instances.push(FrameInstance { confidence_micro: 200_000, ..first });
                }
            }

            Frame {
                frame_id: frame,
                timestamp_us: frame * WALKING_CADENCE_US,
                width: WALKING_WIDTH,
                height: WALKING_HEIGHT,
                rgb: None,
                semantic: Some(
                    SemanticMap::new(width, height, semantic).expect("sized to fit"),
                ),
                depth: Some(DepthMap::new(width, height, depths).expect("sized to fit")),
                panoptic: None,
                instances: Some(instances),
            }
        })
        .collect()
}
