//! Straight-line re-implementation of the merge procedure, kept deliberately
//! naive: rank, claim, fill, with every rule spelled out inline.

use std::collections::HashMap;

use panoptic_core::fusion::{FusionConfig, InstancePrediction, SemanticMap};
use panoptic_core::schema::{ClassId, LabelSchema};

/// Raw planes plus (instance id, class id, area) triples in id order.
pub struct OracleFusion {
    pub classes: Vec<ClassId>,
    pub instances: Vec<u32>,
    pub segments: Vec<(u32, ClassId, u64)>,
}

fn run_key(bits: &[bool]) -> Vec<u8> {
    let mut runs: Vec<u32> = Vec::new();
    let mut current = false;
    let mut count = 0u32;
    for &bit in bits {
        if bit == current {
            count += 1;
        } else {
            runs.push(count);
            current = bit;
            count = 1;
        }
    }
    if count > 0 {
        runs.push(count);
    }
    runs.iter().flat_map(|r| r.to_le_bytes()).collect()
}

pub fn fuse(
    semantic: &SemanticMap,
    predictions: &[InstancePrediction],
    schema: &LabelSchema,
    cfg: &FusionConfig,
) -> OracleFusion {
    let px = semantic.ids().len();

    // Step 1: confidence gate.
    let mut kept: Vec<&InstancePrediction> =
        predictions.iter().filter(|p| p.confidence >= cfg.confidence_threshold).collect();

    // Step 2: rank by confidence desc, class asc, encoded-mask bytes asc.
    kept.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.class_id.cmp(&b.class_id))
            .then(run_key(a.mask.bits()).cmp(&run_key(b.mask.bits())))
    });

    // Step 3: claim pixels in rank order.
    let mut instances = vec![0u32; px];
    let mut classes = vec![0u16; px];
    let mut segments = Vec::new();
    let mut next_id = 1u32;
    for pred in kept {
        let mut fresh: Vec<usize> = Vec::new();
        for (i, &bit) in pred.mask.bits().iter().enumerate() {
            if bit && instances[i] == 0 {
                fresh.push(i);
            }
        }
        let original: u64 = pred.mask.bits().iter().filter(|&&b| b).count() as u64;
        let survives = !fresh.is_empty()
            && (fresh.len() as f64) / (original as f64) >= cfg.overlap_keep_fraction
            && fresh.len() as u64 >= cfg.min_instance_area as u64;
        if !survives {
            continue;
        }
        for &i in &fresh {
            instances[i] = next_id;
            classes[i] = pred.class_id;
        }
        segments.push((next_id, pred.class_id, fresh.len() as u64));
        next_id += 1;
    }

    // Step 4: semantic fill. Stuff classes need enough unclaimed area;
    // everything else (including unclaimed thing semantics) becomes void.
    let mut unclaimed: HashMap<ClassId, u64> = HashMap::new();
    for i in 0..px {
        if instances[i] == 0 {
            *unclaimed.entry(semantic.ids()[i]).or_insert(0) += 1;
        }
    }
    for i in 0..px {
        if instances[i] != 0 {
            continue;
        }
        let sem = semantic.ids()[i];
        let is_stuff = schema.is_thing(sem) == Some(false);
        classes[i] = if is_stuff && unclaimed[&sem] >= cfg.min_stuff_area as u64 {
            sem
        } else {
            schema.void_id()
        };
    }

    OracleFusion { classes, instances, segments }
}
