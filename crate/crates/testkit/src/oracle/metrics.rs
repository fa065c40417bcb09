//! Brute-force metric oracles working straight from raw pixel sets.
//!
//! These deliberately re-derive everything — segments, overlaps, formulas —
//! without touching the library's matching or scoring paths.

use std::collections::{BTreeMap, BTreeSet};

use panoptic_core::fusion::PanopticMap;
use panoptic_core::metrics::SegmentKey;
use panoptic_core::schema::{ClassId, LabelSchema};

/// Exhaustive matching outcome, as plain sorted sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMatch {
    /// (pred, gt, iou) triples sorted by pred key.
    pub true_positives: BTreeMap<ClassId, Vec<(SegmentKey, SegmentKey, f64)>>,
    pub false_positives: BTreeMap<ClassId, Vec<SegmentKey>>,
    pub false_negatives: BTreeMap<ClassId, Vec<SegmentKey>>,
}

/// Pixel index sets per segment, skipping void.
fn segments_of(map: &PanopticMap, void: ClassId) -> BTreeMap<SegmentKey, BTreeSet<usize>> {
    let mut out: BTreeMap<SegmentKey, BTreeSet<usize>> = BTreeMap::new();
    for (i, (&class_id, &instance_id)) in
        map.class_ids().iter().zip(map.instance_ids()).enumerate()
    {
        if class_id == void {
            continue;
        }
        out.entry(SegmentKey { class_id, instance_id }).or_default().insert(i);
    }
    out
}

/// Exhaustively test every (pred, gt) segment pair. Panics if the IoU > 0.5
/// pairs ever fail to form a one-to-one matching — that uniqueness is a
/// property the suite asserts on every generated case.
pub fn exhaustive_match(pred: &PanopticMap, gt: &PanopticMap, schema: &LabelSchema) -> OracleMatch {
    let void = schema.void_id();
    let pred_segments = segments_of(pred, void);
    let gt_segments = segments_of(gt, void);
    let gt_void: BTreeSet<usize> = gt
        .class_ids()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == void)
        .map(|(i, _)| i)
        .collect();

    let mut pairs: Vec<(SegmentKey, SegmentKey, f64)> = Vec::new();
    for (&pk, p_pixels) in &pred_segments {
        for (&gk, g_pixels) in &gt_segments {
            if pk.class_id != gk.class_id {
                continue;
            }
            let inter = p_pixels.intersection(g_pixels).count() as u64;
            if inter == 0 {
                continue;
            }
            let void_cut = p_pixels.intersection(&gt_void).count() as u64;
            let union =
                p_pixels.len() as u64 + g_pixels.len() as u64 - inter - void_cut;
            let iou = inter as f64 / union as f64;
            if iou > 0.5 {
                pairs.push((pk, gk, iou));
            }
        }
    }

    // Uniqueness check: each segment may appear in at most one pair.
    let mut seen_pred = BTreeSet::new();
    let mut seen_gt = BTreeSet::new();
    for &(pk, gk, _) in &pairs {
        assert!(seen_pred.insert(pk), "pred segment {pk:?} matched twice at IoU > 0.5");
        assert!(seen_gt.insert(gk), "gt segment {gk:?} matched twice at IoU > 0.5");
    }

    let mut result = OracleMatch {
        true_positives: BTreeMap::new(),
        false_positives: BTreeMap::new(),
        false_negatives: BTreeMap::new(),
    };
    for (pk, gk, iou) in pairs {
        result.true_positives.entry(pk.class_id).or_default().push((pk, gk, iou));
    }
    for tps in result.true_positives.values_mut() {
        tps.sort_by(|a, b| a.0.cmp(&b.0));
    }
    for (&pk, p_pixels) in &pred_segments {
        if seen_pred.contains(&pk) {
            continue;
        }
        let void_cut = p_pixels.intersection(&gt_void).count() as f64;
        if void_cut > 0.5 * p_pixels.len() as f64 {
            continue;
        }
        result.false_positives.entry(pk.class_id).or_default().push(pk);
    }
    for &gk in gt_segments.keys() {
        if !seen_gt.contains(&gk) {
            result.false_negatives.entry(gk.class_id).or_default().push(gk);
        }
    }
    result
}

/// Per-class (pq, sq, rq) plus (pq, pq_things, pq_stuff) aggregates,
/// recomputed from the oracle matching.
pub struct OraclePq {
    pub per_class: BTreeMap<ClassId, (f64, f64, f64)>,
    pub pq: f64,
    pub pq_things: f64,
    pub pq_stuff: f64,
}

pub fn pq_from_match(matching: &OracleMatch, schema: &LabelSchema) -> OraclePq {
    let mut class_ids: BTreeSet<ClassId> = BTreeSet::new();
    class_ids.extend(matching.true_positives.keys());
    class_ids.extend(matching.false_positives.keys());
    class_ids.extend(matching.false_negatives.keys());

    let mut per_class = BTreeMap::new();
    for &class_id in &class_ids {
        let tps = matching.true_positives.get(&class_id).map(Vec::as_slice).unwrap_or(&[]);
        let fp = matching.false_positives.get(&class_id).map_or(0, Vec::len);
        let fn_count = matching.false_negatives.get(&class_id).map_or(0, Vec::len);
        let tp = tps.len();
        if tp + fp + fn_count == 0 {
            continue;
        }
        let sq = if tp == 0 {
            0.0
        } else {
            tps.iter().map(|&(_, _, iou)| iou).sum::<f64>() / tp as f64
        };
        let rq = tp as f64 / (tp as f64 + 0.5 * fp as f64 + 0.5 * fn_count as f64);
        per_class.insert(class_id, (sq * rq, sq, rq));
    }

    let averaged = |which: Option<bool>| -> f64 {
        let vals: Vec<f64> = per_class
            .iter()
            .filter(|(&id, _)| match which {
                None => true,
                Some(want_thing) => schema.is_thing(id) == Some(want_thing),
            })
            .map(|(_, &(pq, _, _))| pq)
            .collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    OraclePq {
        pq: averaged(None),
        pq_things: averaged(Some(true)),
        pq_stuff: averaged(Some(false)),
        per_class,
    }
}

/// Naive per-pixel mIoU tally: per class, count TP / FP / FN directly.
pub struct OracleMiou {
    pub per_class: BTreeMap<ClassId, f64>,
    pub miou: f64,
}

pub fn naive_miou(
    pred: &panoptic_core::SemanticMap,
    gt: &panoptic_core::SemanticMap,
    schema: &LabelSchema,
) -> OracleMiou {
    let void = schema.void_id();
    let mut per_class = BTreeMap::new();
    let mut sum = 0.0;
    for class in schema.classes() {
        if class.id == void {
            continue;
        }
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_count = 0u64;
        for (&p, &g) in pred.ids().iter().zip(gt.ids()) {
            if g == void {
                continue;
            }
            match (g == class.id, p == class.id) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_count += 1,
                (false, false) => {}
            }
        }
        if tp + fp + fn_count == 0 {
            continue;
        }
        let iou = tp as f64 / (tp + fp + fn_count) as f64;
        per_class.insert(class.id, iou);
        sum += iou;
    }
    let miou = if per_class.is_empty() { 0.0 } else { sum / per_class.len() as f64 };
    OracleMiou { per_class, miou }
}
