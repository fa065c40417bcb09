//! Point-by-point PR-curve oracle for average precision.
//!
//! Shares the matching *definition* with the library (ranked greedy
//! assignment) but re-derives every IoU by pixel counting and evaluates the
//! interpolated precision by scanning the full prefix list at each of the
//! 101 recall levels, rather than via the monotone-stack shortcut.

use std::collections::BTreeMap;

use panoptic_core::metrics::{ApImage, IouKind};
use panoptic_core::mask::BitMask;
use panoptic_core::schema::ClassId;

pub struct OracleAp {
    pub per_class: BTreeMap<ClassId, Vec<f64>>,
    pub per_class_mean: BTreeMap<ClassId, f64>,
    pub mean: f64,
}

fn pixel_iou(a: &BitMask, b: &BitMask) -> f64 {
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        if x && y {
            inter += 1;
        }
        if x || y {
            union += 1;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Tight box of a nonempty mask as a filled mask, so box IoU can reuse the
/// same pixel counter.
fn box_mask(mask: &BitMask, explicit: Option<panoptic_core::BBox>) -> BitMask {
    let b = explicit.or_else(|| panoptic_core::bbox_of_mask(mask)).expect("mask nonempty");
    b.fill(mask.width(), mask.height())
}

fn run_key(mask: &BitMask) -> Vec<u8> {
    // Row-major zero-first run lengths, as little-endian bytes.
    let mut runs: Vec<u32> = Vec::new();
    let mut current = false;
    let mut count = 0u32;
    for &bit in mask.bits() {
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

pub fn exhaustive_ap(images: &[ApImage], kind: IouKind, thresholds: &[f64]) -> OracleAp {
    let mut classes: Vec<ClassId> = Vec::new();
    for img in images {
        for g in &img.ground_truth {
            if !classes.contains(&g.class_id) {
                classes.push(g.class_id);
            }
        }
    }
    classes.sort_unstable();

    let mut per_class = BTreeMap::new();
    let mut per_class_mean = BTreeMap::new();
    for &class_id in &classes {
        let mut aps = Vec::with_capacity(thresholds.len());
        for &t in thresholds {
            aps.push(class_ap(images, class_id, kind, t));
        }
        let mean = aps.iter().sum::<f64>() / aps.len() as f64;
        per_class.insert(class_id, aps);
        per_class_mean.insert(class_id, mean);
    }
    let mean = if per_class_mean.is_empty() {
        0.0
    } else {
        per_class_mean.values().sum::<f64>() / per_class_mean.len() as f64
    };
    OracleAp { per_class, per_class_mean, mean }
}

fn class_ap(images: &[ApImage], class_id: ClassId, kind: IouKind, threshold: f64) -> f64 {
    // Rank predictions: confidence desc, image id asc, mask bytes asc.
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (ii, img) in images.iter().enumerate() {
        for (pi, p) in img.predictions.iter().enumerate() {
            if p.class_id == class_id {
                order.push((ii, pi));
            }
        }
    }
    order.sort_by(|&(ia, pa), &(ib, pb)| {
        let a = &images[ia].predictions[pa];
        let b = &images[ib].predictions[pb];
        b.confidence
            .total_cmp(&a.confidence)
            .then(images[ia].image_id.cmp(&images[ib].image_id))
            .then(run_key(&a.mask).cmp(&run_key(&b.mask)))
    });

    let gt_count: usize = images
        .iter()
        .map(|img| img.ground_truth.iter().filter(|g| g.class_id == class_id).count())
        .sum();
    if gt_count == 0 {
        return 0.0;
    }

    // Greedy assignment in rank order.
    let mut taken: Vec<Vec<bool>> =
        images.iter().map(|img| vec![false; img.ground_truth.len()]).collect();
    let mut outcomes: Vec<bool> = Vec::with_capacity(order.len());
    for &(ii, pi) in &order {
        let img = &images[ii];
        let pred = &img.predictions[pi];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in img.ground_truth.iter().enumerate() {
            if g.class_id != class_id || taken[ii][gi] {
                continue;
            }
            let iou = match kind {
                IouKind::Mask => pixel_iou(&pred.mask, &g.mask),
                IouKind::Box => {
                    pixel_iou(&box_mask(&pred.mask, pred.bbox), &box_mask(&g.mask, g.bbox))
                }
            };
            if iou < threshold {
                continue;
            }
            if best.map_or(true, |(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        match best {
            Some((gi, _)) => {
                taken[ii][gi] = true;
                outcomes.push(true);
            }
            None => outcomes.push(false),
        }
    }

    // PR points after each prefix of the ranked list.
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(outcomes.len());
    let mut tp = 0u64;
    for (k, &is_tp) in outcomes.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        let recall = tp as f64 / gt_count as f64;
        let precision = tp as f64 / (k as f64 + 1.0);
        points.push((recall, precision));
    }

    // Interpolated precision at each recall level by full scan.
    let mut sum = 0.0;
    for level in 0..=100 {
        let r = level as f64 / 100.0;
        let best = points
            .iter()
            .filter(|&&(recall, _)| recall >= r)
            .map(|&(_, precision)| precision)
            .fold(0.0, f64::max);
        sum += best;
    }
    sum / 101.0
}
