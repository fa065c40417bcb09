//! Average precision over box or mask IoU, with 101-point interpolation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::fusion::InstancePrediction;
use crate::mask::{bbox_of_mask, box_iou, mask_iou, rle_encode, BBox, BitMask};
use crate::schema::{ClassId, LabelSchema};

use super::MetricsError;

/// IoU flavor: `Box` scores detection (AP^d), `Mask` scores instance
/// segmentation (AP^i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IouKind {
    Box,
    Mask,
}

/// Ground-truth instance; the box is derived from the mask when absent.
#[derive(Debug, Clone)]
pub struct GtInstance {
    pub class_id: ClassId,
    pub mask: BitMask,
    pub bbox: Option<BBox>,
}

/// Predictions and ground truth for one image.
#[derive(Debug, Clone, Default)]
pub struct ApImage {
    pub image_id: u64,
    pub predictions: Vec<InstancePrediction>,
    pub ground_truth: Vec<GtInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAp {
    /// AP at each requested threshold, in threshold order.
    pub by_threshold: Vec<f64>,
    /// Mean over thresholds.
    pub mean: f64,
    pub gt_count: usize,
}

/// Per-class AP and the aggregate mean. Classes without any ground-truth
/// instance are excluded (predictions for them score nothing either way).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApReport {
    pub kind: IouKind,
    pub thresholds: Vec<f64>,
    pub per_class: BTreeMap<ClassId, ClassAp>,
    pub mean: f64,
    pub class_count: usize,
}

/// The de-facto default threshold sweep 0.50, 0.55, ..., 0.95.
pub fn default_ap_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

const RECALL_LEVELS: usize = 101;

/// Compute average precision over per-image prediction/ground-truth lists.
///
/// Predictions are ranked by confidence (ties broken by image id, then
/// encoded-mask bytes) and matched greedily to the unmatched ground truth
/// with the highest IoU at or above each threshold. AP is the mean of
/// interpolated precision at 101 equally spaced recall levels.
pub fn average_precision(
    images: &[ApImage],
    schema: &LabelSchema,
    kind: IouKind,
    thresholds: &[f64],
) -> Result<ApReport, MetricsError> {
    if thresholds.is_empty() {
        return Err(MetricsError::EmptyThresholds);
    }
    for &t in thresholds {
        if !(t > 0.0 && t < 1.0) {
            return Err(MetricsError::ThresholdOutOfRange { value: t });
        }
    }

    // Validate inputs and collect the class set with ground truth.
    let mut gt_classes: Vec<ClassId> = Vec::new();
    for img in images {
        for p in &img.predictions {
            match schema.is_thing(p.class_id) {
                None => return Err(MetricsError::UnknownClass { class_id: p.class_id }),
                Some(false) => return Err(MetricsError::NotAThingClass { class_id: p.class_id }),
                Some(true) => {}
            }
            if !(0.0..=1.0).contains(&p.confidence) {
                return Err(MetricsError::BadConfidence { value: p.confidence });
            }
            if p.mask.area() == 0 {
                return Err(MetricsError::EmptyInstanceMask { image_id: img.image_id });
            }
        }
        for g in &img.ground_truth {
            match schema.is_thing(g.class_id) {
                None => return Err(MetricsError::UnknownClass { class_id: g.class_id }),
                Some(false) => return Err(MetricsError::NotAThingClass { class_id: g.class_id }),
                Some(true) => {}
            }
            if g.mask.area() == 0 {
                return Err(MetricsError::EmptyInstanceMask { image_id: img.image_id });
            }
            if !gt_classes.contains(&g.class_id) {
                gt_classes.push(g.class_id);
            }
        }
    }
    gt_classes.sort_unstable();

    let mut per_class = BTreeMap::new();
    for &class_id in &gt_classes {
        let class_eval = evaluate_class(images, class_id, kind, thresholds)?;
        per_class.insert(class_id, class_eval);
    }

    let class_count = per_class.len();
    let mean = if class_count == 0 {
        0.0
    } else {
        per_class.values().map(|c| c.mean).sum::<f64>() / class_count as f64
    };

    Ok(ApReport { kind, thresholds: thresholds.to_vec(), per_class, mean, class_count })
}

struct RankedPred {
    image_idx: usize,
    /// IoU against each gt of the same class in the same image.
    ious: Vec<f64>,
}

fn evaluate_class(
    images: &[ApImage],
    class_id: ClassId,
    kind: IouKind,
    thresholds: &[f64],
) -> Result<ClassAp, MetricsError> {
    // Rank the class's predictions across all images.
    struct Entry {
        image_idx: usize,
        pred_idx: usize,
        confidence: f64,
        image_id: u64,
        key: Vec<u8>,
    }
    let mut entries: Vec<Entry> = Vec::new();
    let mut gt_count = 0usize;
    for (image_idx, img) in images.iter().enumerate() {
        gt_count += img.ground_truth.iter().filter(|g| g.class_id == class_id).count();
        for (pred_idx, p) in img.predictions.iter().enumerate() {
            if p.class_id == class_id {
                entries.push(Entry {
                    image_idx,
                    pred_idx,
                    confidence: p.confidence,
                    image_id: img.image_id,
                    key: rle_encode(&p.mask).run_bytes(),
                });
            }
        }
    }
    entries.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.image_id.cmp(&b.image_id))
            .then(a.key.cmp(&b.key))
    });

    // Precompute IoUs against same-class gts, shared across thresholds.
    let gt_indices: Vec<Vec<usize>> = images
        .iter()
        .map(|img| {
            img.ground_truth
                .iter()
                .enumerate()
                .filter(|(_, g)| g.class_id == class_id)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut ranked: Vec<RankedPred> = Vec::with_capacity(entries.len());
    for e in &entries {
        let img = &images[e.image_idx];
        let pred = &img.predictions[e.pred_idx];
        let mut ious = Vec::with_capacity(gt_indices[e.image_idx].len());
        for &gi in &gt_indices[e.image_idx] {
            ious.push(pair_iou(pred, &img.ground_truth[gi], kind)?);
        }
        ranked.push(RankedPred { image_idx: e.image_idx, ious });
    }

    let mut by_threshold = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        by_threshold.push(ap_at_threshold(&ranked, &gt_indices, gt_count, t));
    }
    let mean = by_threshold.iter().sum::<f64>() / by_threshold.len() as f64;
    Ok(ClassAp { by_threshold, mean, gt_count })
}

fn pair_iou(pred: &InstancePrediction, gt: &GtInstance, kind: IouKind) -> Result<f64, MetricsError> {
    match kind {
        IouKind::Mask => Ok(mask_iou(&pred.mask, &gt.mask)?),
        IouKind::Box => {
            let pb = pred
                .bbox
                .or_else(|| bbox_of_mask(&pred.mask))
                .expect("prediction masks are nonempty");
            let gb = gt
                .bbox
                .or_else(|| bbox_of_mask(&gt.mask))
                .expect("ground-truth masks are nonempty");
            Ok(box_iou(&pb, &gb))
        }
    }
}

fn ap_at_threshold(
    ranked: &[RankedPred],
    gt_indices: &[Vec<usize>],
    gt_count: usize,
    threshold: f64,
) -> f64 {
    if gt_count == 0 {
        return 0.0;
    }
    let mut matched: Vec<Vec<bool>> = gt_indices.iter().map(|g| vec![false; g.len()]).collect();
    let mut tp = 0u64;
    let mut fp = 0u64;
    let n = ranked.len();
    let mut recall = Vec::with_capacity(n);
    let mut precision = Vec::with_capacity(n);
    for pred in ranked {
        // Highest-IoU unmatched gt at or above the threshold; first wins ties.
        let mut best: Option<(usize, f64)> = None;
        for (slot, &iou) in pred.ious.iter().enumerate() {
            if matched[pred.image_idx][slot] || iou < threshold {
                continue;
            }
            if best.map_or(true, |(_, b)| iou > b) {
                best = Some((slot, iou));
            }
        }
        match best {
            Some((slot, _)) => {
                matched[pred.image_idx][slot] = true;
                tp += 1;
            }
            None => fp += 1,
        }
        recall.push(tp as f64 / gt_count as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }

    // Monotone interpolation from the right, then sample 101 recall levels.
    let mut mono = precision.clone();
    for i in (0..n.saturating_sub(1)).rev() {
        mono[i] = mono[i].max(mono[i + 1]);
    }
    let mut sum = 0.0;
    let mut k = 0usize;
    for level in 0..RECALL_LEVELS {
        let r = level as f64 / (RECALL_LEVELS - 1) as f64;
        while k < n && recall[k] < r {
            k += 1;
        }
        if k < n {
            sum += mono[k];
        }
    }
    sum / RECALL_LEVELS as f64
}
