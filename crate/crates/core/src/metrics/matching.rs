//! Segment extraction and TP/FP/FN matching between panoptic map pairs.
//!
//! A segment is the pixel set sharing one (class id, instance id) pair, so
//! each stuff class forms a single segment and need not be connected. With
//! the strict IoU > 0.5 rule each segment can match at most one counterpart,
//! which makes the greedy matching below provably identical to exhaustive
//! search.

use std::collections::{BTreeMap, HashMap};

use crate::fusion::{InstanceId, PanopticMap};
use crate::schema::{ClassId, LabelSchema};

use super::MetricsError;

/// Identity of a segment inside one map: stuff segments have instance id 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentKey {
    pub class_id: ClassId,
    pub instance_id: InstanceId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruePositive {
    pub pred: SegmentKey,
    pub gt: SegmentKey,
    pub iou: f64,
}

/// Matching outcome for one class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassMatches {
    pub true_positives: Vec<TruePositive>,
    pub false_positives: Vec<SegmentKey>,
    pub false_negatives: Vec<SegmentKey>,
}

/// Matching outcome per class. Classes with no segments on either side are
/// absent from the map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    pub per_class: BTreeMap<ClassId, ClassMatches>,
}

impl MatchResult {
    /// Fold another frame's matches into this one. Segment keys are only
    /// unique within a frame, so merged results are meaningful for counting
    /// and IoU statistics, not for identifying segments.
    pub fn merge(&mut self, other: MatchResult) {
        for (class_id, m) in other.per_class {
            let entry = self.per_class.entry(class_id).or_default();
            entry.true_positives.extend(m.true_positives);
            entry.false_positives.extend(m.false_positives);
            entry.false_negatives.extend(m.false_negatives);
        }
    }
}

/// Match same-class segments between `pred` and `gt` at IoU > 0.5.
///
/// Ground-truth void pixels are ignored: they are subtracted from the union,
/// and predicted segments with more than half their area on gt-void are
/// dropped rather than counted as false positives.
pub fn match_segments(
    pred: &PanopticMap,
    gt: &PanopticMap,
    schema: &LabelSchema,
) -> Result<MatchResult, MetricsError> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(MetricsError::DimensionMismatch {
            pred_width: pred.width(),
            pred_height: pred.height(),
            gt_width: gt.width(),
            gt_height: gt.height(),
        });
    }
    pred.validate_schema(schema).map_err(MetricsError::InvalidMap)?;
    gt.validate_schema(schema).map_err(MetricsError::InvalidMap)?;

    let void = schema.void_id();
    let mut pred_area: HashMap<SegmentKey, u64> = HashMap::new();
    let mut gt_area: HashMap<SegmentKey, u64> = HashMap::new();
    let mut inter: HashMap<(SegmentKey, SegmentKey), u64> = HashMap::new();
    let mut pred_void_overlap: HashMap<SegmentKey, u64> = HashMap::new();

    let n = pred.class_ids().len();
    for i in 0..n {
        let pk = segment_key_at(pred, i, void);
        let gk = segment_key_at(gt, i, void);
        if let Some(pk) = pk {
            *pred_area.entry(pk).or_insert(0) += 1;
            if gk.is_none() {
                *pred_void_overlap.entry(pk).or_insert(0) += 1;
            }
        }
        if let Some(gk) = gk {
            *gt_area.entry(gk).or_insert(0) += 1;
        }
        if let (Some(pk), Some(gk)) = (pk, gk) {
            *inter.entry((pk, gk)).or_insert(0) += 1;
        }
    }

    // Candidate pairs above the matching threshold, ranked for determinism.
    let mut candidates: Vec<TruePositive> = Vec::new();
    for (&(pk, gk), &overlap) in &inter {
        if pk.class_id != gk.class_id {
            continue;
        }
        let void_cut = pred_void_overlap.get(&pk).copied().unwrap_or(0);
        let union = pred_area[&pk] + gt_area[&gk] - overlap - void_cut;
        let iou = overlap as f64 / union as f64;
        if iou > 0.5 {
            candidates.push(TruePositive { pred: pk, gt: gk, iou });
        }
    }
    candidates.sort_by(|a, b| {
        b.iou.total_cmp(&a.iou).then(a.pred.cmp(&b.pred)).then(a.gt.cmp(&b.gt))
    });

    let mut result = MatchResult::default();
    let mut pred_matched: HashMap<SegmentKey, bool> =
        pred_area.keys().map(|&k| (k, false)).collect();
    let mut gt_matched: HashMap<SegmentKey, bool> = gt_area.keys().map(|&k| (k, false)).collect();
    for tp in candidates {
        if pred_matched[&tp.pred] || gt_matched[&tp.gt] {
            continue;
        }
        pred_matched.insert(tp.pred, true);
        gt_matched.insert(tp.gt, true);
        result.per_class.entry(tp.pred.class_id).or_default().true_positives.push(tp);
    }

    let mut fps: Vec<SegmentKey> = pred_matched
        .iter()
        .filter(|&(k, &matched)| {
            let void_cut = pred_void_overlap.get(k).copied().unwrap_or(0);
            !matched && (void_cut as f64) <= 0.5 * pred_area[k] as f64
        })
        .map(|(&k, _)| k)
        .collect();
    fps.sort();
    for k in fps {
        result.per_class.entry(k.class_id).or_default().false_positives.push(k);
    }

    let mut fns: Vec<SegmentKey> =
        gt_matched.iter().filter(|&(_, &m)| !m).map(|(&k, _)| k).collect();
    fns.sort();
    for k in fns {
        result.per_class.entry(k.class_id).or_default().false_negatives.push(k);
    }

    for m in result.per_class.values_mut() {
        m.true_positives.sort_by(|a, b| a.pred.cmp(&b.pred));
    }
    Ok(result)
}

fn segment_key_at(map: &PanopticMap, idx: usize, void: ClassId) -> Option<SegmentKey> {
    let class_id = map.class_ids()[idx];
    if class_id == void {
        return None;
    }
    Some(SegmentKey { class_id, instance_id: map.instance_ids()[idx] })
}
