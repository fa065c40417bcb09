//! Semantic segmentation quality: confusion matrix, per-class IoU, mIoU.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::fusion::SemanticMap;
use crate::schema::{ClassId, LabelSchema};

use super::MetricsError;

/// Confusion matrix keyed by (gt class, pred class) over non-void-gt pixels,
/// per-class IoU, and their mean. Void never contributes a class of its own:
/// gt-void pixels are excluded entirely and predicted void on a labeled pixel
/// counts as a false negative for the gt class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemReport {
    pub confusion: BTreeMap<ClassId, BTreeMap<ClassId, u64>>,
    pub per_class_iou: BTreeMap<ClassId, f64>,
    pub miou: f64,
    /// Pixels counted (gt-void excluded).
    pub pixels: u64,
}

pub fn miou(
    pred: &SemanticMap,
    gt: &SemanticMap,
    schema: &LabelSchema,
) -> Result<SemReport, MetricsError> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(MetricsError::DimensionMismatch {
            pred_width: pred.width(),
            pred_height: pred.height(),
            gt_width: gt.width(),
            gt_height: gt.height(),
        });
    }
    crate::schema::validate_map(pred, schema).map_err(MetricsError::InvalidSemanticMap)?;
    crate::schema::validate_map(gt, schema).map_err(MetricsError::InvalidSemanticMap)?;

    let void = schema.void_id();
    let mut confusion: BTreeMap<ClassId, BTreeMap<ClassId, u64>> = BTreeMap::new();
    let mut pixels = 0u64;
    for (&p, &g) in pred.ids().iter().zip(gt.ids()) {
        if g == void {
            continue;
        }
        *confusion.entry(g).or_default().entry(p).or_insert(0) += 1;
        pixels += 1;
    }

    // Row sums = gt pixel counts per class, column sums = predicted counts.
    let mut gt_total: BTreeMap<ClassId, u64> = BTreeMap::new();
    let mut pred_total: BTreeMap<ClassId, u64> = BTreeMap::new();
    for (&g, row) in &confusion {
        for (&p, &n) in row {
            *gt_total.entry(g).or_insert(0) += n;
            *pred_total.entry(p).or_insert(0) += n;
        }
    }

    let mut per_class_iou = BTreeMap::new();
    let mut sum = 0.0;
    for class in schema.classes() {
        if class.id == void {
            continue;
        }
        let tp = confusion.get(&class.id).and_then(|r| r.get(&class.id)).copied().unwrap_or(0);
        let gt_n = gt_total.get(&class.id).copied().unwrap_or(0);
        let pred_n = pred_total.get(&class.id).copied().unwrap_or(0);
        let denom = gt_n + pred_n - tp;
        if denom == 0 {
            continue;
        }
        let iou = tp as f64 / denom as f64;
        per_class_iou.insert(class.id, iou);
        sum += iou;
    }
    let miou = if per_class_iou.is_empty() { 0.0 } else { sum / per_class_iou.len() as f64 };

    Ok(SemReport { confusion, per_class_iou, miou, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::load_schema;

    fn schema() -> LabelSchema {
        load_schema(
            r#"{
                "classes": [
                    {"id": 0, "name": "void", "is_thing": false, "weight": 0.0, "color": [0,0,0]},
                    {"id": 1, "name": "a", "is_thing": false, "weight": 0.0, "color": [1,1,1]},
                    {"id": 2, "name": "b", "is_thing": false, "weight": 0.0, "color": [2,2,2]}
                ],
                "void_id": 0
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn identical_maps_score_one() {
        let m = SemanticMap::new(2, 2, vec![1, 1, 2, 2]).unwrap();
        let r = miou(&m, &m, &schema()).unwrap();
        assert_eq!(r.miou, 1.0);
        assert_eq!(r.per_class_iou[&1], 1.0);
        assert_eq!(r.per_class_iou[&2], 1.0);
    }

    #[test]
    fn half_a_half_b_pred_all_a() {
        // gt: half class a, half class b; pred: all a.
        // IoU_a = 2/4 = 0.5, IoU_b = 0, mIoU = 0.25.
        let gt = SemanticMap::new(2, 2, vec![1, 1, 2, 2]).unwrap();
        let pred = SemanticMap::new(2, 2, vec![1, 1, 1, 1]).unwrap();
        let r = miou(&pred, &gt, &schema()).unwrap();
        assert_eq!(r.per_class_iou[&1], 0.5);
        assert_eq!(r.per_class_iou[&2], 0.0);
        assert_eq!(r.miou, 0.25);
    }

    #[test]
    fn gt_void_pixels_excluded() {
        let gt = SemanticMap::new(2, 2, vec![0, 0, 1, 1]).unwrap();
        let pred = SemanticMap::new(2, 2, vec![2, 2, 1, 1]).unwrap();
        let r = miou(&pred, &gt, &schema()).unwrap();
        assert_eq!(r.pixels, 2);
        assert_eq!(r.per_class_iou[&1], 1.0);
        // Class b was never predicted on a labeled pixel and has no gt: excluded.
        assert!(!r.per_class_iou.contains_key(&2));
        assert_eq!(r.miou, 1.0);
    }

    #[test]
    fn confusion_row_sums_match_pixel_counts() {
        let gt = SemanticMap::new(4, 1, vec![1, 1, 2, 2]).unwrap();
        let pred = SemanticMap::new(4, 1, vec![1, 2, 2, 0]).unwrap();
        let r = miou(&pred, &gt, &schema()).unwrap();
        let row_sum: u64 = r.confusion.values().flat_map(|row| row.values()).sum();
        assert_eq!(row_sum, r.pixels);
        assert_eq!(r.confusion[&2][&0], 1); // predicted void on gt b
    }
}
