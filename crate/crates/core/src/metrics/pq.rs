//! Panoptic quality from a match result: per class SQ (mean TP IoU),
//! RQ (F1-like count term), PQ = SQ * RQ, plus thing/stuff aggregates.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::schema::{ClassId, LabelSchema};

use super::matching::MatchResult;
use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassPq {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
    pub is_thing: bool,
}

/// Per-class and aggregate panoptic quality. Classes absent from both maps
/// are excluded; aggregates average over the included classes only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PqReport {
    pub per_class: BTreeMap<ClassId, ClassPq>,
    pub pq: f64,
    pub pq_things: f64,
    pub pq_stuff: f64,
    pub class_count: usize,
    pub thing_count: usize,
    pub stuff_count: usize,
}

pub fn pq_scores(matches: &MatchResult, schema: &LabelSchema) -> Result<PqReport, MetricsError> {
    let mut per_class = BTreeMap::new();
    for (&class_id, m) in &matches.per_class {
        let tp = m.true_positives.len();
        let fp = m.false_positives.len();
        let fn_count = m.false_negatives.len();
        if tp + fp + fn_count == 0 {
            continue;
        }
        let is_thing = schema
            .is_thing(class_id)
            .ok_or(MetricsError::UnknownClass { class_id })?;
        let sq = if tp == 0 {
            0.0
        } else {
            m.true_positives.iter().map(|t| t.iou).sum::<f64>() / tp as f64
        };
        let denom = tp as f64 + 0.5 * fp as f64 + 0.5 * fn_count as f64;
        let rq = if denom == 0.0 { 0.0 } else { tp as f64 / denom };
        per_class.insert(class_id, ClassPq { pq: sq * rq, sq, rq, tp, fp, fn_count, is_thing });
    }

    let mean = |filter: &dyn Fn(&ClassPq) -> bool| -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0usize;
        for c in per_class.values().filter(|c| filter(c)) {
            sum += c.pq;
            count += 1;
        }
        (if count == 0 { 0.0 } else { sum / count as f64 }, count)
    };
    let (pq, class_count) = mean(&|_| true);
    let (pq_things, thing_count) = mean(&|c| c.is_thing);
    let (pq_stuff, stuff_count) = mean(&|c| !c.is_thing);

    Ok(PqReport { per_class, pq, pq_things, pq_stuff, class_count, thing_count, stuff_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::matching::{ClassMatches, SegmentKey, TruePositive};
    use crate::schema::load_schema;

    fn schema() -> LabelSchema {
        load_schema(
            r#"{
                "classes": [
                    {"id": 0, "name": "void", "is_thing": false, "weight": 0.0, "color": [0,0,0]},
                    {"id": 1, "name": "road", "is_thing": false, "weight": 0.0, "color": [1,1,1]},
                    {"id": 5, "name": "car", "is_thing": true, "weight": 2.0, "color": [2,2,2]}
                ],
                "void_id": 0
            }"#,
        )
        .unwrap()
    }

    fn key(class_id: u16, instance_id: u32) -> SegmentKey {
        SegmentKey { class_id, instance_id }
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let mut matches = MatchResult::default();
        matches.per_class.insert(
            1,
            ClassMatches {
                true_positives: vec![TruePositive { pred: key(1, 0), gt: key(1, 0), iou: 1.0 }],
                ..Default::default()
            },
        );
        matches.per_class.insert(
            5,
            ClassMatches {
                true_positives: vec![TruePositive { pred: key(5, 1), gt: key(5, 1), iou: 1.0 }],
                ..Default::default()
            },
        );
        let report = pq_scores(&matches, &schema()).unwrap();
        assert_eq!(report.pq, 1.0);
        assert_eq!(report.pq_things, 1.0);
        assert_eq!(report.pq_stuff, 1.0);
        assert_eq!(report.class_count, 2);
    }

    #[test]
    fn single_class_formula_case() {
        // 1 TP at IoU 0.8 plus 1 FP: SQ 0.8, RQ 1/1.5, PQ 0.5333...
        let mut matches = MatchResult::default();
        matches.per_class.insert(
            5,
            ClassMatches {
                true_positives: vec![TruePositive { pred: key(5, 1), gt: key(5, 1), iou: 0.8 }],
                false_positives: vec![key(5, 2)],
                ..Default::default()
            },
        );
        let report = pq_scores(&matches, &schema()).unwrap();
        let c = &report.per_class[&5];
        assert!((c.sq - 0.8).abs() < 1e-12);
        assert!((c.rq - 1.0 / 1.5).abs() < 1e-12);
        assert!((c.pq - 0.5333333333333333).abs() < 1e-12);
        assert_eq!(report.thing_count, 1);
        assert_eq!(report.stuff_count, 0);
    }

    #[test]
    fn empty_classes_excluded() {
        let mut matches = MatchResult::default();
        matches.per_class.insert(5, ClassMatches::default());
        let report = pq_scores(&matches, &schema()).unwrap();
        assert!(report.per_class.is_empty());
        assert_eq!(report.class_count, 0);
        assert_eq!(report.pq, 0.0);
    }
}
