//! Implementation-vs-oracle comparison helpers shared by the unit suites and
//! the acceptance suite. Each panics with context on the first divergence.

use panoptic_core::feedback::{schedule, Candidate, FeedbackPolicy, SchedulerState};
use panoptic_core::fusion::{fuse_frame, FusionConfig, InstancePrediction, PanopticMap, SemanticMap};
use panoptic_core::metrics::{
    average_precision, match_segments, miou, pq_scores, ApImage, IouKind,
};
use panoptic_core::schema::LabelSchema;

use crate::oracle;

const TOL: f64 = 1e-9;
const PQ_FACTOR_TOL: f64 = 1e-12;

/// Matching equals the exhaustive oracle: same TP pairs (IoU within 1e-9),
/// same FP and FN sets.
pub fn assert_match_equals_oracle(pred: &PanopticMap, gt: &PanopticMap, schema: &LabelSchema) {
    let got = match_segments(pred, gt, schema).expect("valid inputs");
    let want = oracle::metrics::exhaustive_match(pred, gt, schema);

    let got_classes: Vec<u16> = got.per_class.keys().copied().collect();
    let mut want_classes: Vec<u16> = want
        .true_positives
        .keys()
        .chain(want.false_positives.keys())
        .chain(want.false_negatives.keys())
        .copied()
        .collect();
    want_classes.sort_unstable();
    want_classes.dedup();
    assert_eq!(got_classes, want_classes, "class sets differ");

    for class_id in got_classes {
        let m = &got.per_class[&class_id];
        let want_tp = want.true_positives.get(&class_id).cloned().unwrap_or_default();
        let got_tp: Vec<_> = m.true_positives.iter().map(|t| (t.pred, t.gt, t.iou)).collect();
        assert_eq!(got_tp.len(), want_tp.len(), "TP count differs for class {class_id}");
        for (g, w) in got_tp.iter().zip(&want_tp) {
            assert_eq!((g.0, g.1), (w.0, w.1), "TP pair differs for class {class_id}");
            assert!((g.2 - w.2).abs() <= TOL, "TP IoU differs for class {class_id}");
        }
        let want_fp = want.false_positives.get(&class_id).cloned().unwrap_or_default();
        assert_eq!(m.false_positives, want_fp, "FP set differs for class {class_id}");
        let want_fn = want.false_negatives.get(&class_id).cloned().unwrap_or_default();
        assert_eq!(m.false_negatives, want_fn, "FN set differs for class {class_id}");
    }
}

/// PQ/SQ/RQ per class and aggregates equal the oracle within 1e-9, and
/// PQ = SQ * RQ within 1e-12.
pub fn assert_pq_equals_oracle(pred: &PanopticMap, gt: &PanopticMap, schema: &LabelSchema) {
    let matches = match_segments(pred, gt, schema).expect("valid inputs");
    let got = pq_scores(&matches, schema).expect("known classes");
    let want = oracle::metrics::pq_from_match(
        &oracle::metrics::exhaustive_match(pred, gt, schema),
        schema,
    );

    let got_ids: Vec<u16> = got.per_class.keys().copied().collect();
    let want_ids: Vec<u16> = want.per_class.keys().copied().collect();
    assert_eq!(got_ids, want_ids, "included class sets differ");
    for (&class_id, c) in &got.per_class {
        let &(pq, sq, rq) = &want.per_class[&class_id];
        assert!((c.pq - pq).abs() <= TOL, "PQ differs for class {class_id}");
        assert!((c.sq - sq).abs() <= TOL, "SQ differs for class {class_id}");
        assert!((c.rq - rq).abs() <= TOL, "RQ differs for class {class_id}");
        assert!(
            (c.pq - c.sq * c.rq).abs() <= PQ_FACTOR_TOL,
            "PQ != SQ*RQ for class {class_id}"
        );
        assert!((0.0..=1.0).contains(&c.pq), "PQ out of range");
    }
    assert!((got.pq - want.pq).abs() <= TOL, "aggregate PQ differs");
    assert!((got.pq_things - want.pq_things).abs() <= TOL, "PQ_th differs");
    assert!((got.pq_stuff - want.pq_stuff).abs() <= TOL, "PQ_st differs");
}

/// mIoU and per-class IoUs equal the naive pixel tally exactly.
pub fn assert_miou_equals_oracle(
    pred: &SemanticMap,
    gt: &SemanticMap,
    schema: &LabelSchema,
) {
    let got = miou(pred, gt, schema).expect("valid inputs");
    let want = oracle::metrics::naive_miou(pred, gt, schema);
    assert_eq!(got.per_class_iou, want.per_class, "per-class IoU differs");
    assert_eq!(got.miou, want.miou, "mIoU differs");
}

/// AP equals the point-by-point PR enumeration within 1e-9 for one kind.
pub fn assert_ap_equals_oracle(
    images: &[ApImage],
    schema: &LabelSchema,
    kind: IouKind,
    thresholds: &[f64],
) {
    let got = average_precision(images, schema, kind, thresholds).expect("valid inputs");
    let want = oracle::ap::exhaustive_ap(images, kind, thresholds);
    let got_ids: Vec<u16> = got.per_class.keys().copied().collect();
    let want_ids: Vec<u16> = want.per_class.keys().copied().collect();
    assert_eq!(got_ids, want_ids, "AP class sets differ ({kind:?})");
    for (&class_id, c) in &got.per_class {
        let w = &want.per_class[&class_id];
        assert_eq!(c.by_threshold.len(), w.len());
        for (i, (&g, &e)) in c.by_threshold.iter().zip(w).enumerate() {
            assert!(
                (g - e).abs() <= TOL,
                "AP differs for class {class_id} at threshold index {i} ({kind:?}): {g} vs {e}"
            );
        }
        let wm = want.per_class_mean[&class_id];
        assert!((c.mean - wm).abs() <= TOL, "class AP mean differs ({kind:?})");
    }
    assert!((got.mean - want.mean).abs() <= TOL, "aggregate AP differs ({kind:?})");
}

/// Fusion output equals the straight-line oracle byte for byte, and the
/// structural invariants hold.
pub fn assert_fusion_equals_oracle(
    semantic: &SemanticMap,
    predictions: &[InstancePrediction],
    schema: &LabelSchema,
    cfg: &FusionConfig,
) {
    let got = fuse_frame(semantic, predictions, schema, cfg).expect("valid inputs");
    let want = oracle::fusion::fuse(semantic, predictions, schema, cfg);
    assert_eq!(got.class_ids(), want.classes.as_slice(), "class plane differs");
    assert_eq!(got.instance_ids(), want.instances.as_slice(), "instance plane differs");
    let got_segments: Vec<(u32, u16, u64)> =
        got.segments().iter().map(|s| (s.instance_id, s.class_id, s.area)).collect();
    assert_eq!(got_segments, want.segments, "segment index differs");

    // Invariants: schema rule, index consistency, determinism.
    got.validate_schema(schema).expect("thing/stuff rule holds");
    let rebuilt = PanopticMap::from_planes(
        got.width(),
        got.height(),
        got.class_ids().to_vec(),
        got.instance_ids().to_vec(),
    )
    .expect("planes are consistent");
    assert_eq!(rebuilt.segments(), got.segments(), "segment index not recomputable");
    let again = fuse_frame(semantic, predictions, schema, cfg).expect("valid inputs");
    assert_eq!(again, got, "fusion is not deterministic");
}

/// Scheduler emissions equal the rule-replay oracle, frame by frame.
pub fn assert_schedule_equals_oracle(
    stream: &[(u64, u64, Vec<Candidate>)],
    policy: &FeedbackPolicy,
) {
    let mut state = SchedulerState::new();
    let mut got = Vec::new();
    for (frame_id, ts, candidates) in stream {
        let events =
            schedule(*frame_id, *ts, candidates, policy, &mut state).expect("ascending stream");
        assert!(events.len() <= policy.max_events_per_frame, "emission cap exceeded");
        for pair in events.windows(2) {
            assert!(pair[0].priority >= pair[1].priority, "priorities not non-increasing");
        }
        got.extend(events);
    }
    let want = oracle::feedback::replay(stream, policy);
    assert_eq!(got, want, "scheduler emissions differ from rule replay");
}
