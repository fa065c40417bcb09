//! Randomized implementation-vs-oracle checks at development scale; the
//! acceptance suite reruns them at full scale.

use panoptic_core::fusion::FusionConfig;
use panoptic_core::metrics::{average_precision, default_ap_thresholds, ApImage, GtInstance, IouKind};
use panoptic_core::InstancePrediction;
use panoptic_testkit::{check, gen, rng};
use rand::Rng;

#[test]
fn matching_and_pq_equal_oracle() {
    let mut rng = rng(0x5eed_0001);
    for _ in 0..200 {
        let (pred, gt, schema) = gen::random_panoptic_pair(&mut rng);
        check::assert_match_equals_oracle(&pred, &gt, &schema);
        check::assert_pq_equals_oracle(&pred, &gt, &schema);
    }
}

#[test]
fn miou_equals_naive_tally() {
    let mut rng = rng(0x5eed_0002);
    for _ in 0..200 {
        let (pred, gt, schema) = gen::random_panoptic_pair(&mut rng);
        check::assert_miou_equals_oracle(&pred.class_plane(), &gt.class_plane(), &schema);
        let a = gen::random_semantic(&mut rng, &schema, 12, 9);
        let b = gen::random_semantic(&mut rng, &schema, 12, 9);
        check::assert_miou_equals_oracle(&a, &b, &schema);
    }
}

pub fn random_ap_images(rng: &mut impl Rng) -> (Vec<ApImage>, panoptic_core::LabelSchema) {
    let schema = gen::schema_with(1, 2);
    let things: Vec<u16> = schema.thing_ids().collect();
    let image_count = rng.gen_range(1..=3);
    let mut images = Vec::with_capacity(image_count);
    for image_id in 0..image_count as u64 {
        let mut predictions = Vec::new();
        let mut ground_truth = Vec::new();
        for &class_id in &things {
            for _ in 0..rng.gen_range(0..=3) {
                ground_truth.push(GtInstance {
                    class_id,
                    mask: gen::random_rect_mask(rng, 10, 10),
                    bbox: None,
                });
            }
            for _ in 0..rng.gen_range(0..=5) {
                // Half the predictions shadow a ground-truth mask so high-IoU
                // matches occur; confidences collide on purpose.
                let mask = if rng.gen_bool(0.5) && !ground_truth.is_empty() {
                    let i = rng.gen_range(0..ground_truth.len());
                    ground_truth[i].mask.clone()
                } else {
                    gen::random_rect_mask(rng, 10, 10)
                };
                predictions.push(InstancePrediction {
                    class_id,
                    confidence: rng.gen_range(0..=4) as f64 * 0.25,
                    mask,
                    bbox: None,
                });
            }
        }
        images.push(ApImage { image_id, predictions, ground_truth });
    }
    (images, schema)
}

#[test]
fn ap_equals_pr_enumeration() {
    let mut rng = rng(0x5eed_0003);
    let thresholds = default_ap_thresholds();
    for _ in 0..100 {
        let (images, schema) = random_ap_images(&mut rng);
        check::assert_ap_equals_oracle(&images, &schema, IouKind::Box, &thresholds);
        check::assert_ap_equals_oracle(&images, &schema, IouKind::Mask, &thresholds);
    }
}

#[test]
fn duplicate_prediction_never_raises_ap() {
    let mut rng = rng(0x5eed_0004);
    let thresholds = default_ap_thresholds();
    for _ in 0..50 {
        let (mut images, schema) = random_ap_images(&mut rng);
        let base = average_precision(&images, &schema, IouKind::Mask, &thresholds)
            .expect("valid inputs");
        let Some(img) = images.iter_mut().find(|i| !i.predictions.is_empty()) else {
            continue;
        };
        let dup = img.predictions[0].clone();
        img.predictions.push(dup);
        let with_dup = average_precision(&images, &schema, IouKind::Mask, &thresholds)
            .expect("valid inputs");
        assert!(
            with_dup.mean <= base.mean + 1e-12,
            "duplicate prediction raised AP: {} -> {}",
            base.mean,
            with_dup.mean
        );
    }
}

#[test]
fn fusion_equals_straight_line_oracle() {
    let mut rng = rng(0x5eed_0005);
    for _ in 0..150 {
        let (semantic, predictions, schema) = gen::random_fusion_inputs(&mut rng);
        let cfg = FusionConfig {
            confidence_threshold: rng.gen_range(0..=4) as f64 * 0.25,
            overlap_keep_fraction: rng.gen_range(0..=4) as f64 * 0.25,
            min_stuff_area: rng.gen_range(0..=32),
            min_instance_area: rng.gen_range(0..=8),
        };
        check::assert_fusion_equals_oracle(&semantic, &predictions, &schema, &cfg);
    }
}

#[test]
fn raising_threshold_never_adds_instances() {
    let mut rng = rng(0x5eed_0006);
    let sweep = [0.0, 0.25, 0.5, 0.75, 1.0];
    for _ in 0..60 {
        let (semantic, predictions, schema) = gen::random_fusion_inputs(&mut rng);
        let mut last = usize::MAX;
        for threshold in sweep {
            let cfg = FusionConfig {
                confidence_threshold: threshold,
                min_stuff_area: 0,
                min_instance_area: 0,
                ..FusionConfig::default()
            };
            let map = panoptic_core::fuse_frame(&semantic, &predictions, &schema, &cfg)
                .expect("valid inputs");
            let count = map.segments().len();
            assert!(count <= last, "threshold {threshold} raised instance count");
            last = count;
        }
    }
}

#[test]
fn scheduler_equals_rule_replay() {
    let mut rng = rng(0x5eed_0007);
    for _ in 0..200 {
        let frames = rng.gen_range(1..=12);
        let stream = gen::random_candidate_stream(&mut rng, frames);
        let policy = panoptic_core::feedback::FeedbackPolicy {
            d_floor_m: 0.3,
            max_events_per_frame: rng.gen_range(0..=4),
            repeat_suppression_us: [0, 100_000, 500_000, 2_000_000][rng.gen_range(0..4)],
            reapproach_fraction: 0.2,
        };
        check::assert_schedule_equals_oracle(&stream, &policy);
    }
}
