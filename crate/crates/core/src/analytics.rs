//! Spatio-temporal instance distribution: per-frame occurrence counts per
//! thing class over a sequence, with totals and sliding-window sums.
//!
//! Counts are per-frame segment counts with no cross-frame tracking; stuff
//! classes are uncountable and excluded.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::fusion::PanopticMap;
use crate::schema::{ClassId, LabelSchema};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameCounts {
    pub frame_id: u64,
    pub timestamp_us: u64,
    /// Instance-segment count per thing class; absent classes are zero.
    pub counts: BTreeMap<ClassId, u32>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("window must be >= 1")]
    ZeroWindow,
    #[error("frames not in ascending frame_id order at index {index}")]
    UnsortedFrames { index: usize },
}

/// Count thing segments per class in one fused frame. Frame identity comes
/// from the caller; the map itself carries no metadata.
pub fn count_instances(
    map: &PanopticMap,
    schema: &LabelSchema,
    frame_id: u64,
    timestamp_us: u64,
) -> FrameCounts {
    let mut counts: BTreeMap<ClassId, u32> = BTreeMap::new();
    for segment in map.segments() {
        if schema.is_thing(segment.class_id) == Some(true) {
            *counts.entry(segment.class_id).or_insert(0) += 1;
        }
    }
    FrameCounts { frame_id, timestamp_us, counts }
}

/// Ordered per-frame counts plus per-class totals and sliding-window sums
/// (stride 1). With `window == 1` the windowed sums equal the raw counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceDistribution {
    pub frames: Vec<FrameCounts>,
    pub totals: BTreeMap<ClassId, u64>,
    pub window: usize,
    pub windowed: BTreeMap<ClassId, Vec<u64>>,
}

pub fn aggregate(
    frames: Vec<FrameCounts>,
    window: usize,
) -> Result<SequenceDistribution, AnalyticsError> {
    if window == 0 {
        return Err(AnalyticsError::ZeroWindow);
    }
    for (index, pair) in frames.windows(2).enumerate() {
        if pair[1].frame_id <= pair[0].frame_id {
            return Err(AnalyticsError::UnsortedFrames { index: index + 1 });
        }
    }

    let mut totals: BTreeMap<ClassId, u64> = BTreeMap::new();
    for frame in &frames {
        for (&class_id, &n) in &frame.counts {
            *totals.entry(class_id).or_insert(0) += n as u64;
        }
    }

    let n = frames.len();
    let window_count = n.saturating_sub(window - 1);
    let mut windowed: BTreeMap<ClassId, Vec<u64>> = BTreeMap::new();
    for &class_id in totals.keys() {
        let per_frame: Vec<u64> = frames
            .iter()
            .map(|f| f.counts.get(&class_id).copied().unwrap_or(0) as u64)
            .collect();
        let mut sums = Vec::with_capacity(window_count);
        let mut acc: u64 = per_frame.iter().take(window).sum();
        if n >= window {
            sums.push(acc);
            for i in window..n {
                acc += per_frame[i];
                acc -= per_frame[i - window];
                sums.push(acc);
            }
        }
        windowed.insert(class_id, sums);
    }

    Ok(SequenceDistribution { frames, totals, window, windowed })
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// CSV export: `frame_id,timestamp_us,<thing class names...>`, one row per
/// frame, zeros for absent classes. Columns cover every thing class in the
/// schema, in id order.
pub fn to_csv(dist: &SequenceDistribution, schema: &LabelSchema) -> String {
    let mut thing_ids: Vec<ClassId> = schema.thing_ids().collect();
    thing_ids.sort_unstable();
    let mut out = String::from("frame_id,timestamp_us");
    for &id in &thing_ids {
        out.push(',');
        out.push_str(&csv_escape(schema.name(id).unwrap_or("?")));
    }
    out.push('\n');
    for frame in &dist.frames {
        out.push_str(&frame.frame_id.to_string());
        out.push(',');
        out.push_str(&frame.timestamp_us.to_string());
        for &id in &thing_ids {
            out.push(',');
            out.push_str(&frame.counts.get(&id).copied().unwrap_or(0).to_string());
        }
        out.push('\n');
    }
    out
}

/// JSON summary: totals and peak windowed sums, keyed by class name.
pub fn summary_json(dist: &SequenceDistribution, schema: &LabelSchema) -> String {
    #[derive(Serialize)]
    struct Summary {
        frames: usize,
        window: usize,
        totals: BTreeMap<String, u64>,
        windowed_peaks: BTreeMap<String, u64>,
    }
    let name = |id: ClassId| schema.name(id).unwrap_or("?").to_string();
    let summary = Summary {
        frames: dist.frames.len(),
        window: dist.window,
        totals: dist.totals.iter().map(|(&id, &n)| (name(id), n)).collect(),
        windowed_peaks: dist
            .windowed
            .iter()
            .map(|(&id, sums)| (name(id), sums.iter().copied().max().unwrap_or(0)))
            .collect(),
    };
    serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::PanopticMap;
    use crate::schema::load_schema;

    fn schema() -> LabelSchema {
        load_schema(
            r#"{
                "classes": [
                    {"id": 0, "name": "void", "is_thing": false, "weight": 0.0, "color": [0,0,0]},
                    {"id": 1, "name": "road", "is_thing": false, "weight": 0.0, "color": [1,1,1]},
                    {"id": 5, "name": "car", "is_thing": true, "weight": 2.0, "color": [2,2,2]},
                    {"id": 6, "name": "person", "is_thing": true, "weight": 2.5, "color": [3,3,3]}
                ],
                "void_id": 0
            }"#,
        )
        .unwrap()
    }

    fn counts(frame_id: u64, pairs: &[(u16, u32)]) -> FrameCounts {
        FrameCounts {
            frame_id,
            timestamp_us: frame_id * 250_000,
            counts: pairs.iter().copied().collect(),
        }
    }

    #[test]
    fn counts_thing_segments_per_class() {
        // 3 car segments and 2 person segments.
        let classes = vec![5, 5, 5, 6, 6, 1, 1, 1, 1];
        let instances = vec![1, 2, 3, 4, 5, 0, 0, 0, 0];
        let map = PanopticMap::from_planes(3, 3, classes, instances).unwrap();
        let fc = count_instances(&map, &schema(), 7, 99);
        assert_eq!(fc.counts[&5], 3);
        assert_eq!(fc.counts[&6], 2);
        assert_eq!(fc.frame_id, 7);
    }

    #[test]
    fn stuff_only_frame_has_empty_counts() {
        let map = PanopticMap::from_planes(2, 2, vec![1; 4], vec![0; 4]).unwrap();
        let fc = count_instances(&map, &schema(), 0, 0);
        assert!(fc.counts.is_empty());
    }

    #[test]
    fn window_one_equals_raw_counts() {
        let frames = vec![counts(0, &[(5, 1)]), counts(1, &[(5, 2)]), counts(2, &[])];
        let dist = aggregate(frames, 1).unwrap();
        assert_eq!(dist.windowed[&5], vec![1, 2, 0]);
    }

    #[test]
    fn window_two_sums_adjacent_frames() {
        let frames = vec![counts(0, &[(5, 1)]), counts(1, &[(5, 2)])];
        let dist = aggregate(frames, 2).unwrap();
        assert_eq!(dist.windowed[&5], vec![3]);
        assert_eq!(dist.totals[&5], 3);
    }

    #[test]
    fn unsorted_frames_rejected() {
        let frames = vec![counts(3, &[]), counts(1, &[])];
        assert_eq!(aggregate(frames, 1).unwrap_err(), AnalyticsError::UnsortedFrames { index: 1 });
    }

    #[test]
    fn zero_window_rejected() {
        assert_eq!(aggregate(vec![], 0).unwrap_err(), AnalyticsError::ZeroWindow);
    }

    #[test]
    fn totals_are_additive_over_concatenation() {
        let a = vec![counts(0, &[(5, 1), (6, 2)]), counts(1, &[(5, 2)])];
        let b = vec![counts(2, &[(6, 1)])];
        let mut ab = a.clone();
        ab.extend(b.clone());
        let ta = aggregate(a, 1).unwrap().totals;
        let tb = aggregate(b, 1).unwrap().totals;
        let tab = aggregate(ab, 1).unwrap().totals;
        for (&k, &v) in &tab {
            let expected = ta.get(&k).copied().unwrap_or(0) + tb.get(&k).copied().unwrap_or(0);
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn csv_layout() {
        let frames = vec![counts(0, &[(5, 2)]), counts(1, &[(6, 1)])];
        let dist = aggregate(frames, 1).unwrap();
        let csv = to_csv(&dist, &schema());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "frame_id,timestamp_us,car,person");
        assert_eq!(lines[1], "0,0,2,0");
        assert_eq!(lines[2], "1,250000,0,1");
    }
}
