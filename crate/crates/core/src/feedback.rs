//! Priority scoring and rate-limited scheduling of feedback events — the
//! structured stand-in for the acoustic channel.
//!
//! Priority is weight / clamped-distance: heavier classes and nearer objects
//! speak first. The scheduler keeps the top-K per frame and suppresses
//! repeats of the same (class, sector) cue inside a time window, unless the
//! object moved markedly closer.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::depth::{Sector, SegmentInfo};
use crate::schema::{ClassId, LabelSchema};

/// Distance substituted when a segment has no valid depth, in meters.
pub const DISTANCE_CEILING_M: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPolicy {
    /// Lower clamp for the distance term, meters.
    pub d_floor_m: f64,
    pub max_events_per_frame: usize,
    /// Window inside which a repeated (class, sector) cue is suppressed.
    pub repeat_suppression_us: u64,
    /// Relative distance decrease that overrides suppression, in (0, 1).
    pub reapproach_fraction: f64,
}

impl Default for FeedbackPolicy {
    fn default() -> FeedbackPolicy {
        FeedbackPolicy {
            d_floor_m: 0.3,
            max_events_per_frame: 3,
            repeat_suppression_us: 2_000_000,
            reapproach_fraction: 0.2,
        }
    }
}

impl FeedbackPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.d_floor_m > 0.0) {
            return Err(format!("d_floor_m {} must be > 0", self.d_floor_m));
        }
        if !(self.reapproach_fraction > 0.0 && self.reapproach_fraction < 1.0) {
            return Err(format!(
                "reapproach_fraction {} outside (0, 1)",
                self.reapproach_fraction
            ));
        }
        Ok(())
    }
}

/// Scored candidate for one thing segment, before scheduling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub class_id: ClassId,
    pub sector: Sector,
    pub distance_mm: Option<u16>,
    pub priority: f64,
}

/// One emitted feedback event. Serialized as JSON lines with this key order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackEvent {
    pub frame_id: u64,
    pub class_id: ClassId,
    pub sector: Sector,
    pub distance_mm: Option<u16>,
    pub priority: f64,
    pub emitted_at_us: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum FeedbackError {
    #[error("timestamp regression: {got} < {last}")]
    TimeRegression { last: u64, got: u64 },
}

/// Score every thing segment: priority = weight / max(distance_m, d_floor),
/// with [`DISTANCE_CEILING_M`] standing in when the distance is undefined.
/// Zero-weight classes still produce (zero-priority) candidates.
pub fn score_segments(
    segments: &[SegmentInfo],
    schema: &LabelSchema,
    policy: &FeedbackPolicy,
) -> Vec<Candidate> {
    segments
        .iter()
        .filter(|s| s.instance_id != 0 && schema.is_thing(s.class_id) == Some(true))
        .map(|s| {
            let weight = schema.get(s.class_id).map(|c| c.weight).unwrap_or(0.0);
            let priority = match s.distance_mm {
                Some(mm) => weight / (mm as f64 / 1000.0).max(policy.d_floor_m),
                None => weight / DISTANCE_CEILING_M,
            };
            Candidate { class_id: s.class_id, sector: s.sector, distance_mm: s.distance_mm, priority }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct LastEmit {
    at_us: u64,
    distance_mm: Option<u16>,
}

/// Suppression memory across frames. One owner advances it; a fresh state
/// starts every session.
#[derive(Debug, Clone, Default)]
pub struct SchedulerState {
    last_emit: HashMap<(ClassId, Sector), LastEmit>,
    last_timestamp_us: Option<u64>,
}

impl SchedulerState {
    pub fn new() -> SchedulerState {
        SchedulerState::default()
    }
}

/// Select and emit this frame's events.
///
/// The top `max_events_per_frame` candidates by priority (ties: class id
/// ascending, sector left < center < right) are selected, then each selected
/// event is dropped if the same (class, sector) was emitted less than
/// `repeat_suppression_us` ago — unless its distance decreased by more than
/// `reapproach_fraction` relative to the last emitted distance. Suppressed
/// events never update the suppression memory.
pub fn schedule(
    frame_id: u64,
    timestamp_us: u64,
    candidates: &[Candidate],
    policy: &FeedbackPolicy,
    state: &mut SchedulerState,
) -> Result<Vec<FeedbackEvent>, FeedbackError> {
    if let Some(last) = state.last_timestamp_us {
        if timestamp_us < last {
            return Err(FeedbackError::TimeRegression { last, got: timestamp_us });
        }
    }
    state.last_timestamp_us = Some(timestamp_us);

    let mut ranked: Vec<&Candidate> = candidates.iter().collect();
    ranked.sort_by(|a, b| {
        b.priority
            .total_cmp(&a.priority)
            .then(a.class_id.cmp(&b.class_id))
            .then(a.sector.cmp(&b.sector))
    });
    ranked.truncate(policy.max_events_per_frame);

    let mut emitted = Vec::new();
    for c in ranked {
        let key = (c.class_id, c.sector);
        let suppressed = match state.last_emit.get(&key) {
            Some(prev) if timestamp_us - prev.at_us < policy.repeat_suppression_us => {
                match (prev.distance_mm, c.distance_mm) {
                    (Some(old), Some(new)) => {
                        // Re-approach: moved more than the fraction closer.
                        let decreased = (old as f64 - new as f64) > policy.reapproach_fraction * old as f64;
                        !decreased
                    }
                    _ => true,
                }
            }
            _ => false,
        };
        if suppressed {
            continue;
        }
        state.last_emit.insert(key, LastEmit { at_us: timestamp_us, distance_mm: c.distance_mm });
        emitted.push(FeedbackEvent {
            frame_id,
            class_id: c.class_id,
            sector: c.sector,
            distance_mm: c.distance_mm,
            priority: c.priority,
            emitted_at_us: timestamp_us,
        });
    }
    Ok(emitted)
}

/// One event per line, stable key order; the golden-file format.
pub fn events_to_jsonl(events: &[FeedbackEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serialization cannot fail"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::Sector;

    fn candidate(class_id: u16, sector: Sector, distance_mm: Option<u16>, priority: f64) -> Candidate {
        Candidate { class_id, sector, distance_mm, priority }
    }

    #[test]
    fn priority_formula() {
        let schema = crate::schema::LabelSchema::builtin();
        let policy = FeedbackPolicy::default();
        // weight 2.0 at 4 m with floor 0.3 -> 0.5
        let seg = SegmentInfo {
            instance_id: 1,
            class_id: schema.find_by_name("car").unwrap().id,
            area: 10,
            centroid_row: 0.0,
            centroid_col: 0.0,
            distance_mm: Some(4000),
            valid_depth_fraction: 1.0,
            sector: Sector::Center,
        };
        let c = score_segments(&[seg], &schema, &policy);
        assert!((c[0].priority - 0.5).abs() < 1e-12);
    }

    #[test]
    fn floor_clamps_close_distances() {
        let schema = crate::schema::LabelSchema::builtin();
        let policy = FeedbackPolicy::default();
        let pole = schema.find_by_name("pole").unwrap();
        let seg = SegmentInfo {
            instance_id: 1,
            class_id: pole.id,
            area: 10,
            centroid_row: 0.0,
            centroid_col: 0.0,
            distance_mm: Some(100),
            valid_depth_fraction: 1.0,
            sector: Sector::Center,
        };
        let c = score_segments(&[seg], &schema, &policy);
        assert!((c[0].priority - pole.weight / 0.3).abs() < 1e-9);
    }

    #[test]
    fn undefined_distance_uses_ceiling() {
        let schema = crate::schema::LabelSchema::builtin();
        let car = schema.find_by_name("car").unwrap();
        let seg = SegmentInfo {
            instance_id: 1,
            class_id: car.id,
            area: 10,
            centroid_row: 0.0,
            centroid_col: 0.0,
            distance_mm: None,
            valid_depth_fraction: 0.0,
            sector: Sector::Left,
        };
        let c = score_segments(&[seg], &schema, &FeedbackPolicy::default());
        assert!((c[0].priority - car.weight / DISTANCE_CEILING_M).abs() < 1e-12);
    }

    #[test]
    fn repeat_within_window_suppressed() {
        let policy = FeedbackPolicy::default();
        let mut state = SchedulerState::new();
        let c = candidate(9, Sector::Center, Some(2000), 1.0);
        let first = schedule(0, 0, &[c], &policy, &mut state).unwrap();
        assert_eq!(first.len(), 1);
        // 0.25 s later, same cue: suppressed by the 2 s window.
        let second = schedule(1, 250_000, &[c], &policy, &mut state).unwrap();
        assert!(second.is_empty());
    }

    #[test]
    fn reapproach_overrides_suppression() {
        let policy = FeedbackPolicy::default();
        let mut state = SchedulerState::new();
        let far = candidate(9, Sector::Center, Some(2000), 1.0);
        let near = candidate(9, Sector::Center, Some(1500), 1.3);
        schedule(0, 0, &[far], &policy, &mut state).unwrap();
        // 25% closer beats the 20% reapproach fraction.
        let events = schedule(1, 250_000, &[near], &policy, &mut state).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].distance_mm, Some(1500));
    }

    #[test]
    fn exactly_at_fraction_still_suppressed() {
        let policy = FeedbackPolicy::default();
        let mut state = SchedulerState::new();
        schedule(0, 0, &[candidate(9, Sector::Center, Some(2000), 1.0)], &policy, &mut state)
            .unwrap();
        // exactly 20% closer is not "more than" the fraction.
        let events = schedule(
            1,
            250_000,
            &[candidate(9, Sector::Center, Some(1600), 1.25)],
            &policy,
            &mut state,
        )
        .unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn exactly_at_window_edge_emits() {
        let policy = FeedbackPolicy::default();
        let mut state = SchedulerState::new();
        let c = candidate(9, Sector::Center, Some(2000), 1.0);
        schedule(0, 0, &[c], &policy, &mut state).unwrap();
        // elapsed == repeat_suppression_us: the window has passed.
        let events = schedule(1, 2_000_000, &[c], &policy, &mut state).unwrap();
        assert_eq!(events.len(), 1);
    }

    #[test]
    fn cap_limits_emissions_and_order_is_by_priority() {
        let policy = FeedbackPolicy { max_events_per_frame: 2, ..FeedbackPolicy::default() };
        let mut state = SchedulerState::new();
        let cands = vec![
            candidate(12, Sector::Right, Some(4000), 0.5),
            candidate(9, Sector::Left, Some(1000), 2.5),
            candidate(7, Sector::Center, Some(2000), 0.75),
        ];
        let events = schedule(0, 0, &cands, &policy, &mut state).unwrap();
        assert_eq!(events.len(), 2);
        assert!(events[0].priority >= events[1].priority);
        assert_eq!(events[0].class_id, 9);
        assert_eq!(events[1].class_id, 7);
    }

    #[test]
    fn time_regression_is_an_error() {
        let policy = FeedbackPolicy::default();
        let mut state = SchedulerState::new();
        schedule(0, 1000, &[], &policy, &mut state).unwrap();
        assert_eq!(
            schedule(1, 999, &[], &policy, &mut state).unwrap_err(),
            FeedbackError::TimeRegression { last: 1000, got: 999 }
        );
    }

    #[test]
    fn zero_suppression_degenerates_to_top_k() {
        let policy = FeedbackPolicy {
            repeat_suppression_us: 0,
            max_events_per_frame: 1,
            ..FeedbackPolicy::default()
        };
        let mut state = SchedulerState::new();
        let c = candidate(9, Sector::Center, Some(2000), 1.0);
        for ts in [0u64, 1, 2, 3] {
            let events = schedule(ts, ts, &[c], &policy, &mut state).unwrap();
            assert_eq!(events.len(), 1);
        }
    }

    #[test]
    fn jsonl_key_order_is_stable() {
        let e = FeedbackEvent {
            frame_id: 1,
            class_id: 9,
            sector: Sector::Left,
            distance_mm: Some(1500),
            priority: 1.25,
            emitted_at_us: 250_000,
        };
        assert_eq!(
            events_to_jsonl(&[e]),
            "{\"frame_id\":1,\"class_id\":9,\"sector\":\"left\",\"distance_mm\":1500,\"priority\":1.25,\"emitted_at_us\":250000}\n"
        );
    }
}
