//! Rule-replay oracle for the feedback scheduler: the stated selection and
//! suppression rules executed as one literal pass per frame.

use std::collections::HashMap;

use panoptic_core::depth::Sector;
use panoptic_core::feedback::{Candidate, FeedbackEvent, FeedbackPolicy};

/// Replay a whole candidate stream; panics on timestamp regression (the
/// generators never produce one).
pub fn replay(
    stream: &[(u64, u64, Vec<Candidate>)],
    policy: &FeedbackPolicy,
) -> Vec<FeedbackEvent> {
    let mut memory: HashMap<(u16, Sector), (u64, Option<u16>)> = HashMap::new();
    let mut last_ts: Option<u64> = None;
    let mut all = Vec::new();

    for (frame_id, ts, candidates) in stream {
        if let Some(last) = last_ts {
            assert!(*ts >= last, "oracle stream must have ascending timestamps");
        }
        last_ts = Some(*ts);

        // Selection: priority desc, class asc, left < center < right; top K.
        let mut ranked: Vec<&Candidate> = candidates.iter().collect();
        ranked.sort_by(|a, b| {
            b.priority
                .total_cmp(&a.priority)
                .then(a.class_id.cmp(&b.class_id))
                .then(sector_rank(a.sector).cmp(&sector_rank(b.sector)))
        });
        let selected = &ranked[..ranked.len().min(policy.max_events_per_frame)];

        for c in selected {
            let key = (c.class_id, c.sector);
            let mut suppressed = false;
            if let Some(&(emitted_at, old_distance)) = memory.get(&key) {
                if ts - emitted_at < policy.repeat_suppression_us {
                    suppressed = true;
                    if let (Some(old), Some(new)) = (old_distance, c.distance_mm) {
                        let decrease = old as f64 - new as f64;
                        if decrease > policy.reapproach_fraction * old as f64 {
                            suppressed = false;
                        }
                    }
                }
            }
            if suppressed {
                continue;
            }
            memory.insert(key, (*ts, c.distance_mm));
            all.push(FeedbackEvent {
                frame_id: *frame_id,
                class_id: c.class_id,
                sector: c.sector,
                distance_mm: c.distance_mm,
                priority: c.priority,
                emitted_at_us: *ts,
            });
        }
    }
    all
}

fn sector_rank(s: Sector) -> u8 {
    match s {
        Sector::Left => 0,
        Sector::Center => 1,
        Sector::Right => 2,
    }
}
