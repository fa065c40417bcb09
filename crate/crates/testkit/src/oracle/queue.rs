//! Discrete simulation of a capacity-1 latest-wins handoff: one producer
//! delivering frames at given times, one worker with a fixed service time.
//! At equal times the waiting worker picks up before the new frame lands.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueOutcome {
    /// Indices of frames that reached the worker, in processing order.
    pub processed: Vec<usize>,
    /// Frames replaced in the slot before the worker got to them.
    pub dropped: usize,
}

/// `arrivals[i]` is the arrival time (microseconds) of frame `i`, strictly
/// increasing. `service_us` is the worker's time per frame.
pub fn simulate_latest_wins(arrivals: &[u64], service_us: u64) -> QueueOutcome {
    let mut free_at: u64 = 0;
    let mut slot: Option<(usize, u64)> = None;
    let mut processed = Vec::new();
    let mut dropped = 0usize;

    for (idx, &t) in arrivals.iter().enumerate() {
        if let Some((held, held_arrival)) = slot {
            let pickup_at = free_at.max(held_arrival);
            if pickup_at <= t {
                processed.push(held);
                free_at = pickup_at + service_us;
                slot = None;
            }
        }
        if slot.is_some() {
            dropped += 1;
        }
        slot = Some((idx, t));
    }
    if let Some((held, _)) = slot {
        processed.push(held);
    }
    QueueOutcome { processed, dropped }
}
