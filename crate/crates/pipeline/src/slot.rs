//! Capacity-1 latest-wins handoff between two threads: a newer item replaces
//! an unconsumed one, and the consumer blocks until something arrives or the
//! producer side closes.

use std::sync::{Condvar, Mutex};

struct SlotState<T> {
    item: Option<T>,
    closed: bool,
    replaced: u64,
}

pub struct Slot<T> {
    state: Mutex<SlotState<T>>,
    available: Condvar,
}

impl<T> Slot<T> {
    pub fn new() -> Slot<T> {
        Slot {
            state: Mutex::new(SlotState { item: None, closed: false, replaced: 0 }),
            available: Condvar::new(),
        }
    }

    /// Returns true if an unconsumed item was replaced (a drop).
    pub fn push(&self, item: T) -> bool {
        let mut state = self.state.lock().expect("slot lock");
        let replaced = state.item.is_some();
        if replaced {
            state.replaced += 1;
        }
        state.item = Some(item);
        self.available.notify_one();
        replaced
    }

    /// Blocks until an item is available; `None` once closed and drained.
    pub fn pop(&self) -> Option<T> {
        let mut state = self.state.lock().expect("slot lock");
        loop {
            if let Some(item) = state.item.take() {
                return Some(item);
            }
            if state.closed {
                return None;
            }
            state = self.available.wait(state).expect("slot lock");
        }
    }

    pub fn close(&self) {
        let mut state = self.state.lock().expect("slot lock");
        state.closed = true;
        self.available.notify_all();
    }

    pub fn replaced(&self) -> u64 {
        self.state.lock().expect("slot lock").replaced
    }
}

impl<T> Default for Slot<T> {
    fn default() -> Self {
        Slot::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn newer_items_replace_waiting_ones() {
        let slot = Slot::new();
        assert!(!slot.push(1));
        assert!(slot.push(2));
        assert_eq!(slot.pop(), Some(2));
        assert_eq!(slot.replaced(), 1);
    }

    #[test]
    fn pop_returns_none_after_close() {
        let slot: Slot<u32> = Slot::new();
        slot.close();
        assert_eq!(slot.pop(), None);
    }

    #[test]
    fn consumer_sees_latest_under_slow_consumption() {
        let slot = Arc::new(Slot::new());
        let producer = {
            let slot = Arc::clone(&slot);
            thread::spawn(move || {
                for i in 0..100u32 {
                    slot.push(i);
                    thread::sleep(Duration::from_micros(200));
                }
                slot.close();
            })
        };
        let mut seen = Vec::new();
        while let Some(v) = slot.pop() {
            seen.push(v);
            thread::sleep(Duration::from_millis(2));
        }
        producer.join().expect("producer");
        assert!(!seen.is_empty());
        // Monotone: replacement can skip but never reorder.
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(seen.len() as u64 + slot.replaced(), 100);
    }
}
