use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Arrival,
    Decision,
    OffloadDone,
    ExecDone,
    DeliverDone,
    Failure,
    LedgerCommit,
    CellMove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Simulation time, ms.
    pub time: f64,
    pub kind: EventKind,
    /// Application index the event belongs to, if any.
    pub app: Option<usize>,
}

#[derive(Debug)]
struct Entry {
    event: Event,
    seq: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed so the max-heap pops the earliest event, FIFO among ties
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .event
            .time
            .total_cmp(&self.event.time)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Time-ordered event queue; equal timestamps pop in insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedules `event`; times earlier than the current clock are clamped
    /// to it.
    pub fn push(&mut self, mut event: Event) {
        if event.time < self.now {
            event.time = self.now;
        }
        self.heap.push(Entry { event, seq: self.seq });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<Event> {
        let entry = self.heap.pop()?;
        debug_assert!(entry.event.time >= self.now);
        self.now = entry.event.time;
        Some(entry.event)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(time: f64, kind: EventKind) -> Event {
        Event { time, kind, app: None }
    }

    #[test]
    fn pops_in_time_then_insertion_order() {
        let mut q = EventQueue::new();
        q.push(ev(5.0, EventKind::Arrival));
        q.push(ev(1.0, EventKind::CellMove));
        q.push(ev(5.0, EventKind::Decision));
        q.push(ev(1.0, EventKind::LedgerCommit));
        let kinds: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            [
                EventKind::CellMove,
                EventKind::LedgerCommit,
                EventKind::Arrival,
                EventKind::Decision
            ]
        );
    }

    #[test]
    fn past_events_are_clamped_to_now() {
        let mut q = EventQueue::new();
        q.push(ev(10.0, EventKind::Arrival));
        q.pop();
        q.push(ev(3.0, EventKind::Decision));
        assert_eq!(q.pop().unwrap().time, 10.0);
    }
}
