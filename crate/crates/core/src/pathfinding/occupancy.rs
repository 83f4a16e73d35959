use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::NodeId;
use crate::{Error, Result};

/// Landing slot held at an interchange over `[start, end)`, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub interchange: NodeId,
    pub start: f64,
    pub end: f64,
}

/// Anything that can tell a UAV arriving at `node` at `arrival` the earliest
/// time it may start a stay of `duration` there.
pub trait SlotGate {
    /// `f64::INFINITY` when the stay can never start.
    fn earliest_start(&self, node: NodeId, arrival: f64, duration: f64) -> f64;

    /// How many holds at `node` stand in the way during `[from, to)`.
    fn blocking(&self, _node: NodeId, _from: f64, _to: f64) -> usize {
        0
    }
}

/// Gate that never blocks.
pub struct OpenGate;

impl SlotGate for OpenGate {
    fn earliest_start(&self, _: NodeId, arrival: f64, _: f64) -> f64 {
        arrival
    }
}

/// Shared interchange reservations with a per-interchange capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTable {
    capacity: usize,
    slots: BTreeMap<NodeId, Vec<(f64, f64)>>,
}

impl OccupancyTable {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Parameter("interchange capacity must be at least 1".into()));
        }
        Ok(Self {
            capacity,
            slots: BTreeMap::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn intervals(&self, node: NodeId) -> &[(f64, f64)] {
        self.slots.get(&node).map_or(&[], |v| v.as_slice())
    }

    pub fn reservations(&self) -> Vec<Reservation> {
        self.slots
            .iter()
            .flat_map(|(&interchange, v)| {
                v.iter().map(move |&(start, end)| Reservation {
                    interchange,
                    start,
                    end,
                })
            })
            .collect()
    }

    /// Adds a reservation without checking capacity. Zero-length stays are
    /// not recorded.
    pub fn commit(&mut self, r: Reservation) {
        if r.end > r.start {
            let v = self.slots.entry(r.interchange).or_default();
            let at = v.partition_point(|&(s, e)| (s, e) <= (r.start, r.end));
            v.insert(at, (r.start, r.end));
        }
    }

    /// Largest number of reservations holding `node` at one instant within
    /// `[from, to)`.
    pub fn max_load(&self, node: NodeId, from: f64, to: f64) -> usize {
        let mut events: Vec<(f64, i32)> = Vec::new();
        for &(s, e) in self.intervals(node) {
            if s < to && from < e {
                events.push((s.max(from), 1));
                events.push((e.min(to), -1));
            }
        }
        // releases sort before acquisitions at the same instant
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut load = 0i32;
        let mut peak = 0i32;
        for (_, d) in events {
            load += d;
            peak = peak.max(load);
        }
        peak as usize
    }

    /// Reservations at `node` overlapping `[from, to)`.
    pub fn overlapping(&self, node: NodeId, from: f64, to: f64) -> usize {
        self.intervals(node)
            .iter()
            .filter(|&&(s, e)| s < to && from < e)
            .count()
    }

    /// Interval sweep over every interchange: true when no instant holds
    /// more than the capacity.
    pub fn respects_capacity(&self) -> bool {
        self.slots
            .keys()
            .all(|&n| self.max_load(n, f64::NEG_INFINITY, f64::INFINITY) <= self.capacity)
    }

    /// CSV `interchange,start,end`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["interchange", "start", "end"])?;
        for r in self.reservations() {
            w.write_record([
                r.interchange.to_string(),
                r.start.to_string(),
                r.end.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl SlotGate for OccupancyTable {
    /// A stay may start at the arrival or when some reservation ends; the
    /// first such instant whose whole window stays below capacity wins.
    fn earliest_start(&self, node: NodeId, arrival: f64, duration: f64) -> f64 {
        if duration <= 0.0 {
            return arrival;
        }
        let held = self.intervals(node);
        let mut candidates: Vec<f64> = std::iter::once(arrival)
            .chain(held.iter().map(|&(_, e)| e).filter(|&e| e > arrival))
            .collect();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        for c in candidates {
            if !c.is_finite() {
                break;
            }
            if self.max_load(node, c, c + duration) < self.capacity {
                return c;
            }
        }
        f64::INFINITY
    }

    fn blocking(&self, node: NodeId, from: f64, to: f64) -> usize {
        self.overlapping(node, from, to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(start: f64, end: f64) -> Reservation {
        Reservation {
            interchange: 7,
            start,
            end,
        }
    }

    #[test]
    fn waits_until_slot_frees() {
        let mut t = OccupancyTable::new(1).unwrap();
        t.commit(res(10.0, 20.0));
        assert_eq!(t.earliest_start(7, 0.0, 5.0), 0.0);
        assert_eq!(t.earliest_start(7, 0.0, 10.0), 0.0);
        assert_eq!(t.earliest_start(7, 0.0, 10.5), 20.0);
        assert_eq!(t.earliest_start(7, 12.0, 1.0), 20.0);
        assert_eq!(t.earliest_start(7, 20.0, 1.0), 20.0);
        assert_eq!(t.earliest_start(3, 12.0, 1.0), 12.0);
    }

    #[test]
    fn short_gaps_are_skipped() {
        let mut t = OccupancyTable::new(1).unwrap();
        t.commit(res(0.0, 5.0));
        t.commit(res(6.0, 20.0));
        assert_eq!(t.earliest_start(7, 1.0, 3.0), 20.0);
        assert_eq!(t.earliest_start(7, 1.0, 1.0), 5.0);
    }

    #[test]
    fn capacity_two_allows_one_overlap() {
        let mut t = OccupancyTable::new(2).unwrap();
        t.commit(res(0.0, 10.0));
        assert_eq!(t.earliest_start(7, 2.0, 10.0), 2.0);
        t.commit(res(2.0, 12.0));
        assert!(t.respects_capacity());
        assert_eq!(t.earliest_start(7, 3.0, 1.0), 10.0);
        t.commit(res(3.0, 4.0));
        assert!(!t.respects_capacity());
    }

    #[test]
    fn permanently_blocked() {
        let mut t = OccupancyTable::new(1).unwrap();
        t.commit(res(0.0, f64::INFINITY));
        assert_eq!(t.earliest_start(7, 5.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn touching_intervals_do_not_overlap() {
        let mut t = OccupancyTable::new(1).unwrap();
        t.commit(res(0.0, 5.0));
        t.commit(res(5.0, 9.0));
        assert!(t.respects_capacity());
        assert_eq!(t.max_load(7, 0.0, 10.0), 1);
        assert!(OccupancyTable::new(0).is_err());
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = OccupancyTable::new(1).unwrap();
        t.commit(res(1.0, 2.5));
        t.write_csv(dir.path().join("o.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
        assert_eq!(text, "interchange,start,end\n7,1,2.5\n");
    }
}
