//! Events over the real line, expressed as finite unions of closed
//! intervals. These drive partition membership for the raking schedules,
//! conditioning sets, and the chi-square cells, both on samples and on
//! discrete laws.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("interval has lo > hi: [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("partition needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("point {0} not covered by any cell")]
    Uncovered(f64),
    #[error("point {0} covered by more than one cell")]
    Overlap(f64),
}

/// Finite union of closed intervals `[lo, hi]`.
///
/// Serialized as `[[lo, hi], ...]` with `null` standing in for an unbounded
/// side (JSON has no infinities).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    pub intervals: Vec<(f64, f64)>,
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rep: Vec<(Option<f64>, Option<f64>)> = self
            .intervals
            .iter()
            .map(|&(lo, hi)| {
                (
                    (lo != f64::NEG_INFINITY).then_some(lo),
                    (hi != f64::INFINITY).then_some(hi),
                )
            })
            .collect();
        rep.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rep: Vec<(Option<f64>, Option<f64>)> = Deserialize::deserialize(deserializer)?;
        let intervals = rep
            .into_iter()
            .map(|(lo, hi)| {
                (
                    lo.unwrap_or(f64::NEG_INFINITY),
                    hi.unwrap_or(f64::INFINITY),
                )
            })
            .collect();
        IntervalSet::new(intervals).map_err(D::Error::custom)
    }
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, EventError> {
        for &(lo, hi) in &intervals {
            if lo > hi {
                return Err(EventError::BadInterval(lo, hi));
            }
        }
        Ok(IntervalSet { intervals })
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        IntervalSet {
            intervals: vec![(lo, hi)],
        }
    }

    /// Everything at or below `x` (closed on the right).
    pub fn at_most(x: f64) -> Self {
        IntervalSet::single(f64::NEG_INFINITY, x)
    }

    pub fn above(x: f64) -> Self {
        IntervalSet {
            intervals: vec![(x, f64::INFINITY)],
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| x >= lo && x <= hi)
    }
}

/// Partition of the line into `m ≥ 2` labeled interval cells. Membership is
/// checked to be unambiguous for every point it is asked about, not globally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalPartition {
    pub labels: Vec<String>,
    pub cells: Vec<IntervalSet>,
}

impl IntervalPartition {
    pub fn new(labels: Vec<String>, cells: Vec<IntervalSet>) -> Result<Self, EventError> {
        if cells.len() < 2 {
            return Err(EventError::TooFewCells(cells.len()));
        }
        Ok(IntervalPartition { labels, cells })
    }

    /// Binary partition {S, complement-as-interval}: the complement must be
    /// supplied explicitly so boundary semantics stay closed-interval.
    pub fn binary(label: &str, set: IntervalSet, co_label: &str, co_set: IntervalSet) -> Self {
        IntervalPartition {
            labels: vec![label.to_string(), co_label.to_string()],
            cells: vec![set, co_set],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_of(&self, x: f64) -> Result<usize, EventError> {
        let mut found = None;
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.contains(x) {
                if found.is_some() {
                    return Err(EventError::Overlap(x));
                }
                found = Some(i);
            }
        }
        found.ok_or(EventError::Uncovered(x))
    }

    /// Per-observation cell assignment for a whole sample.
    pub fn assign(&self, xs: &[f64]) -> Result<Vec<usize>, EventError> {
        xs.iter().map(|&x| self.cell_of(x)).collect()
    }
}
