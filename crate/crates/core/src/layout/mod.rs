//! Circular ordering and chord-diagram geometry for frame graphs.
//!
//! One [`CircularOrder`] is computed per job from the whole-job graph and
//! reused for every frame, so units never move while the user browses.

mod crossings;
mod geometry;
mod order;
pub mod svg;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crossings::{crossing_pairs, weighted_crossings};
pub use geometry::{
    chord_geometry, chord_layout_or_degenerate, layout_stability, Band, ChordLayout, GapConfig, Interval, Ribbon,
    Ring, StabilityViolation, UnitArc,
};
pub use order::{circular_order, circular_order_traced, OrderTrace};

use crate::trace::{Level, Traffic, UnitId};

/// Which edge weight drives a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Messages,
    Bytes,
}

impl WeightKind {
    pub const ALL: [WeightKind; 2] = [WeightKind::Messages, WeightKind::Bytes];

    pub fn of(self, traffic: &Traffic) -> u64 {
        match self {
            WeightKind::Messages => traffic.messages,
            WeightKind::Bytes => traffic.bytes,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WeightKind::Messages => "messages",
            WeightKind::Bytes => "bytes",
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "messages" => Ok(WeightKind::Messages),
            "bytes" => Ok(WeightKind::Bytes),
            other => Err(format!("unknown weight kind `{other}` (expected messages or bytes)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("graph has no units")]
    Empty,
    #[error("unit `{0}` appears more than once")]
    DuplicateUnit(UnitId),
    #[error("units mix levels {0} and {1}")]
    MixedLevels(Level, Level),
    #[error("members of `{0}` are not contiguous")]
    NotContiguous(UnitId),
    #[error("unit `{0}` is not covered by the order")]
    NotInOrder(UnitId),
    #[error("a {order} order cannot lay out {frame} units")]
    LevelMismatch { order: Level, frame: Level },
    #[error("all weights are zero")]
    Degenerate,
}

/// A circular permutation of same-level units in which the members of every
/// enclosing host and rack form one contiguous run.
///
/// The stored sequence is rotated so that no run wraps past the end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<UnitId>", into = "Vec<UnitId>")]
pub struct CircularOrder {
    units: Vec<UnitId>,
}

impl TryFrom<Vec<UnitId>> for CircularOrder {
    type Error = LayoutError;

    fn try_from(units: Vec<UnitId>) -> Result<Self, Self::Error> {
        CircularOrder::new(units)
    }
}

impl From<CircularOrder> for Vec<UnitId> {
    fn from(order: CircularOrder) -> Self {
        order.units
    }
}

/// Levels enclosing units of `level`, coarsest first.
pub(crate) fn grouping_levels(level: Level) -> Vec<Level> {
    let mut out = Vec::new();
    let mut l = level.parent();
    while let Some(p) = l {
        out.push(p);
        l = p.parent();
    }
    out.reverse();
    out
}

fn ancestor(u: &UnitId, level: Level) -> UnitId {
    u.ancestor_at(level).expect("grouping level is coarser than the unit")
}

/// Number of positions `i` where `key(i) != key(i+1 mod n)`.
fn circular_changes(units: &[UnitId], level: Level) -> usize {
    let n = units.len();
    (0..n).filter(|&i| ancestor(&units[i], level) != ancestor(&units[(i + 1) % n], level)).count()
}

impl CircularOrder {
    pub fn new(units: Vec<UnitId>) -> Result<Self, LayoutError> {
        let Some(first) = units.first() else {
            return Err(LayoutError::Empty);
        };
        let level = first.level();
        let mut seen = HashSet::new();
        for u in &units {
            if u.level() != level {
                return Err(LayoutError::MixedLevels(level, u.level()));
            }
            if !seen.insert(u) {
                return Err(LayoutError::DuplicateUnit(u.clone()));
            }
        }
        let levels = grouping_levels(level);
        for &g in &levels {
            let groups: BTreeSet<UnitId> = units.iter().map(|u| ancestor(u, g)).collect();
            if groups.len() > 1 && circular_changes(&units, g) != groups.len() {
                // Report the first group that is split.
                let split = groups
                    .into_iter()
                    .find(|grp| {
                        let n = units.len();
                        let starts = (0..n)
                            .filter(|&i| {
                                ancestor(&units[i], g) == *grp && ancestor(&units[(i + n - 1) % n], g) != *grp
                            })
                            .count();
                        starts > 1
                    })
                    .expect("a contiguity failure has a split group");
                return Err(LayoutError::NotContiguous(split));
            }
        }

        // Rotate so that position 0 opens a run at the coarsest level that
        // actually has more than one group.
        let mut units = units;
        if let Some(&g) = levels.iter().find(|&&g| circular_changes(&units, g) > 0) {
            let n = units.len();
            let start = (0..n)
                .find(|&i| ancestor(&units[i], g) != ancestor(&units[(i + n - 1) % n], g))
                .expect("changes exist");
            units.rotate_left(start);
        }
        Ok(CircularOrder { units })
    }

    pub fn units(&self) -> &[UnitId] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn level(&self) -> Level {
        self.units[0].level()
    }

    pub fn position(&self, unit: &UnitId) -> Option<usize> {
        self.units.iter().position(|u| u == unit)
    }

    /// Contiguous runs of members per enclosing unit at `level`.
    pub fn groups(&self, level: Level) -> Vec<(UnitId, Range<usize>)> {
        let mut out: Vec<(UnitId, Range<usize>)> = Vec::new();
        for (i, u) in self.units.iter().enumerate() {
            let Some(g) = u.ancestor_at(level) else { continue };
            match out.last_mut() {
                Some((last, range)) if *last == g => range.end = i + 1,
                _ => out.push((g, i..i + 1)),
            }
        }
        out
    }

    /// The induced order of coarser units (each at its first appearance).
    pub fn project(&self, level: Level) -> Result<CircularOrder, LayoutError> {
        let own = self.level();
        if level < own {
            return Err(LayoutError::LevelMismatch { order: own, frame: level });
        }
        if level == own {
            return Ok(self.clone());
        }
        let units = self.groups(level).into_iter().map(|(g, _)| g).collect();
        CircularOrder::new(units)
    }

    /// Drops units not in `keep`, preserving relative positions.
    pub fn restrict<'a>(&self, keep: impl IntoIterator<Item = &'a UnitId>) -> Vec<UnitId> {
        let keep: HashSet<&UnitId> = keep.into_iter().collect();
        self.units.iter().filter(|u| keep.contains(u)).cloned().collect()
    }
}
