//! Identifiers, topology construction, sensor assignment and the randomness
//! contract shared by every other module.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod rng;
pub mod sensors;
pub mod topology;

pub use rng::{mix_seed, SeedTree, Stream};
pub use sensors::{assign_sensors, CellAssignment, SensorAssignment};
pub use topology::{build_topology, Cell, IncumbentStation, Point, Topology};

/// Zero-based cell index. Rendered as `WRAN<n>` with `n` starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId(pub usize);

impl CellId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WRAN{}", self.0 + 1)
    }
}

/// One-based TV channel number, `CH1 ..= CH<num_channels>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub u16);

impl ChannelId {
    /// Zero-based index for table lookups.
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn from_index(idx: usize) -> Self {
        ChannelId(idx as u16 + 1)
    }

    /// In-band neighbours `CH(b-1)` and `CH(b+1)` that exist in `1..=num_channels`.
    pub fn adjacent(self, num_channels: usize) -> impl Iterator<Item = ChannelId> {
        let b = self.0;
        let lower = (b > 1).then(|| ChannelId(b - 1));
        let upper = (usize::from(b) < num_channels).then(|| ChannelId(b + 1));
        lower.into_iter().chain(upper)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CH{}", self.0)
    }
}

/// Sensor slot inside a cell: index 0 is the base station, `i >= 1` is CPE `i - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SensorId(pub u16);

impl SensorId {
    pub const BASE_STATION: SensorId = SensorId(0);

    pub fn cpe(cpe_index: usize) -> Self {
        SensorId(cpe_index as u16 + 1)
    }

    pub fn is_base_station(self) -> bool {
        self.0 == 0
    }

    /// CPE index for non-BS sensors.
    pub fn cpe_index(self) -> Option<usize> {
        (self.0 > 0).then(|| usize::from(self.0) - 1)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("cell radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("cells need at least one CPE")]
    NoCpes,
    #[error("{cell} has operating channels but no CPEs to sense them")]
    NoSensors { cell: CellId },
    #[error("incumbent station {index} uses {channel}, outside 1..={num_channels}")]
    ChannelOutOfRange {
        index: usize,
        channel: ChannelId,
        num_channels: usize,
    },
}
