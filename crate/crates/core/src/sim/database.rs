//! Synthetic incumbent database.

use rand::Rng;

use crate::incumbent::IncumbentActivity;
use crate::model::{CellId, ChannelId, SeedTree, Stream};

/// Answers occupancy queries from the footprint map, delayed by `staleness`
/// frames and flipped with probability `error_prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Database {
    pub error_prob: f64,
    pub staleness_frames: u64,
}

impl Database {
    /// Reading `R` for a sensing over frames `[start, start+len)`.
    ///
    /// The flip is keyed by (cell, channel, start frame), so repeated queries
    /// for the same event agree.
    pub fn read(
        &self,
        activity: &IncumbentActivity,
        seeds: &SeedTree,
        cell: CellId,
        ch: ChannelId,
        start: u64,
        len: u64,
    ) -> bool {
        let z = activity.z(cell, ch, start as i64 - self.staleness_frames as i64, len);
        if self.error_prob <= 0.0 {
            return z;
        }
        let mut rng = seeds.keyed(Stream::Database, &[cell.0 as u64, ch.0 as u64, start]);
        z ^ rng.random_bool(self.error_prob.min(1.0))
    }
}
