//! Quiet-period schedule and synchronization groups.

use std::collections::{BTreeSet, VecDeque};

use crate::model::{CellId, ChannelId};

/// Cells that must be silent together on `ch`: `cell` plus every cell
/// reachable through neighbours that also operate `ch`.
pub fn sync_group(cell: CellId, ch: ChannelId, ocls: &[&[ChannelId]], neighbors: &[Vec<CellId>]) -> Vec<CellId> {
    let mut seen = BTreeSet::from([cell]);
    let mut queue = VecDeque::from([cell]);
    while let Some(c) = queue.pop_front() {
        for &n in &neighbors[c.0] {
            if ocls[n.0].contains(&ch) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().collect()
}

/// Intra-frame quiet periods at every multiple of `intra_period` frames,
/// network-wide, plus superframe-long inter-frame quiet periods for
/// escalated (cell, channel) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSchedule {
    intra_period: u64,
    current: BTreeSet<(CellId, ChannelId)>,
    pending: BTreeSet<(CellId, ChannelId)>,
}

impl QpSchedule {
    pub fn new(intra_period: u64) -> Self {
        Self {
            intra_period: intra_period.max(1),
            current: BTreeSet::new(),
            pending: BTreeSet::new(),
        }
    }

    pub fn is_intra_instant(&self, frame: u64) -> bool {
        frame.is_multiple_of(self.intra_period)
    }

    /// Asks for an inter-frame quiet period on `ch` in the next superframe.
    pub fn request(&mut self, cell: CellId, ch: ChannelId) {
        self.pending.insert((cell, ch));
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Starts a superframe: pending requests on channels still operated are
    /// extended to their synchronization groups and become current. Returns
    /// the escalated pairs.
    pub fn begin_superframe(&mut self, ocls: &[&[ChannelId]], neighbors: &[Vec<CellId>]) -> Vec<(CellId, ChannelId)> {
        let mut now = BTreeSet::new();
        for &(cell, ch) in &self.pending {
            if !ocls[cell.0].contains(&ch) {
                continue;
            }
            for m in sync_group(cell, ch, ocls, neighbors) {
                now.insert((m, ch));
            }
        }
        self.pending.clear();
        self.current = now;
        self.current.iter().copied().collect()
    }

    pub fn escalated(&self, cell: CellId, ch: ChannelId) -> bool {
        self.current.contains(&(cell, ch))
    }

    /// Whether `cell` must stay silent on `ch` during `frame`.
    pub fn quiet(&self, cell: CellId, ch: ChannelId, frame: u64, neighbors: &[Vec<CellId>]) -> bool {
        self.is_intra_instant(frame)
            || self.escalated(cell, ch)
            || neighbors[cell.0].iter().any(|&n| self.escalated(n, ch))
    }
}

/// Quiet periods `(cell, channel)` of one frame during which some member of
/// the synchronization group transmits on that channel.
pub fn silence_violations(
    qps: &[(CellId, ChannelId)],
    transmitting: &[Vec<ChannelId>],
    ocls: &[&[ChannelId]],
    neighbors: &[Vec<CellId>],
) -> u64 {
    qps.iter()
        .map(|&(cell, ch)| {
            sync_group(cell, ch, ocls, neighbors)
                .into_iter()
                .filter(|m| transmitting[m.0].contains(&ch))
                .count() as u64
        })
        .sum()
}
