//! Per-cell channel lists and their state machine.
//!
//! Every channel of a cell sits in at most one of five lists: operating
//! (OCL), backup (BCL), protected (PCL), candidate (CCL) or disallowed (DCL).
//! Channels move only along
//!
//! ```text
//! OCL -> PCL -> CCL -> BCL -> OCL
//!               CCL -> PCL
//!                      BCL -> PCL
//! ```
//!
//! A candidate becomes a backup only after staying idle for the promotion
//! time with no gap between two out-of-band sensings above the allowed gap.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{CellId, ChannelId};

/// Slack for comparing times built from frame counts.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ListKind {
    Ocl,
    Bcl,
    Pcl,
    Ccl,
    Dcl,
}

impl ListKind {
    pub fn name(self) -> &'static str {
        match self {
            ListKind::Ocl => "OCL",
            ListKind::Bcl => "BCL",
            ListKind::Pcl => "PCL",
            ListKind::Ccl => "CCL",
            ListKind::Dcl => "DCL",
        }
    }
}

impl fmt::Display for ListKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether `from -> to` is one of the state-machine edges.
pub fn is_allowed_edge(from: ListKind, to: ListKind) -> bool {
    use ListKind::*;
    matches!(
        (from, to),
        (Ocl, Pcl) | (Pcl, Ccl) | (Ccl, Bcl) | (Ccl, Pcl) | (Bcl, Pcl) | (Bcl, Ocl)
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromotionTimer {
    pub idle_since: f64,
    pub last_sensed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub cell: CellId,
    pub from: ChannelId,
    pub to: ChannelId,
    pub time: f64,
    /// Latest time by which the cell must be operating on `to`.
    pub deadline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reason {
    Initial,
    BusyVerdict,
    AdjacentVacated,
    SensedIdle,
    Promoted,
    SensedBusy,
    Switch,
    Refill,
    NeighborConflict,
    Disallowed,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Reason::Initial => "initial",
            Reason::BusyVerdict => "busy-verdict",
            Reason::AdjacentVacated => "adjacent-vacated",
            Reason::SensedIdle => "sensed-idle",
            Reason::Promoted => "promoted",
            Reason::SensedBusy => "sensed-busy",
            Reason::Switch => "switch",
            Reason::Refill => "refill",
            Reason::NeighborConflict => "neighbor-conflict",
            Reason::Disallowed => "disallowed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub time: f64,
    pub channel: ChannelId,
    /// `None` for a channel that was not in any list.
    pub from: Option<ListKind>,
    pub to: ListKind,
    pub reason: Reason,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChanError {
    #[error("{0} is not an operating channel")]
    NotOperating(ChannelId),
    #[error("{0} is not in PCL, CCL or BCL")]
    NotTracked(ChannelId),
}

/// Timing constants of the state machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub moving_time: f64,
    pub promotion_idle: f64,
    pub max_sensing_gap: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            moving_time: 2.0,
            promotion_idle: 30.0,
            max_sensing_gap: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BusyOutcome {
    pub switch: Option<SwitchEvent>,
    pub outage: bool,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChannelLists {
    pub ocl: Vec<ChannelId>,
    /// In promotion order; the head is the preferred switch target.
    pub bcl: Vec<ChannelId>,
    pub pcl: Vec<ChannelId>,
    pub ccl: Vec<ChannelId>,
    pub dcl: Vec<ChannelId>,
    timers: BTreeMap<ChannelId, (u64, u64)>,
}

// Timers are stored as raw bits so the lists stay `Eq`.
fn pack(t: PromotionTimer) -> (u64, u64) {
    (t.idle_since.to_bits(), t.last_sensed.to_bits())
}

fn unpack(t: (u64, u64)) -> PromotionTimer {
    PromotionTimer {
        idle_since: f64::from_bits(t.0),
        last_sensed: f64::from_bits(t.1),
    }
}

impl ChannelLists {
    pub fn list(&self, kind: ListKind) -> &[ChannelId] {
        match kind {
            ListKind::Ocl => &self.ocl,
            ListKind::Bcl => &self.bcl,
            ListKind::Pcl => &self.pcl,
            ListKind::Ccl => &self.ccl,
            ListKind::Dcl => &self.dcl,
        }
    }

    fn list_mut(&mut self, kind: ListKind) -> &mut Vec<ChannelId> {
        match kind {
            ListKind::Ocl => &mut self.ocl,
            ListKind::Bcl => &mut self.bcl,
            ListKind::Pcl => &mut self.pcl,
            ListKind::Ccl => &mut self.ccl,
            ListKind::Dcl => &mut self.dcl,
        }
    }

    const KINDS: [ListKind; 5] = [ListKind::Ocl, ListKind::Bcl, ListKind::Pcl, ListKind::Ccl, ListKind::Dcl];

    /// The list holding `ch`, if any.
    pub fn kind_of(&self, ch: ChannelId) -> Option<ListKind> {
        Self::KINDS.into_iter().find(|&k| self.list(k).contains(&ch))
    }

    pub fn timer(&self, ch: ChannelId) -> Option<PromotionTimer> {
        self.timers.get(&ch).copied().map(unpack)
    }

    /// Channels sensed out of band: PCL, CCL and BCL, in channel order.
    pub fn tracked(&self) -> Vec<ChannelId> {
        let mut v: Vec<ChannelId> = self.pcl.iter().chain(&self.ccl).chain(&self.bcl).copied().collect();
        v.sort();
        v
    }

    fn take(&mut self, ch: ChannelId) -> Option<ListKind> {
        let kind = self.kind_of(ch)?;
        self.list_mut(kind).retain(|&c| c != ch);
        if kind == ListKind::Ccl {
            self.timers.remove(&ch);
        }
        Some(kind)
    }

    fn move_to(&mut self, ch: ChannelId, to: ListKind, time: f64, reason: Reason) -> Transition {
        let from = self.take(ch);
        self.list_mut(to).push(ch);
        Transition {
            time,
            channel: ch,
            from,
            to,
            reason,
        }
    }

    /// Initial placement without a transition record.
    pub fn place(&mut self, ch: ChannelId, to: ListKind) {
        self.take(ch);
        self.list_mut(to).push(ch);
    }

    /// Vacates `ch_b` and any adjacent operating (or untracked) channel into
    /// PCL and switches to the head of BCL.
    pub fn on_busy_verdict(
        &mut self,
        cell: CellId,
        ch_b: ChannelId,
        num_channels: usize,
        now: f64,
        timing: &Timing,
    ) -> Result<BusyOutcome, ChanError> {
        if !self.ocl.contains(&ch_b) {
            return Err(ChanError::NotOperating(ch_b));
        }
        let mut out = BusyOutcome::default();
        out.transitions.push(self.move_to(ch_b, ListKind::Pcl, now, Reason::BusyVerdict));
        for adj in ch_b.adjacent(num_channels) {
            match self.kind_of(adj) {
                Some(ListKind::Ocl) | None => {
                    out.transitions.push(self.move_to(adj, ListKind::Pcl, now, Reason::AdjacentVacated))
                }
                _ => {}
            }
        }
        self.switch_from(cell, ch_b, now, timing, &mut out);
        Ok(out)
    }

    fn switch_from(&mut self, cell: CellId, from: ChannelId, now: f64, timing: &Timing, out: &mut BusyOutcome) {
        match self.bcl.first().copied() {
            Some(to) => {
                out.transitions.push(self.move_to(to, ListKind::Ocl, now, Reason::Switch));
                out.switch = Some(SwitchEvent {
                    cell,
                    from,
                    to,
                    time: now,
                    deadline: now + timing.moving_time,
                });
            }
            None => out.outage = true,
        }
    }

    /// Applies one out-of-band sensing result.
    pub fn obs_update(
        &mut self,
        ch: ChannelId,
        sensed_idle: bool,
        now: f64,
        timing: &Timing,
    ) -> Result<Option<Transition>, ChanError> {
        match self.kind_of(ch) {
            Some(ListKind::Pcl) => {
                if !sensed_idle {
                    return Ok(None);
                }
                let t = self.move_to(ch, ListKind::Ccl, now, Reason::SensedIdle);
                self.timers.insert(
                    ch,
                    pack(PromotionTimer {
                        idle_since: now,
                        last_sensed: now,
                    }),
                );
                Ok(Some(t))
            }
            Some(ListKind::Ccl) => {
                if !sensed_idle {
                    return Ok(Some(self.move_to(ch, ListKind::Pcl, now, Reason::SensedBusy)));
                }
                let mut timer = self.timer(ch).unwrap_or(PromotionTimer {
                    idle_since: now,
                    last_sensed: now,
                });
                if now - timer.last_sensed > timing.max_sensing_gap + TIME_EPS {
                    timer.idle_since = now;
                }
                timer.last_sensed = now;
                if now - timer.idle_since >= timing.promotion_idle - TIME_EPS {
                    Ok(Some(self.move_to(ch, ListKind::Bcl, now, Reason::Promoted)))
                } else {
                    self.timers.insert(ch, pack(timer));
                    Ok(None)
                }
            }
            Some(ListKind::Bcl) => {
                if sensed_idle {
                    Ok(None)
                } else {
                    Ok(Some(self.move_to(ch, ListKind::Pcl, now, Reason::SensedBusy)))
                }
            }
            _ => Err(ChanError::NotTracked(ch)),
        }
    }

    /// Moves `ch` to DCL, forcing a switch if it was operating.
    pub fn disallow(&mut self, cell: CellId, ch: ChannelId, now: f64, timing: &Timing) -> BusyOutcome {
        let mut out = BusyOutcome::default();
        let was = self.kind_of(ch);
        if was == Some(ListKind::Dcl) {
            return out;
        }
        out.transitions.push(self.move_to(ch, ListKind::Dcl, now, Reason::Disallowed));
        if was == Some(ListKind::Ocl) {
            self.switch_from(cell, ch, now, timing, &mut out);
        }
        out
    }

    /// One coexistence management cycle against the neighbours' snapshot.
    ///
    /// An operating channel shared with a lower-indexed neighbour is yielded,
    /// backups operated by a neighbour are demoted, and the operating list is
    /// refilled up to `target` from backups in the selected priority set.
    pub fn manage(
        &mut self,
        cell: CellId,
        neighbors: &[(CellId, &ChannelLists)],
        target: usize,
        now: f64,
        timing: &Timing,
    ) -> BusyOutcome {
        let mut out = BusyOutcome::default();
        let neighbor_ocl: BTreeSet<ChannelId> = neighbors.iter().flat_map(|(_, l)| l.ocl.iter().copied()).collect();

        let yielded: Vec<ChannelId> = self
            .ocl
            .iter()
            .copied()
            .filter(|ch| {
                neighbors
                    .iter()
                    .any(|(l, lists)| *l < cell && lists.ocl.contains(ch))
            })
            .collect();
        for ch in yielded {
            out.transitions.push(self.move_to(ch, ListKind::Pcl, now, Reason::NeighborConflict));
            self.switch_from(cell, ch, now, timing, &mut out);
        }

        let demoted: Vec<ChannelId> = self.bcl.iter().copied().filter(|c| neighbor_ocl.contains(c)).collect();
        for ch in demoted {
            out.transitions.push(self.move_to(ch, ListKind::Pcl, now, Reason::NeighborConflict));
        }
        // a switch above may have picked a backup that a neighbour operates
        let clash: Vec<ChannelId> = self.ocl.iter().copied().filter(|c| neighbor_ocl.contains(c)).collect();
        for ch in clash {
            if out.switch.map(|s| s.to) == Some(ch) {
                out.transitions.push(self.move_to(ch, ListKind::Pcl, now, Reason::NeighborConflict));
                out.switch = None;
                out.outage = true;
            }
        }

        if self.ocl.len() < target {
            let lps = compute_lps(self, neighbors.iter().map(|(_, l)| *l));
            let pool = match lps.selected {
                LpsLevel::First => lps.first,
                LpsLevel::Second => lps.second,
                _ => BTreeSet::new(),
            };
            let picks: Vec<ChannelId> = self
                .bcl
                .iter()
                .copied()
                .filter(|c| pool.contains(c))
                .take(target - self.ocl.len())
                .collect();
            for ch in picks {
                out.transitions.push(self.move_to(ch, ListKind::Ocl, now, Reason::Refill));
            }
        }
        out
    }

    /// Channels present in more than one list of this cell.
    pub fn overlaps(&self) -> Vec<(ChannelId, ListKind, ListKind)> {
        let mut v = Vec::new();
        for (i, &a) in Self::KINDS.iter().enumerate() {
            for &b in &Self::KINDS[i + 1..] {
                for &ch in self.list(a) {
                    if self.list(b).contains(&ch) {
                        v.push((ch, a, b));
                    }
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpsLevel {
    First,
    Second,
    Third,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lps {
    pub first: BTreeSet<ChannelId>,
    pub second: BTreeSet<ChannelId>,
    pub third: BTreeSet<ChannelId>,
    pub selected: LpsLevel,
}

impl Lps {
    pub fn selected_set(&self) -> &BTreeSet<ChannelId> {
        match self.selected {
            LpsLevel::First => &self.first,
            LpsLevel::Second => &self.second,
            _ => &self.third,
        }
    }
}

/// Local priority sets of a cell given its neighbours' lists.
pub fn compute_lps<'a>(own: &ChannelLists, neighbors: impl IntoIterator<Item = &'a ChannelLists>) -> Lps {
    let mine: BTreeSet<ChannelId> = own.bcl.iter().chain(&own.ccl).copied().collect();
    let mut n_spare = BTreeSet::new();
    let mut n_ocl = BTreeSet::new();
    for l in neighbors {
        n_spare.extend(l.ccl.iter().chain(&l.bcl).copied());
        n_ocl.extend(l.ocl.iter().copied());
    }
    let first: BTreeSet<ChannelId> = mine.difference(&n_spare).copied().collect();
    let second: BTreeSet<ChannelId> = mine.difference(&n_ocl).copied().collect();
    let selected = if !first.is_empty() {
        LpsLevel::First
    } else if !second.is_empty() {
        LpsLevel::Second
    } else if !n_ocl.is_empty() {
        LpsLevel::Third
    } else {
        LpsLevel::None
    };
    Lps {
        first,
        second,
        third: n_ocl,
        selected,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Overlap {
        cell: CellId,
        channel: ChannelId,
        lists: (ListKind, ListKind),
    },
    SharedOperating {
        cells: (CellId, CellId),
        channel: ChannelId,
    },
    BackupOperatedByNeighbor {
        cell: CellId,
        neighbor: CellId,
        channel: ChannelId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { cell, channel, lists } => {
                write!(f, "{cell}: {channel} in both {} and {}", lists.0, lists.1)
            }
            Violation::SharedOperating { cells, channel } => {
                write!(f, "neighbors {} and {} both operate {channel}", cells.0, cells.1)
            }
            Violation::BackupOperatedByNeighbor { cell, neighbor, channel } => {
                write!(f, "{cell} backs up {channel} which neighbor {neighbor} operates")
            }
        }
    }
}

/// Intra-cell overlaps and neighbour OCL/BCL collisions.
pub fn validate_lists(lists: &[ChannelLists], neighbors: &[Vec<CellId>]) -> Vec<Violation> {
    let mut v = Vec::new();
    for (j, l) in lists.iter().enumerate() {
        for (channel, a, b) in l.overlaps() {
            v.push(Violation::Overlap {
                cell: CellId(j),
                channel,
                lists: (a, b),
            });
        }
    }
    for (j, l) in lists.iter().enumerate() {
        for &n in &neighbors[j] {
            let other = &lists[n.0];
            if n.0 > j {
                for &ch in &l.ocl {
                    if other.ocl.contains(&ch) {
                        v.push(Violation::SharedOperating {
                            cells: (CellId(j), n),
                            channel: ch,
                        });
                    }
                }
            }
            for &ch in &l.bcl {
                if other.ocl.contains(&ch) {
                    v.push(Violation::BackupOperatedByNeighbor {
                        cell: CellId(j),
                        neighbor: n,
                        channel: ch,
                    });
                }
            }
        }
    }
    v
}

/// Greedy start-up assignment in cell order.
///
/// Each cell operates `target` channels preferring ones the database reports
/// idle, avoiding neighbours' operating and backup channels and its own
/// disallowed channels; then takes `backups` channels not operated by any
/// neighbour. Everything else starts protected. A cell without candidates
/// stays inactive.
pub fn initial_lists(
    num_channels: usize,
    neighbors: &[Vec<CellId>],
    disallowed: &[Vec<ChannelId>],
    reading: impl Fn(CellId, ChannelId) -> bool,
    target: usize,
    backups: usize,
) -> Vec<ChannelLists> {
    let mut out: Vec<ChannelLists> = Vec::with_capacity(neighbors.len());
    for j in 0..neighbors.len() {
        let cell = CellId(j);
        let dcl = &disallowed[j];
        let earlier: Vec<&ChannelLists> = neighbors[j].iter().filter(|n| n.0 < j).map(|n| &out[n.0]).collect();
        let free = |ch: &ChannelId, avoid_backup: bool| {
            !dcl.contains(ch)
                && earlier
                    .iter()
                    .all(|l| !l.ocl.contains(ch) && !(avoid_backup && l.bcl.contains(ch)))
        };
        let all: Vec<ChannelId> = (0..num_channels).map(ChannelId::from_index).collect();
        let mut ranked: Vec<ChannelId> = all.iter().copied().filter(|c| free(c, true)).collect();
        ranked.sort_by_key(|&c| (reading(cell, c), c));

        let mut lists = ChannelLists::default();
        for &c in dcl {
            lists.place(c, ListKind::Dcl);
        }
        for &c in ranked.iter().take(target) {
            lists.place(c, ListKind::Ocl);
        }
        let mut spare: Vec<ChannelId> = all
            .iter()
            .copied()
            .filter(|c| lists.kind_of(*c).is_none() && free(c, false))
            .collect();
        spare.sort_by_key(|&c| (reading(cell, c), c));
        for &c in spare.iter().take(backups) {
            lists.place(c, ListKind::Bcl);
        }
        for &c in &all {
            if lists.kind_of(c).is_none() {
                lists.place(c, ListKind::Pcl);
            }
        }
        out.push(lists);
    }
    out
}

/// Renders a list as `{CH2,CH10}` (or `{}`), channels in ascending order.
pub fn render_set(channels: &[ChannelId]) -> String {
    let mut v = channels.to_vec();
    v.sort();
    let inner: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(n: u16) -> ChannelId {
        ChannelId(n)
    }

    fn lists(ocl: &[u16], bcl: &[u16], pcl: &[u16], ccl: &[u16], dcl: &[u16]) -> ChannelLists {
        let mut l = ChannelLists::default();
        for (kind, chans) in [
            (ListKind::Ocl, ocl),
            (ListKind::Bcl, bcl),
            (ListKind::Pcl, pcl),
            (ListKind::Ccl, ccl),
            (ListKind::Dcl, dcl),
        ] {
            l.list_mut(kind).extend(chans.iter().map(|&c| ch(c)));
        }
        l
    }

    #[test]
    fn busy_verdict_vacates_and_switches() {
        let mut l = lists(&[4], &[7], &[1, 2, 3, 5, 6, 8, 9, 10], &[], &[]);
        let out = l.on_busy_verdict(CellId(0), ch(4), 10, 12.0, &Timing::default()).unwrap();
        for c in [3, 4, 5] {
            assert!(l.pcl.contains(&ch(c)));
        }
        assert_eq!(l.ocl, vec![ch(7)]);
        let sw = out.switch.unwrap();
        assert_eq!((sw.from, sw.to, sw.deadline), (ch(4), ch(7), 14.0));
        assert!(out.transitions.iter().all(|t| t.from.is_none_or(|f| is_allowed_edge(f, t.to))));
    }

    #[test]
    fn adjacent_operating_channel_is_vacated_other_lists_stay() {
        let mut l = lists(&[1, 2], &[6], &[], &[3], &[]);
        l.on_busy_verdict(CellId(0), ch(2), 10, 0.0, &Timing::default()).unwrap();
        assert!(l.pcl.contains(&ch(1)) && l.pcl.contains(&ch(2)));
        assert_eq!(l.ccl, vec![ch(3)]);
        assert_eq!(l.ocl, vec![ch(6)]);
    }

    #[test]
    fn edge_channel_has_one_neighbor() {
        let mut l = lists(&[1], &[5], &[], &[], &[]);
        let out = l.on_busy_verdict(CellId(0), ch(1), 10, 0.0, &Timing::default()).unwrap();
        let vacated: Vec<_> = out.transitions.iter().filter(|t| t.to == ListKind::Pcl).map(|t| t.channel).collect();
        assert_eq!(vacated, vec![ch(1), ch(2)]);
    }

    #[test]
    fn empty_backup_means_outage() {
        let mut l = lists(&[4], &[], &[], &[], &[]);
        let out = l.on_busy_verdict(CellId(0), ch(4), 10, 0.0, &Timing::default()).unwrap();
        assert!(out.outage && out.switch.is_none());
        assert!(l.ocl.is_empty());
        assert_eq!(
            l.on_busy_verdict(CellId(0), ch(4), 10, 0.0, &Timing::default()),
            Err(ChanError::NotOperating(ch(4)))
        );
    }

    #[test]
    fn candidate_promoted_after_thirty_seconds() {
        let t = Timing::default();
        let mut l = lists(&[1], &[], &[6], &[], &[]);
        l.obs_update(ch(6), true, 0.0, &t).unwrap();
        assert_eq!(l.kind_of(ch(6)), Some(ListKind::Ccl));
        for s in (5..30).step_by(5) {
            assert_eq!(l.obs_update(ch(6), true, s as f64, &t).unwrap(), None);
        }
        let tr = l.obs_update(ch(6), true, 30.0, &t).unwrap().unwrap();
        assert_eq!((tr.from, tr.to), (Some(ListKind::Ccl), ListKind::Bcl));
    }

    #[test]
    fn long_gap_restarts_timer() {
        let t = Timing::default();
        let mut l = lists(&[1], &[], &[6], &[], &[]);
        l.obs_update(ch(6), true, 0.0, &t).unwrap();
        let mut now = 7.0;
        while now <= 32.0 {
            l.obs_update(ch(6), true, now, &t).unwrap();
            now += 5.0;
        }
        assert_eq!(l.kind_of(ch(6)), Some(ListKind::Ccl));
        assert_eq!(l.timer(ch(6)).unwrap().idle_since, 7.0);
        l.obs_update(ch(6), true, 37.0, &t).unwrap();
        assert_eq!(l.kind_of(ch(6)), Some(ListKind::Bcl));
    }

    #[test]
    fn busy_backup_returns_to_protected() {
        let t = Timing::default();
        let mut l = lists(&[1], &[3], &[], &[], &[]);
        assert_eq!(l.obs_update(ch(3), true, 0.0, &t).unwrap(), None);
        let tr = l.obs_update(ch(3), false, 1.0, &t).unwrap().unwrap();
        assert_eq!(tr.to, ListKind::Pcl);
        assert_eq!(l.obs_update(ch(1), true, 0.0, &t), Err(ChanError::NotTracked(ch(1))));
    }

    #[test]
    fn lps_normal_mode() {
        let own = lists(&[1], &[6], &[], &[], &[]);
        let lps = compute_lps(&own, std::iter::empty());
        assert_eq!(lps.first, BTreeSet::from([ch(6)]));
        assert_eq!(lps.second, lps.first);
        assert!(lps.third.is_empty());
        assert_eq!(lps.selected, LpsLevel::First);
    }

    /// Rows of the published 12-cell snapshot: (OCL, BCL, PCL, CCL, DCL).
    fn table_ii() -> Vec<ChannelLists> {
        vec![
            lists(&[4], &[], &[2, 10], &[], &[]),
            lists(&[8], &[4, 6], &[], &[], &[10]),
            lists(&[4], &[], &[2], &[5], &[]),
            lists(&[10], &[], &[], &[], &[10]),
            lists(&[2], &[], &[], &[], &[5]),
            lists(&[], &[], &[], &[], &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
            lists(&[7], &[], &[], &[], &[]),
            lists(&[1], &[], &[], &[], &[1]),
            lists(&[9], &[6], &[2, 10], &[], &[]),
            lists(&[3], &[7], &[], &[8], &[]),
            lists(&[7], &[5], &[10], &[6], &[]),
            lists(&[5], &[], &[], &[], &[5]),
        ]
    }

    #[test]
    fn lps_on_table_snapshot_with_all_neighbors() {
        let t = table_ii();
        let others: Vec<&ChannelLists> = t.iter().enumerate().filter(|(i, _)| *i != 8).map(|(_, l)| l).collect();
        let lps = compute_lps(&t[8], others);
        assert!(lps.first.is_empty());
        assert_eq!(lps.second, BTreeSet::from([ch(6)]));
        assert_eq!(lps.selected, LpsLevel::Second);
    }

    #[test]
    fn lps_falls_back_to_neighbor_operating() {
        let own = lists(&[], &[], &[2], &[], &[]);
        let n = lists(&[5], &[], &[], &[], &[]);
        let lps = compute_lps(&own, [&n]);
        assert_eq!(lps.selected, LpsLevel::Third);
        assert_eq!(lps.selected_set(), &BTreeSet::from([ch(5)]));
    }

    #[test]
    fn validation_examples() {
        let t = table_ii();
        assert!(t[1].overlaps().is_empty());
        assert_eq!(t[3].overlaps(), vec![(ch(10), ListKind::Ocl, ListKind::Dcl)]);
        let a = lists(&[7], &[], &[], &[], &[]);
        let v = validate_lists(&[a.clone(), a], &[vec![CellId(1)], vec![CellId(0)]]);
        assert_eq!(
            v,
            vec![Violation::SharedOperating {
                cells: (CellId(0), CellId(1)),
                channel: ch(7)
            }]
        );
    }

    #[test]
    fn manage_yields_to_lower_index_and_refills() {
        let t = Timing::default();
        let low = lists(&[3], &[], &[], &[], &[]);
        let mut high = lists(&[3], &[4, 5], &[], &[], &[]);
        let out = high.manage(CellId(1), &[(CellId(0), &low)], 1, 1.0, &t);
        assert_eq!(high.ocl, vec![ch(4)]);
        assert_eq!(out.switch.unwrap().to, ch(4));
        assert!(high.pcl.contains(&ch(3)));
        let mut inactive = lists(&[], &[5], &[], &[], &[]);
        inactive.manage(CellId(2), &[], 1, 1.0, &t);
        assert_eq!(inactive.ocl, vec![ch(5)]);
    }

    #[test]
    fn initial_lists_respect_neighbors_and_dcl() {
        let neighbors = vec![vec![CellId(1)], vec![CellId(0)], vec![]];
        let dcl = vec![vec![], vec![ch(1)], (1..=4).map(ch).collect()];
        let l = initial_lists(4, &neighbors, &dcl, |_, c| c == ch(2), 1, 1);
        assert_eq!(l[0].ocl, vec![ch(1)]);
        assert_eq!(l[0].bcl, vec![ch(3)]);
        assert_eq!(l[1].ocl, vec![ch(4)]);
        assert!(l[2].ocl.is_empty());
        assert!(validate_lists(&l, &neighbors).is_empty());
        assert_eq!(render_set(&l[1].dcl), "{CH1}");
        assert_eq!(render_set(&[]), "{}");
        assert_eq!(render_set(&[ch(10), ch(2)]), "{CH2,CH10}");
    }
}
