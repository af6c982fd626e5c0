//! Records emitted by a run and the aggregated result bundle.

use std::fmt;

use crate::chanmgmt::{ChannelLists, SwitchEvent, Transition};
use crate::fusion::Rule;
use crate::metrics::PerfVector;
use crate::model::{CellId, ChannelId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QpKind {
    /// One-frame in-band quiet period.
    Intra,
    /// Superframe-long in-band quiet period after an escalation.
    Inter,
    /// Out-of-band sensing; needs no quiet period.
    Obs,
}

impl QpKind {
    pub fn name(self) -> &'static str {
        match self {
            QpKind::Intra => "intra",
            QpKind::Inter => "inter",
            QpKind::Obs => "obs",
        }
    }

    pub(crate) fn key(self) -> u64 {
        match self {
            QpKind::Intra => 0,
            QpKind::Inter => 1,
            QpKind::Obs => 2,
        }
    }
}

impl fmt::Display for QpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Central decision of one rule for one sensing event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub frame: u64,
    pub time: f64,
    pub cell: CellId,
    pub channel: ChannelId,
    pub kind: QpKind,
    pub rule: Rule,
    pub decision: bool,
    pub z: bool,
    pub r: bool,
    /// Weighted sum for MC-LDS rules, count of busy votes for the baselines.
    pub statistic: f64,
}

/// What one sensor measured and reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorRecord {
    pub frame: u64,
    pub cell: CellId,
    pub channel: ChannelId,
    pub kind: QpKind,
    pub slot: usize,
    pub power: f64,
    pub d: bool,
    pub delivered: bool,
    /// Confidence under the static MC-LDS rule, when that rule runs.
    pub w: Option<f64>,
}

/// Receives records as the run produces them.
pub trait TraceSink {
    fn decision(&mut self, _rec: &DecisionRecord) {}
    fn sensor(&mut self, _rec: &SensorRecord) {}
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub cell: CellId,
    pub transition: Transition,
}

/// Network-level values of one rule, each a sample-weighted mean over the
/// tracked (cell, channel) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetworkPerf {
    pub nwcf: Option<f64>,
    pub p_sd: Option<f64>,
    pub p_md: Option<f64>,
    pub p_fa: Option<f64>,
    pub chi2: Option<f64>,
    pub pairs: usize,
}

impl NetworkPerf {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Nwcf => self.nwcf,
            Metric::PSd => self.p_sd,
            Metric::PMd => self.p_md,
            Metric::PFa => self.p_fa,
            Metric::Chi2 => self.chi2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Nwcf,
    PSd,
    PMd,
    PFa,
    Chi2,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Nwcf, Metric::PSd, Metric::PMd, Metric::PFa, Metric::Chi2];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Nwcf => "nwcf",
            Metric::PSd => "p_sd",
            Metric::PMd => "p_md",
            Metric::PFa => "p_fa",
            Metric::Chi2 => "chi2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimePoint {
    pub superframe: u64,
    pub rule: Rule,
    pub perf: NetworkPerf,
}

/// Per-(cell, channel) performance; `None` where the pair is not tracked.
pub type PerfMatrix = Vec<Vec<Option<PerfVector>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSnapshot {
    pub superframe: u64,
    pub rule: Rule,
    pub matrix: PerfMatrix,
}

/// Mean of each network value over the post-warm-up superframes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleSummary {
    pub rule: Rule,
    pub perf: NetworkPerf,
    /// Superframes that contributed.
    pub points: usize,
}

/// Consistency checks collected while running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Audit {
    pub intra_qps: u64,
    pub inter_qps: u64,
    pub obs_sensings: u64,
    pub escalations: u64,
    /// Quiet periods during which a cell of the synchronization group transmitted.
    pub silence_violations: u64,
    /// List-constraint violations found at the end of management cycles.
    pub list_violations: u64,
    pub switches_late: u64,
    pub outages: u64,
    pub classifier_fits: u64,
    pub lost_reports: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultBundle {
    pub num_cells: usize,
    pub num_channels: usize,
    pub rules: Vec<Rule>,
    pub superframes: u64,
    pub decisions: Vec<DecisionRecord>,
    /// `(frame, cell, channel, Z)` for every intra-frame QP instant.
    pub z_trace: Vec<(u64, CellId, ChannelId, bool)>,
    pub transitions: Vec<TransitionRecord>,
    pub switches: Vec<SwitchEvent>,
    pub timeseries: Vec<TimePoint>,
    pub snapshots: Vec<MatrixSnapshot>,
    /// Matrices at the end of the run, one per rule.
    pub matrices: Vec<(Rule, PerfMatrix)>,
    pub summary: Vec<RuleSummary>,
    pub lists: Vec<ChannelLists>,
    pub audit: Audit,
}

impl ResultBundle {
    pub fn is_empty(&self) -> bool {
        self.superframes == 0
    }

    pub fn summary_for(&self, rule: Rule) -> Option<&RuleSummary> {
        self.summary.iter().find(|s| s.rule == rule)
    }

    pub fn matrix_for(&self, rule: Rule) -> Option<&PerfMatrix> {
        self.matrices.iter().find(|(r, _)| *r == rule).map(|(_, m)| m)
    }
}
