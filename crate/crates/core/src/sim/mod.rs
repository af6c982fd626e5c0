//! Discrete-event simulation of a multi-cell deployment.
//!
//! Time advances in frames grouped into superframes of 16. Every
//! `intra_qp_period` frames each cell senses its operating channels in a
//! one-frame quiet period; a raised metrics flag escalates the channel to a
//! superframe-long quiet period with 16 times the samples, shared by the
//! synchronization group. Out-of-band channels are sensed by the BS and the
//! OBS CPEs every `obs_period` frames without a quiet period. At the end of
//! each superframe every cell runs its coexistence cycle against its
//! neighbours' lists from the previous superframe.
//!
//! All fusion rules decide on the same local decisions; the driving rule's
//! decisions also feed channel management.

mod database;
mod engine;
mod result;
mod schedule;

pub use database::Database;
pub use engine::Simulation;
pub use result::{
    Audit, DecisionRecord, MatrixSnapshot, Metric, NetworkPerf, NullSink, PerfMatrix, QpKind, ResultBundle,
    RuleSummary, SensorRecord, TimePoint, TraceSink, TransitionRecord,
};
pub use schedule::{silence_violations, sync_group, QpSchedule};

use crate::chanmgmt::ChanError;
use crate::config::ConfigError;
use crate::fusion::FusionError;
use crate::metrics::MetricsError;
use crate::model::{CellId, ChannelId, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("fusion failed in {cell} on {channel} at frame {frame}: {source}")]
    Fusion {
        cell: CellId,
        channel: ChannelId,
        frame: u64,
        source: FusionError,
    },
    #[error("channel management failed in {cell} at frame {frame}: {source}")]
    Channel { cell: CellId, frame: u64, source: ChanError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Runs `cfg.horizon` superframes and returns the collected results.
pub fn run_simulation(cfg: &crate::ScenarioConfig) -> Result<ResultBundle, SimError> {
    run_simulation_with(cfg, &mut NullSink)
}

/// As [`run_simulation`], streaming every record to `sink` as well.
pub fn run_simulation_with(cfg: &crate::ScenarioConfig, sink: &mut dyn TraceSink) -> Result<ResultBundle, SimError> {
    let mut sim = Simulation::new(cfg)?;
    sim.run(sink)?;
    Ok(sim.finish())
}
