//! Multi-channel learning-based distributed sensing (MC-LDS) for multi-cell
//! cognitive-radio networks, together with the AND/OR/VOTING baselines and a
//! discrete-event simulator of an IEEE 802.22 style WRAN deployment.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] and [`config`]: identifiers, scenario configuration, topology,
//!   sensor assignment and the deterministic randomness contract.
//! * [`incumbent`]: ON/OFF activity of incumbent stations and the factual
//!   per-(cell, channel) channel status.
//! * [`radio`]: link gains, energy-detector power synthesis and the
//!   closed-form detection-rate approximations.
//! * [`classifier`]: per-sensor logistic binarization of sensed power.
//! * [`fusion`]: reward-penalty scoring, confidence, channel indicators,
//!   the weighted central decision and the baseline rules.
//! * [`chanmgmt`]: the five-list channel state machine of each cell.
//! * [`metrics`]: windowed false-alarm / misdetection / discovery rates,
//!   Pearson statistic and network-wide correlation.
//! * [`sim`]: the frame/superframe event loop tying everything together.
//! * [`report`] and [`sweep`]: CSV artifacts and seeded parameter sweeps.

pub mod chanmgmt;
pub mod classifier;
pub mod config;
pub mod fusion;
pub mod incumbent;
pub mod metrics;
pub mod model;
pub mod radio;
pub mod report;
pub mod sim;
pub mod sweep;

pub use config::{ConfigError, ScenarioConfig};
pub use fusion::Rule;
pub use model::{CellId, ChannelId};
pub use sim::{run_simulation, ResultBundle, SimError, Simulation};
