//! Scenario configuration.
//!
//! A scenario is a sectioned TOML file. Only `num_cells`, `num_channels` and
//! `seed` are required; every other key has a default, and unknown keys are
//! rejected. [`ScenarioConfig::to_toml_string`] dumps the fully resolved
//! configuration, which parses back to an identical value.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fusion::Rule;
use crate::incumbent::ActivityConfig;
use crate::model::ChannelId;

/// Frames per superframe; fixed by the WRAN frame structure.
pub const FRAMES_PER_SUPERFRAME: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_cells: usize,
    pub num_channels: usize,
    pub seed: u64,
    /// Simulated length in superframes.
    #[serde(default = "defaults::horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub incumbents: IncumbentConfig,
    #[serde(default)]
    pub activity: ActivityDefaults,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub channels: ChannelMgmtConfig,
    #[serde(default)]
    pub clock: ClockConfig,
    #[serde(default)]
    pub database: DatabaseConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

mod defaults {
    pub fn horizon() -> u64 {
        500
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    /// Cell radius in meters.
    pub cell_radius: f64,
    pub cpes_per_cell: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            cell_radius: 10_000.0,
            cpes_per_cell: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub x: f64,
    pub y: f64,
    pub channel: ChannelId,
    pub coverage_radius: f64,
    /// Transmit power in watts; when absent the station follows `radio.tx_snr_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncumbentConfig {
    /// Number of randomly placed stations, used when `stations` is empty.
    pub count: usize,
    pub coverage_radius_min: f64,
    pub coverage_radius_max: f64,
    /// Stations are placed uniformly in the cells' bounding box grown by this margin.
    pub placement_margin: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub stations: Vec<StationSpec>,
}

impl Default for IncumbentConfig {
    fn default() -> Self {
        Self {
            count: 15,
            coverage_radius_min: 60_000.0,
            coverage_radius_max: 120_000.0,
            placement_margin: 10_000.0,
            stations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelActivity {
    pub channel: ChannelId,
    pub mean_on: f64,
    pub mean_off: f64,
    pub burstiness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActivityDefaults {
    /// Mean ON sojourn in seconds.
    pub mean_on: f64,
    /// Mean OFF sojourn in seconds.
    pub mean_off: f64,
    pub burstiness: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<ChannelActivity>,
}

impl Default for ActivityDefaults {
    fn default() -> Self {
        Self {
            mean_on: 2.0,
            mean_off: 2.0,
            burstiness: 0.5,
            overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaVariant {
    AsPrinted,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainNormalization {
    None,
    CellMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    /// Noise power S_N in watts.
    pub noise_power: f64,
    pub path_loss_exponent: f64,
    /// Distance (m) at which the path gain is 1.
    pub reference_distance: f64,
    pub shadowing_sigma_db: f64,
    /// Sensors closer than this (m) share their shadowing draw.
    pub shadowing_corr_distance: f64,
    /// Frames over which link gains are held constant.
    pub slow_fading_hold: u64,
    pub samples_per_sensing: u32,
    /// Energy threshold λ in watts. Resolved to `M·S_N·(1 + 2/√M)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_threshold: Option<f64>,
    /// Incumbent transmit power relative to the noise power, in dB.
    pub tx_snr_db: f64,
    /// CPE transmit power relative to the noise power, in dB.
    pub cpe_tx_snr_db: f64,
    /// Reports whose received SNR falls below this (dB) are lost. `-inf` disables loss.
    pub report_threshold_db: f64,
    pub report_gain_normalization: GainNormalization,
    pub formula_variant: FormulaVariant,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            noise_power: 1.0,
            path_loss_exponent: 4.0,
            reference_distance: 500.0,
            shadowing_sigma_db: 6.0,
            shadowing_corr_distance: 0.125,
            slow_fading_hold: 16,
            samples_per_sensing: 100,
            detection_threshold: None,
            tx_snr_db: 50.0,
            cpe_tx_snr_db: 100.0,
            report_threshold_db: -3.0,
            report_gain_normalization: GainNormalization::CellMean,
            formula_variant: FormulaVariant::AsPrinted,
        }
    }
}

impl RadioConfig {
    /// λ in watts.
    pub fn threshold(&self) -> f64 {
        self.detection_threshold
            .unwrap_or_else(|| default_threshold(self.samples_per_sensing, self.noise_power))
    }

    /// `SNR_min = λ / S_N`.
    pub fn snr_min(&self) -> f64 {
        self.threshold() / self.noise_power
    }

    /// Incumbent transmit power in watts implied by `tx_snr_db`.
    pub fn incumbent_tx_power(&self) -> f64 {
        self.noise_power * db_to_linear(self.tx_snr_db)
    }

    pub fn cpe_tx_power(&self) -> f64 {
        self.noise_power * db_to_linear(self.cpe_tx_snr_db)
    }
}

pub fn default_threshold(samples: u32, noise_power: f64) -> f64 {
    let m = f64::from(samples);
    m * noise_power * (1.0 + 2.0 / m.sqrt())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    /// Training labels come from the database reading R.
    Database,
    /// Training labels come from the factual status Z (oracle experiments).
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSource {
    Empirical,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Labelled samples needed before the first fit.
    pub min_train: usize,
    /// Scheduled refit period in sensings.
    pub refit_every: u64,
    /// Refit early when the rolling test error exceeds this multiple of the error at the last fit.
    pub refit_error_factor: f64,
    /// ... and exceeds this absolute floor.
    pub refit_error_floor: f64,
    /// Minimum sensings between two fits.
    pub refit_min_gap: u64,
    pub labels: LabelSource,
    /// Constant Pr(H0); when absent a rolling estimate from database readings is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_h0: Option<f64>,
    pub rate_source: RateSource,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-3,
            tol: 1e-8,
            max_iter: 200,
            train_size: 100,
            test_size: 50,
            min_train: 30,
            refit_every: 100,
            refit_error_factor: 2.0,
            refit_error_floor: 0.05,
            refit_min_gap: 10,
            labels: LabelSource::Database,
            prior_h0: None,
            rate_source: RateSource::Empirical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConsts {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for AdaptiveConsts {
    fn default() -> Self {
        Self {
            a: 8.0,
            b: 12.0,
            c: 0.5,
            d: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub gamma: f64,
    pub zeta: f64,
    /// Static temporal discount α.
    pub alpha: f64,
    /// Static historic count N.
    pub historic_count: usize,
    pub adaptive: AdaptiveConsts,
    /// Rules evaluated side by side on the same local decisions.
    pub rules: Vec<Rule>,
    /// Rule whose decisions drive channel management.
    pub driving_rule: Rule,
    /// VOTING quorum; `⌈(m+1)/2⌉` of the received decisions when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voting_quorum: Option<usize>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            zeta: 2.0,
            alpha: 0.7,
            historic_count: 8,
            adaptive: AdaptiveConsts::default(),
            rules: Rule::ALL.to_vec(),
            driving_rule: Rule::McLds,
            voting_quorum: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisallowedSpec {
    /// One-based cell number.
    pub cell: usize,
    pub channels: Vec<ChannelId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelMgmtConfig {
    /// Maximum allowable channel moving time in seconds.
    pub moving_time: f64,
    /// Continuous idle time (s) a candidate channel needs before becoming a backup.
    pub promotion_idle: f64,
    /// Largest allowed gap (s) between two idle sensings of a candidate channel.
    pub max_sensing_gap: f64,
    /// Operating channels each cell tries to keep.
    pub target_operating: usize,
    /// Backup channels assigned at start-up.
    pub initial_backup: usize,
    /// Fraction of a cell's CPEs additionally assigned out-of-band sensing.
    pub obs_fraction: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub disallowed: Vec<DisallowedSpec>,
}

impl Default for ChannelMgmtConfig {
    fn default() -> Self {
        Self {
            moving_time: 2.0,
            promotion_idle: 30.0,
            max_sensing_gap: 6.0,
            target_operating: 1,
            initial_backup: 1,
            obs_fraction: 0.3,
            disallowed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClockConfig {
    /// Frame length in seconds.
    pub frame_len: f64,
    /// Frames between intra-frame quiet periods on an operating channel.
    pub intra_qp_period: u64,
    /// Frames between out-of-band sensings of a tracked channel.
    pub obs_period: u64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        Self {
            frame_len: 0.01,
            intra_qp_period: 2,
            obs_period: 16,
        }
    }
}

impl ClockConfig {
    pub fn superframe_len(&self) -> f64 {
        self.frame_len * FRAMES_PER_SUPERFRAME as f64
    }

    pub fn frames_for(&self, seconds: f64) -> u64 {
        (seconds / self.frame_len).round().max(0.0) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatabaseConfig {
    /// Probability that a reading is flipped.
    pub error_prob: f64,
    /// Age of the database information in seconds.
    pub staleness: f64,
}

impl Default for DatabaseConfig {
    fn default() -> Self {
        Self {
            error_prob: 0.05,
            staleness: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chi2Mode {
    Counts,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Window length ν in quiet periods.
    pub window: usize,
    pub limit_md: f64,
    pub limit_fa: f64,
    /// Use the false-alarm estimator exactly as printed (mean of D·Z).
    pub literal_eq13: bool,
    pub chi2_mode: Chi2Mode,
    /// Superframes excluded from metrics while classifiers and confidences settle.
    pub warmup_superframes: u64,
    /// Full matrices are kept every this many superframes.
    pub matrix_snapshot_every: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            window: 200,
            limit_md: 0.1,
            limit_fa: 0.1,
            literal_eq13: false,
            chi2_mode: Chi2Mode::Counts,
            warmup_superframes: 20,
            matrix_snapshot_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Keep the per-QP decision trace.
    pub trace: bool,
    /// Also export Z for every (QP, cell, channel).
    pub z_trace: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trace: true,
            z_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// Always reports the complement of the factual status.
    Inverted,
    StuckBusy,
    StuckIdle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// One-based cell number.
    pub cell: usize,
    /// One-based CPE number within the cell.
    pub cpe: usize,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    TxSnrDb,
    Iar,
    Iaf,
    ErrorProb,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepVariable::TxSnrDb => "tx_snr_db",
            SweepVariable::Iar => "iar",
            SweepVariable::Iaf => "iaf",
            SweepVariable::ErrorProb => "error_prob",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default = "SweepSpec::default_seeds")]
    pub seeds_per_point: usize,
    #[serde(default = "SweepSpec::default_rules")]
    pub rules: Vec<Rule>,
}

impl SweepSpec {
    fn default_seeds() -> usize {
        20
    }

    fn default_rules() -> Vec<Rule> {
        vec![Rule::McLds, Rule::And, Rule::Or, Rule::Voting]
    }

    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        if self.values.is_empty() {
            issues.push(ConfigIssue::new("sweep.values", "must not be empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            issues.push(ConfigIssue::new("sweep.values", "must be finite"));
        }
        if self.seeds_per_point == 0 {
            issues.push(ConfigIssue::new("sweep.seeds_per_point", "must be at least 1"));
        }
        if self.rules.is_empty() {
            issues.push(ConfigIssue::new("sweep.rules", "must name at least one rule"));
        }
        issues
    }
}

/// A single validation failure, addressed by dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{message}", location(path))]
    Parse {
        path: Option<PathBuf>,
        message: String,
    },
    #[error("invalid configuration:\n{}", render_issues(.0))]
    Invalid(Vec<ConfigIssue>),
    #[error("cannot serialize configuration: {0}")]
    Serialize(String),
}

fn location(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

fn render_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ScenarioConfig {
    /// Minimal scenario with every other field at its default.
    pub fn new(num_cells: usize, num_channels: usize, seed: u64) -> Self {
        Self {
            num_cells,
            num_channels,
            seed,
            horizon: defaults::horizon(),
            topology: TopologyConfig::default(),
            incumbents: IncumbentConfig::default(),
            activity: ActivityDefaults::default(),
            radio: RadioConfig::default(),
            classifier: ClassifierConfig::default(),
            fusion: FusionConfig::default(),
            channels: ChannelMgmtConfig::default(),
            clock: ClockConfig::default(),
            database: DatabaseConfig::default(),
            metrics: MetricsConfig::default(),
            output: OutputConfig::default(),
            faults: Vec::new(),
            sweep: None,
        }
    }

    /// Parses, resolves derived defaults and validates.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse_inner(text, None)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_inner(&text, Some(path.to_path_buf()))
    }

    fn parse_inner(text: &str, path: Option<PathBuf>) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path,
            message: e.to_string(),
        })?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills defaults that depend on other fields so that a dump records them.
    pub fn resolve(&mut self) {
        if self.radio.detection_threshold.is_none() {
            self.radio.detection_threshold = Some(default_threshold(
                self.radio.samples_per_sensing,
                self.radio.noise_power,
            ));
        }
        if !self.fusion.rules.contains(&self.fusion.driving_rule) {
            self.fusion.rules.push(self.fusion.driving_rule);
        }
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    /// Activity parameters of one channel.
    pub fn activity_for(&self, channel: ChannelId) -> ActivityConfig {
        let a = &self.activity;
        a.overrides
            .iter()
            .rev()
            .find(|o| o.channel == channel)
            .map(|o| ActivityConfig::new(o.mean_on, o.mean_off, o.burstiness))
            .unwrap_or_else(|| ActivityConfig::new(a.mean_on, a.mean_off, a.burstiness))
    }

    /// Disallowed channels of a zero-based cell.
    pub fn disallowed_for(&self, cell: usize) -> Vec<ChannelId> {
        let mut out: Vec<ChannelId> = self
            .channels
            .disallowed
            .iter()
            .filter(|d| d.cell == cell + 1)
            .flat_map(|d| d.channels.iter().copied())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Sets one swept variable. IAR sweeps keep the alteration frequency and
    /// IAF sweeps keep the activity ratio of every channel.
    pub fn apply_sweep_value(&mut self, variable: SweepVariable, value: f64) {
        match variable {
            SweepVariable::TxSnrDb => self.radio.tx_snr_db = value,
            SweepVariable::ErrorProb => self.database.error_prob = value,
            SweepVariable::Iar | SweepVariable::Iaf => {
                let retune = |on: &mut f64, off: &mut f64| {
                    let (iar, iaf) = match variable {
                        SweepVariable::Iar => (value, 1.0 / (*on + *off)),
                        _ => (*on / *off, value),
                    };
                    let cycle = 1.0 / iaf;
                    *on = cycle * iar / (1.0 + iar);
                    *off = cycle / (1.0 + iar);
                };
                retune(&mut self.activity.mean_on, &mut self.activity.mean_off);
                for o in &mut self.activity.overrides {
                    retune(&mut o.mean_on, &mut o.mean_off);
                }
            }
        }
    }

    /// Checks every invariant and reports all failures at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                v.push(ConfigIssue::new(field, msg));
            }
        };
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let prob = |x: f64| (0.0..=1.0).contains(&x);

        check(self.num_cells >= 1, "num_cells", "must be at least 1".into());
        check(self.num_channels >= 1, "num_channels", "must be at least 1".into());
        check(
            self.num_channels <= usize::from(u16::MAX),
            "num_channels",
            "too many channels".into(),
        );
        check(
            self.seed <= i64::MAX as u64,
            "seed",
            "must fit in 63 bits".into(),
        );

        let t = &self.topology;
        check(positive(t.cell_radius), "topology.cell_radius", format!("must be > 0, got {}", t.cell_radius));
        check(t.cpes_per_cell >= 1, "topology.cpes_per_cell", "must be at least 1".into());
        check(t.cpes_per_cell < usize::from(u16::MAX), "topology.cpes_per_cell", "too many CPEs".into());

        let inc = &self.incumbents;
        if inc.stations.is_empty() {
            check(
                positive(inc.coverage_radius_min) && inc.coverage_radius_max >= inc.coverage_radius_min,
                "incumbents.coverage_radius_min",
                "need 0 < coverage_radius_min <= coverage_radius_max".into(),
            );
            check(inc.placement_margin >= 0.0, "incumbents.placement_margin", "must be >= 0".into());
        }
        for (i, s) in inc.stations.iter().enumerate() {
            check(
                s.channel.0 >= 1 && usize::from(s.channel.0) <= self.num_channels,
                &format!("incumbents.stations[{i}].channel"),
                format!("{} outside CH1..=CH{}", s.channel, self.num_channels),
            );
            check(
                positive(s.coverage_radius),
                &format!("incumbents.stations[{i}].coverage_radius"),
                "must be > 0".into(),
            );
            if let Some(p) = s.tx_power {
                check(p >= 0.0 && p.is_finite(), &format!("incumbents.stations[{i}].tx_power"), "must be >= 0".into());
            }
        }

        let act = &self.activity;
        let check_activity = |v: &mut Vec<ConfigIssue>, field: &str, on: f64, off: f64, burst: f64| {
            if !(positive(on) && positive(off)) {
                v.push(ConfigIssue::new(field, format!("mean_on and mean_off must be > 0 (IAR and IAF > 0), got {on} / {off}")));
            }
            if !prob(burst) {
                v.push(ConfigIssue::new(field, format!("burstiness must lie in [0, 1], got {burst}")));
            }
        };
        check_activity(&mut v, "activity", act.mean_on, act.mean_off, act.burstiness);
        for (i, o) in act.overrides.iter().enumerate() {
            check_activity(&mut v, &format!("activity.overrides[{i}]"), o.mean_on, o.mean_off, o.burstiness);
            if o.channel.0 < 1 || usize::from(o.channel.0) > self.num_channels {
                v.push(ConfigIssue::new(format!("activity.overrides[{i}].channel"), "channel out of range"));
            }
        }

        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                v.push(ConfigIssue::new(field, msg));
            }
        };
        let r = &self.radio;
        check(positive(r.noise_power), "radio.noise_power", "S_N must be > 0".into());
        check(positive(r.path_loss_exponent), "radio.path_loss_exponent", "must be > 0".into());
        check(positive(r.reference_distance), "radio.reference_distance", "must be > 0".into());
        check(r.shadowing_sigma_db >= 0.0, "radio.shadowing_sigma_db", "must be >= 0".into());
        check(r.shadowing_corr_distance >= 0.0, "radio.shadowing_corr_distance", "must be >= 0".into());
        check(r.slow_fading_hold >= 1, "radio.slow_fading_hold", "must be at least 1 frame".into());
        check(r.samples_per_sensing >= 1, "radio.samples_per_sensing", "M must be at least 1".into());
        check(
            r.detection_threshold.is_none_or(positive),
            "radio.detection_threshold",
            "λ must be > 0".into(),
        );
        check(r.tx_snr_db.is_finite(), "radio.tx_snr_db", "must be finite".into());
        check(r.cpe_tx_snr_db.is_finite(), "radio.cpe_tx_snr_db", "must be finite".into());
        check(!r.report_threshold_db.is_nan(), "radio.report_threshold_db", "must not be NaN".into());

        let c = &self.classifier;
        check(c.ridge >= 0.0, "classifier.ridge", "must be >= 0".into());
        check(positive(c.tol), "classifier.tol", "must be > 0".into());
        check(c.max_iter >= 1, "classifier.max_iter", "must be at least 1".into());
        check(c.train_size >= 2, "classifier.train_size", "must be at least 2".into());
        check(c.test_size >= 2, "classifier.test_size", "must be at least 2".into());
        check(
            c.min_train >= 2 && c.min_train <= c.train_size,
            "classifier.min_train",
            "need 2 <= min_train <= train_size".into(),
        );
        check(c.refit_every >= 1, "classifier.refit_every", "must be at least 1".into());
        check(c.refit_error_factor >= 1.0, "classifier.refit_error_factor", "must be >= 1".into());
        check(prob(c.refit_error_floor), "classifier.refit_error_floor", "must lie in [0, 1]".into());
        check(c.refit_min_gap >= 1, "classifier.refit_min_gap", "must be at least 1".into());
        check(
            c.prior_h0.is_none_or(prob),
            "classifier.prior_h0",
            "must lie in [0, 1]".into(),
        );

        let f = &self.fusion;
        check(
            f.gamma > 0.0 && f.gamma < f.zeta && f.zeta.is_finite(),
            "fusion.gamma",
            format!("reward-penalty scores need 0 < γ < ζ, got γ={} ζ={}", f.gamma, f.zeta),
        );
        check(
            f.alpha > 0.0 && f.alpha < 1.0,
            "fusion.alpha",
            format!("temporal discount needs 0 < α < 1, got {}", f.alpha),
        );
        check(f.historic_count >= 1, "fusion.historic_count", "N must be at least 1".into());
        if let Err(e) = crate::fusion::validate_adaptive(&f.adaptive) {
            check(false, "fusion.adaptive", e.to_string());
        }
        check(!f.rules.is_empty(), "fusion.rules", "must name at least one rule".into());
        check(f.voting_quorum.is_none_or(|q| q >= 1), "fusion.voting_quorum", "must be at least 1".into());

        let ch = &self.channels;
        check(ch.moving_time > 0.0, "channels.moving_time", "must be > 0".into());
        check(ch.promotion_idle >= 0.0, "channels.promotion_idle", "must be >= 0".into());
        check(positive(ch.max_sensing_gap), "channels.max_sensing_gap", "must be > 0".into());
        check(prob(ch.obs_fraction), "channels.obs_fraction", "must lie in [0, 1]".into());
        for (i, d) in ch.disallowed.iter().enumerate() {
            check(
                d.cell >= 1 && d.cell <= self.num_cells,
                &format!("channels.disallowed[{i}].cell"),
                format!("cell {} outside 1..={}", d.cell, self.num_cells),
            );
            check(
                d.channels.iter().all(|c| c.0 >= 1 && usize::from(c.0) <= self.num_channels),
                &format!("channels.disallowed[{i}].channels"),
                "channel out of range".into(),
            );
        }

        let k = &self.clock;
        check(positive(k.frame_len), "clock.frame_len", "must be > 0".into());
        check(
            (1..=FRAMES_PER_SUPERFRAME).contains(&k.intra_qp_period),
            "clock.intra_qp_period",
            "must lie in 1..=16 frames".into(),
        );
        check(k.obs_period >= 1, "clock.obs_period", "must be at least 1 frame".into());
        check(
            ch.max_sensing_gap >= k.obs_period as f64 * k.frame_len,
            "clock.obs_period",
            "out-of-band sensing period exceeds channels.max_sensing_gap; no channel could ever be promoted".into(),
        );

        let d = &self.database;
        check(prob(d.error_prob), "database.error_prob", "must lie in [0, 1]".into());
        check(d.staleness >= 0.0 && d.staleness.is_finite(), "database.staleness", "must be >= 0".into());

        let m = &self.metrics;
        check(m.window >= 1, "metrics.window", "ν must be at least 1".into());
        check(prob(m.limit_md), "metrics.limit_md", "must lie in [0, 1]".into());
        check(prob(m.limit_fa), "metrics.limit_fa", "must lie in [0, 1]".into());
        check(m.matrix_snapshot_every >= 1, "metrics.matrix_snapshot_every", "must be at least 1".into());

        for (i, fault) in self.faults.iter().enumerate() {
            check(
                fault.cell >= 1 && fault.cell <= self.num_cells,
                &format!("faults[{i}].cell"),
                "cell out of range".into(),
            );
            check(
                fault.cpe >= 1 && fault.cpe <= t.cpes_per_cell,
                &format!("faults[{i}].cpe"),
                "CPE out of range".into(),
            );
        }

        if let Some(s) = &self.sweep {
            v.extend(s.validate());
        }
        v
    }
}
