//! Incumbent ON/OFF activity and the factual channel status `Z`.
//!
//! Each station runs an independent alternating renewal process. Sojourns are
//! drawn exponential (memoryless) or Pareto with shape 1.5 (bursty), mixed by
//! the channel's burstiness, and quantized to whole frames.

use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};

use crate::model::{CellId, ChannelId, SeedTree, Stream, Topology};

const PARETO_SHAPE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityConfig {
    pub mean_on: f64,
    pub mean_off: f64,
    pub burstiness: f64,
}

impl ActivityConfig {
    pub fn new(mean_on: f64, mean_off: f64, burstiness: f64) -> Self {
        Self {
            mean_on,
            mean_off,
            burstiness,
        }
    }

    /// Build from the activity ratio and alteration frequency.
    pub fn from_rates(iar: f64, iaf: f64, burstiness: f64) -> Self {
        let cycle = 1.0 / iaf;
        Self::new(cycle * iar / (1.0 + iar), cycle / (1.0 + iar), burstiness)
    }

    /// IAR = ON / OFF.
    pub fn iar(&self) -> f64 {
        self.mean_on / self.mean_off
    }

    /// IAF = 1 / (ON + OFF).
    pub fn iaf(&self) -> f64 {
        1.0 / (self.mean_on + self.mean_off)
    }

    /// Long-run fraction of time spent ON.
    pub fn busy_fraction(&self) -> f64 {
        self.mean_on / (self.mean_on + self.mean_off)
    }
}

/// One sojourn with the given mean. Pareto draws use `x_m = mean/3`, which
/// matches the mean for shape 1.5.
pub fn draw_sojourn<R: Rng + ?Sized>(rng: &mut R, mean: f64, burstiness: f64) -> f64 {
    let bursty = burstiness > 0.0 && rng.random::<f64>() < burstiness;
    if bursty {
        let scale = mean * (PARETO_SHAPE - 1.0) / PARETO_SHAPE;
        Pareto::new(scale, PARETO_SHAPE)
            .expect("positive scale and shape")
            .sample(rng)
    } else {
        Exp::new(1.0 / mean).expect("positive mean").sample(rng)
    }
}

/// Continuous-time ON/OFF process.
#[derive(Debug, Clone)]
pub struct OnOffProcess {
    cfg: ActivityConfig,
    on: bool,
    remaining: f64,
}

impl OnOffProcess {
    /// Starts in the stationary ON probability with a fresh sojourn.
    pub fn new<R: Rng + ?Sized>(cfg: ActivityConfig, rng: &mut R) -> Self {
        let on = rng.random::<f64>() < cfg.busy_fraction();
        let mean = if on { cfg.mean_on } else { cfg.mean_off };
        let remaining = draw_sojourn(rng, mean, cfg.burstiness);
        Self { cfg, on, remaining }
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    /// Advances by `elapsed` seconds and returns the `(on, duration)` segments
    /// covering that span, in order.
    pub fn step<R: Rng + ?Sized>(&mut self, elapsed: f64, rng: &mut R) -> Vec<(bool, f64)> {
        let mut out = Vec::new();
        let mut left = elapsed;
        while left > 0.0 {
            if self.remaining > left {
                out.push((self.on, left));
                self.remaining -= left;
                break;
            }
            out.push((self.on, self.remaining));
            left -= self.remaining;
            self.on = !self.on;
            let mean = if self.on { self.cfg.mean_on } else { self.cfg.mean_off };
            self.remaining = draw_sojourn(rng, mean, self.cfg.burstiness);
        }
        out
    }
}

/// Frame-quantized timeline: entry `f` is true when the station is ON in frame `f`.
pub fn frame_timeline<R: Rng + ?Sized>(
    cfg: ActivityConfig,
    frames: usize,
    frame_len: f64,
    rng: &mut R,
) -> Vec<bool> {
    let mut out = Vec::with_capacity(frames);
    let mut on = rng.random::<f64>() < cfg.busy_fraction();
    while out.len() < frames {
        let mean = if on { cfg.mean_on } else { cfg.mean_off };
        let len = (draw_sojourn(rng, mean, cfg.burstiness) / frame_len).round().max(1.0);
        let len = (len as usize).min(frames - out.len());
        out.extend(std::iter::repeat_n(on, len));
        on = !on;
    }
    out
}

/// Activity of every incumbent over the whole horizon plus the coverage map.
#[derive(Debug, Clone)]
pub struct IncumbentActivity {
    channels: Vec<ChannelId>,
    /// Prefix sums of ON frames per station.
    on_prefix: Vec<Vec<u32>>,
    /// Per cell, per channel index: stations whose footprint covers the cell.
    covering: Vec<Vec<Vec<usize>>>,
    /// Per channel index: every station on that channel.
    by_channel: Vec<Vec<usize>>,
    frames: u64,
}

impl IncumbentActivity {
    pub fn generate(
        topo: &Topology,
        num_channels: usize,
        activity: impl Fn(ChannelId) -> ActivityConfig,
        frames: u64,
        frame_len: f64,
        seeds: &SeedTree,
    ) -> Self {
        let timelines: Vec<Vec<bool>> = topo
            .incumbents
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let mut rng = seeds.keyed(Stream::Activity, &[i as u64]);
                frame_timeline(activity(st.channel), frames as usize, frame_len, &mut rng)
            })
            .collect();
        Self::from_timelines(topo, num_channels, timelines)
    }

    /// Wraps explicit per-station timelines (all of equal length).
    pub fn from_timelines(topo: &Topology, num_channels: usize, timelines: Vec<Vec<bool>>) -> Self {
        let frames = timelines.first().map_or(0, |t| t.len() as u64);
        let on_prefix = timelines
            .iter()
            .map(|t| {
                let mut p = Vec::with_capacity(t.len() + 1);
                let mut acc = 0u32;
                p.push(0);
                for &b in t {
                    acc += u32::from(b);
                    p.push(acc);
                }
                p
            })
            .collect();
        let mut by_channel = vec![Vec::new(); num_channels];
        for (i, st) in topo.incumbents.iter().enumerate() {
            by_channel[st.channel.index()].push(i);
        }
        let covering = topo
            .cells
            .iter()
            .map(|cell| {
                by_channel
                    .iter()
                    .map(|stations| {
                        stations
                            .iter()
                            .copied()
                            .filter(|&i| topo.covers(&topo.incumbents[i], cell.id))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            channels: topo.incumbents.iter().map(|s| s.channel).collect(),
            on_prefix,
            covering,
            by_channel,
            frames,
        }
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn num_stations(&self) -> usize {
        self.channels.len()
    }

    fn clamp(&self, frame: i64) -> usize {
        frame.clamp(0, self.frames as i64) as usize
    }

    /// Whether station `i` is ON at any time in frames `[start, start+len)`.
    /// Frames before 0 are treated as frame 0.
    pub fn on_during(&self, i: usize, start: i64, len: u64) -> bool {
        let a = self.clamp(start);
        let b = self.clamp(start + len.max(1) as i64).max((a + 1).min(self.frames as usize));
        let p = &self.on_prefix[i];
        p[b] > p[a]
    }

    pub fn on_at(&self, i: usize, frame: i64) -> bool {
        self.on_during(i, frame, 1)
    }

    /// Factual status `Z_{j,k}` over a quiet period.
    pub fn z(&self, cell: CellId, ch: ChannelId, start: i64, len: u64) -> bool {
        self.covering[cell.0][ch.index()]
            .iter()
            .any(|&i| self.on_during(i, start, len))
    }

    /// Stations on `ch` that are ON during the period, wherever they are.
    pub fn active_on(&self, ch: ChannelId, start: i64, len: u64) -> Vec<usize> {
        self.by_channel[ch.index()]
            .iter()
            .copied()
            .filter(|&i| self.on_during(i, start, len))
            .collect()
    }

    pub fn covering(&self, cell: CellId, ch: ChannelId) -> &[usize] {
        &self.covering[cell.0][ch.index()]
    }

    /// `Z` for every (cell, channel) over one period, indexed `[cell][channel]`.
    pub fn ground_truth(&self, start: i64, len: u64) -> Vec<Vec<bool>> {
        (0..self.covering.len())
            .map(|j| {
                (0..self.by_channel.len())
                    .map(|k| self.z(CellId(j), ChannelId::from_index(k), start, len))
                    .collect()
            })
            .collect()
    }
}
