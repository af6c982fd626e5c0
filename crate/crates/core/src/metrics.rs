//! Windowed performance estimates: false-alarm, misdetection and discovery
//! rates, the Pearson statistic, φ correlation and the network-wide
//! correlation factor (NWCF).

use std::collections::VecDeque;

use crate::config::Chi2Mode;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("metrics window is empty")]
    EmptyWindow,
    #[error("Pearson statistic undefined: no category has a positive expected count")]
    Undefined,
    #[error("every matrix entry is NA")]
    AllNA,
}

/// One observation: central decision, factual status, database reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub d: bool,
    pub z: bool,
    pub r: bool,
}

/// Ring buffer of the latest `ν` observations with running confusion counts.
#[derive(Debug, Clone)]
pub struct MetricsWindow {
    cap: usize,
    buf: VecDeque<Observation>,
    /// Indexed by `2·D + Z`.
    counts: [usize; 4],
}

fn cell(d: bool, z: bool) -> usize {
    2 * usize::from(d) + usize::from(z)
}

impl MetricsWindow {
    pub fn new(nu: usize) -> Self {
        Self {
            cap: nu.max(1),
            buf: VecDeque::with_capacity(nu.max(1)),
            counts: [0; 4],
        }
    }

    pub fn from_streams(nu: usize, d: &[bool], z: &[bool]) -> Self {
        let mut w = Self::new(nu);
        for (&d, &z) in d.iter().zip(z) {
            w.push(Observation { d, z, r: z });
        }
        w
    }

    pub fn push(&mut self, obs: Observation) {
        if self.buf.len() == self.cap {
            if let Some(old) = self.buf.pop_front() {
                self.counts[cell(old.d, old.z)] -= 1;
            }
        }
        self.counts[cell(obs.d, obs.z)] += 1;
        self.buf.push_back(obs);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.cap
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.buf.iter()
    }

    /// `n[D][Z]` over the window.
    pub fn confusion(&self) -> [[usize; 2]; 2] {
        [[self.counts[0], self.counts[1]], [self.counts[2], self.counts[3]]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub p_fa: f64,
    pub p_md: f64,
    pub p_sd: f64,
}

/// `p_md = mean(¬D·Z)`, `p_sd = mean(D⊙Z)` and `p_fa = mean(D·¬Z)`, or
/// `mean(D·Z)` when `literal_fa` is set.
pub fn window_rates(w: &MetricsWindow, literal_fa: bool) -> Result<Rates, MetricsError> {
    if w.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let n = w.len() as f64;
    let c = w.confusion();
    let fa = if literal_fa { c[1][1] } else { c[1][0] };
    Ok(Rates {
        p_fa: fa as f64 / n,
        p_md: c[0][1] as f64 / n,
        p_sd: (c[1][1] + c[0][0]) as f64 / n,
    })
}

pub fn pearson_chi2(w: &MetricsWindow, mode: Chi2Mode) -> Result<f64, MetricsError> {
    if w.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let c = w.confusion();
    match mode {
        Chi2Mode::Counts => {
            let observed = [c[0][0] + c[0][1], c[1][0] + c[1][1]];
            let expected = [c[0][0] + c[1][0], c[0][1] + c[1][1]];
            let mut chi2 = 0.0;
            let mut any = false;
            for (o, e) in observed.into_iter().zip(expected) {
                if e > 0 {
                    any = true;
                    let diff = o as f64 - e as f64;
                    chi2 += diff * diff / e as f64;
                }
            }
            if any {
                Ok(chi2)
            } else {
                Err(MetricsError::Undefined)
            }
        }
        Chi2Mode::Literal => {
            if c[0][1] + c[1][1] == 0 {
                Err(MetricsError::Undefined)
            } else {
                Ok(c[0][1] as f64)
            }
        }
    }
}

/// φ coefficient between `D` and `Z`. A window where either stream is
/// constant gives 1 when the streams are identical and 0 otherwise.
pub fn phi(w: &MetricsWindow) -> Result<f64, MetricsError> {
    if w.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let c = w.confusion();
    let (n00, n01, n10, n11) = (c[0][0] as f64, c[0][1] as f64, c[1][0] as f64, c[1][1] as f64);
    let d1 = n10 + n11;
    let d0 = n00 + n01;
    let z1 = n01 + n11;
    let z0 = n00 + n10;
    if d1 == 0.0 || d0 == 0.0 || z1 == 0.0 || z0 == 0.0 {
        return Ok(if n01 == 0.0 && n10 == 0.0 { 1.0 } else { 0.0 });
    }
    let v = (n11 * n00 - n10 * n01) / (d1 * d0 * z1 * z0).sqrt();
    Ok(v.clamp(-1.0, 1.0))
}

/// Sample-count weighted mean of the defined entries.
pub fn nwcf(entries: impl IntoIterator<Item = Option<(f64, usize)>>) -> Result<f64, MetricsError> {
    let (mut num, mut den) = (0.0, 0usize);
    let mut seen = false;
    for (c, n) in entries.into_iter().flatten() {
        seen = true;
        num += c * n as f64;
        den += n;
    }
    if !seen || den == 0 {
        return Err(MetricsError::AllNA);
    }
    Ok(num / den as f64)
}

/// The five-element performance vector of one (cell, channel) stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfVector {
    pub corr: f64,
    pub p_sd: f64,
    pub p_md: f64,
    pub p_fa: f64,
    pub chi2: Option<f64>,
    pub samples: usize,
}

pub fn perf_vector(w: &MetricsWindow, literal_fa: bool, mode: Chi2Mode) -> Result<PerfVector, MetricsError> {
    let r = window_rates(w, literal_fa)?;
    Ok(PerfVector {
        corr: phi(w)?,
        p_sd: r.p_sd,
        p_md: r.p_md,
        p_fa: r.p_fa,
        chi2: pearson_chi2(w, mode).ok(),
        samples: w.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub misdetection: bool,
    pub false_alarm: bool,
}

impl Flags {
    pub fn any(self) -> bool {
        self.misdetection || self.false_alarm
    }
}

/// Strict comparison against the limits.
pub fn check_thresholds(p_md: f64, p_fa: f64, limit_md: f64, limit_fa: f64) -> Flags {
    Flags {
        misdetection: p_md > limit_md,
        false_alarm: p_fa > limit_fa,
    }
}
