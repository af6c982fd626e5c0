//! Per-sensor binarization of sensed power with a logistic predictor.
//!
//! `P(busy | S) = σ(θ0 + θ1·S)` is fitted by maximum likelihood. The decision
//! region is `[σ⁻¹(p), ∞)` where `p` is the marginal probability that the raw
//! energy detector fires, obtained from its false-alarm and misdetection
//! rates and the idle prior.

use std::collections::VecDeque;

use crate::config::{ClassifierConfig, RateSource};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClassifierError {
    #[error("samples carry a single label; both busy and idle examples are needed")]
    DegenerateLabels,
    #[error("no sample set to work on")]
    Empty,
    #[error("maximum likelihood fit did not converge in {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },
    #[error("predictor is flat or decreasing (θ1 = {theta1}); use the raw threshold")]
    FlatPredictor { theta1: f64 },
    #[error("target probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub theta0: f64,
    pub theta1: f64,
}

impl LogisticParams {
    pub const fn new(theta0: f64, theta1: f64) -> Self {
        Self { theta0, theta1 }
    }

    /// `-θ0/θ1`, where the predicted busy probability is one half.
    pub fn midpoint(&self) -> f64 {
        -self.theta0 / self.theta1
    }
}

/// One labelled observation `(S, d)`.
pub type Sample = (f64, bool);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRegion {
    pub lower_bound: f64,
}

pub fn sigmoid(s: f64, theta: LogisticParams) -> f64 {
    let u = theta.theta0 + theta.theta1 * s;
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Penalized log-likelihood `Σ d·ln σ + (1-d)·ln(1-σ) - ridge·‖θ‖²`.
pub fn log_likelihood(theta: LogisticParams, data: &[Sample], ridge: f64) -> f64 {
    let ll: f64 = data
        .iter()
        .map(|&(s, d)| {
            let u = theta.theta0 + theta.theta1 * s;
            if d {
                -softplus(-u)
            } else {
                -softplus(u)
            }
        })
        .sum();
    ll - ridge * (theta.theta0 * theta.theta0 + theta.theta1 * theta.theta1)
}

/// Gradient of [`log_likelihood`] with respect to `(θ0, θ1)`.
pub fn log_likelihood_gradient(theta: LogisticParams, data: &[Sample], ridge: f64) -> [f64; 2] {
    let mut g = [-2.0 * ridge * theta.theta0, -2.0 * ridge * theta.theta1];
    for &(s, d) in data {
        let r = f64::from(u8::from(d)) - sigmoid(s, theta);
        g[0] += r;
        g[1] += r * s;
    }
    g
}

fn has_both_labels(data: &[Sample]) -> bool {
    data.iter().any(|s| s.1) && data.iter().any(|s| !s.1)
}

/// Maximum-likelihood fit by damped Newton iterations.
///
/// Powers are standardized before fitting and the ridge penalty acts on the
/// standardized parameters, so the fit is invariant to the unit of `S`.
pub fn fit_mle(
    data: &[Sample],
    ridge: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LogisticParams, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if !has_both_labels(data) {
        return Err(ClassifierError::DegenerateLabels);
    }
    let n = data.len() as f64;
    let mu = data.iter().map(|s| s.0).sum::<f64>() / n;
    let var = data.iter().map(|s| (s.0 - mu).powi(2)).sum::<f64>() / n;
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    let z: Vec<Sample> = data.iter().map(|&(s, d)| ((s - mu) / sd, d)).collect();

    let mut phi = LogisticParams::new(0.0, 0.0);
    let mut obj = log_likelihood(phi, &z, ridge);
    let mut grad = log_likelihood_gradient(phi, &z, ridge);
    let mut iterations = 0;
    while grad[0].hypot(grad[1]) > tol {
        if iterations == max_iter {
            return Err(ClassifierError::NotConverged {
                iterations,
                gradient_norm: grad[0].hypot(grad[1]),
            });
        }
        iterations += 1;
        // negative Hessian (positive semi-definite)
        let (mut a, mut b, mut c) = (2.0 * ridge, 0.0, 2.0 * ridge);
        for &(x, _) in &z {
            let p = sigmoid(x, phi);
            let w = p * (1.0 - p);
            a += w;
            b += w * x;
            c += w * x * x;
        }
        let mut det = a * c - b * b;
        if det <= 1e-14 * (a * c).max(1e-300) {
            let jitter = 1e-8 * (a + c).max(1e-8);
            a += jitter;
            c += jitter;
            det = a * c - b * b;
        }
        let step = [(c * grad[0] - b * grad[1]) / det, (a * grad[1] - b * grad[0]) / det];
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = LogisticParams::new(phi.theta0 + t * step[0], phi.theta1 + t * step[1]);
            let cand_obj = log_likelihood(cand, &z, ridge);
            if cand_obj >= obj - 1e-12 * obj.abs().max(1.0) {
                phi = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        grad = log_likelihood_gradient(phi, &z, ridge);
        if !accepted {
            return Err(ClassifierError::NotConverged {
                iterations,
                gradient_norm: grad[0].hypot(grad[1]),
            });
        }
    }
    Ok(LogisticParams::new(
        phi.theta0 - phi.theta1 * mu / sd,
        phi.theta1 / sd,
    ))
}

/// Marginal probability that the raw detector declares busy:
/// `1 - P_MD + Pr(H0)·(P_FA + P_MD - 1)`.
pub fn busy_probability(p_md: f64, p_fa: f64, prior_h0: f64) -> f64 {
    1.0 - p_md + prior_h0 * (p_fa + p_md - 1.0)
}

pub fn decision_region(theta: LogisticParams, p: f64) -> Result<DecisionRegion, ClassifierError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ClassifierError::ProbabilityOutOfRange(p));
    }
    if !(theta.theta1 > 0.0) {
        return Err(ClassifierError::FlatPredictor { theta1: theta.theta1 });
    }
    Ok(DecisionRegion {
        lower_bound: (logit(p) - theta.theta0) / theta.theta1,
    })
}

/// `d = 1` iff `S` lies in the closed region.
pub fn binarize(s: f64, region: DecisionRegion) -> bool {
    s >= region.lower_bound
}

/// `(P_FA, P_MD)` of the region on a labelled test set.
pub fn empirical_rates(region: DecisionRegion, test: &[Sample]) -> Result<(f64, f64), ClassifierError> {
    let (mut n0, mut n1, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for &(s, d) in test {
        let decided = binarize(s, region);
        if d {
            n1 += 1;
            fn_ += usize::from(!decided);
        } else {
            n0 += 1;
            fp += usize::from(decided);
        }
    }
    if n0 == 0 || n1 == 0 {
        return Err(ClassifierError::DegenerateLabels);
    }
    Ok((fp as f64 / n0 as f64, fn_ as f64 / n1 as f64))
}

/// Fraction of misclassified samples.
pub fn error_rate(region: DecisionRegion, test: &[Sample]) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let wrong = test.iter().filter(|&&(s, d)| binarize(s, region) != d).count();
    wrong as f64 / test.len() as f64
}

const P_CLAMP: f64 = 1e-6;
const PRIOR_WINDOW: usize = 200;

/// Online classifier of one sensor on one channel.
///
/// Labelled sensings alternate between a training buffer and a disjoint test
/// buffer. The MLE is re-solved only on schedule or when the test error has
/// grown, never on every sensing.
#[derive(Debug, Clone)]
pub struct SensorClassifier {
    threshold: f64,
    samples: u32,
    train: VecDeque<Sample>,
    test: VecDeque<Sample>,
    next_to_test: bool,
    readings: VecDeque<bool>,
    busy_readings: usize,
    params: Option<LogisticParams>,
    region: Option<DecisionRegion>,
    since_fit: u64,
    error_at_fit: f64,
    fits: u64,
}

impl SensorClassifier {
    /// `threshold` is the raw energy threshold λ for one intra-frame sensing
    /// of `samples` samples.
    pub fn new(threshold: f64, samples: u32) -> Self {
        Self {
            threshold,
            samples,
            train: VecDeque::new(),
            test: VecDeque::new(),
            next_to_test: false,
            readings: VecDeque::new(),
            busy_readings: 0,
            params: None,
            region: None,
            since_fit: 0,
            error_at_fit: 0.0,
            fits: 0,
        }
    }

    pub fn params(&self) -> Option<LogisticParams> {
        self.params
    }

    /// Active region; the raw threshold until the first usable fit.
    pub fn region(&self) -> DecisionRegion {
        self.region.unwrap_or(DecisionRegion {
            lower_bound: self.threshold,
        })
    }

    pub fn fits(&self) -> u64 {
        self.fits
    }

    /// Local decision for a sensing whose sample count is `scale` times the
    /// intra-frame count.
    pub fn decide(&self, s: f64, scale: f64) -> bool {
        s >= self.region().lower_bound * scale
    }

    /// Rolling idle prior from the database readings seen so far.
    pub fn prior_h0(&self, cfg: &ClassifierConfig) -> f64 {
        if let Some(p) = cfg.prior_h0 {
            return p;
        }
        if self.readings.is_empty() {
            return 0.5;
        }
        1.0 - self.busy_readings as f64 / self.readings.len() as f64
    }

    fn push_reading(&mut self, r: bool) {
        if self.readings.len() == PRIOR_WINDOW
            && self.readings.pop_front() == Some(true) {
                self.busy_readings -= 1;
            }
        self.readings.push_back(r);
        self.busy_readings += usize::from(r);
    }

    /// Records one intra-frame sensing with its training label and the
    /// database reading, refitting when due. Returns whether a fit ran.
    pub fn observe(&mut self, s: f64, label: bool, reading: bool, cfg: &ClassifierConfig) -> bool {
        self.push_reading(reading);
        let (buf, cap) = if self.next_to_test {
            (&mut self.test, cfg.test_size)
        } else {
            (&mut self.train, cfg.train_size)
        };
        if buf.len() == cap {
            buf.pop_front();
        }
        buf.push_back((s, label));
        self.next_to_test = !self.next_to_test;
        self.since_fit += 1;

        if self.train.len() < cfg.min_train {
            return false;
        }
        let due = if self.fits == 0 || self.since_fit >= cfg.refit_every {
            true
        } else if self.since_fit >= cfg.refit_min_gap && self.test.len() >= 2 {
            let err = error_rate(self.region(), self.test.make_contiguous());
            err > (cfg.refit_error_factor * self.error_at_fit).max(cfg.refit_error_floor)
        } else {
            false
        };
        if due {
            self.refit(cfg)
        } else {
            false
        }
    }

    fn refit(&mut self, cfg: &ClassifierConfig) -> bool {
        let train: Vec<Sample> = self.train.iter().copied().collect();
        let theta = match fit_mle(&train, cfg.ridge, cfg.tol, cfg.max_iter) {
            Ok(t) => t,
            // single-label or unconverged data: keep the current region and try later
            Err(_) => return false,
        };
        self.fits += 1;
        self.since_fit = 0;
        self.params = Some(theta);

        let p = self.detector_busy_probability(cfg).clamp(P_CLAMP, 1.0 - P_CLAMP);
        self.region = decision_region(theta, p).ok();
        let test: Vec<Sample> = self.test.iter().copied().collect();
        self.error_at_fit = error_rate(self.region(), &test);
        true
    }

    fn detector_busy_probability(&self, cfg: &ClassifierConfig) -> f64 {
        let raw = DecisionRegion {
            lower_bound: self.threshold,
        };
        let test: Vec<Sample> = self.test.iter().copied().collect();
        let prior = self.prior_h0(cfg);
        let rates = match cfg.rate_source {
            RateSource::Empirical => empirical_rates(raw, &test).ok(),
            RateSource::Analytic => self.analytic_detector_rates(),
        };
        match rates {
            Some((p_fa, p_md)) => busy_probability(p_md, p_fa, prior),
            None => {
                let all: Vec<&Sample> = self.train.iter().chain(self.test.iter()).collect();
                all.iter().filter(|s| s.0 > self.threshold).count() as f64 / all.len().max(1) as f64
            }
        }
    }

    /// Rates of the raw detector assuming the labelled busy samples' mean
    /// power reflects the SNR under H1 (standard central-limit form).
    fn analytic_detector_rates(&self) -> Option<(f64, f64)> {
        let all = self.train.iter().chain(self.test.iter());
        let (idle, busy): (Vec<f64>, Vec<f64>) = {
            let mut i = Vec::new();
            let mut b = Vec::new();
            for &(s, d) in all {
                if d {
                    b.push(s)
                } else {
                    i.push(s)
                }
            }
            (i, b)
        };
        if idle.is_empty() || busy.is_empty() {
            return None;
        }
        let idle_mean = idle.iter().sum::<f64>() / idle.len() as f64;
        let busy_mean = busy.iter().sum::<f64>() / busy.len() as f64;
        let snr = (busy_mean / idle_mean - 1.0).max(0.0);
        // the idle mean estimates M·S_N
        let m = self.samples;
        let snr_min = self.threshold * f64::from(m) / idle_mean;
        crate::radio::analytic_rates(snr, snr_min, m, 1.0, crate::config::FormulaVariant::Standard)
            .ok()
            .map(|(md, fa)| (fa, md))
    }
}
