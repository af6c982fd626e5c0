//! Link gains, energy-detector power synthesis and closed-form detection rates.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::config::{FormulaVariant, GainNormalization, RadioConfig};
use crate::model::{CellId, SeedTree, Stream, Topology};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RadioError {
    #[error("non-finite intermediate in detection-rate formula ({what})")]
    NonFinite { what: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// Standard normal tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Deterministic distance attenuation `(max(d, d0)/d0)^-n`.
pub fn path_gain(distance: f64, reference: f64, exponent: f64) -> f64 {
    (distance.max(reference) / reference).powf(-exponent)
}

/// Link gains of one cell over one hold window of `slow_fading_hold` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGains {
    pub cell: CellId,
    /// First frame of the window.
    pub valid_from: u64,
    /// One past the last frame of the window.
    pub valid_until: u64,
    /// `β^Sen` indexed `[sensor slot][station]`.
    pub sen: Vec<Vec<f64>>,
    /// `β^Rep` per sensor slot; the base station's own decision has gain 1.
    pub rep: Vec<f64>,
    /// Linear shadowing factor of each slot's reporting link.
    pub shadow: Vec<f64>,
}

impl CellGains {
    /// Weight of each slot in the central decision.
    pub fn report_weights(&self, norm: GainNormalization) -> Vec<f64> {
        match norm {
            GainNormalization::None => self.rep.clone(),
            GainNormalization::CellMean => {
                let cpes = &self.rep[1..];
                let mean = cpes.iter().sum::<f64>() / cpes.len().max(1) as f64;
                let mut w = self.rep.clone();
                if mean > 0.0 {
                    for g in w.iter_mut().skip(1) {
                        *g /= mean;
                    }
                }
                w
            }
        }
    }
}

/// Fresh gains for `cell` in the hold window containing `frame`.
///
/// Shadowing is drawn once per correlation group (and per station for the
/// sensing links); Rayleigh power is independent per link.
pub fn draw_link_gains(
    topo: &Topology,
    cell: CellId,
    radio: &RadioConfig,
    frame: u64,
    seeds: &SeedTree,
) -> CellGains {
    let hold = radio.slow_fading_hold.max(1);
    let window = frame / hold;
    let mut rng = seeds.keyed(Stream::Fading, &[cell.0 as u64, window]);
    let c = &topo.cells[cell.0];
    let slots = c.cpes.len() + 1;
    let groups = c.num_shadow_groups();
    let stations = topo.incumbents.len();
    let sigma = radio.shadowing_sigma_db;

    let shadow = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        10f64.powf(sigma * z / 10.0)
    };
    let sen_shadow: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..stations).map(|_| shadow(&mut rng)).collect())
        .collect();
    let rep_shadow: Vec<f64> = (0..groups).map(|_| shadow(&mut rng)).collect();

    let sen = (0..slots)
        .map(|s| {
            let pos = c.sensor_position(s);
            let g = c.shadow_groups[s];
            topo.incumbents
                .iter()
                .enumerate()
                .map(|(i, st)| {
                    let fade: f64 = Exp1.sample(&mut rng);
                    path_gain(pos.dist(st.position), radio.reference_distance, radio.path_loss_exponent)
                        * sen_shadow[g][i]
                        * fade
                })
                .collect()
        })
        .collect();
    let shadow: Vec<f64> = (0..slots).map(|s| rep_shadow[c.shadow_groups[s]]).collect();
    let rep = (0..slots)
        .map(|s| {
            if s == 0 {
                return 1.0;
            }
            let d = c.sensor_position(s).dist(c.bs_position());
            let fade: f64 = Exp1.sample(&mut rng);
            path_gain(d, radio.reference_distance, radio.path_loss_exponent) * shadow[s] * fade
        })
        .collect();
    CellGains {
        cell,
        valid_from: window * hold,
        valid_until: (window + 1) * hold,
        sen,
        rep,
        shadow,
    }
}

/// Whether a report with reporting gain `beta_rep` reaches the BS.
pub fn report_delivered(beta_rep: f64, cpe_tx_power: f64, noise: f64, threshold_db: f64) -> bool {
    if threshold_db == f64::NEG_INFINITY {
        return true;
    }
    10.0 * (beta_rep * cpe_tx_power / noise).log10() >= threshold_db
}

/// Energy-detector output `S` for `samples` complex samples with noise power
/// `noise` and total incident incumbent power `incident`.
///
/// With unit-power complex-Gaussian incumbent samples every `|y_m|^2` is
/// exponential with mean `noise + incident`, so the sum is Gamma distributed.
pub fn sense_power<R: Rng + ?Sized>(rng: &mut R, samples: u32, noise: f64, incident: f64) -> f64 {
    let scale = noise + incident;
    Gamma::new(f64::from(samples), scale)
        .expect("positive shape and scale")
        .sample(rng)
}

/// Sample-by-sample synthesis of `S = Σ |y_m|^2` where each station in
/// `incident` contributes an independent unit-power complex-Gaussian waveform
/// scaled by its received power. Slow; kept as the reference for
/// [`sense_power`].
pub fn sense_power_samples<R: Rng + ?Sized>(
    rng: &mut R,
    samples: u32,
    noise: f64,
    incident: &[f64],
) -> f64 {
    let cgauss = |rng: &mut R, power: f64| -> (f64, f64) {
        let s = (power / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        (re * s, im * s)
    };
    (0..samples)
        .map(|_| {
            let (mut re, mut im) = cgauss(rng, noise);
            for &p in incident {
                let (a, b) = cgauss(rng, p);
                re += a;
                im += b;
            }
            re * re + im * im
        })
        .sum()
}

/// Approximate `(P_MD, P_FA)` of an energy detector.
///
/// `AsPrinted` evaluates
/// `P_MD = 1 - Q((snr_min - (1+snr)/β · M) / sqrt(M((snr/β + 2)^2 - 2)))` and
/// `P_FA = Q((snr_min - M) / (sqrt(2) M))`.
/// `Standard` uses the usual central-limit form with `snr` as the received SNR.
pub fn analytic_rates(
    snr_inst: f64,
    snr_min: f64,
    samples: u32,
    beta_sen: f64,
    variant: FormulaVariant,
) -> Result<(f64, f64), RadioError> {
    if samples == 0 {
        return Err(RadioError::InvalidArgument("samples must be at least 1"));
    }
    if !(snr_min > 0.0) {
        return Err(RadioError::InvalidArgument("snr_min must be positive"));
    }
    let m = f64::from(samples);
    let (md_arg, fa_arg) = match variant {
        FormulaVariant::AsPrinted => {
            let ratio = snr_inst / beta_sen;
            let num = snr_min - (1.0 + snr_inst) / beta_sen * m;
            let den = (m * ((ratio + 2.0).powi(2) - 2.0)).sqrt();
            (num / den, (snr_min - m) / (std::f64::consts::SQRT_2 * m))
        }
        FormulaVariant::Standard => {
            let g = 1.0 + snr_inst;
            (
                (snr_min - m * g) / (m.sqrt() * g),
                (snr_min - m) / m.sqrt(),
            )
        }
    };
    if !md_arg.is_finite() {
        return Err(RadioError::NonFinite { what: "misdetection argument" });
    }
    if !fa_arg.is_finite() {
        return Err(RadioError::NonFinite { what: "false-alarm argument" });
    }
    let p_md = (1.0 - q_function(md_arg)).clamp(0.0, 1.0);
    let p_fa = q_function(fa_arg).clamp(0.0, 1.0);
    Ok((p_md, p_fa))
}
