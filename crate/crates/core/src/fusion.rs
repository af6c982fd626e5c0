//! Decision combining: reward-penalty scores, temporally discounted
//! confidence, channel indicators and the reporting-gain weighted central
//! decision, plus the AND / OR / VOTING baselines and adaptive (α, N) tuning.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::AdaptiveConsts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "MC-LDS")]
    McLds,
    #[serde(rename = "MC-LDS-adaptive")]
    McLdsAdaptive,
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "OR")]
    Or,
    #[serde(rename = "VOTING")]
    Voting,
}

impl Rule {
    pub const ALL: [Rule; 5] = [Rule::McLds, Rule::McLdsAdaptive, Rule::And, Rule::Or, Rule::Voting];

    pub fn name(self) -> &'static str {
        match self {
            Rule::McLds => "MC-LDS",
            Rule::McLdsAdaptive => "MC-LDS-adaptive",
            Rule::And => "AND",
            Rule::Or => "OR",
            Rule::Voting => "VOTING",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Rule::And | Rule::Or | Rule::Voting)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown rule `{s}` (expected one of MC-LDS, MC-LDS-adaptive, AND, OR, VOTING)"))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FusionError {
    #[error("no decisions to combine")]
    EmptyDecisions,
    #[error("quorum {quorum} outside 1..={len}")]
    InvalidQuorum { quorum: usize, len: usize },
    #[error("adaptive constants must be positive with b - a > 1 and c + d < 1 (got a={a}, b={b}, c={c}, d={d})")]
    InvalidAdaptive { a: f64, b: f64, c: f64, d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub gamma: f64,
    pub zeta: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { gamma: 1.0, zeta: 2.0 }
    }
}

#[inline]
fn b(x: bool) -> f64 {
    f64::from(u8::from(x))
}

/// Reward or penalty for a sensor reporting `d` when the previous central
/// decision was `d_prev` and the database reads `r`.
///
/// `L = γ(d⊙R - d⊕R) - (ζ-γ)(¬d - d)(¬D·R - D·¬R)`.
pub fn score(d: bool, d_prev: bool, r: bool, cfg: ScoreConfig) -> f64 {
    let agree = b(d == r) - b(d != r);
    let flip = b(!d) - b(d);
    let lead = b(!d_prev) * b(r) - b(d_prev) * b(!r);
    cfg.gamma * agree - (cfg.zeta - cfg.gamma) * flip * lead
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalParams {
    pub alpha: f64,
    pub n: usize,
}

/// Most recent scores of one sensor, newest first.
#[derive(Debug, Clone, Default)]
pub struct ScoreHistory {
    scores: VecDeque<f64>,
    capacity: usize,
}

impl ScoreHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            scores: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&mut self, l: f64) {
        if self.scores.len() == self.capacity {
            self.scores.pop_back();
        }
        self.scores.push_front(l);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.scores.iter().copied()
    }
}

/// `w = Σ_{k=1}^{min(N, len)} α^k · L^(n-k)` over scores given newest first.
pub fn confidence(history: impl IntoIterator<Item = f64>, temporal: TemporalParams) -> f64 {
    let mut w = 0.0;
    let mut a = 1.0;
    for l in history.into_iter().take(temporal.n) {
        a *= temporal.alpha;
        w += a * l;
    }
    w
}

/// Signed channel indicator: `w` for a busy report, `-w` for an idle one.
pub fn indicator(w: f64, d: bool) -> f64 {
    if d {
        w
    } else {
        -w
    }
}

/// `X_bs + Σ β_i X_i`.
pub fn weighted_sum(x_bs: f64, contributions: &[(f64, f64)]) -> f64 {
    x_bs + contributions.iter().map(|&(x, beta)| beta * x).sum::<f64>()
}

/// Central decision: busy iff the weighted sum is strictly positive.
pub fn combine(x_bs: f64, contributions: &[(f64, f64)]) -> bool {
    weighted_sum(x_bs, contributions) > 0.0
}

/// `⌈(m+1)/2⌉`.
pub fn default_quorum(m: usize) -> usize {
    (m + 2) / 2
}

pub fn baseline_combine(rule: Rule, decisions: &[bool], quorum: Option<usize>) -> Result<bool, FusionError> {
    if decisions.is_empty() {
        return Err(FusionError::EmptyDecisions);
    }
    let ones = decisions.iter().filter(|&&d| d).count();
    Ok(match rule {
        Rule::And => ones == decisions.len(),
        Rule::Or => ones > 0,
        _ => {
            let q = quorum.unwrap_or_else(|| default_quorum(decisions.len()));
            if q == 0 || q > decisions.len() {
                return Err(FusionError::InvalidQuorum {
                    quorum: q,
                    len: decisions.len(),
                });
            }
            ones >= q
        }
    })
}

pub fn validate_adaptive(c: &AdaptiveConsts) -> Result<(), FusionError> {
    let ok = [c.a, c.b, c.c, c.d].iter().all(|v| v.is_finite() && *v > 0.0)
        && c.b - c.a > 1.0
        && c.c + c.d < 1.0;
    if ok {
        Ok(())
    } else {
        Err(FusionError::InvalidAdaptive {
            a: c.a,
            b: c.b,
            c: c.c,
            d: c.d,
        })
    }
}

const ALPHA_EPS: f64 = 1e-6;

/// `N = max(1, ⌊b - a·p̄_MD⌋)`, `α = c + d·p̄_FA` (clamped into (0, 1)).
pub fn adapt(p_md_bar: f64, p_fa_bar: f64, consts: &AdaptiveConsts) -> Result<TemporalParams, FusionError> {
    validate_adaptive(consts)?;
    let n = (consts.b - consts.a * p_md_bar).floor().max(1.0) as usize;
    let alpha = (consts.c + consts.d * p_fa_bar).clamp(ALPHA_EPS, 1.0 - ALPHA_EPS);
    Ok(TemporalParams { alpha, n })
}

/// What one sensor delivered to the BS in a quiet period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub slot: usize,
    pub d: bool,
    pub beta_rep: f64,
    pub delivered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorView {
    pub slot: usize,
    pub d: bool,
    pub w: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub decision: bool,
    pub statistic: f64,
    pub sensors: Vec<SensorView>,
}

/// MC-LDS state of one (cell, channel) pair.
#[derive(Debug, Clone)]
pub struct McLdsState {
    histories: Vec<ScoreHistory>,
    d_prev: Option<bool>,
    pub temporal: TemporalParams,
    score: ScoreConfig,
}

impl McLdsState {
    /// `slots` sensors (BS included); histories keep up to `capacity` scores.
    pub fn new(slots: usize, capacity: usize, temporal: TemporalParams, score: ScoreConfig) -> Self {
        Self {
            histories: (0..slots).map(|_| ScoreHistory::new(capacity)).collect(),
            d_prev: None,
            temporal,
            score,
        }
    }

    pub fn previous_decision(&self) -> Option<bool> {
        self.d_prev
    }

    pub fn confidence_of(&self, slot: usize) -> f64 {
        confidence(self.histories[slot].iter(), self.temporal)
    }

    /// One quiet period. Reports that did not reach the BS neither vote nor
    /// get scored. The base station (slot 0) always delivers.
    pub fn step(&mut self, reports: &[Report], r: bool) -> Outcome {
        let d_prev = *self.d_prev.get_or_insert(r);
        let mut sensors = Vec::with_capacity(reports.len());
        let mut statistic = 0.0;
        for rep in reports.iter().filter(|r| r.delivered || r.slot == 0) {
            let h = &mut self.histories[rep.slot];
            let w = confidence(h.iter(), self.temporal);
            let x = indicator(w, rep.d);
            statistic += if rep.slot == 0 { x } else { rep.beta_rep * x };
            h.push(score(rep.d, d_prev, r, self.score));
            sensors.push(SensorView {
                slot: rep.slot,
                d: rep.d,
                w,
                x,
            });
        }
        let decision = statistic > 0.0;
        self.d_prev = Some(decision);
        Outcome {
            decision,
            statistic,
            sensors,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(d: bool, d_prev: bool, r: bool, c: ScoreConfig) -> f64 {
        match (d == r, d == d_prev) {
            (true, true) => c.gamma,
            (true, false) => c.zeta,
            (false, true) => -c.zeta,
            (false, false) => -c.gamma,
        }
    }

    #[test]
    fn score_matches_table_examples() {
        let c = ScoreConfig { gamma: 1.0, zeta: 2.0 };
        assert_eq!(score(true, false, true, c), 2.0);
        assert_eq!(score(false, false, true, c), -2.0);
        assert_eq!(score(false, false, false, c), 1.0);
    }

    #[test]
    fn closed_form_equals_table_on_all_inputs() {
        let c = ScoreConfig { gamma: 0.3, zeta: 1.7 };
        for bits in 0..8u8 {
            let (d, dp, r) = (bits & 1 == 1, bits & 2 == 2, bits & 4 == 4);
            assert_eq!(score(d, dp, r, c), table(d, dp, r, c), "d={d} D={dp} R={r}");
            assert_eq!(score(d, dp, r, c), -score(!d, dp, r, c));
        }
    }

    #[test]
    fn confidence_examples() {
        let t = TemporalParams { alpha: 0.5, n: 2 };
        assert_eq!(confidence(std::iter::empty(), t), 0.0);
        let (g, z) = (1.0, 2.0);
        assert_eq!(confidence([z, g, 100.0], t), 0.5 * z + 0.25 * g);
        let alpha: f64 = 0.7;
        let w = confidence(std::iter::repeat_n(-1.0, 200), TemporalParams { alpha, n: 200 });
        assert!((w + alpha / (1.0 - alpha)).abs() < 1e-12);
    }

    #[test]
    fn indicator_and_combine_examples() {
        assert_eq!(indicator(3.0, true), 3.0);
        assert_eq!(indicator(-3.0, false), 3.0);
        assert_eq!(indicator(0.0, false), 0.0);
        assert!(combine(0.0, &[(5.0, 1.0)]));
        assert!(!combine(1.0, &[(-1.0, 1.0)]));
        assert_eq!(weighted_sum(2.0, &[(-3.0, 0.5), (1.0, 1.0)]), 1.5);
        assert!(combine(2.0, &[(-3.0, 0.5), (1.0, 1.0)]));
        assert!(!combine(0.0, &[]));
    }

    #[test]
    fn baseline_examples() {
        let v = [true, true, false];
        assert!(!baseline_combine(Rule::And, &v, None).unwrap());
        assert!(baseline_combine(Rule::Or, &v, None).unwrap());
        assert!(baseline_combine(Rule::Voting, &v, Some(2)).unwrap());
        assert!(baseline_combine(Rule::Voting, &v, None).unwrap());
        for rule in [Rule::And, Rule::Or, Rule::Voting] {
            assert!(!baseline_combine(rule, &[false; 3], None).unwrap());
        }
        assert_eq!(baseline_combine(Rule::Or, &[], None), Err(FusionError::EmptyDecisions));
        assert!(baseline_combine(Rule::Voting, &v, Some(4)).is_err());
        assert_eq!(default_quorum(3), 2);
        assert_eq!(default_quorum(4), 3);
        assert_eq!(default_quorum(11), 6);
    }

    #[test]
    fn adapt_examples() {
        let c = AdaptiveConsts::default();
        let t = adapt(0.0, 0.0, &c).unwrap();
        assert_eq!((t.n, t.alpha), (12, 0.5));
        assert_eq!(adapt(0.5, 0.0, &c).unwrap().n, 8);
        assert_eq!(adapt(1.0, 1.0, &c).unwrap().n, 4);
        let bad = AdaptiveConsts { a: 3.0, b: 3.5, c: 0.5, d: 0.4 };
        assert!(adapt(0.0, 0.0, &bad).is_err());
        let bad = AdaptiveConsts { a: 1.0, b: 3.5, c: 0.7, d: 0.4 };
        assert!(adapt(0.0, 0.0, &bad).is_err());
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert!("MAJORITY".parse::<Rule>().is_err());
    }

    #[test]
    fn truthful_sensor_outranks_liar() {
        let t = TemporalParams { alpha: 0.7, n: 8 };
        let mut st = McLdsState::new(3, 16, t, ScoreConfig::default());
        let z_seq = [true, false, false, true, true, false, true, false, false, true, true, true];
        for (i, &z) in z_seq.iter().cycle().take(40).enumerate() {
            let reports = [
                Report { slot: 0, d: z, beta_rep: 1.0, delivered: true },
                Report { slot: 1, d: z, beta_rep: 1.0, delivered: true },
                Report { slot: 2, d: !z, beta_rep: 1.0, delivered: true },
            ];
            let out = st.step(&reports, z);
            if i >= t.n {
                assert_eq!(out.decision, z);
                assert!(st.confidence_of(1) > 0.0);
                assert!(st.confidence_of(2) < 0.0);
            }
        }
    }

    #[test]
    fn lost_report_is_neither_counted_nor_scored() {
        let t = TemporalParams { alpha: 0.7, n: 8 };
        let mut st = McLdsState::new(2, 8, t, ScoreConfig::default());
        let reports = [
            Report { slot: 0, d: false, beta_rep: 1.0, delivered: true },
            Report { slot: 1, d: true, beta_rep: 1.0, delivered: false },
        ];
        let out = st.step(&reports, true);
        assert_eq!(out.sensors.len(), 1);
        assert_eq!(st.confidence_of(1), 0.0);
        // first QP: D_prev initialised from R, no history yet → statistic 0 → idle
        assert!(!out.decision);
    }

    proptest! {
        #[test]
        fn baseline_ordering(pattern in 0u32..1024, m in 1usize..=10) {
            let v: Vec<bool> = (0..m).map(|i| pattern >> i & 1 == 1).collect();
            let and = baseline_combine(Rule::And, &v, None).unwrap();
            let vote = baseline_combine(Rule::Voting, &v, None).unwrap();
            let or = baseline_combine(Rule::Or, &v, None).unwrap();
            prop_assert!(!and || vote);
            prop_assert!(!vote || or);
        }

        #[test]
        fn positive_weight_increase_never_flips_busy(
            xs in proptest::collection::vec((-10.0..10.0f64, 0.0..2.0f64), 1..8),
            x_bs in -10.0..10.0f64,
            bump in 0.0..5.0f64,
        ) {
            let before = combine(x_bs, &xs);
            let mut after = xs.clone();
            if let Some(i) = after.iter().position(|c| c.0 > 0.0) {
                after[i].1 += bump;
                prop_assert!(!before || combine(x_bs, &after));
            }
        }

        #[test]
        fn scaling_scores_keeps_decisions(
            seq in proptest::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()), 1..60),
            k in 0.01..100.0f64,
        ) {
            let t = TemporalParams { alpha: 0.7, n: 8 };
            let mut a = McLdsState::new(3, 8, t, ScoreConfig { gamma: 1.0, zeta: 2.0 });
            let mut b = McLdsState::new(3, 8, t, ScoreConfig { gamma: k, zeta: 2.0 * k });
            for (d0, d1, d2, r) in seq {
                let reports = [
                    Report { slot: 0, d: d0, beta_rep: 1.0, delivered: true },
                    Report { slot: 1, d: d1, beta_rep: 0.3, delivered: true },
                    Report { slot: 2, d: d2, beta_rep: 2.0, delivered: true },
                ];
                let (oa, ob) = (a.step(&reports, r), b.step(&reports, r));
                if oa.statistic.abs() < 1e-9 {
                    // an exact cancellation may round either way once scaled
                    break;
                }
                prop_assert_eq!(oa.decision, ob.decision);
            }
        }

        #[test]
        fn indicator_magnitude_and_sign(w in -100.0..100.0f64, d in any::<bool>()) {
            let x = indicator(w, d);
            prop_assert_eq!(x.abs(), w.abs());
            prop_assert_eq!(x, if d { w } else { -w });
        }
    }
}
