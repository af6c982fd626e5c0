//! The frame/superframe event loop.

use std::collections::BTreeMap;

use crate::chanmgmt::{initial_lists, validate_lists, BusyOutcome, ChannelLists, Timing};
use crate::classifier::SensorClassifier;
use crate::config::{FaultKind, LabelSource, ScenarioConfig, FRAMES_PER_SUPERFRAME};
use crate::fusion::{adapt, baseline_combine, McLdsState, Report, Rule, ScoreConfig, TemporalParams};
use crate::incumbent::IncumbentActivity;
use crate::metrics::{check_thresholds, nwcf, perf_vector, window_rates, MetricsWindow, Observation};
use crate::model::{build_topology, CellAssignment, CellId, ChannelId, SeedTree, SensorId, Stream, Topology};
use crate::radio::{draw_link_gains, report_delivered, sense_power, CellGains};

use super::database::Database;
use super::result::{
    DecisionRecord, MatrixSnapshot, NetworkPerf, PerfMatrix, QpKind, ResultBundle, RuleSummary, SensorRecord,
    TimePoint, TraceSink, TransitionRecord,
};
use super::schedule::{silence_violations, QpSchedule};
use super::SimError;

/// Running sums for the post-warm-up means of one rule.
#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    sums: [f64; 5],
    counts: [usize; 5],
    points: usize,
}

impl Accum {
    fn add(&mut self, p: &NetworkPerf) {
        self.points += 1;
        for (i, v) in [p.nwcf, p.p_sd, p.p_md, p.p_fa, p.chi2].into_iter().enumerate() {
            if let Some(v) = v {
                self.sums[i] += v;
                self.counts[i] += 1;
            }
        }
    }

    fn mean(&self) -> NetworkPerf {
        let m = |i: usize| (self.counts[i] > 0).then(|| self.sums[i] / self.counts[i] as f64);
        NetworkPerf {
            nwcf: m(0),
            p_sd: m(1),
            p_md: m(2),
            p_fa: m(3),
            chi2: m(4),
            pairs: 0,
        }
    }
}

/// One sensing event of one cell on one channel.
struct Sensing {
    cell: CellId,
    ch: ChannelId,
    start: u64,
    len: u64,
    kind: QpKind,
}

/// A complete simulated deployment.
pub struct Simulation {
    cfg: ScenarioConfig,
    seeds: SeedTree,
    topo: Topology,
    activity: IncumbentActivity,
    db: Database,
    timing: Timing,
    schedule: QpSchedule,
    lists: Vec<ChannelLists>,
    /// Lists as of the previous management cycle; what neighbours see.
    snapshot: Vec<ChannelLists>,
    assignment: Vec<CellAssignment>,
    gains: Vec<CellGains>,
    tx_power: Vec<f64>,
    classifiers: Vec<SensorClassifier>,
    slots: usize,
    mclds: Vec<McLdsState>,
    adaptive: Vec<McLdsState>,
    rules: Vec<Rule>,
    /// `[rule][pair]`.
    windows: Vec<Vec<MetricsWindow>>,
    faults: BTreeMap<(usize, usize), FaultKind>,
    /// Driving-rule flags at the previous quiet period of each pair.
    raised: Vec<bool>,
    superframe: u64,
    accum: Vec<Accum>,
    bundle: ResultBundle,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        let mut cfg = cfg.clone();
        cfg.resolve();
        cfg.validate()?;
        let seeds = SeedTree::new(cfg.seed);
        let topo = build_topology(&cfg, &seeds)?;
        let frames = (cfg.horizon + 1) * FRAMES_PER_SUPERFRAME;
        let activity = IncumbentActivity::generate(
            &topo,
            cfg.num_channels,
            |ch| cfg.activity_for(ch),
            frames,
            cfg.clock.frame_len,
            &seeds,
        );
        let db = Database {
            error_prob: cfg.database.error_prob,
            staleness_frames: cfg.clock.frames_for(cfg.database.staleness),
        };
        let timing = Timing {
            moving_time: cfg.channels.moving_time,
            promotion_idle: cfg.channels.promotion_idle,
            max_sensing_gap: cfg.channels.max_sensing_gap,
        };
        let disallowed: Vec<Vec<ChannelId>> = (0..cfg.num_cells).map(|j| cfg.disallowed_for(j)).collect();
        let lists = initial_lists(
            cfg.num_channels,
            &topo.neighbors,
            &disallowed,
            |cell, ch| db.read(&activity, &seeds, cell, ch, 0, 1),
            cfg.channels.target_operating,
            cfg.channels.initial_backup,
        );
        let slots = cfg.topology.cpes_per_cell + 1;
        let pairs = cfg.num_cells * cfg.num_channels;
        let classifiers =
            vec![SensorClassifier::new(cfg.radio.threshold(), cfg.radio.samples_per_sensing); pairs * slots];
        let score = ScoreConfig {
            gamma: cfg.fusion.gamma,
            zeta: cfg.fusion.zeta,
        };
        let static_tp = TemporalParams {
            alpha: cfg.fusion.alpha,
            n: cfg.fusion.historic_count,
        };
        let adaptive_tp = adapt(0.0, 0.0, &cfg.fusion.adaptive).map_err(|source| SimError::Fusion {
            cell: CellId(0),
            channel: ChannelId(1),
            frame: 0,
            source,
        })?;
        let capacity = static_tp.n.max(cfg.fusion.adaptive.b.floor() as usize).max(1);
        let mclds = vec![McLdsState::new(slots, capacity, static_tp, score); pairs];
        let adaptive = vec![McLdsState::new(slots, capacity, adaptive_tp, score); pairs];
        let rules: Vec<Rule> = Rule::ALL.into_iter().filter(|r| cfg.fusion.rules.contains(r)).collect();
        let windows = vec![vec![MetricsWindow::new(cfg.metrics.window); pairs]; rules.len()];
        let faults = cfg
            .faults
            .iter()
            .map(|f| ((f.cell - 1, f.cpe), f.kind))
            .collect();
        let tx_power = topo
            .incumbents
            .iter()
            .map(|s| s.tx_power.unwrap_or_else(|| cfg.radio.incumbent_tx_power()))
            .collect();
        let gains = (0..cfg.num_cells)
            .map(|j| draw_link_gains(&topo, CellId(j), &cfg.radio, 0, &seeds))
            .collect();
        let mut sim = Self {
            schedule: QpSchedule::new(cfg.clock.intra_qp_period),
            snapshot: lists.clone(),
            assignment: Vec::new(),
            bundle: ResultBundle {
                num_cells: cfg.num_cells,
                num_channels: cfg.num_channels,
                rules: rules.clone(),
                ..ResultBundle::default()
            },
            accum: vec![Accum::default(); rules.len()],
            cfg,
            seeds,
            topo,
            activity,
            db,
            timing,
            lists,
            gains,
            tx_power,
            classifiers,
            slots,
            mclds,
            adaptive,
            rules,
            windows,
            faults,
            raised: vec![false; pairs],
            superframe: 0,
        };
        sim.assignment = (0..sim.cfg.num_cells)
            .map(|j| sim.assign(j))
            .collect::<Result<_, _>>()?;
        Ok(sim)
    }

    fn assign(&self, j: usize) -> Result<CellAssignment, SimError> {
        let mut ocl = self.lists[j].ocl.clone();
        ocl.sort();
        Ok(crate::model::sensors::assign_cell(
            CellId(j),
            self.cfg.topology.cpes_per_cell,
            &ocl,
            self.cfg.channels.obs_fraction,
        )?)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn activity(&self) -> &IncumbentActivity {
        &self.activity
    }

    pub fn lists(&self) -> &[ChannelLists] {
        &self.lists
    }

    pub fn assignment(&self, cell: CellId) -> &CellAssignment {
        &self.assignment[cell.0]
    }

    /// Superframes completed so far.
    pub fn superframe(&self) -> u64 {
        self.superframe
    }

    pub fn is_done(&self) -> bool {
        self.superframe >= self.cfg.horizon
    }

    /// Current static MC-LDS confidence of one sensor slot.
    pub fn confidence(&self, cell: CellId, ch: ChannelId, slot: usize) -> f64 {
        self.mclds[self.pair(cell, ch)].confidence_of(slot)
    }

    /// Current adaptive temporal parameters of one pair.
    pub fn adaptive_params(&self, cell: CellId, ch: ChannelId) -> TemporalParams {
        self.adaptive[self.pair(cell, ch)].temporal
    }

    fn pair(&self, cell: CellId, ch: ChannelId) -> usize {
        cell.0 * self.cfg.num_channels + ch.index()
    }

    fn frame_time(&self, frame: u64) -> f64 {
        frame as f64 * self.cfg.clock.frame_len
    }

    /// Runs every remaining superframe.
    pub fn run(&mut self, sink: &mut dyn TraceSink) -> Result<(), SimError> {
        while !self.is_done() {
            self.step_superframe(sink)?;
        }
        Ok(())
    }

    pub fn step_superframe(&mut self, sink: &mut dyn TraceSink) -> Result<(), SimError> {
        let s = self.superframe;
        let first = s * FRAMES_PER_SUPERFRAME;
        let neighbors = self.topo.neighbors.clone();
        let escalated = {
            let ocls: Vec<&[ChannelId]> = self.lists.iter().map(|l| l.ocl.as_slice()).collect();
            self.schedule.begin_superframe(&ocls, &neighbors)
        };
        self.bundle.audit.escalations += escalated.len() as u64;

        for f in first..first + FRAMES_PER_SUPERFRAME {
            self.refresh_gains(f);
            let mut qps: Vec<(CellId, ChannelId)> = Vec::new();
            if self.schedule.is_intra_instant(f) {
                if self.cfg.output.z_trace {
                    for j in 0..self.cfg.num_cells {
                        for k in 0..self.cfg.num_channels {
                            let ch = ChannelId::from_index(k);
                            let z = self.activity.z(CellId(j), ch, f as i64, 1);
                            self.bundle.z_trace.push((f, CellId(j), ch, z));
                        }
                    }
                }
                for j in 0..self.cfg.num_cells {
                    let mut ocl = self.lists[j].ocl.clone();
                    ocl.sort();
                    for ch in ocl {
                        if self.schedule.escalated(CellId(j), ch) || !self.lists[j].ocl.contains(&ch) {
                            continue;
                        }
                        qps.push((CellId(j), ch));
                        self.in_band(
                            Sensing {
                                cell: CellId(j),
                                ch,
                                start: f,
                                len: 1,
                                kind: QpKind::Intra,
                            },
                            sink,
                        )?;
                    }
                }
            }
            for &(cell, ch) in &escalated {
                if self.lists[cell.0].ocl.contains(&ch) {
                    qps.push((cell, ch));
                }
            }
            if f == first + FRAMES_PER_SUPERFRAME - 1 {
                for &(cell, ch) in &escalated {
                    if self.lists[cell.0].ocl.contains(&ch) {
                        self.in_band(
                            Sensing {
                                cell,
                                ch,
                                start: first,
                                len: FRAMES_PER_SUPERFRAME,
                                kind: QpKind::Inter,
                            },
                            sink,
                        )?;
                    }
                }
            }
            let period = self.cfg.clock.obs_period.max(1);
            if f % period == period / 2 {
                for j in 0..self.cfg.num_cells {
                    for ch in self.lists[j].tracked() {
                        self.out_of_band(CellId(j), ch, f, sink)?;
                    }
                }
            }
            self.audit_silence(f, &qps);
        }

        self.manage((first + FRAMES_PER_SUPERFRAME) as f64 * self.cfg.clock.frame_len)?;
        self.superframe += 1;
        self.collect_metrics(s);
        Ok(())
    }

    fn refresh_gains(&mut self, frame: u64) {
        for j in 0..self.cfg.num_cells {
            if frame >= self.gains[j].valid_until || frame < self.gains[j].valid_from {
                self.gains[j] = draw_link_gains(&self.topo, CellId(j), &self.cfg.radio, frame, &self.seeds);
            }
        }
    }

    fn audit_silence(&mut self, frame: u64, qps: &[(CellId, ChannelId)]) {
        let neighbors = &self.topo.neighbors;
        let transmitting: Vec<Vec<ChannelId>> = self
            .lists
            .iter()
            .enumerate()
            .map(|(j, l)| {
                l.ocl
                    .iter()
                    .copied()
                    .filter(|&ch| !self.schedule.quiet(CellId(j), ch, frame, neighbors))
                    .collect()
            })
            .collect();
        let ocls: Vec<&[ChannelId]> = self.lists.iter().map(|l| l.ocl.as_slice()).collect();
        self.bundle.audit.silence_violations += silence_violations(qps, &transmitting, &ocls, neighbors);
    }

    /// Energy collected by one sensor, summed over the frames of the event.
    fn sense(&self, ev: &Sensing, slot: usize, audible: &[Vec<usize>]) -> f64 {
        let mut rng = self.seeds.keyed(
            Stream::Sensing,
            &[ev.cell.0 as u64, slot as u64, u64::from(ev.ch.0), ev.start, ev.kind.key()],
        );
        let g = &self.gains[ev.cell.0];
        audible
            .iter()
            .map(|stations| {
                let incident: f64 = stations.iter().map(|&i| self.tx_power[i] * g.sen[slot][i]).sum();
                sense_power(&mut rng, self.cfg.radio.samples_per_sensing, self.cfg.radio.noise_power, incident)
            })
            .sum()
    }

    /// Senses with `sensors`, binarizes, trains the classifiers and builds
    /// the reports that reach the BS.
    fn gather(
        &mut self,
        ev: &Sensing,
        sensors: &[SensorId],
        z: bool,
        r: bool,
    ) -> (Vec<Report>, Vec<f64>) {
        let audible: Vec<Vec<usize>> = (ev.start..ev.start + ev.len)
            .map(|f| self.activity.active_on(ev.ch, f as i64, 1))
            .collect();
        let weights = self.gains[ev.cell.0].report_weights(self.cfg.radio.report_gain_normalization);
        let scale = ev.len as f64;
        let label = match self.cfg.classifier.labels {
            LabelSource::Database => r,
            LabelSource::Truth => z,
        };
        let base = self.pair(ev.cell, ev.ch) * self.slots;
        let mut reports = Vec::with_capacity(sensors.len());
        let mut powers = Vec::with_capacity(sensors.len());
        for &sid in sensors {
            let slot = sid.0 as usize;
            let power = self.sense(ev, slot, &audible);
            let clf = &mut self.classifiers[base + slot];
            let mut d = clf.decide(power, scale);
            if ev.kind != QpKind::Inter && clf.observe(power, label, r, &self.cfg.classifier) {
                self.bundle.audit.classifier_fits += 1;
            }
            match self.faults.get(&(ev.cell.0, slot)) {
                Some(FaultKind::Inverted) => d = !z,
                Some(FaultKind::StuckBusy) => d = true,
                Some(FaultKind::StuckIdle) => d = false,
                None => {}
            }
            let delivered = slot == 0
                || report_delivered(
                    self.gains[ev.cell.0].rep[slot],
                    self.cfg.radio.cpe_tx_power(),
                    self.cfg.radio.noise_power,
                    self.cfg.radio.report_threshold_db,
                );
            if !delivered {
                self.bundle.audit.lost_reports += 1;
            }
            reports.push(Report {
                slot,
                d,
                beta_rep: weights[slot],
                delivered,
            });
            powers.push(power);
        }
        (reports, powers)
    }

    /// Central decision of `rule` and its statistic.
    fn decide(&mut self, rule: Rule, pair: usize, reports: &[Report], r: bool, ev: &Sensing) -> Result<(bool, f64, Option<Vec<f64>>), SimError> {
        match rule {
            Rule::McLds | Rule::McLdsAdaptive => {
                let state = if rule == Rule::McLds {
                    &mut self.mclds[pair]
                } else {
                    &mut self.adaptive[pair]
                };
                let out = state.step(reports, r);
                let mut w = vec![f64::NAN; self.slots];
                for v in &out.sensors {
                    w[v.slot] = v.w;
                }
                Ok((out.decision, out.statistic, Some(w)))
            }
            _ => {
                let ds: Vec<bool> = reports.iter().filter(|r| r.delivered).map(|r| r.d).collect();
                let quorum = self.cfg.fusion.voting_quorum.map(|q| q.clamp(1, ds.len().max(1)));
                let d = baseline_combine(rule, &ds, quorum).map_err(|source| SimError::Fusion {
                    cell: ev.cell,
                    channel: ev.ch,
                    frame: ev.start,
                    source,
                })?;
                Ok((d, ds.iter().filter(|&&d| d).count() as f64, None))
            }
        }
    }

    fn in_band(&mut self, ev: Sensing, sink: &mut dyn TraceSink) -> Result<(), SimError> {
        let Some(sensors) = self.assignment[ev.cell.0].sensors_for(ev.ch).map(<[SensorId]>::to_vec) else {
            return Ok(());
        };
        match ev.kind {
            QpKind::Inter => self.bundle.audit.inter_qps += 1,
            _ => self.bundle.audit.intra_qps += 1,
        }
        let z = self.activity.z(ev.cell, ev.ch, ev.start as i64, ev.len);
        let r = self.db.read(&self.activity, &self.seeds, ev.cell, ev.ch, ev.start, ev.len);
        let (reports, powers) = self.gather(&ev, &sensors, z, r);
        let pair = self.pair(ev.cell, ev.ch);
        let time = self.frame_time(ev.start);
        let mut w_static = None;
        let mut driving = None;
        for ri in 0..self.rules.len() {
            let rule = self.rules[ri];
            let (decision, statistic, w) = self.decide(rule, pair, &reports, r, &ev)?;
            if rule == Rule::McLds {
                w_static = w;
            }
            self.windows[ri][pair].push(Observation { d: decision, z, r });
            let rec = DecisionRecord {
                frame: ev.start,
                time,
                cell: ev.cell,
                channel: ev.ch,
                kind: ev.kind,
                rule,
                decision,
                z,
                r,
                statistic,
            };
            sink.decision(&rec);
            if self.cfg.output.trace {
                self.bundle.decisions.push(rec);
            }
            if rule == Rule::McLdsAdaptive && self.windows[ri][pair].is_full() {
                let rates = window_rates(&self.windows[ri][pair], self.cfg.metrics.literal_eq13)?;
                self.adaptive[pair].temporal =
                    adapt(rates.p_md, rates.p_fa, &self.cfg.fusion.adaptive).map_err(|source| SimError::Fusion {
                        cell: ev.cell,
                        channel: ev.ch,
                        frame: ev.start,
                        source,
                    })?;
            }
            if rule == self.cfg.fusion.driving_rule {
                driving = Some(ri);
            }
        }
        for (rep, &power) in reports.iter().zip(&powers) {
            sink.sensor(&SensorRecord {
                frame: ev.start,
                cell: ev.cell,
                channel: ev.ch,
                kind: ev.kind,
                slot: rep.slot,
                power,
                d: rep.d,
                delivered: rep.delivered,
                w: w_static.as_ref().map(|w| w[rep.slot]).filter(|v| !v.is_nan()),
            });
        }

        let Some(ri) = driving else { return Ok(()) };
        let window = &self.windows[ri][pair];
        if !window.is_full() {
            return Ok(());
        }
        let rates = window_rates(window, self.cfg.metrics.literal_eq13)?;
        let flags = check_thresholds(rates.p_md, rates.p_fa, self.cfg.metrics.limit_md, self.cfg.metrics.limit_fa);
        // escalate when the requirements stop being met, not on every QP while they are not
        if flags.any() && !self.raised[pair] {
            self.schedule.request(ev.cell, ev.ch);
        }
        self.raised[pair] = flags.any();
        if flags.misdetection {
            let now = self.frame_time(ev.start + ev.len);
            let out = self.lists[ev.cell.0]
                .on_busy_verdict(ev.cell, ev.ch, self.cfg.num_channels, now, &self.timing)
                .map_err(|source| SimError::Channel {
                    cell: ev.cell,
                    frame: ev.start,
                    source,
                })?;
            self.apply(ev.cell, out)?;
        }
        Ok(())
    }

    fn out_of_band(&mut self, cell: CellId, ch: ChannelId, frame: u64, sink: &mut dyn TraceSink) -> Result<(), SimError> {
        self.bundle.audit.obs_sensings += 1;
        let ev = Sensing {
            cell,
            ch,
            start: frame,
            len: 1,
            kind: QpKind::Obs,
        };
        let mut sensors = vec![SensorId::BASE_STATION];
        sensors.extend_from_slice(&self.assignment[cell.0].obs);
        let z = self.activity.z(cell, ch, frame as i64, 1);
        let r = self.db.read(&self.activity, &self.seeds, cell, ch, frame, 1);
        let (reports, _) = self.gather(&ev, &sensors, z, r);
        let rule = self.cfg.fusion.driving_rule;
        let (decision, statistic, _) = self.decide(rule, self.pair(cell, ch), &reports, r, &ev)?;
        let rec = DecisionRecord {
            frame,
            time: self.frame_time(frame),
            cell,
            channel: ch,
            kind: QpKind::Obs,
            rule,
            decision,
            z,
            r,
            statistic,
        };
        sink.decision(&rec);
        if self.cfg.output.trace {
            self.bundle.decisions.push(rec);
        }
        let now = self.frame_time(frame);
        let t = self.lists[cell.0]
            .obs_update(ch, !decision, now, &self.timing)
            .map_err(|source| SimError::Channel { cell, frame, source })?;
        if let Some(transition) = t {
            self.bundle.transitions.push(TransitionRecord { cell, transition });
        }
        Ok(())
    }

    /// Records an outcome of the list state machine and keeps sensor duties
    /// and IBS windows in step with the operating list.
    fn apply(&mut self, cell: CellId, out: BusyOutcome) -> Result<(), SimError> {
        let mut ocl_changed = false;
        for t in &out.transitions {
            if t.to == crate::chanmgmt::ListKind::Ocl || t.from == Some(crate::chanmgmt::ListKind::Ocl) {
                ocl_changed = true;
            }
            if t.from == Some(crate::chanmgmt::ListKind::Ocl) {
                let pair = self.pair(cell, t.channel);
                for w in &mut self.windows {
                    w[pair] = MetricsWindow::new(self.cfg.metrics.window);
                }
                self.raised[pair] = false;
            }
            self.bundle.transitions.push(TransitionRecord { cell, transition: *t });
        }
        if let Some(sw) = out.switch {
            if sw.time > sw.deadline {
                self.bundle.audit.switches_late += 1;
            }
            self.bundle.switches.push(sw);
        }
        if out.outage {
            self.bundle.audit.outages += 1;
        }
        if ocl_changed {
            self.assignment[cell.0] = self.assign(cell.0)?;
        }
        Ok(())
    }

    /// Coexistence cycle against the previous superframe's snapshot.
    fn manage(&mut self, now: f64) -> Result<(), SimError> {
        for j in 0..self.cfg.num_cells {
            let cell = CellId(j);
            let out = {
                let nbrs: Vec<(CellId, &ChannelLists)> =
                    self.topo.neighbors[j].iter().map(|&n| (n, &self.snapshot[n.0])).collect();
                let mut lists = self.lists[j].clone();
                let out = lists.manage(cell, &nbrs, self.cfg.channels.target_operating, now, &self.timing);
                self.lists[j] = lists;
                out
            };
            self.apply(cell, out)?;
        }
        self.bundle.audit.list_violations += validate_lists(&self.lists, &self.topo.neighbors).len() as u64;
        self.snapshot = self.lists.clone();
        Ok(())
    }

    /// Performance matrix and network values of every rule.
    fn evaluate(&self) -> Vec<(PerfMatrix, NetworkPerf)> {
        let b = self.cfg.num_channels;
        (0..self.rules.len())
            .map(|ri| {
                let mut matrix: PerfMatrix = vec![vec![None; b]; self.cfg.num_cells];
                for (j, l) in self.lists.iter().enumerate() {
                    for &ch in &l.ocl {
                        let w = &self.windows[ri][j * b + ch.index()];
                        if let Ok(pv) = perf_vector(w, self.cfg.metrics.literal_eq13, self.cfg.metrics.chi2_mode) {
                            matrix[j][ch.index()] = Some(pv);
                        }
                    }
                }
                let entries: Vec<_> = matrix.iter().flatten().flatten().collect();
                let weighted = |f: &dyn Fn(&crate::metrics::PerfVector) -> Option<f64>| {
                    let (mut num, mut den) = (0.0, 0usize);
                    for pv in &entries {
                        if let Some(v) = f(pv) {
                            num += v * pv.samples as f64;
                            den += pv.samples;
                        }
                    }
                    (den > 0).then(|| num / den as f64)
                };
                let perf = NetworkPerf {
                    nwcf: nwcf(entries.iter().map(|pv| Some((pv.corr, pv.samples)))).ok(),
                    p_sd: weighted(&|pv| Some(pv.p_sd)),
                    p_md: weighted(&|pv| Some(pv.p_md)),
                    p_fa: weighted(&|pv| Some(pv.p_fa)),
                    chi2: weighted(&|pv| pv.chi2),
                    pairs: entries.len(),
                };
                (matrix, perf)
            })
            .collect()
    }

    fn collect_metrics(&mut self, s: u64) {
        if s < self.cfg.metrics.warmup_superframes {
            return;
        }
        let eval = self.evaluate();
        let every = self.cfg.metrics.matrix_snapshot_every;
        for (ri, (matrix, perf)) in eval.into_iter().enumerate() {
            let rule = self.rules[ri];
            self.accum[ri].add(&perf);
            self.bundle.timeseries.push(TimePoint {
                superframe: s,
                rule,
                perf,
            });
            if every > 0 && (s + 1).is_multiple_of(every) {
                self.bundle.snapshots.push(MatrixSnapshot {
                    superframe: s,
                    rule,
                    matrix,
                });
            }
        }
    }

    /// Closes the run and returns everything it produced.
    pub fn finish(mut self) -> ResultBundle {
        let eval = self.evaluate();
        self.bundle.superframes = self.superframe;
        self.bundle.matrices = self.rules.iter().copied().zip(eval.into_iter().map(|(m, _)| m)).collect();
        self.bundle.summary = self
            .rules
            .iter()
            .zip(&self.accum)
            .map(|(&rule, a)| RuleSummary {
                rule,
                perf: a.mean(),
                points: a.points,
            })
            .collect();
        self.bundle.lists = self.lists.clone();
        self.bundle
    }
}
