//! The simulation world: one deterministic event loop wiring the RPL
//! control plane, the Sybil attacker, the detection scheme and the metric
//! taps together.
//!
//! Root-side aggregation (the message counter, evidence tallies carried by
//! DIO piggybacks, and verdict distribution back to nodes) follows the
//! centralized trust-authority model: the root is assumed able to observe
//! control messages across the DODAG and nodes learn the current verdict
//! set when it changes. The evidence itself still rides (and is billed as)
//! bytes inside ordinary DIO/DAO frames.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::AttackerState;
use crate::detector::wire::ResponseField;
use crate::detector::{CounterVerdict, EvidenceLedger, MessageCounter, QueryState};
use crate::ident::{DeviceId, DeviceUids, MacAddr, UidType, UidValue};
use crate::rpl::dodag::{self, CandidateView, DisAction, DodagState, NodeMode};
use crate::rpl::link::LinkStats;
use crate::rpl::message::{Frame, FrameKind, Piggyback};
use crate::rpl::trickle::TrickleTimer;
use crate::rpl::{RANK_INFINITE, ROOT_RANK};
use crate::sim::{
    DeliveryOutcome, EnergyAccount, EnergyAction, EventQueue, Radio, SimTime, TraceRecord,
    TraceSink,
};
use crate::trust::{
    self, maybe_switch_parent, trust_rank, SwitchDecision, TrustMatrix, TrustReport, Verdict,
};

use super::baselines::{IdCountDetector, RssiProfiler};
use super::config::{Defense, HarnessError, ScenarioConfig};
use super::metrics::{detection_latency_s, misdetection_rate, MetricsReport};
use super::placement::place_nodes;

const ROOT: u16 = 0;
/// Minimum spacing between DIS-solicited DIO emissions per node.
const SOLICITED_DIO_GAP: SimTime = SimTime::from_micros(1_000_000);
/// Upper bound on evidence tallies per DIO piggyback.
const LTO_ENTRIES_PER_DIO: usize = 32;
/// Per-observer evidence ledger capacity, sized to the pending table plus
/// the plausible neighbor identity set of a 10 kB-RAM mote.
const LEDGER_CAPACITY: usize = 128;
/// Collective queries cover at most this many identities per round.
const QUERY_TARGET_CAP: usize = 128;
/// Hop budget for upward data forwarding.
const DATA_TTL: u8 = 32;
/// Bounded neighbor table: worst-ranked entries are dropped first.
const CANDIDATE_CAP: usize = 64;
/// Evidence cells idle this long fall out of the root's opinion matrix.
const TALLY_STALE: SimTime = SimTime::from_secs(180);
/// Join solicitation retry period while outside the DODAG.
const JOIN_RETRY: SimTime = SimTime::from_micros(10_000_000);

#[derive(Debug)]
enum Event {
    Boot(u16),
    JoinRetry(u16),
    TrickleFire(u16, u64),
    TrickleEnd(u16, u64),
    Tx(u16, Frame),
    Rx {
        rx: u16,
        tx: u16,
        frame: Frame,
        rssi_dbm: f64,
    },
    AttackStart,
    AttackDis(u16),
    IdentitySwitch(u16),
    QueryTick(u16),
    RoundFinalize(u16),
    DataTick(u16),
    CounterCheck,
    TrustEpoch,
    BaselineEval,
}

struct Node {
    uids: DeviceUids,
    primary_mac: MacAddr,
    dodag: DodagState,
    trickle: TrickleTimer,
    /// Delivery-ratio estimates per neighbor identity.
    links: BTreeMap<MacAddr, LinkStats>,
    ledger: EvidenceLedger,
    query: QueryState,
    energy: EnergyAccount,
    alarm_sent: bool,
    query_started: bool,
    rejoin_pending: bool,
    last_solicited_dio: Option<SimTime>,
    attacker: Option<AttackerState>,
}

impl Node {
    fn is_attacking(&self) -> bool {
        self.attacker.as_ref().is_some_and(|a| a.active)
    }

    fn owns(&self, mac: MacAddr) -> bool {
        if self.primary_mac == mac {
            return true;
        }
        self.attacker.as_ref().is_some_and(|a| a.owns(mac))
    }
}

/// Everything a finished run exposes to the harness and the tests.
pub struct RunOutput {
    pub metrics: MetricsReport,
    pub trace: Vec<TraceRecord>,
    pub final_report: Option<TrustReport>,
    /// Identifier values observed on the wire per (device, family).
    pub uid_observations: BTreeMap<(DeviceId, UidType), BTreeSet<UidValue>>,
    pub control_kinds_seen: BTreeSet<&'static str>,
    pub flagged_devices: BTreeSet<DeviceId>,
    pub attacker_devices: BTreeSet<DeviceId>,
    pub trust_ops_total: u64,
}

pub struct World {
    cfg: ScenarioConfig,
    radio: Radio,
    queue: EventQueue<Event>,
    nodes: Vec<Node>,
    mac_owner: BTreeMap<MacAddr, u16>,
    attackers: BTreeSet<DeviceId>,
    duration: SimTime,
    attack_start: SimTime,
    th_r: SimTime,

    proto_rng: ChaCha8Rng,
    radio_rng: ChaCha8Rng,
    attacker_rng: ChaCha8Rng,

    // Root-side defense state.
    counter: MessageCounter,
    alarm_latched: bool,
    /// (observer, subject) -> (p, n, last update); stale cells are
    /// dropped so the matrix tracks the active identity set.
    tallies: BTreeMap<(MacAddr, MacAddr), (u32, u32, SimTime)>,
    archived_malicious: BTreeSet<MacAddr>,
    flagged_macs: BTreeSet<MacAddr>,
    prev_gr: BTreeMap<MacAddr, f64>,
    gr_view: BTreeMap<MacAddr, f64>,
    link_costs: BTreeMap<(MacAddr, MacAddr), f64>,
    last_report: Option<TrustReport>,
    rssi_profiler: Option<RssiProfiler>,
    id_counter: Option<IdCountDetector>,

    // Metric taps.
    overhead_bytes: u64,
    kinds_seen: BTreeSet<&'static str>,
    data_originated: u64,
    data_delivered: u64,
    data_seq: u64,
    dbg_drop_blackhole: u64,
    dbg_drop_no_parent: u64,
    dbg_drop_ttl: u64,
    dbg_skip_unjoined: u64,
    first_flagged: BTreeMap<DeviceId, SimTime>,
    ever_flagged_devices: BTreeSet<DeviceId>,
    detect_series: Vec<(f64, f64)>,
    uid_observations: BTreeMap<(DeviceId, UidType), BTreeSet<UidValue>>,
    trust_ops_total: u64,
    trace: TraceSink,
}

/// Runs one scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig, trace: TraceSink) -> Result<RunOutput, HarnessError> {
    let mut world = World::new(cfg.clone(), trace)?;
    world.seed_events();
    while let Some(at) = world.queue.peek_at() {
        if at > world.duration {
            break;
        }
        let (_, event) = world.queue.pop().expect("peeked event");
        world.dispatch(event);
    }
    Ok(world.finish())
}

impl World {
    fn new(cfg: ScenarioConfig, trace: TraceSink) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let positions = place_nodes(cfg.node_count, cfg.radio.tx_range_m, cfg.seed)?;
        let radio = Radio::new(cfg.radio.clone(), positions)
            .map_err(|e| HarnessError::Config(e.to_string()))?;

        let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
        let proto_rng = ChaCha8Rng::seed_from_u64(master.gen());
        let radio_rng = ChaCha8Rng::seed_from_u64(master.gen());
        let attacker_rng = ChaCha8Rng::seed_from_u64(master.gen());

        let attacker_count = cfg.attacker_count();
        if cfg.forced_uid_collision && (attacker_count == 0 || attacker_count >= cfg.node_count) {
            return Err(HarnessError::Config(
                "forced_uid_collision needs at least one attacker and one honest node".into(),
            ));
        }
        let attackers: BTreeSet<DeviceId> = (1..=attacker_count).map(DeviceId).collect();

        let mut mac_owner = BTreeMap::new();
        let mut nodes = Vec::with_capacity(usize::from(cfg.node_count) + 1);
        for idx in 0..=cfg.node_count {
            let device = DeviceId(idx);
            let mut uids = DeviceUids::for_device(device, cfg.seed);
            if cfg.forced_uid_collision && idx == cfg.node_count {
                // The last (honest) device shares its silicon serial with
                // the first attacker.
                let donor = DeviceUids::for_device(DeviceId(1), cfg.seed);
                uids.set(
                    UidType::SiliconSerial,
                    donor.get(UidType::SiliconSerial),
                );
            }
            let mac = MacAddr::device_default(device);
            mac_owner.insert(mac, idx);
            let attacker = if attackers.contains(&device) {
                Some(AttackerState::new(
                    cfg.attacker.clone(),
                    device,
                    uids,
                    mac,
                    cfg.radio.tx_power_dbm,
                ))
            } else {
                None
            };
            nodes.push(Node {
                uids,
                primary_mac: mac,
                dodag: DodagState::new(cfg.rpl.pending_capacity),
                trickle: TrickleTimer::new(&cfg.rpl.trickle),
                links: BTreeMap::new(),
                ledger: EvidenceLedger::new(LEDGER_CAPACITY),
                query: QueryState::new(SimTime::from_secs_f64(cfg.query_interval_s)),
                energy: EnergyAccount::default(),
                alarm_sent: false,
                query_started: false,
                rejoin_pending: false,
                last_solicited_dio: None,
                attacker,
            });
        }

        let counter = MessageCounter::new(cfg.counter_window_s as u64);
        let rssi_profiler = (cfg.defense == Defense::RssiProfile)
            .then(|| RssiProfiler::new(&cfg.baselines));
        let id_counter = (cfg.defense == Defense::IdCount)
            .then(|| IdCountDetector::new(&cfg.baselines, cfg.rpl.trickle.i_min_s));

        Ok(World {
            duration: SimTime::from_secs_f64(cfg.duration_s),
            attack_start: SimTime::from_secs_f64(cfg.attack_start_s),
            th_r: SimTime::from_secs_f64(cfg.response_threshold_s),
            radio,
            queue: EventQueue::new(),
            nodes,
            mac_owner,
            attackers,
            proto_rng,
            radio_rng,
            attacker_rng,
            counter,
            alarm_latched: false,
            tallies: BTreeMap::new(),
            archived_malicious: BTreeSet::new(),
            flagged_macs: BTreeSet::new(),
            prev_gr: BTreeMap::new(),
            gr_view: BTreeMap::new(),
            link_costs: BTreeMap::new(),
            last_report: None,
            rssi_profiler,
            id_counter,
            overhead_bytes: 0,
            kinds_seen: BTreeSet::new(),
            data_originated: 0,
            data_delivered: 0,
            data_seq: 0,
            dbg_drop_blackhole: 0,
            dbg_drop_no_parent: 0,
            dbg_drop_ttl: 0,
            dbg_skip_unjoined: 0,
            first_flagged: BTreeMap::new(),
            ever_flagged_devices: BTreeSet::new(),
            detect_series: Vec::new(),
            uid_observations: BTreeMap::new(),
            trust_ops_total: 0,
            trace,
            cfg,
        })
    }

    fn now(&self) -> SimTime {
        self.queue.now()
    }

    fn seed_events(&mut self) {
        let boot_spread = SimTime::from_secs(5).as_micros();
        self.schedule(SimTime::ZERO, Event::Boot(ROOT));
        for idx in 1..=self.cfg.node_count {
            let jitter = self.proto_rng.gen_range(0..boot_spread);
            self.schedule(SimTime::from_micros(jitter), Event::Boot(idx));
        }
        // Data phases are drawn up front so workloads match across defenses.
        let period = SimTime::from_secs_f64(self.cfg.data_period_s).as_micros();
        for idx in 1..=self.cfg.node_count {
            let phase = self.proto_rng.gen_range(0..period);
            self.schedule(
                SimTime::from_micros(period + phase),
                Event::DataTick(idx),
            );
        }
        if !self.attackers.is_empty() {
            self.schedule(self.attack_start, Event::AttackStart);
        }
        match self.cfg.defense {
            Defense::UiTrust => {
                if let Some(th) = self.cfg.counter_threshold {
                    self.counter.set_threshold(th);
                }
                self.schedule(SimTime::from_secs(1), Event::CounterCheck);
                self.schedule(
                    SimTime::from_secs_f64(self.cfg.trust_epoch_s),
                    Event::TrustEpoch,
                );
            }
            Defense::RssiProfile | Defense::IdCount => {
                self.schedule(
                    SimTime::from_secs_f64(self.cfg.trust_epoch_s),
                    Event::BaselineEval,
                );
            }
            Defense::NoneMrhof => {}
        }
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        self.queue
            .schedule(at, event)
            .expect("scheduling respects causality");
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::Boot(dev) => self.on_boot(dev),
            Event::JoinRetry(dev) => self.on_join_retry(dev),
            Event::TrickleFire(dev, version) => self.on_trickle_fire(dev, version),
            Event::TrickleEnd(dev, version) => self.on_trickle_end(dev, version),
            Event::Tx(dev, frame) => self.on_tx(dev, frame),
            Event::Rx {
                rx,
                tx,
                frame,
                rssi_dbm,
            } => self.on_rx(rx, tx, frame, rssi_dbm),
            Event::AttackStart => self.on_attack_start(),
            Event::AttackDis(dev) => self.on_attack_dis(dev),
            Event::IdentitySwitch(dev) => self.on_identity_switch(dev),
            Event::QueryTick(dev) => self.on_query_tick(dev),
            Event::RoundFinalize(dev) => self.on_round_finalize(dev),
            Event::DataTick(dev) => self.on_data_tick(dev),
            Event::CounterCheck => self.on_counter_check(),
            Event::TrustEpoch => self.on_trust_epoch(),
            Event::BaselineEval => self.on_baseline_eval(),
        }
    }

    // ------------------------------------------------------------------
    // Boot and join

    fn on_boot(&mut self, dev: u16) {
        let now = self.now();
        if dev == ROOT {
            let node = &mut self.nodes[usize::from(dev)];
            node.dodag.joined = true;
            node.dodag.rank = ROOT_RANK;
            self.start_trickle(dev);
        } else {
            let mac = self.nodes[usize::from(dev)].primary_mac;
            self.transmit(dev, Frame::dis(mac));
            self.nodes[usize::from(dev)].rejoin_pending = true;
            self.schedule(now + JOIN_RETRY, Event::JoinRetry(dev));
        }
    }

    fn on_join_retry(&mut self, dev: u16) {
        let now = self.now();
        let node = &mut self.nodes[usize::from(dev)];
        if node.dodag.joined {
            node.rejoin_pending = false;
            return;
        }
        self.select_parent(dev);
        let node = &mut self.nodes[usize::from(dev)];
        if node.dodag.joined {
            node.rejoin_pending = false;
            return;
        }
        let mac = node.primary_mac;
        self.transmit(dev, Frame::dis(mac));
        self.schedule(now + JOIN_RETRY, Event::JoinRetry(dev));
    }

    // ------------------------------------------------------------------
    // Trickle-driven DIO emission

    fn start_trickle(&mut self, dev: u16) {
        let now = self.now();
        let plan = self.nodes[usize::from(dev)]
            .trickle
            .start(now, &mut self.proto_rng);
        self.schedule(plan.fire_at, Event::TrickleFire(dev, plan.version));
        self.schedule(plan.interval_end, Event::TrickleEnd(dev, plan.version));
    }

    fn reset_trickle(&mut self, dev: u16) {
        let now = self.now();
        let node = &mut self.nodes[usize::from(dev)];
        if !node.dodag.joined {
            return;
        }
        if let Some(plan) = node.trickle.on_inconsistent(now, &mut self.proto_rng) {
            self.schedule(plan.fire_at, Event::TrickleFire(dev, plan.version));
            self.schedule(plan.interval_end, Event::TrickleEnd(dev, plan.version));
        }
    }

    fn on_trickle_fire(&mut self, dev: u16, version: u64) {
        let node = &mut self.nodes[usize::from(dev)];
        if node.trickle.version != version || !node.dodag.joined {
            return;
        }
        if !node.trickle.should_transmit() {
            return;
        }
        let piggy = if node.dodag.mode == NodeMode::AttackDetection
            && node.attacker.is_none()
            && node.ledger.has_unshipped()
        {
            Some(Piggyback::LtoReport(
                node.ledger.take_unshipped(LTO_ENTRIES_PER_DIO),
            ))
        } else {
            None
        };
        self.emit_dio(dev, piggy);
    }

    fn on_trickle_end(&mut self, dev: u16, version: u64) {
        let now = self.now();
        let node = &mut self.nodes[usize::from(dev)];
        if node.trickle.version != version || !node.dodag.joined {
            return;
        }
        let plan = node.trickle.on_interval_end(now, &mut self.proto_rng);
        self.schedule(plan.fire_at, Event::TrickleFire(dev, plan.version));
        self.schedule(plan.interval_end, Event::TrickleEnd(dev, plan.version));
    }

    fn emit_dio(&mut self, dev: u16, piggy: Option<Piggyback>) {
        let node = &self.nodes[usize::from(dev)];
        let alarm = node.dodag.mode == NodeMode::AttackDetection;
        let frame = Frame::dio(node.primary_mac, node.dodag.rank, alarm, piggy);
        self.transmit(dev, frame);
    }

    // ------------------------------------------------------------------
    // Radio

    fn tx_power_for(&self, dev: u16, _src: MacAddr) -> f64 {
        let node = &self.nodes[usize::from(dev)];
        match &node.attacker {
            Some(a) if a.active => a.power_of(_src).unwrap_or(a.current_power_dbm),
            _ => self.cfg.radio.tx_power_dbm,
        }
    }

    fn transmit(&mut self, dev: u16, frame: Frame) {
        let now = self.now();
        self.schedule(now, Event::Tx(dev, frame));
    }

    fn on_tx(&mut self, dev: u16, frame: Frame) {
        let now = self.now();
        let bytes = frame.bytes;

        if frame.kind.is_control() {
            self.overhead_bytes += u64::from(bytes);
            self.kinds_seen.insert(frame.kind.label());
            if self.cfg.defense == Defense::UiTrust {
                self.counter.record(now);
            }
            if frame.kind == FrameKind::Dis {
                if let Some(idc) = self.id_counter.as_mut() {
                    idc.record_dis(frame.src_mac, now);
                }
            }
            if let Some(entries) = frame.lto_report() {
                for e in entries {
                    if self.archived_malicious.contains(&e.subject)
                        || e.subject == frame.src_mac
                    {
                        continue;
                    }
                    let cell = self
                        .tallies
                        .entry((frame.src_mac, e.subject))
                        .or_insert((0, 0, now));
                    cell.0 = cell.0.max(u32::from(e.p));
                    cell.1 = cell.1.max(u32::from(e.n));
                    cell.2 = now;
                }
            }
        }

        let model = self.cfg.energy.clone();
        model.account(
            &mut self.nodes[usize::from(dev)].energy,
            EnergyAction::TxBytes(bytes),
        );

        let airtime = SimTime::from_secs_f64(model.airtime_secs(bytes));
        let tx_power = self.tx_power_for(dev, frame.src_mac);
        let neighbors: Vec<u16> = self.radio.neighbors(dev).to_vec();
        let mut intended_reached = frame.dst_mac.is_none();
        for rx in neighbors {
            let outcome = self
                .radio
                .deliver(dev, rx, tx_power, &mut self.radio_rng)
                .expect("distinct devices");
            let delivered = matches!(outcome, DeliveryOutcome::Delivered { .. });
            // Link bookkeeping both ways, standing in for L2 acknowledgment
            // and beacon counting.
            let rx_mac = self.nodes[usize::from(rx)].primary_mac;
            self.nodes[usize::from(dev)]
                .links
                .entry(rx_mac)
                .or_default()
                .observe_fwd(delivered);
            self.nodes[usize::from(rx)]
                .links
                .entry(frame.src_mac)
                .or_default()
                .observe_rev(delivered);
            model.account(
                &mut self.nodes[usize::from(rx)].energy,
                EnergyAction::RxBytes(bytes),
            );
            if !self.trace.is_null() {
                let dst = frame.dst_mac.or(Some(rx_mac));
                let _ = self.trace.record(TraceRecord {
                    t: now,
                    kind: frame.kind.label(),
                    src: frame.src_mac,
                    dst,
                    bytes,
                    outcome: outcome.label(),
                });
            }
            if let DeliveryOutcome::Delivered { rssi_dbm } = outcome {
                if let Some(dst) = frame.dst_mac {
                    if self.nodes[usize::from(rx)].owns(dst) {
                        intended_reached = true;
                    }
                }
                self.schedule(
                    now + airtime,
                    Event::Rx {
                        rx,
                        tx: dev,
                        frame: frame.clone(),
                        rssi_dbm,
                    },
                );
            } else if let Some(dst) = frame.dst_mac {
                if self.nodes[usize::from(rx)].owns(dst) {
                    intended_reached = true;
                }
            }
        }
        if !intended_reached && !self.trace.is_null() {
            let _ = self.trace.record(TraceRecord {
                t: now,
                kind: frame.kind.label(),
                src: frame.src_mac,
                dst: frame.dst_mac,
                bytes,
                outcome: "out_of_range",
            });
        }
    }

    fn on_rx(&mut self, rx: u16, _tx: u16, frame: Frame, rssi_dbm: f64) {
        let now = self.now();
        if let Some(profiler) = self.rssi_profiler.as_mut() {
            profiler.record(rx, frame.src_mac, rssi_dbm, now);
        }
        if let Some(dst) = frame.dst_mac {
            if !self.nodes[usize::from(rx)].owns(dst) {
                return; // overheard unicast
            }
        }
        match frame.kind {
            FrameKind::Dis => self.handle_dis(rx, &frame),
            FrameKind::Dio => self.handle_dio(rx, &frame),
            FrameKind::Dao => self.handle_dao(rx, &frame),
            FrameKind::Data => self.handle_data(rx, &frame),
        }
    }

    // ------------------------------------------------------------------
    // Frame handling

    fn handle_dis(&mut self, dev: u16, frame: &Frame) {
        let now = self.now();
        if self.nodes[usize::from(dev)].is_attacking() {
            return;
        }
        if self.flagged_macs.contains(&frame.src_mac) {
            return;
        }
        let actions = {
            let node = &mut self.nodes[usize::from(dev)];
            dodag::handle_dis(&mut node.dodag, frame.src_mac)
        };
        for action in actions {
            match action {
                DisAction::TrickleReset => self.reset_trickle(dev),
                DisAction::EmitDio => {
                    let gap_ok = self.nodes[usize::from(dev)]
                        .last_solicited_dio
                        .is_none_or(|t| now.saturating_sub(t) >= SOLICITED_DIO_GAP);
                    if gap_ok {
                        self.nodes[usize::from(dev)].last_solicited_dio = Some(now);
                        self.emit_dio(dev, None);
                    }
                }
            }
        }
    }

    fn handle_dio(&mut self, dev: u16, frame: &Frame) {
        let src = frame.src_mac;
        if self.nodes[usize::from(dev)].owns(src) {
            return;
        }
        let flagged = self.flagged_macs.contains(&src);

        let mut tracked = false;
        if !flagged {
            let node = &mut self.nodes[usize::from(dev)];
            tracked = Self::track_candidate(node, src, frame.rank);
            node.trickle.heard_consistent();
        }

        if frame.alarm && self.nodes[usize::from(dev)].dodag.mode == NodeMode::Normal {
            self.enter_attack_mode(dev);
        }

        if let Some(query) = frame.query() {
            self.answer_query(dev, src, *query);
        }

        if flagged {
            if self.nodes[usize::from(dev)].dodag.parent == Some(src) {
                self.drop_parent(dev);
            }
            return;
        }
        if !tracked {
            return;
        }

        // Full re-selection is costly; only run it when this advert could
        // actually change the routing decision.
        let node = &self.nodes[usize::from(dev)];
        if !node.dodag.joined {
            self.select_parent(dev);
        } else if node.dodag.parent == Some(src) {
            self.select_parent(dev); // parent advert: refresh rank
        } else if self.candidate_could_win(dev, src, frame.rank) {
            self.select_parent(dev);
        }
    }

    /// Inserts or updates a neighbor-table entry under the capacity bound.
    /// Returns false when the table is full of better-ranked entries.
    fn track_candidate(node: &mut Node, src: MacAddr, rank: u16) -> bool {
        let candidates = &mut node.dodag.candidates;
        if candidates.contains_key(&src) {
            candidates.insert(src, rank);
            return true;
        }
        if candidates.len() < CANDIDATE_CAP {
            candidates.insert(src, rank);
            return true;
        }
        let worst = candidates
            .iter()
            .filter(|(m, _)| Some(**m) != node.dodag.parent)
            .max_by_key(|(m, r)| (**r, **m))
            .map(|(m, r)| (*m, *r));
        match worst {
            Some((wmac, wrank)) if rank < wrank => {
                candidates.remove(&wmac);
                candidates.insert(src, rank);
                true
            }
            _ => false,
        }
    }

    /// Cheap pre-filter: would this candidate beat the current parent under
    /// the active selection metric?
    fn candidate_could_win(&self, dev: u16, src: MacAddr, rank: u16) -> bool {
        let node = &self.nodes[usize::from(dev)];
        let Some(parent) = node.dodag.parent else {
            return true;
        };
        let Some(parent_rank) = node.dodag.candidates.get(&parent).copied() else {
            return true;
        };
        let etx_of = |mac: MacAddr| node.links.get(&mac).map_or(1.0, |l| l.etx());
        let trust_mode = self.cfg.defense == Defense::UiTrust
            && self.last_report.is_some()
            && node.attacker.is_none()
            && node.dodag.mode == NodeMode::AttackDetection;
        if trust_mode {
            if self.classified_honest(parent) && !self.classified_honest(src) {
                return false;
            }
            let my_mac = node.primary_mac;
            let unit = f64::from(self.cfg.rpl.rank_unit);
            let lambda = self.cfg.trust.lambda;
            let cost = |mac: MacAddr, r: u16| {
                trust_rank(
                    f64::from(r) / unit,
                    etx_of(mac),
                    self.trust_link_cost(my_mac, mac),
                    lambda,
                )
            };
            cost(src, rank) < cost(parent, parent_rank)
        } else {
            let challenger = dodag::path_rank(rank, etx_of(src), self.cfg.rpl.rank_unit);
            let incumbent = dodag::path_rank(parent_rank, etx_of(parent), self.cfg.rpl.rank_unit);
            incumbent - challenger > f64::from(self.cfg.rpl.hysteresis)
        }
    }

    fn answer_query(
        &mut self,
        dev: u16,
        querier: MacAddr,
        query: crate::detector::wire::QueryField,
    ) {
        let now = self.now();
        let base_delay = SimTime::from_micros(self.proto_rng.gen_range(20_000..120_000));
        let node = &self.nodes[usize::from(dev)];
        let planned = match &node.attacker {
            Some(attacker) => {
                attacker.respond_to_query(&query, now, self.th_r, &mut self.attacker_rng)
            }
            None => vec![crate::adversary::PlannedResponse {
                src_mac: node.primary_mac,
                uid: node.uids.get(query.uid_type),
                delay: SimTime::ZERO,
            }],
        };
        for (i, pr) in planned.into_iter().enumerate() {
            let response = ResponseField {
                uid_type: query.uid_type,
                uid: pr.uid,
                nonce: query.nonce,
            };
            let spacing = SimTime::from_micros(5_000 * i as u64);
            let frame = Frame::dao(pr.src_mac, querier, Some(response));
            let at = now + base_delay + pr.delay + spacing;
            self.schedule(at, Event::Tx(dev, frame));
        }
    }

    fn handle_dao(&mut self, dev: u16, frame: &Frame) {
        let now = self.now();
        if let Some(resp) = frame.response() {
            if let Some(owner) = self.mac_owner.get(&frame.src_mac) {
                self.uid_observations
                    .entry((DeviceId(*owner), resp.uid_type))
                    .or_default()
                    .insert(resp.uid);
            }
            let node = &mut self.nodes[usize::from(dev)];
            node.query
                .on_response(frame.src_mac, resp, now, &mut node.ledger);
        }
    }

    fn handle_data(&mut self, dev: u16, frame: &Frame) {
        if dev == ROOT {
            self.data_delivered += 1;
            return;
        }
        let node = &self.nodes[usize::from(dev)];
        if node.is_attacking() {
            self.dbg_drop_blackhole += 1;
            return; // blackhole
        }
        if frame.ttl <= 1 {
            self.dbg_drop_ttl += 1;
            return;
        }
        let node = &self.nodes[usize::from(dev)];
        if node.dodag.parent.is_none() {
            self.dbg_drop_no_parent += 1;
        }
        if let Some(parent) = node.dodag.parent {
            let fwd = Frame::data(
                node.primary_mac,
                parent,
                frame.bytes - crate::rpl::message::DATA_HEADER_BYTES,
                frame.data_id,
                frame.ttl - 1,
            );
            self.transmit(dev, fwd);
        }
    }

    // ------------------------------------------------------------------
    // Attack-detection mode, queries, trust

    fn enter_attack_mode(&mut self, dev: u16) {
        let now = self.now();
        {
            let node = &mut self.nodes[usize::from(dev)];
            if node.dodag.mode == NodeMode::AttackDetection {
                return;
            }
            node.dodag.mode = NodeMode::AttackDetection;
        }
        let is_honest = self.nodes[usize::from(dev)].attacker.is_none();
        if is_honest && !self.nodes[usize::from(dev)].alarm_sent {
            self.nodes[usize::from(dev)].alarm_sent = true;
            let jitter = SimTime::from_micros(self.proto_rng.gen_range(10_000..60_000));
            let node = &self.nodes[usize::from(dev)];
            let frame = Frame::dio(node.primary_mac, node.dodag.rank, true, None);
            self.schedule(now + jitter, Event::Tx(dev, frame));
        }
        if is_honest && !self.nodes[usize::from(dev)].query_started {
            self.nodes[usize::from(dev)].query_started = true;
            let jitter = SimTime::from_micros(self.proto_rng.gen_range(500_000..2_500_000));
            self.schedule(now + jitter, Event::QueryTick(dev));
        }
    }

    fn on_query_tick(&mut self, dev: u16) {
        let now = self.now();
        let interval = SimTime::from_secs_f64(self.cfg.query_interval_s);

        let targets: BTreeSet<MacAddr> = {
            let node = &self.nodes[usize::from(dev)];
            node.dodag
                .pending
                .iter()
                .chain(node.dodag.candidates.keys().copied())
                .filter(|m| !self.flagged_macs.contains(m) && !node.owns(*m))
                .take(QUERY_TARGET_CAP)
                .collect()
        };
        let query = {
            let node = &mut self.nodes[usize::from(dev)];
            node.query.issue(now, &targets, &mut node.ledger)
        };
        if let Some(qf) = query {
            self.emit_dio(dev, Some(Piggyback::Query(qf)));
            self.schedule(now + self.th_r + self.th_r, Event::RoundFinalize(dev));
        }
        self.schedule(now + interval, Event::QueryTick(dev));
    }

    fn on_round_finalize(&mut self, dev: u16) {
        let node = &mut self.nodes[usize::from(dev)];
        let summary = node.query.finalize(self.th_r, &mut node.ledger);
        if summary.ledger_changed {
            self.reset_trickle(dev);
        }
    }

    fn on_counter_check(&mut self) {
        let now = self.now();
        if now >= self.duration {
            return;
        }
        if self.counter.threshold().is_none() {
            let calib_start = SimTime::from_micros(self.attack_start.as_micros() / 2);
            if now >= calib_start && now < self.attack_start {
                self.counter.calibration_sample(now);
            }
            if now + SimTime::from_secs(1) >= self.attack_start {
                self.counter.finalize_threshold();
            }
        } else if !self.alarm_latched && self.counter.check(now) == CounterVerdict::Alarm {
            self.alarm_latched = true;
            self.enter_attack_mode(ROOT);
        }
        self.schedule(now + SimTime::from_secs(1), Event::CounterCheck);
    }

    fn on_trust_epoch(&mut self) {
        let now = self.now();
        let epoch = SimTime::from_secs_f64(self.cfg.trust_epoch_s);
        self.schedule(now + epoch, Event::TrustEpoch);
        if !self.alarm_latched || self.tallies.is_empty() {
            return;
        }
        // Identities that stopped producing evidence (rotated away and
        // evicted from every neighbor table) age out of the matrix.
        let stale_horizon = now.saturating_sub(TALLY_STALE);
        self.tallies.retain(|_, (_, _, t)| *t >= stale_horizon);
        if self.tallies.is_empty() {
            return;
        }

        let mut hr: BTreeMap<MacAddr, f64> = BTreeMap::new();
        let observer_macs: BTreeSet<MacAddr> =
            self.tallies.keys().map(|(w, _)| *w).collect();
        for mac in &observer_macs {
            let depth = self.hop_depth(*mac);
            hr.insert(*mac, 1.0 / f64::from(depth));
        }

        let cells: BTreeMap<(MacAddr, MacAddr), (u32, u32)> = self
            .tallies
            .iter()
            .map(|(k, (p, n, _))| (*k, (*p, *n)))
            .collect();
        let owner = &self.mac_owner;
        let radio = &self.radio;
        let matrix = TrustMatrix::from_tallies(&cells, &hr, |w, u| {
            match (owner.get(&w), owner.get(&u)) {
                (Some(a), Some(b)) if a != b => {
                    radio.distance(*a, *b) <= radio.config().tx_range_m
                }
                _ => false,
            }
        });
        let report = trust::evaluate(&matrix, &self.cfg.trust, &self.prev_gr);
        self.trust_ops_total += report.ops;
        self.prev_gr = report.gr.clone();
        self.gr_view = report.gr.clone();
        self.link_costs = report
            .directed
            .iter()
            .map(|e| ((e.from, e.to), e.link_cost))
            .collect();

        let newly_flagged: Vec<MacAddr> = report
            .verdicts
            .iter()
            .filter(|(m, v)| **v == Verdict::Malicious && !self.archived_malicious.contains(*m))
            .map(|(m, _)| *m)
            .collect();
        for mac in &newly_flagged {
            self.archived_malicious.insert(*mac);
            self.tallies
                .retain(|(w, u), _| w != mac && u != mac);
        }
        self.flagged_macs = self.archived_malicious.clone();
        self.last_report = Some(report);

        self.note_flagged(&newly_flagged);
        self.apply_verdicts();
        for dev in 1..=self.cfg.node_count {
            if self.nodes[usize::from(dev)].attacker.is_none() {
                self.select_parent(dev);
            }
        }
        self.push_detection_sample();
    }

    fn on_baseline_eval(&mut self) {
        let now = self.now();
        let epoch = SimTime::from_secs_f64(self.cfg.trust_epoch_s);
        self.schedule(now + epoch, Event::BaselineEval);

        let flags: BTreeSet<MacAddr> = match self.cfg.defense {
            Defense::RssiProfile => self.rssi_profiler.as_ref().map(|p| p.evaluate()),
            Defense::IdCount => self.id_counter.as_ref().map(|d| d.evaluate()),
            _ => None,
        }
        .unwrap_or_default();

        let newly: Vec<MacAddr> = flags
            .iter()
            .filter(|m| !self.flagged_macs.contains(*m))
            .copied()
            .collect();
        self.flagged_macs = flags;
        self.note_flagged(&newly);
        self.apply_verdicts();
        self.push_detection_sample();
    }

    fn note_flagged(&mut self, macs: &[MacAddr]) {
        let now = self.now();
        for mac in macs {
            if let Some(owner) = self.mac_owner.get(mac) {
                let device = DeviceId(*owner);
                self.first_flagged.entry(device).or_insert(now);
                self.ever_flagged_devices.insert(device);
            }
        }
    }

    fn push_detection_sample(&mut self) {
        if self.attackers.is_empty() {
            return;
        }
        let flagged = self
            .attackers
            .iter()
            .filter(|d| self.ever_flagged_devices.contains(d))
            .count();
        self.detect_series.push((
            self.now().as_secs_f64(),
            flagged as f64 / self.attackers.len() as f64,
        ));
    }

    /// Distributes the current verdict set: flagged identities leave
    /// candidate sets, pending tables and parent slots everywhere.
    fn apply_verdicts(&mut self) {
        for dev in 0..=self.cfg.node_count {
            let flagged: Vec<MacAddr> = {
                let node = &self.nodes[usize::from(dev)];
                node.dodag
                    .candidates
                    .keys()
                    .copied()
                    .filter(|m| self.flagged_macs.contains(m))
                    .collect()
            };
            let parent_flagged = {
                let node = &mut self.nodes[usize::from(dev)];
                for mac in &flagged {
                    node.dodag.candidates.remove(mac);
                }
                let pending_flagged: Vec<MacAddr> = node
                    .dodag
                    .pending
                    .iter()
                    .filter(|m| self.flagged_macs.contains(m))
                    .collect();
                for mac in pending_flagged {
                    node.dodag.pending.remove(mac);
                }
                node.dodag
                    .parent
                    .is_some_and(|p| self.flagged_macs.contains(&p))
            };
            if parent_flagged {
                self.drop_parent(dev);
            }
        }
    }

    fn hop_depth(&self, mac: MacAddr) -> u32 {
        let Some(mut dev) = self.mac_owner.get(&mac).copied() else {
            return 64;
        };
        let mut depth = 1u32;
        let mut hops = 0;
        while dev != ROOT && hops < 64 {
            let node = &self.nodes[usize::from(dev)];
            let Some(parent) = node.dodag.parent else {
                return 64;
            };
            let Some(next) = self.mac_owner.get(&parent).copied() else {
                return 64;
            };
            dev = next;
            depth += 1;
            hops += 1;
        }
        if dev == ROOT {
            depth
        } else {
            64
        }
    }

    // ------------------------------------------------------------------
    // Parent selection and data plane

    fn drop_parent(&mut self, dev: u16) {
        if dev == ROOT {
            return;
        }
        {
            let node = &mut self.nodes[usize::from(dev)];
            node.dodag.parent = None;
        }
        self.select_parent(dev);
    }

    fn select_parent(&mut self, dev: u16) {
        if dev == ROOT {
            return;
        }
        let now = self.now();
        let trust_mode = self.cfg.defense == Defense::UiTrust
            && self.last_report.is_some()
            && self.nodes[usize::from(dev)].attacker.is_none()
            && self.nodes[usize::from(dev)].dodag.mode == NodeMode::AttackDetection;

        let (views, current, my_mac) = {
            let node = &self.nodes[usize::from(dev)];
            let views: Vec<CandidateView> = node
                .dodag
                .candidates
                .iter()
                .filter(|(mac, rank)| {
                    !node.owns(**mac)
                        && **rank < RANK_INFINITE
                        && (!node.dodag.joined || **rank < node.dodag.rank)
                })
                .map(|(mac, rank)| CandidateView {
                    mac: *mac,
                    rank: *rank,
                    etx: node
                        .links
                        .get(mac)
                        .map_or(1.0, |l| l.etx()),
                })
                .collect();
            (views, node.dodag.parent, node.primary_mac)
        };

        let choice = if trust_mode {
            self.trust_select(&views, current, my_mac)
        } else {
            dodag::mrhof_select_parent(
                &views,
                current,
                self.cfg.rpl.rank_unit,
                self.cfg.rpl.hysteresis,
            )
        };

        match choice {
            Some(mac) if Some(mac) != current => {
                let view = views.iter().find(|v| v.mac == mac).expect("chosen view");
                let increase = (view.etx * f64::from(self.cfg.rpl.rank_unit))
                    .round()
                    .max(f64::from(self.cfg.rpl.rank_unit))
                    .min(f64::from(RANK_INFINITE - 1) - f64::from(view.rank));
                let new_rank = view.rank + increase as u16;
                let was_joined = {
                    let node = &mut self.nodes[usize::from(dev)];
                    let was = node.dodag.joined;
                    node.dodag.parent = Some(mac);
                    node.dodag.joined = true;
                    node.dodag.rank = new_rank;
                    was
                };
                let own_mac = self.nodes[usize::from(dev)].primary_mac;
                self.transmit(dev, Frame::dao(own_mac, mac, None));
                if was_joined {
                    self.reset_trickle(dev);
                } else {
                    self.start_trickle(dev);
                }
            }
            Some(mac) => {
                // Parent kept; refresh rank against its current advert.
                let view = views.iter().find(|v| v.mac == mac).expect("current view");
                let increase = (view.etx * f64::from(self.cfg.rpl.rank_unit))
                    .round()
                    .max(f64::from(self.cfg.rpl.rank_unit))
                    .min(f64::from(RANK_INFINITE - 1) - f64::from(view.rank));
                let new_rank = view.rank + increase as u16;
                let node = &mut self.nodes[usize::from(dev)];
                let drift = i32::from(new_rank) - i32::from(node.dodag.rank);
                node.dodag.rank = new_rank;
                if drift.unsigned_abs() >= u32::from(self.cfg.rpl.rank_unit) {
                    self.reset_trickle(dev);
                }
            }
            None => {
                let node = &mut self.nodes[usize::from(dev)];
                if node.dodag.joined {
                    // Poisoned: leave the DODAG and re-solicit.
                    node.dodag.joined = false;
                    node.dodag.parent = None;
                    node.dodag.rank = RANK_INFINITE;
                    if !node.rejoin_pending {
                        node.rejoin_pending = true;
                        self.schedule(now + JOIN_RETRY, Event::JoinRetry(dev));
                    }
                }
            }
        }
    }

    /// Link cost toward a candidate while the attack alarm is latched:
    /// the directional trust chain when the root has evaluated this pair,
    /// the nodal reputation when only that is known, and full distrust for
    /// identities with no evidence at all. Routing under attack goes
    /// through vouched-for neighbors only.
    fn trust_link_cost(&self, from: MacAddr, to: MacAddr) -> f64 {
        if let Some(l) = self.link_costs.get(&(from, to)) {
            return *l;
        }
        match self.gr_view.get(&to) {
            Some(gr) => 1.0 - gr,
            None => 1.0,
        }
    }

    /// Whether the root has vouched for this identity this epoch.
    fn classified_honest(&self, mac: MacAddr) -> bool {
        self.gr_view
            .get(&mac)
            .is_some_and(|gr| *gr >= self.cfg.trust.theta)
    }

    fn trust_select(
        &self,
        views: &[CandidateView],
        current: Option<MacAddr>,
        my_mac: MacAddr,
    ) -> Option<MacAddr> {
        let unit = f64::from(self.cfg.rpl.rank_unit);
        let lambda = self.cfg.trust.lambda;
        let cost_of = |v: &CandidateView| -> f64 {
            trust_rank(
                f64::from(v.rank) / unit,
                v.etx,
                self.trust_link_cost(my_mac, v.mac),
                lambda,
            )
        };
        // Routing under an active attack stays on identities the root has
        // classified honest; identities without evidence are not eligible
        // unless nothing vouched-for is in range.
        let any_vouched = views.iter().any(|v| self.classified_honest(v.mac));
        let eligible = |v: &CandidateView| !any_vouched || self.classified_honest(v.mac);
        let mut best: Option<(f64, MacAddr)> = None;
        let mut current_cost = None;
        for v in views {
            if !eligible(v) {
                continue;
            }
            let c = cost_of(v);
            if !c.is_finite() {
                continue;
            }
            if Some(v.mac) == current {
                current_cost = Some(c);
            }
            match best {
                None => best = Some((c, v.mac)),
                Some((bc, bm)) if c < bc || (c == bc && v.mac < bm) => best = Some((c, v.mac)),
                _ => {}
            }
        }
        let (best_cost, best_mac) = best?;
        if let (Some(cur), Some(cur_cost)) = (current, current_cost) {
            if best_mac != cur {
                return match maybe_switch_parent(cur_cost, best_cost) {
                    SwitchDecision::Switch => Some(best_mac),
                    SwitchDecision::Keep => Some(cur),
                };
            }
        }
        Some(best_mac)
    }

    fn on_data_tick(&mut self, dev: u16) {
        let now = self.now();
        let period = SimTime::from_secs_f64(self.cfg.data_period_s);
        self.schedule(now + period, Event::DataTick(dev));
        let node = &self.nodes[usize::from(dev)];
        if node.attacker.is_some() {
            return;
        }
        if !node.dodag.joined {
            self.dbg_skip_unjoined += 1;
            return;
        }
        let Some(parent) = node.dodag.parent else {
            return;
        };
        self.data_seq += 1;
        self.data_originated += 1;
        let frame = Frame::data(
            node.primary_mac,
            parent,
            self.cfg.data_bytes,
            self.data_seq,
            DATA_TTL,
        );
        self.transmit(dev, frame);
    }

    // ------------------------------------------------------------------
    // Attack lifecycle

    fn on_attack_start(&mut self) {
        let now = self.now();
        let rate = SimTime::from_secs_f64(1.0 / self.cfg.attacker.dis_rate_hz);
        let switch = SimTime::from_secs_f64(self.cfg.attacker.identity_switch_period_s);
        let devices: Vec<u16> = self.attackers.iter().map(|d| d.0).collect();
        for dev in devices {
            {
                let node = &mut self.nodes[usize::from(dev)];
                let attacker = node.attacker.as_mut().expect("attacker state");
                attacker.active = true;
            }
            self.switch_identity(dev);
            let jitter = SimTime::from_micros(self.attacker_rng.gen_range(0..rate.as_micros().max(1)));
            self.schedule(now + jitter, Event::AttackDis(dev));
            self.schedule(now + switch, Event::IdentitySwitch(dev));
        }
    }

    fn switch_identity(&mut self, dev: u16) {
        let now = self.now();
        let (mac, _power) = {
            let node = &mut self.nodes[usize::from(dev)];
            let attacker = node.attacker.as_mut().expect("attacker state");
            attacker.next_fake_identity(now, &mut self.attacker_rng)
        };
        self.mac_owner.insert(mac, dev);
        self.nodes[usize::from(dev)].primary_mac = mac;
        // Announce the fresh identity so it enters candidate sets.
        let announce_jitter = SimTime::from_micros(self.attacker_rng.gen_range(50_000..250_000));
        let node = &self.nodes[usize::from(dev)];
        let frame = Frame::dio(mac, node.dodag.rank, false, None);
        self.schedule(now + announce_jitter, Event::Tx(dev, frame));
    }

    fn on_attack_dis(&mut self, dev: u16) {
        let now = self.now();
        let node = &self.nodes[usize::from(dev)];
        if !node.is_attacking() {
            return;
        }
        let frame = Frame::dis(node.primary_mac);
        self.transmit(dev, frame);
        let rate = SimTime::from_secs_f64(1.0 / self.cfg.attacker.dis_rate_hz);
        self.schedule(now + rate, Event::AttackDis(dev));
    }

    fn on_identity_switch(&mut self, dev: u16) {
        let now = self.now();
        if !self.nodes[usize::from(dev)].is_attacking() {
            return;
        }
        self.switch_identity(dev);
        let switch = SimTime::from_secs_f64(self.cfg.attacker.identity_switch_period_s);
        self.schedule(now + switch, Event::IdentitySwitch(dev));
    }

    // ------------------------------------------------------------------
    // Wrap-up

    fn finish(mut self) -> RunOutput {
        if std::env::var_os("UITRUST_DEBUG").is_some() {
            let joined = self
                .nodes
                .iter()
                .filter(|n| n.attacker.is_none() && n.dodag.joined)
                .count();
            eprintln!(
                "debug: delivered={} originated={} blackhole={} fwd_no_parent={} ttl={} skipped_unjoined={} honest_joined_at_end={} flagged_macs={}",
                self.data_delivered, self.data_originated, self.dbg_drop_blackhole,
                self.dbg_drop_no_parent, self.dbg_drop_ttl, self.dbg_skip_unjoined,
                joined, self.flagged_macs.len()
            );
        }
        let devices: Vec<DeviceId> = (1..=self.cfg.node_count).map(DeviceId).collect();
        let flagged_devices: BTreeSet<DeviceId> = self
            .flagged_macs
            .iter()
            .filter_map(|m| self.mac_owner.get(m))
            .map(|d| DeviceId(*d))
            .filter(|d| d.0 != ROOT)
            .collect();
        let (rate, fp, fn_) = misdetection_rate(&devices, &self.attackers, &flagged_devices);

        let first_flagged_s: BTreeMap<DeviceId, f64> = self
            .first_flagged
            .iter()
            .map(|(d, t)| (*d, t.as_secs_f64()))
            .collect();
        let latency = detection_latency_s(
            &self.attackers,
            &first_flagged_s,
            self.attack_start.as_secs_f64(),
        );

        let pdr = if self.data_originated == 0 {
            1.0
        } else {
            self.data_delivered as f64 / self.data_originated as f64
        };
        let energy_j: f64 = self.nodes.iter().map(|n| n.energy.total_joules()).sum();
        let pending_evictions: u64 = self
            .nodes
            .iter()
            .map(|n| n.dodag.pending.evictions + n.ledger.evictions)
            .sum();

        let metrics = MetricsReport {
            scenario_id: self.cfg.scenario_id.clone(),
            seed: self.cfg.seed,
            defense: self.cfg.defense,
            sybil_ratio: self.cfg.sybil_ratio,
            misdetection_rate: rate,
            false_positives: fp,
            false_negatives: fn_,
            pdr,
            detection_latency_s: latency,
            overhead_bytes: self.overhead_bytes,
            energy_j,
            detection_ratio_timeseries: std::mem::take(&mut self.detect_series),
            data_originated: self.data_originated,
            data_delivered: self.data_delivered,
            pending_evictions,
        };

        let trace = match std::mem::replace(&mut self.trace, TraceSink::Null) {
            TraceSink::Memory(records) => records,
            _ => Vec::new(),
        };

        RunOutput {
            metrics,
            trace,
            final_report: self.last_report,
            uid_observations: self.uid_observations,
            control_kinds_seen: self.kinds_seen,
            flagged_devices,
            attacker_devices: self.attackers,
            trust_ops_total: self.trust_ops_total,
        }
    }
}
