//! Discrete-event simulation of file requests, D2D downloads, base-station
//! downloads, and repair under each caching policy, with full energy
//! accounting.
//!
//! A single event loop drives three event streams over `[0, horizon]`:
//! node arrivals (rate N/T), node departures (one per node, Exp(T) after
//! arrival), and per-node request clocks (rate ω each, so the aggregate
//! request rate tracks the instantaneous population n(t)·ω). Requesters are
//! drawn uniformly from live nodes that are not currently caching, so every
//! request is a real transfer.
//!
//! Energy is tracked as event counts times exact unit costs, so per-event
//! cost identities survive bit-exactly.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, PolicySpec, SystemParams};
use crate::codes::mbr_params;
use crate::error::ParamError;
use crate::population::{sample_initial_count, NodeId};
use crate::seed::derive_seed;

/// Simulation run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Horizon in units of the node lifetime T.
    pub horizon_multiplier: f64,
    /// Base seed; replication r runs with a sub-seed derived from (seed, r).
    pub seed: u64,
    pub replications: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon_multiplier: 2000.0,
            seed: 0,
            replications: 20,
        }
    }
}

impl SimConfig {
    fn validate(&self, lifetime: f64) -> Result<f64, ParamError> {
        let horizon = self.horizon_multiplier * lifetime;
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(ParamError::Config(format!(
                "horizon {horizon} must be finite and > 0"
            )));
        }
        if self.replications < 1 {
            return Err(ParamError::Config("replications must be >= 1".into()));
        }
        Ok(horizon)
    }
}

/// Energy accounting over a simulated horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Energy spent on base-station downloads (R per whole file).
    pub bs_energy: f64,
    /// Energy spent on D2D downloads serving requests.
    pub d2d_download_energy: f64,
    /// Energy spent repairing lost cached data.
    pub repair_energy: f64,
    /// Requests that fell back to the base station because the cached
    /// redundancy was lost.
    pub bs_fallback_count: u64,
    pub horizon: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.bs_energy + self.d2d_download_energy + self.repair_energy
    }

    /// Cost rate: total energy over the configured horizon. This is the
    /// quantity compared against the analytic formulas.
    pub fn rate(&self) -> f64 {
        self.total() / self.horizon
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub request_count: u64,
    pub local_hit_count: u64,
    pub repair_count: u64,
    pub mean_population: f64,
}

/// One row of the optional event trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub time: f64,
    pub event_kind: &'static str,
    pub node_id: u64,
    pub energy_delta: f64,
    pub population: u64,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrival,
    Departure(NodeId),
    RequestTick(NodeId),
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // ties on identical timestamps broken by insertion sequence
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Set of live nodes with O(1) insert, remove and uniform sampling.
struct LiveSet {
    ids: Vec<NodeId>,
    pos: HashMap<NodeId, usize>,
}

impl LiveSet {
    fn new() -> Self {
        LiveSet {
            ids: Vec::new(),
            pos: HashMap::new(),
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn insert(&mut self, id: NodeId) {
        debug_assert!(!self.pos.contains_key(&id));
        self.pos.insert(id, self.ids.len());
        self.ids.push(id);
    }

    fn remove(&mut self, id: NodeId) -> bool {
        match self.pos.remove(&id) {
            None => false,
            Some(i) => {
                let last = self.ids.pop().unwrap();
                if last != id {
                    self.ids[i] = last;
                    self.pos.insert(last, i);
                }
                true
            }
        }
    }

    fn contains(&self, id: NodeId) -> bool {
        self.pos.contains_key(&id)
    }

    /// Uniform sample among live nodes for which `admit` holds.
    fn sample_where<R: Rng, F: Fn(NodeId) -> bool>(&self, rng: &mut R, admit: F) -> Option<NodeId> {
        if self.ids.is_empty() {
            return None;
        }
        // rejection sampling; the excluded set (cachers) is tiny vs N
        for _ in 0..64 {
            let id = self.ids[rng.gen_range(0..self.ids.len())];
            if admit(id) {
                return Some(id);
            }
        }
        let candidates: Vec<NodeId> = self.ids.iter().copied().filter(|&id| admit(id)).collect();
        if candidates.is_empty() {
            None
        } else {
            Some(candidates[rng.gen_range(0..candidates.len())])
        }
    }
}

/// Caching state machine shared by 2-replication and MBR. 2-replication is
/// the whole-file instance: two slots, unit request and repair costs.
struct RedundantState {
    /// slot index = block index; entries are always live nodes
    slots: Vec<Option<NodeId>>,
    /// live holders needed to serve a request or regenerate a block
    min_survivors: usize,
    request_cost: f64,
    repair_cost: f64,
    /// per-slot cost of re-seeding after a BS fallback (1 for 2-replication,
    /// 0 for MBR where re-seeding rides on the fetched file)
    reseed_cost: f64,
}

enum PolicyState {
    BsOnly,
    Simple { cacher: Option<NodeId> },
    Redundant(RedundantState),
}

impl PolicyState {
    fn new(spec: PolicySpec) -> Result<Self, ParamError> {
        spec.validate()?;
        Ok(match spec {
            PolicySpec::BaseStationOnly => PolicyState::BsOnly,
            PolicySpec::SimpleCaching => PolicyState::Simple { cacher: None },
            PolicySpec::Replication2 => PolicyState::Redundant(RedundantState {
                slots: vec![None; 2],
                min_survivors: 1,
                request_cost: 1.0,
                repair_cost: 1.0,
                reseed_cost: 1.0,
            }),
            PolicySpec::MbrRegenerating { k } => {
                let code = mbr_params(k)?;
                PolicyState::Redundant(RedundantState {
                    slots: vec![None; code.n as usize],
                    min_survivors: k as usize,
                    request_cost: code.retrieval_bandwidth_f64(),
                    repair_cost: code.repair_bandwidth_f64(),
                    reseed_cost: 0.0,
                })
            }
        })
    }

    fn is_holder(&self, id: NodeId) -> bool {
        match self {
            PolicyState::BsOnly => false,
            PolicyState::Simple { cacher } => *cacher == Some(id),
            PolicyState::Redundant(s) => s.slots.contains(&Some(id)),
        }
    }
}

struct Sim {
    params: SystemParams,
    horizon: f64,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    live: LiveSet,
    next_id: u64,
    now: f64,
    state: PolicyState,
    // counters; energies are derived as count * unit cost
    bs_fetches: u64,
    d2d_hits: u64,
    repairs: u64,
    fallback_reseeds: u64,
    bs_fallbacks: u64,
    request_count: u64,
    // time-weighted population integral
    pop_integral: f64,
    last_pop_time: f64,
    trace: Option<Vec<TraceRow>>,
}

impl Sim {
    fn schedule(&mut self, time: f64, event: Event) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Scheduled { time, seq, event }));
    }

    fn exp_after(&mut self, rate: f64) -> f64 {
        self.now + Exp::new(rate).unwrap().sample(&mut self.rng)
    }

    fn advance_population_clock(&mut self) {
        self.pop_integral += self.live.len() as f64 * (self.now - self.last_pop_time);
        self.last_pop_time = self.now;
    }

    fn record(&mut self, event_kind: &'static str, node: NodeId, energy_delta: f64) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRow {
                time: self.now,
                event_kind,
                node_id: node.0,
                energy_delta,
                population: self.live.len() as u64,
            });
        }
    }

    fn spawn_node(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.live.insert(id);
        let lifetime_rate = self.params.departure_rate();
        let dep = self.exp_after(lifetime_rate);
        self.schedule(dep, Event::Departure(id));
        let tick = self.exp_after(self.params.request_rate);
        self.schedule(tick, Event::RequestTick(id));
        id
    }

    fn sample_idle(&mut self) -> Option<NodeId> {
        let state = &self.state;
        self.live.sample_where(&mut self.rng, |id| !state.is_holder(id))
    }

    /// Fills empty redundancy slots while enough survivors and idle nodes
    /// exist, charging the repair bandwidth per regenerated block.
    fn attempt_repairs(&mut self) {
        loop {
            let (empty_slot, survivors) = match &self.state {
                PolicyState::Redundant(s) => (
                    s.slots.iter().position(Option::is_none),
                    s.slots.iter().filter(|h| h.is_some()).count(),
                ),
                _ => return,
            };
            let Some(slot) = empty_slot else { return };
            let min = match &self.state {
                PolicyState::Redundant(s) => s.min_survivors,
                _ => unreachable!(),
            };
            if survivors < min {
                return; // degraded; only a BS fallback can restore this
            }
            let Some(newcomer) = self.sample_idle() else { return };
            if let PolicyState::Redundant(s) = &mut self.state {
                s.slots[slot] = Some(newcomer);
            }
            self.repairs += 1;
            let cost = match &self.state {
                PolicyState::Redundant(s) => s.repair_cost,
                _ => unreachable!(),
            };
            self.record("repair", newcomer, cost);
        }
    }

    fn on_arrival(&mut self) {
        self.advance_population_clock();
        let id = self.spawn_node();
        let next = self.exp_after(self.params.arrival_rate());
        self.schedule(next, Event::Arrival);
        self.record("arrival", id, 0.0);
        // a pending repair may have been waiting for an idle node
        self.attempt_repairs();
    }

    fn on_departure(&mut self, id: NodeId) {
        self.advance_population_clock();
        self.live.remove(id);
        self.record("departure", id, 0.0);
        match &mut self.state {
            PolicyState::BsOnly => {}
            PolicyState::Simple { cacher } => {
                if *cacher == Some(id) {
                    *cacher = None;
                }
            }
            PolicyState::Redundant(s) => {
                if let Some(slot) = s.slots.iter().position(|h| *h == Some(id)) {
                    s.slots[slot] = None;
                    self.attempt_repairs();
                }
            }
        }
    }

    fn on_request_tick(&mut self, id: NodeId) {
        if !self.live.contains(id) {
            return; // stale clock of a departed node
        }
        let next = self.exp_after(self.params.request_rate);
        self.schedule(next, Event::RequestTick(id));
        let Some(requester) = self.sample_idle() else {
            return; // every live node is caching; nothing to transfer
        };
        self.request_count += 1;
        let r = self.params.cost_ratio;
        match &mut self.state {
            PolicyState::BsOnly => {
                self.bs_fetches += 1;
                self.record("request_bs", requester, r);
            }
            PolicyState::Simple { cacher } => {
                if cacher.is_some() {
                    self.d2d_hits += 1;
                    self.record("request_d2d", requester, 1.0);
                } else {
                    *cacher = Some(requester);
                    self.bs_fetches += 1;
                    self.record("request_bs", requester, r);
                }
            }
            PolicyState::Redundant(s) => {
                let survivors = s.slots.iter().filter(|h| h.is_some()).count();
                if survivors >= s.min_survivors {
                    let cost = s.request_cost;
                    self.d2d_hits += 1;
                    self.record("request_d2d", requester, cost);
                } else {
                    // redundancy lost: whole file refetched from the BS,
                    // requester seeds the first empty slot for free
                    self.bs_fetches += 1;
                    self.bs_fallbacks += 1;
                    if let Some(slot) = s.slots.iter().position(Option::is_none) {
                        s.slots[slot] = Some(requester);
                    }
                    self.record("request_bs", requester, r);
                    self.reseed_remaining_slots();
                }
            }
        }
    }

    /// After a BS fallback, refills the remaining empty slots from idle
    /// nodes. 2-replication pays one whole-file copy per slot; MBR blocks
    /// are re-seeded alongside the fetched file at no extra D2D cost.
    fn reseed_remaining_slots(&mut self) {
        loop {
            let empty = match &self.state {
                PolicyState::Redundant(s) => s.slots.iter().position(Option::is_none),
                _ => return,
            };
            let Some(slot) = empty else { return };
            let Some(newcomer) = self.sample_idle() else { return };
            let cost = if let PolicyState::Redundant(s) = &mut self.state {
                s.slots[slot] = Some(newcomer);
                s.reseed_cost
            } else {
                unreachable!()
            };
            self.fallback_reseeds += 1;
            self.record("reseed", newcomer, cost);
        }
    }

    /// Seeds the initial caching set at t = 0 at zero cost.
    fn seed_initial_cache(&mut self) {
        let want = match &self.state {
            PolicyState::BsOnly => 0,
            PolicyState::Simple { .. } => 1,
            PolicyState::Redundant(s) => s.slots.len(),
        };
        let take = want.min(self.live.len());
        if take == 0 {
            return;
        }
        let picks: Vec<NodeId> = index_sample(&mut self.rng, self.live.len(), take)
            .into_iter()
            .map(|i| self.live.ids[i])
            .collect();
        match &mut self.state {
            PolicyState::Simple { cacher } => *cacher = Some(picks[0]),
            PolicyState::Redundant(s) => {
                for (slot, id) in picks.into_iter().enumerate() {
                    s.slots[slot] = Some(id);
                }
            }
            PolicyState::BsOnly => {}
        }
    }

    fn run(mut self) -> (CostBreakdown, RunStats, Option<Vec<TraceRow>>) {
        while let Some(Reverse(next)) = self.heap.pop() {
            if next.time > self.horizon {
                break;
            }
            self.now = next.time;
            match next.event {
                Event::Arrival => self.on_arrival(),
                Event::Departure(id) => self.on_departure(id),
                Event::RequestTick(id) => self.on_request_tick(id),
            }
        }
        self.now = self.horizon;
        self.advance_population_clock();

        let (request_cost, repair_cost, reseed_cost) = match &self.state {
            PolicyState::Redundant(s) => (s.request_cost, s.repair_cost, s.reseed_cost),
            _ => (1.0, 0.0, 0.0),
        };
        let breakdown = CostBreakdown {
            bs_energy: self.bs_fetches as f64 * self.params.cost_ratio,
            d2d_download_energy: self.d2d_hits as f64 * request_cost,
            repair_energy: self.repairs as f64 * repair_cost
                + self.fallback_reseeds as f64 * reseed_cost,
            bs_fallback_count: self.bs_fallbacks,
            horizon: self.horizon,
        };
        let stats = RunStats {
            request_count: self.request_count,
            local_hit_count: self.d2d_hits,
            repair_count: self.repairs,
            mean_population: self.pop_integral / self.horizon,
        };
        (breakdown, stats, self.trace)
    }
}

fn build_sim(
    p: &SystemParams,
    policy: PolicySpec,
    cfg: &SimConfig,
    seed: u64,
    with_trace: bool,
) -> Result<Sim, ParamError> {
    let horizon = cfg.validate(p.lifetime)?;
    let mut sim = Sim {
        params: *p,
        horizon,
        rng: ChaCha8Rng::seed_from_u64(seed),
        heap: BinaryHeap::new(),
        seq: 0,
        live: LiveSet::new(),
        next_id: 0,
        now: 0.0,
        state: PolicyState::new(policy)?,
        bs_fetches: 0,
        d2d_hits: 0,
        repairs: 0,
        fallback_reseeds: 0,
        bs_fallbacks: 0,
        request_count: 0,
        pop_integral: 0.0,
        last_pop_time: 0.0,
        trace: with_trace.then(Vec::new),
    };
    // stationary start: Poisson(N) nodes with Exp(T) residual lifetimes
    let initial = sample_initial_count(&mut sim.rng, p.expected_nodes);
    for _ in 0..initial {
        sim.spawn_node();
    }
    let first_arrival = sim.exp_after(p.arrival_rate());
    sim.schedule(first_arrival, Event::Arrival);
    sim.seed_initial_cache();
    Ok(sim)
}

/// Runs one simulation of `policy` under `p` with the given seed.
pub fn run_simulation(
    p: &SystemParams,
    policy: PolicySpec,
    cfg: &SimConfig,
) -> Result<(CostBreakdown, RunStats), ParamError> {
    let (breakdown, stats, _) = build_sim(p, policy, cfg, cfg.seed, false)?.run();
    Ok((breakdown, stats))
}

/// As [`run_simulation`] but also returns the per-event trace.
pub fn run_simulation_with_trace(
    p: &SystemParams,
    policy: PolicySpec,
    cfg: &SimConfig,
) -> Result<(CostBreakdown, RunStats, Vec<TraceRow>), ParamError> {
    let (breakdown, stats, trace) = build_sim(p, policy, cfg, cfg.seed, true)?.run();
    Ok((breakdown, stats, trace.unwrap()))
}

/// Aggregate over independent replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub mean_rate: f64,
    pub sample_std: f64,
    pub std_error: f64,
    pub rates: Vec<f64>,
    pub replications: u32,
    pub seed: u64,
    pub runs: Vec<(CostBreakdown, RunStats)>,
}

/// Runs `cfg.replications` independent simulations with sub-seeds derived
/// from `(cfg.seed, r)`. Replications run in parallel; results are merged in
/// replication order, so the summary is deterministic.
pub fn run_replicated(
    p: &SystemParams,
    policy: PolicySpec,
    cfg: &SimConfig,
) -> Result<ReplicationSummary, ParamError> {
    cfg.validate(p.lifetime)?;
    let runs: Vec<(CostBreakdown, RunStats)> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let sub = SimConfig {
                seed: derive_seed(cfg.seed, r),
                replications: 1,
                ..*cfg
            };
            run_simulation(p, policy, &sub)
        })
        .collect::<Result<_, _>>()?;
    let rates: Vec<f64> = runs.iter().map(|(b, _)| b.rate()).collect();
    let n = rates.len() as f64;
    let mean_rate = rates.iter().sum::<f64>() / n;
    let sample_std = if rates.len() > 1 {
        (rates.iter().map(|x| (x - mean_rate).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ReplicationSummary {
        mean_rate,
        sample_std,
        std_error: sample_std / n.sqrt(),
        rates,
        replications: cfg.replications,
        seed: cfg.seed,
        runs,
    })
}

/// Relative error of the simulated mean rate against the matching analytic
/// formula.
pub fn compare_to_analytic(
    p: &SystemParams,
    policy: PolicySpec,
    cfg: &SimConfig,
) -> Result<f64, ParamError> {
    let summary = run_replicated(p, policy, cfg)?;
    let expected = match policy {
        PolicySpec::BaseStationOnly => analytic::cost_bs_only(p),
        PolicySpec::SimpleCaching => analytic::cost_simple(p),
        PolicySpec::Replication2 => analytic::cost_2rep(p),
        PolicySpec::MbrRegenerating { k } => analytic::cost_mbr(p, k),
    };
    Ok((summary.mean_rate - expected).abs() / expected)
}
