//! Seeded discrete-event simulation of the offloading lifecycle.
//!
//! One episode runs a sequence of applications on a device that moves
//! through every cell once. For each task the device reads reputation,
//! snapshots the analytic queue state, decides, offloads (possibly failing
//! and retrying) and submits the attempt reports to the ledger, whose
//! updates become visible after the consensus delay.

mod events;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use events::{Event, EventKind, EventQueue};

use crate::decision::{
    fresco_offload, Candidate, Capacity, ConstraintSet, OffloadOutcome, Policy, Prediction, ScoreWeights, TaskDemand,
    TaskInput, TierNabla,
};
use crate::infra::{Channel, InfrastructureMap, Node, NodeClass, NodeId, Tier, BITS_PER_KB};
use crate::ledger::{FixedRep, Ledger, LedgerConfig};
use crate::perf::{
    comm_utilization, exec_utilization, response_time, task_energy, tx_power, utilization_cost, CostSchedule,
    EnergyPlacement, EnergyState, ExecWaitModel, Flow, LatencyBreakdown, Placement, RemoteSnapshot, TaskLoad,
};
use crate::rng::{stream, SimRng};
use crate::workload::{ready_tasks, sample_background_load, AppCatalog, AppDag, AppName, WorkloadProfile};
use crate::{Error, Result};

/// Episode parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Applications per episode.
    pub apps: usize,
    /// Independent episodes per engine.
    pub runs: usize,
    /// Gap between application arrivals, ms.
    pub app_interval_ms: f64,
    pub workload: WorkloadProfile,
    pub weights: ScoreWeights,
    /// Reputation pool size for FRESCO and SQ.
    pub k: usize,
    /// Price cap p_r; unbounded when absent.
    pub price_cap: Option<f64>,
    pub instructions_per_cycle: f64,
    pub exec_wait: ExecWaitModel,
    pub ledger: LedgerConfig,
    pub energy: EnergyState,
    pub cost: CostSchedule,
    pub catalog: AppCatalog,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            apps: 100,
            runs: 100,
            app_interval_ms: 5000.0,
            workload: WorkloadProfile::default(),
            weights: ScoreWeights::default(),
            k: 3,
            price_cap: None,
            instructions_per_cycle: 1.0,
            exec_wait: ExecWaitModel::default(),
            ledger: LedgerConfig::default(),
            energy: EnergyState::default(),
            cost: CostSchedule::default(),
            catalog: AppCatalog::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.apps == 0 || self.runs == 0 || self.k == 0 {
            return Err(Error::Config("apps, runs and k must be positive".into()));
        }
        if !(self.app_interval_ms > 0.0 && self.instructions_per_cycle > 0.0) {
            return Err(Error::Config(
                "app interval and instructions per cycle must be positive".into(),
            ));
        }
        if self.price_cap.is_some_and(|p| !(p >= 0.0)) {
            return Err(Error::Config("price cap must be non-negative".into()));
        }
        self.workload.validate()?;
        self.weights.validate()?;
        self.energy.validate()?;
        self.cost.validate()?;
        for app in &self.catalog.apps {
            app.validate()?;
        }
        Ok(())
    }

    /// Length of an episode on the simulation clock, ms.
    pub fn episode_span_ms(&self) -> f64 {
        self.apps as f64 * self.app_interval_ms
    }

    /// Builds the engine's selection policy.
    pub fn policy(&self, engine: Engine) -> Policy {
        match engine {
            Engine::Fresco => Policy::Fresco { k: self.k },
            Engine::Minlp => Policy::Minlp,
            Engine::Sq => Policy::Sq { k: self.k },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Engine {
    Fresco,
    Minlp,
    Sq,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Fresco, Engine::Minlp, Engine::Sq];

    pub fn label(self) -> &'static str {
        match self {
            Engine::Fresco => "FRESCO",
            Engine::Minlp => "MINLP",
            Engine::Sq => "SQ",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown engine `{s}`")))
    }
}

/// Per-application outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run: usize,
    pub app: usize,
    pub engine: Engine,
    pub app_name: AppName,
    /// Application response time AP, ms.
    pub rt_ms: f64,
    /// Device battery left when the application finished, percent.
    pub battery_pct: f64,
    pub cost: f64,
    pub violated: bool,
    pub failures: usize,
    /// Gas charged while the application ran, Wei.
    pub gas_wei: u64,
    pub deadline_ms: f64,
}

/// Where one task ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub run: usize,
    pub app: usize,
    pub engine: Engine,
    pub task: usize,
    pub task_name: String,
    pub offloadable: bool,
    pub node: NodeId,
    pub class: NodeClass,
    /// Attempts made, including the successful one.
    pub attempts: usize,
    pub failures: usize,
    /// The selection loop gave up and the task ran on the device.
    pub fallback: bool,
    pub rt_ms: f64,
    /// Highest queue utilization on the chosen path.
    pub max_util: f64,
}

/// Decision trace line; wall times are not reproducible and are kept apart
/// from the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub run: usize,
    pub app: usize,
    pub engine: Engine,
    pub task: usize,
    pub candidates: usize,
    pub solver_calls: usize,
    pub verdict: String,
    pub decision_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub metrics: Vec<MetricsRecord>,
    pub placements: Vec<PlacementRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub events: usize,
}

/// Registers every edge server and the cloud.
pub fn register_all(infra: &InfrastructureMap, ledger: &mut Ledger) -> Result<()> {
    for node in infra.nodes.iter().filter(|n| n.tier() != Tier::Mobile) {
        ledger.register_node(node.id)?;
    }
    Ok(())
}

/// Fresh ledger with every server registered.
pub fn fresh_ledger(infra: &InfrastructureMap, config: &LedgerConfig) -> Result<Ledger> {
    let mut ledger = Ledger::new(config.clone());
    register_all(infra, &mut ledger)?;
    Ok(ledger)
}

/// Cell visited at `now`: the span is split into equal dwell slots.
pub fn advance_mobility(now: f64, span_ms: f64, cells: usize) -> usize {
    if cells == 0 || span_ms <= 0.0 {
        return 0;
    }
    let slot = span_ms / cells as f64;
    ((now / slot).floor().max(0.0) as usize).min(cells - 1)
}

/// QoS violation: the application overran its deadline.
pub fn record_violation(app: &AppDag, ap_ms: f64) -> bool {
    ap_ms > app.deadline_ms
}

/// Success iff the node stays up from `start_ms` through `start_ms + rt_ms`,
/// on the normalized trace timeline.
pub fn attempt_offload(node: &Node, start_ms: f64, rt_ms: f64, span_ms: f64, penalty_ms: f64) -> OffloadOutcome {
    let from = (start_ms / span_ms).clamp(0.0, 1.0);
    let to = ((start_ms + rt_ms) / span_ms).clamp(0.0, 1.0);
    match node.availability.covers(from, to) {
        Ok(true) => OffloadOutcome::Success { rt_ms },
        _ => OffloadOutcome::Failure { penalty_ms },
    }
}

/// Background flows seen from the current cell.
#[derive(Debug, Default)]
struct LoadState {
    exec: BTreeMap<NodeId, Vec<Flow>>,
    offload: BTreeMap<NodeClass, Vec<Flow>>,
    delivery: BTreeMap<NodeClass, Vec<Flow>>,
}

impl LoadState {
    fn sample(infra: &InfrastructureMap, profile: &WorkloadProfile, cell: usize, rng: &mut SimRng) -> Self {
        let mut state = LoadState::default();
        let flows = |rng: &mut SimRng, bits: bool| -> Vec<Flow> {
            (0..profile.generator_count(rng))
                .map(|_| {
                    let g = sample_background_load(profile, rng);
                    if bits {
                        Flow::new(g.rate, g.data_kb * BITS_PER_KB)
                    } else {
                        Flow::new(g.rate, g.mi)
                    }
                })
                .collect()
        };
        let servers: Vec<&Node> = infra.cell_nodes(cell).chain(infra.node(infra.cloud)).collect();
        for node in &servers {
            state.exec.insert(node.id, flows(rng, false));
        }
        let classes: BTreeSet<NodeClass> = servers.iter().map(|n| n.class()).collect();
        for class in classes {
            let offload = flows(rng, true);
            let delivery = flows(rng, true);
            state.offload.insert(class, offload);
            state.delivery.insert(class, delivery);
        }
        state
    }
}

/// Prediction details kept for the attempt after selection.
#[derive(Debug, Clone)]
struct Detail {
    latency: LatencyBreakdown,
    energy: f64,
    cost: f64,
    max_util: f64,
    offload: Option<Channel>,
}

struct AppRun {
    index: usize,
    dag: AppDag,
    arrival: f64,
    completed: BTreeSet<usize>,
    cost: f64,
    failures: usize,
    gas_start: u64,
    usage: BTreeMap<NodeId, (f64, f64, f64)>,
}

struct Episodic<'a> {
    config: &'a SimConfig,
    infra: &'a InfrastructureMap,
    policy: Policy,
    engine: Engine,
    run: usize,
    span: f64,
    cell: usize,
    load: LoadState,
    device: EnergyState,
    queue: EventQueue,
    out: Episode,
}

/// Runs one episode of `config.apps` applications. `ledger` must have every
/// server registered; it is read and updated only by reputation-aware
/// engines.
pub fn run_episode(
    config: &SimConfig,
    infra: &InfrastructureMap,
    engine: Engine,
    ledger: &mut Ledger,
    run: usize,
    seed: u64,
) -> Result<Episode> {
    config.validate()?;
    if infra.cells.is_empty() {
        return Err(Error::Config("infrastructure has no cells".into()));
    }
    let mut ep = Episodic {
        config,
        infra,
        policy: config.policy(engine),
        engine,
        run,
        span: config.episode_span_ms(),
        cell: 0,
        load: LoadState::default(),
        device: config.energy.clone(),
        queue: EventQueue::new(),
        out: Episode::default(),
    };
    let cells = infra.cells.len();
    for c in 0..cells {
        ep.queue.push(Event {
            time: c as f64 * ep.span / cells as f64,
            kind: EventKind::CellMove,
            app: None,
        });
    }
    for a in 0..config.apps {
        ep.queue.push(Event {
            time: a as f64 * config.app_interval_ms,
            kind: EventKind::Arrival,
            app: Some(a),
        });
    }

    let mut app_rng = stream(seed, "apps");
    let mut backlog: VecDeque<AppRun> = VecDeque::new();
    let mut current: Option<AppRun> = None;
    let mut last_time = 0.0;

    while let Some(event) = ep.queue.pop() {
        if event.time < last_time {
            return Err(Error::Domain("event processed out of time order".into()));
        }
        last_time = event.time;
        ep.out.events += 1;
        let now = event.time;
        match event.kind {
            EventKind::CellMove => {
                ep.cell = advance_mobility(now, ep.span, cells);
                let mut rng = stream(seed, &format!("load-{}", ep.cell));
                ep.load = LoadState::sample(infra, &config.workload, ep.cell, &mut rng);
            }
            EventKind::Arrival => {
                let index = event.app.expect("arrival carries an app");
                let name = config.workload.app_mix.draw(&mut app_rng);
                let dag = config.catalog.instantiate(name, &mut app_rng)?;
                let app = AppRun {
                    index,
                    dag,
                    arrival: now,
                    completed: BTreeSet::new(),
                    cost: 0.0,
                    failures: 0,
                    gas_start: 0,
                    usage: BTreeMap::new(),
                };
                if current.is_none() {
                    let mut app = app;
                    app.gas_start = ledger.gas_used();
                    ep.queue.push(Event {
                        time: now,
                        kind: EventKind::Decision,
                        app: Some(app.index),
                    });
                    current = Some(app);
                } else {
                    backlog.push_back(app);
                }
            }
            EventKind::Decision => {
                let app = current.as_mut().expect("decision for the running app");
                let done_at = ep.process_task(app, ledger, now)?;
                ep.queue.push(Event {
                    time: done_at,
                    kind: EventKind::DeliverDone,
                    app: Some(app.index),
                });
            }
            EventKind::DeliverDone => {
                let finished = {
                    let app = current.as_ref().expect("completion for the running app");
                    app.completed.len() == app.dag.tasks.len()
                };
                if !finished {
                    let index = current.as_ref().map(|a| a.index);
                    ep.queue.push(Event {
                        time: now,
                        kind: EventKind::Decision,
                        app: index,
                    });
                    continue;
                }
                let app = current.take().expect("running app");
                ep.finish_app(app, ledger, now);
                if let Some(mut next) = backlog.pop_front() {
                    next.gas_start = ledger.gas_used();
                    ep.queue.push(Event {
                        time: now,
                        kind: EventKind::Decision,
                        app: Some(next.index),
                    });
                    current = Some(next);
                }
            }
            EventKind::LedgerCommit => ledger.settle(now),
            EventKind::OffloadDone | EventKind::ExecDone | EventKind::Failure => {}
        }
    }
    Ok(ep.out)
}

impl Episodic<'_> {
    fn channel(&self, class: NodeClass, delivery: bool) -> Option<(Channel, &[Flow])> {
        let base = self.infra.channel(self.cell, class)?;
        let flows = if delivery {
            &self.load.delivery
        } else {
            &self.load.offload
        };
        let flows = flows.get(&class).map(Vec::as_slice).unwrap_or(&[]);
        let offered: f64 = flows.iter().map(Flow::offered).sum();
        Some((base.with_util(offered), flows))
    }

    fn mips(&self, node: &Node) -> f64 {
        node.spec.mips(self.config.instructions_per_cycle)
    }

    fn predict(
        &self,
        node: &Node,
        app: &AppDag,
        task: usize,
    ) -> (std::result::Result<Prediction, crate::perf::Infeasible>, Option<Detail>) {
        let spec = &app.tasks[task];
        let load = TaskLoad {
            mi: spec.mi,
            bits_in: spec.data_in_kb * BITS_PER_KB,
            bits_out: spec.data_out_kb * BITS_PER_KB,
        };
        let mobile = self.infra.node(self.infra.mobile).expect("mobile node");
        let cores = mobile.spec.cores;
        if node.tier() == Tier::Mobile {
            let latency = response_time(load, &Placement::Local { mips: self.mips(node) }, self.config.exec_wait)
                .expect("local execution is always stable");
            let energy = task_energy(&self.device, &EnergyPlacement::Local { cores }, &latency);
            let p = Prediction {
                rt_ms: latency.rt,
                energy_j: energy,
                cost: 0.0,
                wait_ms: 0.0,
                t_offload_ms: 0.0,
            };
            let detail = Detail {
                latency,
                energy,
                cost: 0.0,
                max_util: 0.0,
                offload: None,
            };
            return (Ok(p), Some(detail));
        }
        let (Some((offload, off_flows)), Some((delivery, del_flows))) =
            (self.channel(node.class(), false), self.channel(node.class(), true))
        else {
            return (Err(crate::perf::Infeasible::ChannelSaturated), None);
        };
        let mips = self.mips(node);
        let exec_flows = self.load.exec.get(&node.id).map(Vec::as_slice).unwrap_or(&[]);
        let snapshot = RemoteSnapshot {
            offload: &offload,
            offload_flows: off_flows,
            mips,
            exec_flows,
            delivery: &delivery,
            delivery_flows: del_flows,
        };
        let max_util = comm_utilization(&offload, off_flows)
            .max(exec_utilization(mips, exec_flows))
            .max(comm_utilization(&delivery, del_flows));
        let latency = match response_time(load, &Placement::Remote(snapshot), self.config.exec_wait) {
            Ok(l) => l,
            Err(e) => return (Err(e), None),
        };
        if max_util >= 1.0 {
            return (Err(crate::perf::Infeasible::ServerSaturated), None);
        }
        let energy = task_energy(
            &self.device,
            &EnergyPlacement::Remote {
                cores,
                offload: &offload,
                delivery: &delivery,
            },
            &latency,
        );
        let cost = utilization_cost(
            &self.config.cost,
            node.tier(),
            spec.mi,
            spec.data_in_kb,
            latency.t_exec / 1000.0,
        );
        let service = {
            let unloaded_o = crate::perf::comm_service(&offload, load.bits_in).unwrap_or(0.0);
            let unloaded_d = crate::perf::comm_service(&delivery, load.bits_out).unwrap_or(0.0);
            (unloaded_o + unloaded_d + spec.mi / mips) * 1000.0
        };
        let p = Prediction {
            rt_ms: latency.rt,
            energy_j: energy,
            cost,
            wait_ms: (latency.rt - service).max(0.0),
            t_offload_ms: latency.t_offload,
        };
        let detail = Detail {
            latency,
            energy,
            cost,
            max_util,
            offload: Some(offload),
        };
        (Ok(p), Some(detail))
    }

    /// Decides and runs the next ready task; returns its completion time.
    fn process_task(&mut self, app: &mut AppRun, ledger: &mut Ledger, now: f64) -> Result<f64> {
        let task = *ready_tasks(&app.dag, &app.completed)
            .first()
            .ok_or_else(|| Error::Domain("no ready task in an unfinished application".into()))?;
        let spec = app.dag.tasks[task].clone();
        let mobile = self.infra.node(self.infra.mobile).expect("mobile node").clone();

        if !spec.offloadable {
            let (pred, detail) = self.predict(&mobile, &app.dag, task);
            let detail = detail.expect("local prediction");
            let rt = pred.expect("local prediction").rt_ms;
            self.device.charge(detail.energy);
            self.push_stage_events(app.index, now, &detail.latency, false);
            self.out.placements.push(PlacementRecord {
                run: self.run,
                app: app.index,
                engine: self.engine,
                task,
                task_name: spec.name.clone(),
                offloadable: false,
                node: mobile.id,
                class: NodeClass::Mobile,
                attempts: 1,
                failures: 0,
                fallback: false,
                rt_ms: rt,
                max_util: 0.0,
            });
            app.completed.insert(task);
            return Ok(now + rt);
        }

        // 1a/1b: reputation reads and load snapshot
        let mut nodes: Vec<&Node> = self.infra.cell_nodes(self.cell).collect();
        nodes.extend(self.infra.node(self.infra.cloud));
        nodes.push(self.infra.node(self.infra.mobile).expect("mobile node"));
        let mut candidates = Vec::with_capacity(nodes.len());
        let mut details: BTreeMap<NodeId, Detail> = BTreeMap::new();
        for node in nodes {
            let (predicted, detail) = self.predict(node, &app.dag, task);
            let reputation = if node.tier() != Tier::Mobile && self.policy.uses_ledger() {
                Some(ledger.get_reputation_score(node.id, now)?)
            } else {
                None
            };
            let used = app.usage.get(&node.id).copied().unwrap_or_default();
            candidates.push(Candidate {
                node: node.id,
                tier: node.tier(),
                predicted,
                reputation,
                capacity: Capacity {
                    cpu_mi: self.mips(node),
                    mem_gb: node.spec.ram_gb,
                    stor_gb: node.spec.storage_gb,
                    used_mi: used.0,
                    used_mem_gb: used.1,
                    used_stor_gb: used.2,
                },
                load: self
                    .load
                    .exec
                    .get(&node.id)
                    .map_or(0.0, |f| exec_utilization(self.mips(node), f)),
            });
            if let Some(d) = detail {
                details.insert(node.id, d);
            }
        }
        let data_gb = (spec.data_in_kb + spec.data_out_kb) / (1024.0 * 1024.0);
        let constraints = ConstraintSet {
            nabla: TierNabla {
                edge: app.dag.nabla(Tier::Edge)?,
                cloud: app.dag.nabla(Tier::Cloud)?,
                mobile: app.dag.nabla(Tier::Mobile)?,
            },
            deadline_ms: app.dag.deadline_ms,
            price_cap: self.config.price_cap.unwrap_or(f64::INFINITY),
            rep_threshold: FixedRep::ZERO,
            app_elapsed_ms: now - app.arrival,
            battery_j: self.device.bcap - self.device.consumed,
            demand: TaskDemand {
                mi: spec.mi,
                mem_gb: spec.ram_gb,
                data_gb,
                ready: true,
            },
        };

        // 2: decide and offload, retrying on failure
        let span = self.span;
        let infra = self.infra;
        let mut clock = now;
        let mut failed_energy = 0.0;
        let mut failure_times = Vec::new();
        let mut executor = |_: usize, c: &Candidate| {
            let node = infra.node(c.node).expect("candidate node");
            let detail = &details[&c.node];
            let outcome = attempt_offload(node, clock, detail.latency.rt, span, detail.latency.t_offload);
            if let OffloadOutcome::Failure { penalty_ms } = outcome {
                clock += penalty_ms;
                failure_times.push(clock);
                if let Some(ch) = &detail.offload {
                    failed_energy += penalty_ms / 1000.0 * tx_power(ch);
                }
            }
            outcome
        };
        let input = TaskInput {
            task,
            candidates,
            constraints,
        };
        let decision = fresco_offload(vec![input], &self.config.weights, self.policy, &mut executor)?
            .pop()
            .expect("one decision per task");
        let start = clock;

        for t in &failure_times {
            self.queue.push(Event {
                time: *t,
                kind: EventKind::Failure,
                app: Some(app.index),
            });
        }
        self.device.charge(failed_energy);
        app.failures += decision.failures;

        let (node_id, detail, fallback) = match decision.placed {
            Some(id) => (id, details[&id].clone(), false),
            None => {
                let (_, d) = self.predict(&mobile, &app.dag, task);
                (mobile.id, d.expect("local prediction"), true)
            }
        };
        let node = self.infra.node(node_id).expect("placed node");
        self.device.charge(detail.energy);
        app.cost += detail.cost;
        if node.tier() != Tier::Mobile {
            let entry = app.usage.entry(node_id).or_default();
            entry.0 += spec.mi;
            entry.1 += spec.ram_gb;
            entry.2 += data_gb;
        }
        self.push_stage_events(app.index, start, &detail.latency, node.tier() != Tier::Mobile);

        self.out.decisions.push(DecisionRecord {
            run: self.run,
            app: app.index,
            engine: self.engine,
            task,
            candidates: decision.considered,
            solver_calls: decision.solver_calls,
            verdict: match decision.placed {
                Some(id) => id.to_string(),
                None => "local".into(),
            },
            decision_ms: decision.decision_ms,
        });
        self.out.placements.push(PlacementRecord {
            run: self.run,
            app: app.index,
            engine: self.engine,
            task,
            task_name: spec.name.clone(),
            offloadable: true,
            node: node_id,
            class: node.class(),
            attempts: decision.failures + 1,
            failures: decision.failures,
            fallback,
            rt_ms: detail.latency.rt,
            max_util: detail.max_util,
        });

        let done = start + detail.latency.rt;
        // 4: report to the ledger once the result is back
        if self.policy.uses_ledger() && !decision.records.is_empty() {
            let dag = &app.dag;
            let nabla_of = |id: NodeId| {
                infra
                    .node(id)
                    .and_then(|n| dag.nabla(n.tier()).ok())
                    .unwrap_or(f64::INFINITY)
            };
            ledger.update_node_reputation(&decision.records, nabla_of, done)?;
            self.queue.push(Event {
                time: done + ledger.config().consensus_delay_ms,
                kind: EventKind::LedgerCommit,
                app: None,
            });
        }
        app.completed.insert(task);
        Ok(done)
    }

    fn push_stage_events(&mut self, app: usize, start: f64, latency: &LatencyBreakdown, remote: bool) {
        if remote {
            self.queue.push(Event {
                time: start + latency.t_offload,
                kind: EventKind::OffloadDone,
                app: Some(app),
            });
        }
        self.queue.push(Event {
            time: start + latency.t_offload + latency.t_exec,
            kind: EventKind::ExecDone,
            app: Some(app),
        });
    }

    fn finish_app(&mut self, app: AppRun, ledger: &Ledger, now: f64) {
        let ap = now - app.arrival;
        self.out.metrics.push(MetricsRecord {
            run: self.run,
            app: app.index,
            app_name: app.dag.name,
            engine: self.engine,
            rt_ms: ap,
            deadline_ms: app.dag.deadline_ms,
            battery_pct: self.device.battery_lifetime() * 100.0,
            cost: app.cost,
            violated: record_violation(&app.dag, ap),
            failures: app.failures,
            gas_wei: ledger.gas_used() - app.gas_start,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobility_visits_each_cell_once() {
        let span = 1000.0;
        let cells: Vec<_> = (0..1000).map(|t| advance_mobility(f64::from(t), span, 10)).collect();
        assert_eq!(cells[0], 0);
        assert_eq!(cells[999], 9);
        assert!(cells.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        assert_eq!(advance_mobility(5000.0, span, 10), 9);
    }

    #[test]
    fn violation_is_strict() {
        let app = crate::workload::build_app(AppName::Intrasafed);
        assert!(!record_violation(&app, 108.0));
        assert!(record_violation(&app, 108.5));
    }
}
