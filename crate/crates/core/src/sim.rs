//! Deterministic discrete-event simulation of a cluster of runtime nodes.
//!
//! Events are processed in `(tick, seq)` order, where `seq` is a global
//! counter, so a configuration (including its seed) always produces the
//! same event order, the same trace bytes and the same result.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::runtime::{Body, CostModel, Message, NodeState, NodeStatus, RuntimeConfig, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatencyModel {
    Constant(u64),
    /// Drawn per message from `lo..=hi` with the run's seed.
    Uniform { lo: u64, hi: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_nodes: usize,
    pub seed: u64,
    pub latency: LatencyModel,
    pub leaf_size: usize,
    pub overload_threshold: usize,
    /// `(node, tick)` pairs; node 0 may not fail.
    pub failures: Vec<(usize, u64)>,
    pub cost_model: CostModel,
    pub tick_budget: u64,
    pub fragment_bytes: usize,
    pub trace_path: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_nodes: 4,
            seed: 0,
            latency: LatencyModel::Uniform { lo: 1, hi: 4 },
            leaf_size: 8,
            overload_threshold: 2,
            failures: Vec::new(),
            cost_model: CostModel::ScalarOps,
            tick_budget: 100_000_000,
            fragment_bytes: 1 << 16,
            trace_path: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(Error::InvalidConfig("num_nodes must be at least 1".into()));
        }
        if let LatencyModel::Uniform { lo, hi } = self.latency {
            if lo > hi {
                return Err(Error::InvalidConfig(format!("latency range {lo}..={hi} is empty")));
            }
        }
        if self.fragment_bytes == 0 || self.overload_threshold == 0 {
            return Err(Error::InvalidConfig("fragment_bytes and overload_threshold must be positive".into()));
        }
        for &(node, _) in &self.failures {
            if node == 0 {
                return Err(Error::RootFailureUnsupported);
            }
            if node >= self.num_nodes {
                return Err(Error::InvalidConfig(format!("failure of node {node} in a {}-node cluster", self.num_nodes)));
            }
        }
        self.runtime().kernel.validate()
    }

    pub fn runtime(&self) -> RuntimeConfig {
        RuntimeConfig {
            overload_threshold: self.overload_threshold,
            fragment_bytes: self.fragment_bytes,
            cost: self.cost_model,
            ..RuntimeConfig::new(self.leaf_size)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Outputs of the root drop: one matrix, or `[Q, R]` for QR_G.
    pub result: Vec<Matrix>,
    pub makespan_ticks: u64,
    pub busy_ticks: Vec<u64>,
    pub message_count: u64,
    pub bytes_transferred: u64,
    pub recomputed_drop_count: u64,
    pub leaf_drops: u64,
    pub trace_path: Option<PathBuf>,
}

impl RunReport {
    /// Largest per-node busy time over the mean.
    pub fn load_ratio(&self) -> f64 {
        let max = self.busy_ticks.iter().copied().max().unwrap_or(0) as f64;
        let mean = self.busy_ticks.iter().sum::<u64>() as f64 / self.busy_ticks.len().max(1) as f64;
        if mean == 0.0 {
            1.0
        } else {
            max / mean
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone)]
enum EventKind {
    Deliver(Message),
    CalcDone(usize),
    Fail(usize),
}

/// One line of a trace file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TraceRecord {
    Header { config: SimConfig, task: Task },
    Message {
        tick: u64,
        #[serde(flatten)]
        message: Message,
    },
    Local { tick: u64, event: String, node: usize },
    Footer { report: RunReport },
}

struct Sim {
    cfg: SimConfig,
    rt: RuntimeConfig,
    nodes: Vec<NodeState>,
    events: BTreeMap<(u64, u64), EventKind>,
    seq: u64,
    rng: ChaCha8Rng,
    last_delivery: HashMap<(usize, usize), u64>,
    message_count: u64,
    bytes: u64,
    trace: Option<Vec<String>>,
    now: u64,
}

impl Sim {
    fn push(&mut self, tick: u64, ev: EventKind) {
        self.seq += 1;
        self.events.insert((tick, self.seq), ev);
    }

    fn latency(&mut self) -> u64 {
        match self.cfg.latency {
            LatencyModel::Constant(t) => t,
            LatencyModel::Uniform { lo, hi } => self.rng.gen_range(lo..=hi),
        }
    }

    fn send_all(&mut self, tick: u64, msgs: Vec<Message>) {
        for m in msgs {
            if self.nodes[m.dst].status == NodeStatus::Failed {
                continue;
            }
            self.message_count += 1;
            self.bytes += m.body.wire_size() as u64;
            let lat = self.latency();
            let last = self.last_delivery.entry((m.src, m.dst)).or_insert(0);
            let at = (tick + lat).max(*last);
            *last = at;
            self.push(at, EventKind::Deliver(m));
        }
    }

    fn pump(&mut self, tick: u64, node: usize) -> Result<()> {
        let (msgs, started) = self.nodes[node].pump(&self.rt)?;
        self.send_all(tick, msgs);
        if let Some(cost) = started {
            self.push(tick + cost, EventKind::CalcDone(node));
        }
        Ok(())
    }

    fn record(&mut self, rec: TraceRecord) {
        if let Some(t) = &mut self.trace {
            t.push(serde_json::to_string(&rec).expect("trace records serialize"));
        }
    }

    fn fail(&mut self, tick: u64, node: usize) {
        if self.nodes[node].status == NodeStatus::Failed {
            return;
        }
        self.nodes[node].status = NodeStatus::Failed;
        self.nodes[node].current = None;
        self.events.retain(|_, ev| match ev {
            EventKind::Deliver(m) => m.src != node && m.dst != node,
            EventKind::CalcDone(n) => *n != node,
            EventKind::Fail(_) => true,
        });
        let lat = self.latency();
        for n in 0..self.nodes.len() {
            if self.nodes[n].status != NodeStatus::Failed {
                let notice = Message { src: n, dst: n, seq: 0, body: Body::FailureNotice { node } };
                self.message_count += 1;
                self.bytes += notice.body.wire_size() as u64;
                self.push(tick + lat, EventKind::Deliver(notice));
            }
        }
    }

    fn run(&mut self, task: Task) -> Result<RunReport> {
        let free = (1..self.cfg.num_nodes).collect();
        self.nodes[0].seed(task, free);
        for (node, tick) in self.cfg.failures.clone() {
            self.push(tick, EventKind::Fail(node));
        }
        self.pump(0, 0)?;
        loop {
            if let Some(result) = self.nodes[0].root_result.clone() {
                return Ok(self.report(result));
            }
            let Some(((tick, _), ev)) = self.events.pop_first() else {
                return Err(Error::Stalled(format!("no pending events at tick {}; {}", self.now, self.diagnostic())));
            };
            if tick > self.cfg.tick_budget {
                return Err(Error::Stalled(format!(
                    "tick budget {} exceeded; {}",
                    self.cfg.tick_budget,
                    self.diagnostic()
                )));
            }
            self.now = tick;
            match ev {
                EventKind::Deliver(m) => {
                    let dst = m.dst;
                    self.record(TraceRecord::Message { tick, message: m.clone() });
                    let out = self.nodes[dst].dispatcher_step(m, &self.rt)?;
                    self.send_all(tick, out);
                    self.pump(tick, dst)?;
                }
                EventKind::CalcDone(n) => {
                    self.record(TraceRecord::Local { tick, event: "CalcDone".into(), node: n });
                    let out = self.nodes[n].finish_calc(&self.rt)?;
                    self.send_all(tick, out);
                    self.pump(tick, n)?;
                }
                EventKind::Fail(n) => {
                    self.record(TraceRecord::Local { tick, event: "Fail".into(), node: n });
                    self.fail(tick, n);
                }
            }
        }
    }

    fn diagnostic(&self) -> String {
        let per_node: Vec<String> = self
            .nodes
            .iter()
            .map(|n| format!("node {}: {:?}, vokzal {}, free {:?}", n.node_id, n.status, n.vokzal_len(), n.free_list))
            .collect();
        per_node.join("; ")
    }

    fn report(&self, result: Vec<Matrix>) -> RunReport {
        RunReport {
            result,
            makespan_ticks: self.now,
            busy_ticks: self.nodes.iter().map(|n| n.busy_ticks).collect(),
            message_count: self.message_count,
            bytes_transferred: self.bytes,
            recomputed_drop_count: self.nodes.iter().map(|n| n.recomputed).sum(),
            leaf_drops: self.nodes.iter().map(|n| n.leaf_drops).sum(),
            trace_path: self.cfg.trace_path.clone(),
        }
    }
}

/// Runs `task` on the simulated cluster and returns the report together
/// with the trace lines (header, one line per event, footer).
pub fn run_with_trace(task: &Task, cfg: &SimConfig) -> Result<(RunReport, Vec<String>)> {
    let (report, trace) = simulate(task, cfg, true)?;
    Ok((report, trace.expect("trace requested")))
}

fn simulate(task: &Task, cfg: &SimConfig, capture: bool) -> Result<(RunReport, Option<Vec<String>>)> {
    cfg.validate()?;
    task.validate()?;
    let mut sim = Sim {
        cfg: cfg.clone(),
        rt: cfg.runtime(),
        nodes: (0..cfg.num_nodes).map(|i| NodeState::new(i, cfg.num_nodes)).collect(),
        events: BTreeMap::new(),
        seq: 0,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        last_delivery: HashMap::new(),
        message_count: 0,
        bytes: 0,
        trace: capture.then(Vec::new),
        now: 0,
    };
    sim.record(TraceRecord::Header { config: cfg.clone(), task: task.clone() });
    let report = sim.run(task.clone())?;
    sim.record(TraceRecord::Footer { report: report.clone() });
    Ok((report, sim.trace))
}

/// Runs `task` on the simulated cluster. When `cfg.trace_path` is set the
/// trace is written there.
pub fn run_simulation(task: &Task, cfg: &SimConfig) -> Result<RunReport> {
    let capture = cfg.trace_path.is_some();
    let (report, trace) = simulate(task, cfg, capture)?;
    if let (Some(path), Some(lines)) = (&cfg.trace_path, trace) {
        write_trace(path, &lines)?;
    }
    Ok(report)
}

fn write_trace(path: &Path, lines: &[String]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for l in lines {
        writeln!(f, "{l}").map_err(io)?;
    }
    f.flush().map_err(io)
}

/// Re-executes the run recorded in a trace file and checks every event
/// against the recording.
pub fn replay_trace(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::TraceDecodeError(format!("{}: {e}", path.display())))?;
    let lines: Vec<&str> = text.lines().collect();
    let decode = |e: serde_json::Error| Error::TraceDecodeError(e.to_string());
    let Some(first) = lines.first() else {
        return Err(Error::TraceDecodeError("empty trace".into()));
    };
    let (config, task) = match serde_json::from_str(first).map_err(decode)? {
        TraceRecord::Header { config, task } => (config, task),
        _ => return Err(Error::TraceDecodeError("first record is not a header".into())),
    };
    let footer = match lines.last().map(|l| serde_json::from_str(l)) {
        Some(Ok(TraceRecord::Footer { report })) => report,
        _ => return Err(Error::TraceDecodeError("trace has no report record".into())),
    };
    let (report, fresh) = simulate(&task, &config, true)?;
    let fresh = fresh.expect("trace requested");
    if fresh.len() != lines.len() {
        return Err(Error::TraceDecodeError(format!("{} records in file, {} on replay", lines.len(), fresh.len())));
    }
    if let Some(i) = fresh.iter().zip(&lines).position(|(a, b)| a != b) {
        return Err(Error::TraceDecodeError(format!("replay diverges at record {i}")));
    }
    if report != footer {
        return Err(Error::TraceDecodeError("replayed report differs".into()));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::kernels::{multiply, KernelConfig, OpCounter};
    use crate::runtime::DropType;
    use crate::ScalarKind;

    fn mul(n: usize, seed: u64) -> Task {
        let a = gen::random_dense(n, ScalarKind::F64, seed);
        let b = gen::random_dense(n, ScalarKind::F64, seed + 100);
        Task::root(DropType::Mul, vec![a, b])
    }

    fn cfg(nodes: usize, seed: u64) -> SimConfig {
        SimConfig { num_nodes: nodes, seed, ..SimConfig::default() }
    }

    #[test]
    fn single_node_leaf_task_sends_nothing() {
        let t = mul(4, 1);
        let c = SimConfig { leaf_size: 4, ..cfg(1, 0) };
        let r = run_simulation(&t, &c).unwrap();
        let want = multiply(&t.in_data[0], &t.in_data[1], &KernelConfig::with_leaf(4), &mut OpCounter::new()).unwrap();
        assert!(r.result[0].bitwise_eq(&want));
        assert_eq!(r.message_count, 0);
        assert_eq!(r.recomputed_drop_count, 0);
    }

    #[test]
    fn inv_tri_is_independent_of_cluster_size() {
        let l = gen::random_lower_triangular(32, ScalarKind::F64, 3);
        let t = Task::root(DropType::InvTri, vec![l]);
        let base = run_simulation(&t, &cfg(1, 0)).unwrap();
        let r = run_simulation(&t, &cfg(4, 0)).unwrap();
        assert!(r.result[0].bitwise_eq(&base.result[0]));
        assert!(r.message_count > 0);
    }

    #[test]
    fn failure_of_a_working_node_is_recovered() {
        let t = mul(32, 5);
        let base = run_simulation(&t, &cfg(4, 9)).unwrap();
        let c = SimConfig { failures: vec![(2, 50)], ..cfg(4, 9) };
        let r = run_simulation(&t, &c).unwrap();
        assert!(r.result[0].bitwise_eq(&base.result[0]));
        assert!(r.recomputed_drop_count >= 1, "makespan {}", r.makespan_ticks);
    }

    #[test]
    fn failing_an_idle_node_loses_nothing() {
        let t = mul(8, 5);
        // a 2-node run at leaf 8 never uses node 1
        let c = SimConfig { failures: vec![(1, 0), (1, 3)], ..cfg(2, 1) };
        let r = run_simulation(&t, &c).unwrap();
        assert_eq!(r.recomputed_drop_count, 0);
    }

    #[test]
    fn root_failure_is_rejected() {
        let c = SimConfig { failures: vec![(0, 5)], ..cfg(4, 0) };
        assert_eq!(run_simulation(&mul(8, 1), &c), Err(Error::RootFailureUnsupported));
    }

    #[test]
    fn tick_budget_stalls() {
        let c = SimConfig { tick_budget: 3, ..cfg(4, 0) };
        assert!(matches!(run_simulation(&mul(32, 1), &c), Err(Error::Stalled(_))));
    }

    #[test]
    fn identical_config_gives_identical_trace() {
        let t = mul(32, 2);
        let c = SimConfig { failures: vec![(3, 20)], ..cfg(8, 4) };
        let (r1, a) = run_with_trace(&t, &c).unwrap();
        let (r2, b) = run_with_trace(&t, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(r1, r2);
        let (_, other) = run_with_trace(&t, &cfg(8, 5)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn trace_replays_and_detects_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ndjson");
        let c = SimConfig { failures: vec![(2, 30)], trace_path: Some(path.clone()), ..cfg(4, 7) };
        let r = run_simulation(&mul(32, 8), &c).unwrap();
        let again = replay_trace(&path).unwrap();
        assert_eq!(again, r);
        assert_eq!(again.recomputed_drop_count, r.recomputed_drop_count);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(replay_trace(&path), Err(Error::TraceDecodeError(_))));
        fs::write(&path, "").unwrap();
        assert!(matches!(replay_trace(&path), Err(Error::TraceDecodeError(_))));
    }

    #[test]
    fn trace_records_follow_the_message_schema() {
        let (_, lines) = run_with_trace(&mul(16, 1), &cfg(2, 1)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
        assert_eq!(v["config"]["num_nodes"], 2);
        let msg = lines.iter().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()).find(|v| v["type"] == "Task").unwrap();
        for key in ["tick", "src", "dst", "seq", "payload"] {
            assert!(msg.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn four_nodes_beat_one() {
        let t = mul(64, 3);
        let c = SimConfig { cost_model: CostModel::Unit, ..cfg(1, 0) };
        let one = run_simulation(&t, &c).unwrap();
        let four = run_simulation(&t, &SimConfig { num_nodes: 4, ..c }).unwrap();
        assert!(four.leaf_drops >= 64);
        assert!(four.makespan_ticks <= one.makespan_ticks, "{} > {}", four.makespan_ticks, one.makespan_ticks);
        assert!(four.load_ratio() <= 2.5, "{:?}", four.busy_ticks);
        assert!(four.result[0].bitwise_eq(&one.result[0]));
    }

    #[test]
    fn small_fragments_do_not_change_the_result() {
        let t = mul(32, 4);
        let base = run_simulation(&t, &cfg(4, 2)).unwrap();
        let r = run_simulation(&t, &SimConfig { fragment_bytes: 512, ..cfg(4, 2) }).unwrap();
        assert!(r.result[0].bitwise_eq(&base.result[0]));
        assert!(r.message_count > base.message_count);
    }

    fn tasks() -> Vec<Task> {
        vec![
            mul(32, 11),
            Task::root(DropType::InvTri, vec![gen::random_lower_triangular(32, ScalarKind::F64, 12)]),
            Task::root(DropType::Cholesky, vec![gen::random_spd(32, 13)]),
            Task::root(DropType::InvStrassen, vec![gen::random_diag_dominant(32, ScalarKind::F64, 14)]),
            Task::root(DropType::QRG, vec![gen::random_dense(32, ScalarKind::F64, 15)]),
        ]
    }

    #[test]
    fn every_algorithm_survives_any_single_failure() {
        for t in tasks() {
            let base = run_simulation(&t, &cfg(1, 0)).unwrap();
            let four = run_simulation(&t, &cfg(4, 3)).unwrap();
            for node in 1..4 {
                for k in 0..5 {
                    let tick = four.makespan_ticks * k / 5;
                    let c = SimConfig { failures: vec![(node, tick)], ..cfg(4, 3) };
                    let r = run_simulation(&t, &c).unwrap_or_else(|e| panic!("{:?} fail {node}@{tick}: {e}", t.drop_type));
                    for (x, y) in r.result.iter().zip(&base.result) {
                        assert!(x.bitwise_eq(y), "{:?} fail {node}@{tick}", t.drop_type);
                    }
                }
            }
        }
    }

    #[test]
    fn random_schedules_terminate() {
        for seed in 0..30 {
            for t in tasks() {
                let c = SimConfig { num_nodes: 2 + (seed as usize % 7), latency: LatencyModel::Uniform { lo: 1, hi: 40 }, ..cfg(1, seed) };
                run_simulation(&t, &c).unwrap_or_else(|e| panic!("{:?} seed {seed}: {e}", t.drop_type));
            }
        }
    }
}
