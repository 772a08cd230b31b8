use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::graph::{compute_direct, expand, write_results_to_amine, Amine, DropState, Pad, Task};
use super::message::{Body, Fragment, Message};
use crate::error::{Error, Result};
use crate::kernels::{KernelConfig, MultiplyAlgo, OpCounter};
use crate::matrix::Matrix;

/// Simulated cost of a leaf drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostModel {
    /// One tick per leaf drop.
    Unit,
    /// The drop's counted scalar operations.
    ScalarOps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeConfig {
    pub kernel: KernelConfig,
    /// A node is overloaded when it holds at least this many ready drops
    /// that are still above leaf size.
    pub overload_threshold: usize,
    /// Tasks and results whose nominal size exceeds this many bytes travel
    /// as fragments.
    pub fragment_bytes: usize,
    pub cost: CostModel,
}

impl RuntimeConfig {
    pub fn new(leaf_size: usize) -> Self {
        RuntimeConfig {
            kernel: KernelConfig {
                leaf_size,
                multiply_algo: MultiplyAlgo::Standard,
                parallel: false,
                ..KernelConfig::default()
            },
            overload_threshold: 2,
            fragment_bytes: 4096,
            cost: CostModel::Unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeStatus {
    Busy,
    Free,
    Failed,
}

/// A leaf drop whose result has been computed but not yet released; the
/// simulator holds it for the drop's cost in ticks.
#[derive(Debug, Clone)]
pub struct Running {
    pub task: Task,
    pub outputs: Vec<Matrix>,
    pub cost: u64,
    /// Its result is no longer wanted (the requesting node failed).
    pub cancelled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalcStep {
    /// Nothing to do.
    Idle,
    /// A drop was expanded into a new Amine; costs no time.
    Expanded,
    /// A leaf drop started; it finishes after the given number of ticks.
    Started(u64),
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: usize,
    pub num_nodes: usize,
    pub pine: Vec<Amine>,
    /// Ready tasks keyed by recursion depth, FIFO within a depth.
    pub vokzal: BTreeMap<usize, VecDeque<Task>>,
    /// Parents, most recent last.
    pub aerodrome: Vec<usize>,
    /// Children and whether each last reported itself overloaded.
    pub terminal: BTreeMap<usize, bool>,
    pub free_list: Vec<usize>,
    pub current: Option<Running>,
    pub status: NodeStatus,
    pub known_failed: BTreeSet<usize>,
    pub root_result: Option<Vec<Matrix>>,
    pub halted: bool,
    /// Drops returned to the vokzal after the node they were sent to failed.
    pub recomputed: u64,
    pub leaf_drops: u64,
    pub busy_ticks: u64,
    pub duplicate_results: u64,
    announced: bool,
    reported_overload: bool,
    fragments: BTreeMap<(usize, u64), Vec<Option<String>>>,
    next_seq: u64,
}

impl NodeState {
    pub fn new(node_id: usize, num_nodes: usize) -> Self {
        NodeState {
            node_id,
            num_nodes,
            pine: Vec::new(),
            vokzal: BTreeMap::new(),
            aerodrome: Vec::new(),
            terminal: BTreeMap::new(),
            free_list: Vec::new(),
            current: None,
            status: NodeStatus::Free,
            known_failed: BTreeSet::new(),
            root_result: None,
            halted: false,
            recomputed: 0,
            leaf_drops: 0,
            busy_ticks: 0,
            duplicate_results: 0,
            // every node but the root starts out in the root's free list
            announced: node_id != 0,
            reported_overload: false,
            fragments: BTreeMap::new(),
            next_seq: 0,
        }
    }

    /// Places the root task on this node with the given free nodes.
    pub fn seed(&mut self, task: Task, free: Vec<usize>) {
        self.push_task(task);
        self.free_list = free;
        self.status = NodeStatus::Busy;
    }

    pub fn vokzal_len(&self) -> usize {
        self.vokzal.values().map(VecDeque::len).sum()
    }

    pub fn push_task(&mut self, task: Task) {
        self.vokzal.entry(task.rec_num).or_default().push_back(task);
    }

    fn pop_at(&mut self, depth: usize) -> Option<Task> {
        let q = self.vokzal.get_mut(&depth)?;
        let t = q.pop_front();
        if q.is_empty() {
            self.vokzal.remove(&depth);
        }
        t
    }

    /// Deepest (smallest) task, for local execution.
    pub fn pop_deepest(&mut self) -> Option<Task> {
        let depth = *self.vokzal.keys().next_back()?;
        self.pop_at(depth)
    }

    /// Shallowest (largest) task, for sending to a free node.
    pub fn pop_shallowest(&mut self) -> Option<Task> {
        let depth = *self.vokzal.keys().next()?;
        self.pop_at(depth)
    }

    fn is_local(&self, pad: &Option<Pad>) -> Option<Pad> {
        pad.filter(|p| p.proc_id == self.node_id)
    }

    fn set_drop_state(&mut self, pad: Pad, state: DropState) {
        self.pine[pad.amine_id].drops[pad.drop_id].state = state;
    }

    fn outstanding_sends(&self) -> bool {
        self.pine
            .iter()
            .filter(|a| !a.abandoned)
            .any(|a| a.drops.iter().any(|d| matches!(d.state, DropState::Sent(_))))
    }

    /// No queued, running or delegated work.
    pub fn is_idle(&self) -> bool {
        self.vokzal.is_empty() && self.current.is_none() && !self.outstanding_sends()
    }

    pub fn overloaded(&self, cfg: &RuntimeConfig) -> bool {
        let big = self.vokzal.values().flatten().filter(|t| !t.is_leaf(cfg.kernel.leaf_size)).count();
        big >= cfg.overload_threshold || self.terminal.values().any(|&o| o)
    }

    fn refresh_status(&mut self) {
        if self.status != NodeStatus::Failed {
            self.status = if self.vokzal.is_empty() && self.current.is_none() {
                NodeStatus::Free
            } else {
                NodeStatus::Busy
            };
        }
    }

    fn parent(&self) -> usize {
        self.aerodrome
            .iter()
            .rev()
            .copied()
            .find(|p| !self.known_failed.contains(p))
            .unwrap_or(0)
    }

    /// Wraps a body into one message, or into fragments when it is large.
    fn send(&mut self, dst: usize, body: Body, cfg: &RuntimeConfig) -> Vec<Message> {
        if self.known_failed.contains(&dst) || dst == self.node_id {
            return Vec::new();
        }
        self.next_seq += 1;
        let seq = self.next_seq;
        let size = body.wire_size();
        if !body.is_bulk() || size <= cfg.fragment_bytes {
            return vec![Message { src: self.node_id, dst, seq, body }];
        }
        let pad = body.target_pad();
        let json = serde_json::to_string(&body).expect("message bodies serialize");
        let count = size.div_ceil(cfg.fragment_bytes);
        let chunk = json.len().div_ceil(count);
        let pieces: Vec<String> = json.as_bytes().chunks(chunk).map(|c| String::from_utf8_lossy(c).into_owned()).collect();
        let count = pieces.len();
        pieces
            .into_iter()
            .enumerate()
            .map(|(index, bytes)| {
                self.next_seq += 1;
                Message {
                    src: self.node_id,
                    dst,
                    seq: self.next_seq,
                    body: Body::Fragment(Fragment { pad, slot: 0, msg_seq: seq, index, count, bytes }),
                }
            })
            .collect()
    }

    /// One CalcThread step: takes the deepest ready task and either expands
    /// it into a new Amine or computes it as a leaf.
    pub fn calc_thread_step(&mut self, cfg: &RuntimeConfig) -> Result<CalcStep> {
        if self.halted || self.status == NodeStatus::Failed || self.current.is_some() {
            return Ok(CalcStep::Idle);
        }
        let Some(task) = self.pop_deepest() else {
            self.refresh_status();
            return Ok(CalcStep::Idle);
        };
        self.status = NodeStatus::Busy;
        if let Some(p) = self.is_local(&task.ret) {
            self.set_drop_state(p, DropState::Expanded);
        }
        if task.is_leaf(cfg.kernel.leaf_size) {
            let mut ctr = OpCounter::new();
            let outputs = compute_direct(&task, &cfg.kernel, &mut ctr)?;
            let cost = match cfg.cost {
                CostModel::Unit => 1,
                CostModel::ScalarOps => ctr.scalar_ops().max(1),
            };
            self.leaf_drops += 1;
            self.busy_ticks += cost;
            self.current = Some(Running { task, outputs, cost, cancelled: false });
            return Ok(CalcStep::Started(cost));
        }
        let mut amine = expand(&task, &cfg.kernel)?;
        let id = self.pine.len();
        amine.place(self.node_id, id);
        let ready: Vec<Task> = amine.ready_drops().into_iter().map(|d| amine.drops[d].to_task()).collect();
        self.pine.push(amine);
        for t in ready {
            self.push_task(t);
        }
        Ok(CalcStep::Expanded)
    }

    /// Releases the result of the running leaf drop.
    pub fn finish_calc(&mut self, cfg: &RuntimeConfig) -> Result<Vec<Message>> {
        let Some(run) = self.current.take() else {
            return Ok(Vec::new());
        };
        let out = if run.cancelled || self.halted { Vec::new() } else { self.deliver(run.task.ret, run.outputs, cfg)? };
        self.refresh_status();
        Ok(out)
    }

    fn deliver(&mut self, ret: Option<Pad>, outputs: Vec<Matrix>, cfg: &RuntimeConfig) -> Result<Vec<Message>> {
        match ret {
            None => {
                self.root_result = Some(outputs);
                self.halted = true;
                self.vokzal.clear();
                let mut out = Vec::new();
                for n in 0..self.num_nodes {
                    out.extend(self.send(n, Body::Completion, cfg));
                }
                Ok(out)
            }
            Some(p) if p.proc_id == self.node_id => self.write_local(p, outputs, cfg),
            Some(p) => Ok(self.send(p.proc_id, Body::Result { pad: p, outputs }, cfg)),
        }
    }

    fn write_local(&mut self, pad: Pad, outputs: Vec<Matrix>, cfg: &RuntimeConfig) -> Result<Vec<Message>> {
        let amine = self
            .pine
            .get_mut(pad.amine_id)
            .ok_or_else(|| Error::InvalidIndex(format!("no Amine {} on node {}", pad.amine_id, pad.proc_id)))?;
        if amine.abandoned {
            return Ok(Vec::new());
        }
        let was_complete = amine.is_complete();
        if amine.drops.get(pad.drop_id).is_some_and(|d| d.state == DropState::Done) {
            self.duplicate_results += 1;
        }
        let ready = write_results_to_amine(amine, pad.drop_id, outputs)?;
        let tasks: Vec<Task> = ready.iter().map(|&d| amine.drops[d].to_task()).collect();
        let finished = (!was_complete && amine.is_complete())
            .then(|| (amine.return_pad, amine.out_data.iter().map(|m| m.clone().expect("complete")).collect()));
        for t in tasks {
            self.push_task(t);
        }
        match finished {
            Some((ret, out)) => self.deliver(ret, out, cfg),
            None => Ok(Vec::new()),
        }
    }

    /// Hands the largest tasks to free nodes while more than one task is
    /// waiting here (or one is waiting and the CalcThread is busy). Free
    /// nodes that cannot be used go to an overloaded child, or back to the
    /// parent once nothing is queued.
    pub fn balance(&mut self, cfg: &RuntimeConfig) -> Vec<Message> {
        let mut out = Vec::new();
        if self.halted || self.status == NodeStatus::Failed {
            return out;
        }
        while !self.free_list.is_empty() {
            let queued = self.vokzal_len();
            if !(queued >= 2 || (queued == 1 && self.current.is_some())) {
                break;
            }
            let dst = self.free_list.remove(0);
            let task = self.pop_shallowest().expect("queued task");
            if let Some(p) = self.is_local(&task.ret) {
                self.set_drop_state(p, DropState::Sent(dst));
            }
            self.terminal.insert(dst, false);
            out.extend(self.send(dst, Body::Task(task), cfg));
        }
        if !self.free_list.is_empty() {
            if let Some(child) = self.terminal.iter().find(|(_, &o)| o).map(|(&c, _)| c) {
                let nodes = std::mem::take(&mut self.free_list);
                self.terminal.insert(child, false);
                out.extend(self.send(child, Body::FreeNodes { nodes }, cfg));
            } else if self.node_id != 0 && self.vokzal.is_empty() && !self.is_idle() {
                let nodes = std::mem::take(&mut self.free_list);
                let parent = self.parent();
                out.extend(self.send(parent, Body::FreeNodes { nodes }, cfg));
            }
        }
        out
    }

    /// Reports overload changes to the parents and, once idle, offers this
    /// node (and any free nodes it holds) to its most recent parent.
    fn report(&mut self, cfg: &RuntimeConfig) -> Vec<Message> {
        let mut out = Vec::new();
        if self.node_id == 0 || self.halted || self.status == NodeStatus::Failed {
            return out;
        }
        if !self.announced && self.is_idle() {
            let mut nodes = vec![self.node_id];
            nodes.append(&mut self.free_list);
            let parent = self.parent();
            out.extend(self.send(parent, Body::FreeNodes { nodes }, cfg));
            self.announced = true;
            self.aerodrome.clear();
            self.terminal.clear();
            self.reported_overload = false;
            return out;
        }
        let over = self.overloaded(cfg);
        if over != self.reported_overload && !self.aerodrome.is_empty() {
            self.reported_overload = over;
            for p in self.aerodrome.clone() {
                out.extend(self.send(p, Body::ChildStatus { overloaded: over }, cfg));
            }
        }
        out
    }

    /// Handles one incoming message.
    pub fn dispatcher_step(&mut self, msg: Message, cfg: &RuntimeConfig) -> Result<Vec<Message>> {
        if self.status == NodeStatus::Failed {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let src = msg.src;
        match msg.body {
            Body::Task(task) => {
                if !self.halted {
                    self.push_task(task);
                    self.aerodrome.retain(|&p| p != src);
                    self.aerodrome.push(src);
                    self.announced = false;
                    self.status = NodeStatus::Busy;
                }
            }
            Body::Result { pad, outputs } => {
                if pad.proc_id != self.node_id {
                    return Err(Error::InvalidIndex(format!("result for {pad:?} delivered to node {}", self.node_id)));
                }
                if !self.halted {
                    out.extend(self.receive_result(pad, outputs, cfg)?);
                }
            }
            Body::FreeNodes { nodes } => {
                for n in nodes {
                    if n != self.node_id && !self.known_failed.contains(&n) && !self.free_list.contains(&n) {
                        self.terminal.remove(&n);
                        self.free_list.push(n);
                    }
                }
                if self.aerodrome.contains(&src) {
                    self.reported_overload = false;
                }
            }
            Body::ChildStatus { overloaded } => {
                if !self.known_failed.contains(&src) {
                    self.terminal.insert(src, overloaded);
                }
            }
            Body::Fragment(f) => {
                let key = (src, f.msg_seq);
                let slots = self.fragments.entry(key).or_insert_with(|| vec![None; f.count]);
                if f.index >= slots.len() {
                    return Err(Error::InvalidIndex(format!("fragment {} of {}", f.index, slots.len())));
                }
                slots[f.index] = Some(f.bytes);
                if slots.iter().all(Option::is_some) {
                    let json: String = self.fragments.remove(&key).into_iter().flatten().flatten().collect();
                    let body: Body = serde_json::from_str(&json).map_err(|e| Error::Parse(format!("fragmented message: {e}")))?;
                    let whole = Message { src, dst: msg.dst, seq: f.msg_seq, body };
                    return self.dispatcher_step(whole, cfg);
                }
            }
            Body::Completion => {
                self.halted = true;
                self.vokzal.clear();
            }
            Body::FailureNotice { node } => out.extend(self.handle_failure(node, cfg)),
        }
        out.extend(self.balance(cfg));
        out.extend(self.report(cfg));
        self.refresh_status();
        Ok(out)
    }

    fn receive_result(&mut self, pad: Pad, outputs: Vec<Matrix>, cfg: &RuntimeConfig) -> Result<Vec<Message>> {
        let amine = self
            .pine
            .get(pad.amine_id)
            .ok_or_else(|| Error::InvalidIndex(format!("no Amine {} on node {}", pad.amine_id, self.node_id)))?;
        if amine.abandoned {
            return Ok(Vec::new());
        }
        match amine.drops.get(pad.drop_id).map(|d| d.state) {
            Some(DropState::Sent(_)) | Some(DropState::Done) => self.write_local(pad, outputs, cfg),
            other => Err(Error::DuplicateWrite(format!("result for drop {pad:?} in state {other:?}"))),
        }
    }

    /// Reacts to the failure of `failed`: drops sent there return to the
    /// vokzal, work done on its behalf is abandoned, and it is forgotten as
    /// a child and as a free node.
    pub fn handle_failure(&mut self, failed: usize, cfg: &RuntimeConfig) -> Vec<Message> {
        if failed == self.node_id || !self.known_failed.insert(failed) {
            return Vec::new();
        }
        let mut reverted = Vec::new();
        for amine in self.pine.iter_mut().filter(|a| !a.abandoned) {
            for d in &mut amine.drops {
                if d.state == DropState::Sent(failed) {
                    d.state = DropState::Ready;
                    reverted.push(d.to_task());
                }
            }
        }
        self.recomputed += reverted.len() as u64;
        for t in reverted {
            self.push_task(t);
        }
        self.terminal.remove(&failed);
        self.free_list.retain(|&n| n != failed);
        if self.aerodrome.contains(&failed) {
            self.aerodrome.retain(|&n| n != failed);
            self.abandon_work_for(failed);
        }
        let out = self.balance(cfg);
        self.refresh_status();
        out
    }

    fn abandon_work_for(&mut self, failed: usize) {
        let me = self.node_id;
        loop {
            let mut changed = false;
            for i in 0..self.pine.len() {
                if self.pine[i].abandoned {
                    continue;
                }
                let dead = match self.pine[i].return_pad {
                    Some(p) if p.proc_id == failed => true,
                    Some(p) if p.proc_id == me => self.pine[p.amine_id].abandoned,
                    _ => false,
                };
                if dead {
                    self.pine[i].abandoned = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let pine = &self.pine;
        let unwanted = |ret: &Option<Pad>| match ret {
            Some(p) if p.proc_id == failed => true,
            Some(p) if p.proc_id == me => pine[p.amine_id].abandoned,
            _ => false,
        };
        for q in self.vokzal.values_mut() {
            q.retain(|t| !unwanted(&t.ret));
        }
        self.vokzal.retain(|_, q| !q.is_empty());
        if let Some(run) = &mut self.current {
            if unwanted(&run.task.ret) {
                run.cancelled = true;
            }
        }
    }

    /// Runs the CalcThread until it is busy or out of work, rebalancing
    /// after every expansion. Returns the outgoing messages and the cost
    /// of a leaf drop started along the way.
    pub fn pump(&mut self, cfg: &RuntimeConfig) -> Result<(Vec<Message>, Option<u64>)> {
        let mut out = Vec::new();
        let mut started = None;
        if self.halted || self.status == NodeStatus::Failed {
            return Ok((out, started));
        }
        loop {
            out.extend(self.balance(cfg));
            if self.current.is_some() {
                break;
            }
            match self.calc_thread_step(cfg)? {
                CalcStep::Idle => break,
                CalcStep::Expanded => {}
                CalcStep::Started(c) => started = Some(c),
            }
        }
        out.extend(self.report(cfg));
        self.refresh_status();
        Ok((out, started))
    }
}
