//! Schedulers: serial baseline, greedy concurrent list scheduling, and an
//! exhaustive oracle for small instances, plus a schedule validator.
//!
//! All three emit the same [`Schedule`] shape: a sequence of blocks where a
//! block is either one op run solo or two independent convolutions under a
//! feasible co-run plan. The device is idle between blocks, so at most two
//! ops ever overlap and the makespan is the sum of block durations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::colocate::{
    best_corun, fastest_runtime, intra_sm_allocate, CoRunPlan, Granularity,
};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::graph::{NetworkGraph, OpKind, OpNode};
use crate::profile::{Algorithm, KernelProfile, ProfileDb};

/// Which scheduler produced a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Serial,
    Greedy,
    Exhaustive,
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "serial" => Ok(SchedulerKind::Serial),
            "greedy" => Ok(SchedulerKind::Greedy),
            "exhaustive" => Ok(SchedulerKind::Exhaustive),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchedulerKind::Serial => "serial",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::Exhaustive => "exhaustive",
        })
    }
}

/// How an interval holds the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Solo,
    /// Index into [`Schedule::co_runs`].
    CoRun(usize),
}

/// One scheduled execution of one op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub op_id: String,
    /// `None` for non-convolution ops.
    pub algorithm: Option<Algorithm>,
    pub start_ms: f64,
    pub end_ms: f64,
    pub assignment: Assignment,
}

/// The two ops of a co-run block, in plan order (index 0 keeps solo
/// occupancy in intra mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoRunRecord {
    pub ops: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub plan: CoRunPlan,
}

/// A complete timed schedule with its memory-occupancy timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub graph: String,
    pub mode: SchedulerKind,
    pub granularity: Granularity,
    pub gamma: f64,
    pub mem_budget_bytes: u64,
    pub makespan_ms: f64,
    pub intervals: Vec<Interval>,
    pub co_runs: Vec<CoRunRecord>,
    /// Resident bytes after each change point, as `[time_ms, bytes]` pairs.
    pub memory_timeline: Vec<(f64, u64)>,
}

impl Schedule {
    pub fn peak_memory_bytes(&self) -> u64 {
        self.memory_timeline
            .iter()
            .map(|&(_, bytes)| bytes)
            .max()
            .unwrap_or(0)
    }
}

/// Limits guarding the exhaustive search.
#[derive(Debug, Clone, Copy)]
pub struct ExhaustiveLimits {
    pub max_ops: usize,
    pub max_algs: usize,
}

impl Default for ExhaustiveLimits {
    fn default() -> Self {
        ExhaustiveLimits {
            max_ops: 4,
            max_algs: 3,
        }
    }
}

/// Fastest memory-feasible algorithm for a conv op; `None` and the fixed
/// runtime for anything else. Runtime ties resolve by algorithm name.
fn choose_fastest(
    node: &OpNode,
    db: &ProfileDb,
    mem_budget_bytes: u64,
) -> Result<(Option<Algorithm>, f64)> {
    match &node.kind {
        OpKind::Other { runtime_ms } => {
            // reuse the shared feasibility check for fixed tensors
            fastest_runtime(db, node, mem_budget_bytes)?;
            Ok((None, *runtime_ms))
        }
        OpKind::Conv { menu } => {
            let runtime = fastest_runtime(db, node, mem_budget_bytes)?;
            let entry = db
                .profiles_for(menu)
                .into_iter()
                .filter(|p| {
                    node.fixed_bytes <= mem_budget_bytes
                        && p.workspace_bytes <= mem_budget_bytes - node.fixed_bytes
                })
                .min_by(|x, y| {
                    x.solo_runtime_ms
                        .partial_cmp(&y.solo_runtime_ms)
                        .unwrap()
                        .then_with(|| x.algorithm.name().cmp(y.algorithm.name()))
                })
                .expect("fastest_runtime succeeded, so a feasible entry exists");
            debug_assert_eq!(entry.solo_runtime_ms, runtime);
            Ok((Some(entry.algorithm), entry.solo_runtime_ms))
        }
    }
}

fn conv_menu(node: &OpNode) -> &str {
    match &node.kind {
        OpKind::Conv { menu } => menu,
        OpKind::Other { .. } => unreachable!("callers check the kind"),
    }
}

fn op_bytes(node: &OpNode, algorithm: Option<Algorithm>, db: &ProfileDb) -> u64 {
    let workspace = match (&node.kind, algorithm) {
        (OpKind::Conv { menu }, Some(alg)) => db
            .get(menu, alg)
            .map(|p| p.workspace_bytes)
            .unwrap_or(0),
        _ => 0,
    };
    node.fixed_bytes + workspace
}

/// Resident-memory change points for a set of intervals, each paired with
/// the bytes it holds. Zero-duration intervals hold nothing.
fn memory_timeline(spans: &[(f64, f64, u64)]) -> Vec<(f64, u64)> {
    let mut events: Vec<(f64, i8, i128)> = Vec::new();
    for &(start, end, bytes) in spans {
        if end > start {
            // releases sort before acquisitions at the same instant
            events.push((start, 1, bytes as i128));
            events.push((end, 0, -(bytes as i128)));
        }
    }
    if events.is_empty() {
        return vec![(0.0, 0)];
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut timeline = Vec::new();
    if events[0].0 > 0.0 {
        timeline.push((0.0, 0));
    }
    let mut resident: i128 = 0;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            resident += events[i].2;
            i += 1;
        }
        timeline.push((t, resident as u64));
    }
    timeline
}

struct Builder<'a> {
    graph: &'a NetworkGraph,
    db: &'a ProfileDb,
    cursor_ms: f64,
    intervals: Vec<Interval>,
    co_runs: Vec<CoRunRecord>,
}

impl<'a> Builder<'a> {
    fn new(graph: &'a NetworkGraph, db: &'a ProfileDb) -> Self {
        Builder {
            graph,
            db,
            cursor_ms: 0.0,
            intervals: Vec::new(),
            co_runs: Vec::new(),
        }
    }

    fn push_solo(&mut self, node: &OpNode, algorithm: Option<Algorithm>, duration_ms: f64) {
        self.intervals.push(Interval {
            op_id: node.op_id.clone(),
            algorithm,
            start_ms: self.cursor_ms,
            end_ms: self.cursor_ms + duration_ms,
            assignment: Assignment::Solo,
        });
        self.cursor_ms += duration_ms;
    }

    fn push_corun(
        &mut self,
        nodes: [&OpNode; 2],
        profiles: [&KernelProfile; 2],
        plan: CoRunPlan,
        finish_times_ms: [f64; 2],
    ) {
        let index = self.co_runs.len();
        self.co_runs.push(CoRunRecord {
            ops: nodes.iter().map(|n| n.op_id.clone()).collect(),
            algorithms: profiles.iter().map(|p| p.algorithm).collect(),
            plan,
        });
        for (node, (profile, finish)) in nodes.iter().zip(profiles.iter().zip(finish_times_ms)) {
            self.intervals.push(Interval {
                op_id: node.op_id.clone(),
                algorithm: Some(profile.algorithm),
                start_ms: self.cursor_ms,
                end_ms: self.cursor_ms + finish,
                assignment: Assignment::CoRun(index),
            });
        }
        self.cursor_ms += finish_times_ms[0].max(finish_times_ms[1]);
    }

    fn finish(
        self,
        mode: SchedulerKind,
        granularity: Granularity,
        gamma: f64,
        mem_budget_bytes: u64,
    ) -> Schedule {
        let spans: Vec<(f64, f64, u64)> = self
            .intervals
            .iter()
            .map(|iv| {
                let node = self.graph.node(&iv.op_id).expect("builder uses graph ops");
                (iv.start_ms, iv.end_ms, op_bytes(node, iv.algorithm, self.db))
            })
            .collect();
        Schedule {
            graph: self.graph.name().to_string(),
            mode,
            granularity,
            gamma,
            mem_budget_bytes,
            makespan_ms: self.cursor_ms,
            memory_timeline: memory_timeline(&spans),
            intervals: self.intervals,
            co_runs: self.co_runs,
        }
    }
}

/// Baseline: topological order, one op at a time, each convolution on the
/// fastest algorithm whose workspace fits the budget.
pub fn schedule_serial_fastest(
    graph: &NetworkGraph,
    db: &ProfileDb,
    device: &DeviceSpec,
    mem_budget_bytes: u64,
) -> Result<Schedule> {
    let _ = device; // serial execution never partitions the device
    let mut builder = Builder::new(graph, db);
    for node in graph.topo_order() {
        let (entry, duration) = choose_fastest(node, db, mem_budget_bytes)?;
        builder.push_solo(node, entry, duration);
    }
    Ok(builder.finish(
        SchedulerKind::Serial,
        Granularity::Continuous,
        1.0,
        mem_budget_bytes,
    ))
}

/// Event-driven list scheduling. Ready non-convolution ops run first in
/// topological order; they are serial filler and completing them only
/// grows the set of co-runnable convolutions. Once the ready queue is all
/// convolutions, the longest remaining one is tentatively paired with every
/// other ready convolution over all algorithm pairs and both co-location
/// modes; the pairing with the smallest predicted makespan runs if it beats
/// executing those two ops serially. Otherwise the head of the ready queue
/// runs solo on its fastest feasible algorithm, so the result never exceeds
/// the serial baseline.
pub fn schedule_concurrent_greedy(
    graph: &NetworkGraph,
    db: &ProfileDb,
    device: &DeviceSpec,
    mem_budget_bytes: u64,
    granularity: Granularity,
    gamma: f64,
) -> Result<Schedule> {
    let mut builder = Builder::new(graph, db);
    let mut completed: BTreeSet<String> = BTreeSet::new();
    let topo_pos: std::collections::BTreeMap<&str, usize> = graph
        .topo_order()
        .enumerate()
        .map(|(i, n)| (n.op_id.as_str(), i))
        .collect();

    loop {
        let ready_ids = graph.ready_set(&completed)?;
        if ready_ids.is_empty() {
            break;
        }
        let mut ready: Vec<&OpNode> = ready_ids
            .iter()
            .map(|id| graph.node(id).expect("ready ops exist"))
            .collect();
        ready.sort_by_key(|n| topo_pos[n.op_id.as_str()]);

        // drain serial filler before looking for conv pairings
        if let Some(&filler) = ready.iter().find(|n| !n.is_conv()) {
            let (entry, duration) = choose_fastest(filler, db, mem_budget_bytes)?;
            builder.push_solo(filler, entry, duration);
            completed.insert(filler.op_id.clone());
            continue;
        }

        // longest-remaining ready conv first, measured by its fastest
        // feasible solo runtime
        let mut convs: Vec<(&OpNode, f64)> = ready
            .iter()
            .filter(|n| n.is_conv())
            .map(|&n| fastest_runtime(db, n, mem_budget_bytes).map(|t| (n, t)))
            .collect::<Result<_>>()?;
        convs.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| topo_pos[a.0.op_id.as_str()].cmp(&topo_pos[b.0.op_id.as_str()]))
        });

        if convs.len() >= 2 {
            let (seed, seed_fastest) = convs[0];
            let mut best: Option<BestPairing> = None;
            for &(partner, partner_fastest) in &convs[1..] {
                let serial_pair_ms = seed_fastest + partner_fastest;
                for p in db.profiles_for(conv_menu(seed)) {
                    for q in db.profiles_for(conv_menu(partner)) {
                        let resident = seed.fixed_bytes
                            + p.workspace_bytes
                            + partner.fixed_bytes
                            + q.workspace_bytes;
                        if resident > mem_budget_bytes {
                            continue;
                        }
                        let Some((plan, outcome)) = best_corun(p, q, device, granularity, gamma)
                        else {
                            continue;
                        };
                        if outcome.makespan_ms >= serial_pair_ms {
                            continue;
                        }
                        let better = match &best {
                            None => true,
                            Some(b) => outcome.makespan_ms < b.makespan_ms,
                        };
                        if better {
                            best = Some(BestPairing {
                                partner_id: partner.op_id.clone(),
                                seed_profile: p.clone(),
                                partner_profile: q.clone(),
                                plan,
                                finish: [outcome.finish_times_ms[0], outcome.finish_times_ms[1]],
                                makespan_ms: outcome.makespan_ms,
                            });
                        }
                    }
                }
            }
            if let Some(win) = best {
                let partner = graph.node(&win.partner_id)?;
                builder.push_corun(
                    [seed, partner],
                    [&win.seed_profile, &win.partner_profile],
                    win.plan,
                    win.finish,
                );
                completed.insert(seed.op_id.clone());
                completed.insert(partner.op_id.clone());
                continue;
            }
        }

        let head = ready[0];
        let (entry, duration) = choose_fastest(head, db, mem_budget_bytes)?;
        builder.push_solo(head, entry, duration);
        completed.insert(head.op_id.clone());
    }

    Ok(builder.finish(
        SchedulerKind::Greedy,
        granularity,
        gamma,
        mem_budget_bytes,
    ))
}

struct BestPairing {
    partner_id: String,
    seed_profile: KernelProfile,
    partner_profile: KernelProfile,
    plan: CoRunPlan,
    finish: [f64; 2],
    makespan_ms: f64,
}

/// One step of an exhaustive execution order: an op index run solo, or an
/// ordered pair run concurrently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Single(usize),
    Pair(usize, usize),
}

/// Winning exhaustive-search state: makespan, algorithm per op, block order.
type Candidate<'db> = (f64, Vec<Option<&'db KernelProfile>>, Vec<Block>);

/// Minimum-makespan schedule by brute force: every algorithm assignment
/// crossed with every precedence-respecting sequence of solo/pair blocks.
/// Guarded by `limits`; ties resolve to the first candidate in enumeration
/// order (algorithm assignments by name, then op order, singles before
/// pairs).
pub fn schedule_exhaustive(
    graph: &NetworkGraph,
    db: &ProfileDb,
    device: &DeviceSpec,
    mem_budget_bytes: u64,
    granularity: Granularity,
    gamma: f64,
    limits: ExhaustiveLimits,
) -> Result<Schedule> {
    if graph.len() > limits.max_ops {
        return Err(Error::LimitExceeded {
            what: "ops".to_string(),
            got: graph.len(),
            limit: limits.max_ops,
        });
    }
    let nodes: Vec<&OpNode> = graph.topo_order().collect();
    for node in &nodes {
        if let OpKind::Conv { menu } = &node.kind {
            let size = db.profiles_for(menu).len();
            if size == 0 {
                return Err(Error::MissingMenu {
                    op_id: node.op_id.clone(),
                    menu: menu.clone(),
                });
            }
            if size > limits.max_algs {
                return Err(Error::LimitExceeded {
                    what: format!("menu for op `{}`", node.op_id),
                    got: size,
                    limit: limits.max_algs,
                });
            }
        }
        // every op must fit the budget under at least one algorithm
        fastest_runtime(db, node, mem_budget_bytes)?;
    }

    // per-op candidate profiles, sorted by algorithm name
    let choices: Vec<Vec<Option<&KernelProfile>>> = nodes
        .iter()
        .map(|node| match &node.kind {
            OpKind::Other { .. } => vec![None],
            OpKind::Conv { menu } => {
                let mut profiles: Vec<Option<&KernelProfile>> = db
                    .profiles_for(menu)
                    .into_iter()
                    .filter(|p| node.fixed_bytes + p.workspace_bytes <= mem_budget_bytes)
                    .map(Some)
                    .collect();
                profiles.sort_by_key(|p| p.map(|p| p.algorithm.name()));
                profiles
            }
        })
        .collect();

    let preds: Vec<Vec<usize>> = nodes
        .iter()
        .map(|node| {
            graph
                .predecessors(&node.op_id)
                .expect("nodes exist")
                .iter()
                .map(|p| nodes.iter().position(|n| n.op_id == *p).unwrap())
                .collect()
        })
        .collect();

    let mut best: Option<Candidate<'_>> = None;
    let mut assignment: Vec<Option<&KernelProfile>> = vec![None; nodes.len()];
    enumerate_assignments(&choices, 0, &mut assignment, &mut |assignment| {
        let mut sequence = Vec::new();
        search_blocks(
            &nodes,
            &preds,
            assignment,
            device,
            mem_budget_bytes,
            granularity,
            gamma,
            0,
            0.0,
            &mut sequence,
            &mut |makespan, sequence| {
                let replace = match &best {
                    None => true,
                    Some((best_makespan, _, _)) => makespan < *best_makespan,
                };
                if replace {
                    best = Some((makespan, assignment.to_vec(), sequence.to_vec()));
                }
            },
        );
    });

    let (_, assignment, sequence) = best.expect("graphs schedule at least the empty sequence");

    // replay the winning sequence
    let mut builder = Builder::new(graph, db);
    for block in sequence {
        match block {
            Block::Single(i) => {
                let duration = match assignment[i] {
                    Some(p) => p.solo_runtime_ms,
                    None => other_runtime(nodes[i]),
                };
                builder.push_solo(nodes[i], assignment[i].map(|p| p.algorithm), duration);
            }
            Block::Pair(i, j) => {
                let (p, q) = (assignment[i].unwrap(), assignment[j].unwrap());
                let (plan, outcome) =
                    best_corun(p, q, device, granularity, gamma).expect("search found this plan");
                builder.push_corun(
                    [nodes[i], nodes[j]],
                    [p, q],
                    plan,
                    [outcome.finish_times_ms[0], outcome.finish_times_ms[1]],
                );
            }
        }
    }
    Ok(builder.finish(
        SchedulerKind::Exhaustive,
        granularity,
        gamma,
        mem_budget_bytes,
    ))
}

fn other_runtime(node: &OpNode) -> f64 {
    match &node.kind {
        OpKind::Other { runtime_ms } => *runtime_ms,
        OpKind::Conv { .. } => unreachable!("conv ops carry an assignment"),
    }
}

fn enumerate_assignments<'db>(
    choices: &[Vec<Option<&'db KernelProfile>>],
    index: usize,
    assignment: &mut Vec<Option<&'db KernelProfile>>,
    visit: &mut dyn FnMut(&[Option<&'db KernelProfile>]),
) {
    if index == choices.len() {
        visit(assignment);
        return;
    }
    for &choice in &choices[index] {
        assignment[index] = choice;
        enumerate_assignments(choices, index + 1, assignment, visit);
    }
}

#[allow(clippy::too_many_arguments)]
fn search_blocks(
    nodes: &[&OpNode],
    preds: &[Vec<usize>],
    assignment: &[Option<&KernelProfile>],
    device: &DeviceSpec,
    mem_budget_bytes: u64,
    granularity: Granularity,
    gamma: f64,
    done: u32,
    elapsed: f64,
    sequence: &mut Vec<Block>,
    report: &mut dyn FnMut(f64, &[Block]),
) {
    let n = nodes.len();
    if done.count_ones() as usize == n {
        report(elapsed, sequence);
        return;
    }
    let ready: Vec<usize> = (0..n)
        .filter(|&i| done & (1 << i) == 0)
        .filter(|&i| preds[i].iter().all(|&p| done & (1 << p) != 0))
        .collect();

    for &i in &ready {
        let duration = match assignment[i] {
            Some(p) => p.solo_runtime_ms,
            None => other_runtime(nodes[i]),
        };
        sequence.push(Block::Single(i));
        search_blocks(
            nodes,
            preds,
            assignment,
            device,
            mem_budget_bytes,
            granularity,
            gamma,
            done | (1 << i),
            elapsed + duration,
            sequence,
            report,
        );
        sequence.pop();
    }

    // ready ops are pairwise independent, so any conv pair may co-run
    for &i in &ready {
        for &j in &ready {
            if i == j || !nodes[i].is_conv() || !nodes[j].is_conv() {
                continue;
            }
            let (Some(p), Some(q)) = (assignment[i], assignment[j]) else {
                continue;
            };
            let resident = nodes[i].fixed_bytes
                + p.workspace_bytes
                + nodes[j].fixed_bytes
                + q.workspace_bytes;
            if resident > mem_budget_bytes {
                continue;
            }
            let Some((_, outcome)) = best_corun(p, q, device, granularity, gamma) else {
                continue;
            };
            sequence.push(Block::Pair(i, j));
            search_blocks(
                nodes,
                preds,
                assignment,
                device,
                mem_budget_bytes,
                granularity,
                gamma,
                done | (1 << i) | (1 << j),
                elapsed + outcome.makespan_ms,
                sequence,
                report,
            );
            sequence.pop();
        }
    }
}

/// A broken schedule property found by [`validate_schedule`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownScheduledOp { op_id: String },
    MissingOp { op_id: String },
    DuplicatedOp { op_id: String },
    AlgorithmUnprofiled { op_id: String, algorithm: Algorithm },
    Precedence { pred: String, succ: String, pred_end_ms: f64, succ_start_ms: f64 },
    MemoryOverBudget { time_ms: f64, resident_bytes: u64, budget_bytes: u64 },
    OverlapWithoutPlan { a: String, b: String },
    TooManyConcurrent { time_ms: f64, count: usize },
    InfeasibleCoRun { ops: Vec<String>, reason: String },
    MakespanMismatch { declared_ms: f64, actual_ms: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::UnknownScheduledOp { op_id } => {
                write!(f, "scheduled op `{op_id}` is not in the graph")
            }
            Violation::MissingOp { op_id } => write!(f, "graph op `{op_id}` never scheduled"),
            Violation::DuplicatedOp { op_id } => write!(f, "op `{op_id}` scheduled twice"),
            Violation::AlgorithmUnprofiled { op_id, algorithm } => {
                write!(f, "op `{op_id}` scheduled on unprofiled algorithm {algorithm}")
            }
            Violation::Precedence { pred, succ, pred_end_ms, succ_start_ms } => write!(
                f,
                "op `{succ}` starts at {succ_start_ms} ms before its predecessor `{pred}` ends at {pred_end_ms} ms"
            ),
            Violation::MemoryOverBudget { time_ms, resident_bytes, budget_bytes } => write!(
                f,
                "resident memory {resident_bytes} B exceeds budget {budget_bytes} B at {time_ms} ms"
            ),
            Violation::OverlapWithoutPlan { a, b } => {
                write!(f, "ops `{a}` and `{b}` overlap without a shared co-run plan")
            }
            Violation::TooManyConcurrent { time_ms, count } => {
                write!(f, "{count} ops overlap at {time_ms} ms; the model allows 2")
            }
            Violation::InfeasibleCoRun { ops, reason } => {
                write!(f, "co-run of {ops:?} is infeasible: {reason}")
            }
            Violation::MakespanMismatch { declared_ms, actual_ms } => {
                write!(f, "declared makespan {declared_ms} ms but intervals end at {actual_ms} ms")
            }
        }
    }
}

const TIME_EPSILON_MS: f64 = 1e-9;

/// Check a schedule against the graph, profiles, device, and budget:
/// every op exactly once, precedence respected, memory within budget at
/// every change point, overlap only in pairs under a feasible plan, and a
/// truthful makespan. Violations are values, not errors.
pub fn validate_schedule(
    schedule: &Schedule,
    graph: &NetworkGraph,
    db: &ProfileDb,
    device: &DeviceSpec,
    mem_budget_bytes: u64,
) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for iv in &schedule.intervals {
        if graph.node(&iv.op_id).is_err() {
            violations.push(Violation::UnknownScheduledOp {
                op_id: iv.op_id.clone(),
            });
            continue;
        }
        if !seen.insert(&iv.op_id) {
            violations.push(Violation::DuplicatedOp {
                op_id: iv.op_id.clone(),
            });
        }
    }
    for node in graph.nodes() {
        if !seen.contains(node.op_id.as_str()) {
            violations.push(Violation::MissingOp {
                op_id: node.op_id.clone(),
            });
        }
    }

    // resolve per-interval memory, flagging unprofiled algorithms
    let mut spans: Vec<(f64, f64, u64)> = Vec::new();
    for iv in &schedule.intervals {
        let Ok(node) = graph.node(&iv.op_id) else {
            continue;
        };
        if let (OpKind::Conv { menu }, Some(alg)) = (&node.kind, iv.algorithm) {
            if db.get(menu, alg).is_none() {
                violations.push(Violation::AlgorithmUnprofiled {
                    op_id: iv.op_id.clone(),
                    algorithm: alg,
                });
            }
        }
        spans.push((iv.start_ms, iv.end_ms, op_bytes(node, iv.algorithm, db)));
    }

    // precedence over edges
    let end_of = |op: &str| -> Option<f64> {
        schedule
            .intervals
            .iter()
            .find(|iv| iv.op_id == op)
            .map(|iv| iv.end_ms)
    };
    for node in graph.nodes() {
        let Some(start) = schedule
            .intervals
            .iter()
            .find(|iv| iv.op_id == node.op_id)
            .map(|iv| iv.start_ms)
        else {
            continue;
        };
        for pred in graph.predecessors(&node.op_id).expect("graph op") {
            if let Some(pred_end) = end_of(pred) {
                if pred_end > start + TIME_EPSILON_MS {
                    violations.push(Violation::Precedence {
                        pred: pred.to_string(),
                        succ: node.op_id.clone(),
                        pred_end_ms: pred_end,
                        succ_start_ms: start,
                    });
                }
            }
        }
    }

    // memory at every change point
    for &(time_ms, resident_bytes) in memory_timeline(&spans).iter() {
        if resident_bytes > mem_budget_bytes {
            violations.push(Violation::MemoryOverBudget {
                time_ms,
                resident_bytes,
                budget_bytes: mem_budget_bytes,
            });
        }
    }

    // overlap structure: pairs only, each under its recorded feasible plan
    let overlaps = |a: &Interval, b: &Interval| {
        a.start_ms < b.end_ms - TIME_EPSILON_MS && b.start_ms < a.end_ms - TIME_EPSILON_MS
    };
    for (x, a) in schedule.intervals.iter().enumerate() {
        for b in schedule.intervals.iter().skip(x + 1) {
            if !overlaps(a, b) {
                continue;
            }
            match (a.assignment, b.assignment) {
                (Assignment::CoRun(i), Assignment::CoRun(j)) if i == j => {
                    if let Some(record) = schedule.co_runs.get(i) {
                        if let Some(reason) = corun_infeasibility(record, graph, db, device) {
                            violations.push(Violation::InfeasibleCoRun {
                                ops: record.ops.clone(),
                                reason,
                            });
                        }
                    } else {
                        violations.push(Violation::OverlapWithoutPlan {
                            a: a.op_id.clone(),
                            b: b.op_id.clone(),
                        });
                    }
                }
                _ => violations.push(Violation::OverlapWithoutPlan {
                    a: a.op_id.clone(),
                    b: b.op_id.clone(),
                }),
            }
        }
    }
    // more than two concurrent intervals
    let mut points: Vec<f64> = schedule.intervals.iter().map(|iv| iv.start_ms).collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    for &t in &points {
        let count = schedule
            .intervals
            .iter()
            .filter(|iv| iv.start_ms <= t + TIME_EPSILON_MS && t + TIME_EPSILON_MS < iv.end_ms)
            .count();
        if count > 2 {
            violations.push(Violation::TooManyConcurrent { time_ms: t, count });
        }
    }

    let actual = schedule
        .intervals
        .iter()
        .map(|iv| iv.end_ms)
        .fold(0.0f64, f64::max);
    if (actual - schedule.makespan_ms).abs() > TIME_EPSILON_MS {
        violations.push(Violation::MakespanMismatch {
            declared_ms: schedule.makespan_ms,
            actual_ms: actual,
        });
    }

    violations
}

/// Re-derive feasibility of a recorded plan; `None` means feasible.
fn corun_infeasibility(
    record: &CoRunRecord,
    graph: &NetworkGraph,
    db: &ProfileDb,
    device: &DeviceSpec,
) -> Option<String> {
    if record.ops.len() != 2 || record.algorithms.len() != 2 {
        return Some("co-run records must pair exactly two ops".to_string());
    }
    let mut profiles = Vec::new();
    for (op, &alg) in record.ops.iter().zip(&record.algorithms) {
        let node = match graph.node(op) {
            Ok(n) => n,
            Err(_) => return Some(format!("unknown op `{op}`")),
        };
        let OpKind::Conv { menu } = &node.kind else {
            return Some(format!("op `{op}` is not a convolution"));
        };
        match db.get(menu, alg) {
            Some(p) => profiles.push(p),
            None => return Some(format!("no profile for (`{op}`, {alg})")),
        }
    }
    match &record.plan {
        CoRunPlan::Intra {
            granularity,
            shares,
            blocks_per_sm,
        } => {
            if shares.len() != 2 || shares.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
                return Some(format!("shares {shares:?} outside (0, 1]"));
            }
            // divisible resources: each kernel holds share x aggregate
            let (a, b) = (profiles[0], profiles[1]);
            for (name, ra, rb) in [
                ("registers", a.reg_frac, b.reg_frac),
                ("shared memory", a.shm_frac, b.shm_frac),
                ("threads", a.thread_frac, b.thread_frac),
            ] {
                let sum = shares[0] * ra + shares[1] * rb;
                if sum > 1.0 + 1e-9 {
                    return Some(format!("{name} over-committed: {sum:.4} > 1"));
                }
            }
            // block slots: aggregate fractions in continuous mode, whole
            // resident blocks in quantized mode
            match granularity {
                Granularity::Continuous => {
                    let sum = shares[0] * a.block_frac + shares[1] * b.block_frac;
                    if sum > 1.0 + 1e-9 {
                        return Some(format!("blocks over-committed: {sum:.4} > 1"));
                    }
                }
                Granularity::Quantized => match blocks_per_sm {
                    Some(blocks) if blocks.len() == 2 => {
                        let total: u32 = blocks.iter().sum();
                        if total > device.max_blocks_per_sm {
                            return Some(format!(
                                "{total} resident blocks exceed {} slots",
                                device.max_blocks_per_sm
                            ));
                        }
                    }
                    _ => return Some("quantized plan without block counts".to_string()),
                },
            }
            // the recorded shares must be reproducible from the profiles
            if intra_sm_allocate(a, b, device, *granularity).is_none() {
                return Some("no feasible intra-SM allocation for this pair".to_string());
            }
            None
        }
        CoRunPlan::Inter { sms_assigned, gamma } => {
            if sms_assigned.len() != 2 {
                return Some("inter-SM plans must cover exactly two kernels".to_string());
            }
            let total: u32 = sms_assigned.iter().sum();
            if sms_assigned.contains(&0) || total > device.num_sms {
                return Some(format!(
                    "SM split {sms_assigned:?} invalid for {} SMs",
                    device.num_sms
                ));
            }
            if !gamma.is_finite() || *gamma <= 0.0 {
                return Some(format!("scaling exponent {gamma} must be positive"));
            }
            None
        }
    }
}
