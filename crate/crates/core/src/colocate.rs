//! Co-location feasibility and concurrent-execution simulation.
//!
//! Two kernels can share the GPU one of two ways:
//!
//! * **intra-SM**: blocks of both kernels reside on every SM. The first
//!   kernel keeps its solo occupancy; the co-runner receives whatever share
//!   of registers, shared memory, threads, and block slots is left.
//! * **inter-SM**: the SMs are split into two disjoint partitions, one per
//!   kernel, held for the kernel's whole duration.
//!
//! Execution is simulated with piecewise-constant rates. A kernel's base
//! rate is its occupancy share (intra) or partition share raised to a
//! scaling exponent (inter), in solo-work units per solo runtime. When the
//! combined ALU or DRAM demand exceeds the device, one multiplicative
//! throttle slows every resident kernel; this is what lets a compute-heavy
//! kernel absorb a memory-bound co-runner's stall cycles without either
//! kernel exceeding its solo speed.

use serde::{Deserialize, Serialize};

use crate::device::{per_block_footprint, DeviceSpec};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::profile::{Algorithm, KernelProfile, ProfileDb};

/// Whether intra-SM shares move continuously or in whole blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Continuous,
    Quantized,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "continuous" => Ok(Granularity::Continuous),
            "quantized" => Ok(Granularity::Quantized),
            other => Err(format!("unknown granularity `{other}`")),
        }
    }
}

/// A concrete resource assignment for a co-run group.
///
/// Shares and SM counts are listed in kernel order; index 0 is the kernel
/// declared first (the one that keeps solo occupancy in intra mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CoRunPlan {
    Intra {
        granularity: Granularity,
        /// Occupancy relative to each kernel's solo residency, in (0, 1].
        shares: Vec<f64>,
        /// Blocks per SM for quantized plans.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks_per_sm: Option<Vec<u32>>,
    },
    Inter {
        sms_assigned: Vec<u32>,
        gamma: f64,
    },
}

impl CoRunPlan {
    pub fn mode_name(&self) -> &'static str {
        match self {
            CoRunPlan::Intra { .. } => "intra",
            CoRunPlan::Inter { .. } => "inter",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            CoRunPlan::Intra { shares, .. } => shares.len(),
            CoRunPlan::Inter { sms_assigned, .. } => sms_assigned.len(),
        }
    }
}

/// Which constraint pins the rates inside one simulated segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// Combined ALU demand saturated the device.
    Compute,
    /// Combined DRAM demand saturated the device.
    Memory,
    /// Neither pipe saturated; rates are allocation-bound.
    Occupancy,
}

/// One piecewise-constant stretch of the simulation. `rates` are work per
/// millisecond per kernel (zero once a kernel has finished).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_ms: f64,
    pub end_ms: f64,
    pub rates: Vec<f64>,
    pub binding: Binding,
}

/// Simulated result of a co-run: per-kernel finish times and the rate
/// timeline that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoRunOutcome {
    pub finish_times_ms: Vec<f64>,
    pub makespan_ms: f64,
    pub segments: Vec<Segment>,
}

/// Minimal kernel view the rate simulation needs.
#[derive(Debug, Clone, Copy)]
pub struct SimKernel {
    pub solo_runtime_ms: f64,
    pub alu_util: f64,
    pub dram_util: f64,
    /// Base rate in solo-work units per solo runtime, in (0, 1].
    pub share: f64,
}

impl SimKernel {
    pub fn from_profile(profile: &KernelProfile, share: f64) -> Self {
        SimKernel {
            solo_runtime_ms: profile.solo_runtime_ms,
            alu_util: profile.alu_util,
            dram_util: profile.dram_util,
            share,
        }
    }
}

const WORK_EPSILON: f64 = 1e-12;

/// Event-driven piecewise-constant rate simulation.
///
/// Each kernel carries 1.0 units of work. Per segment, kernel `i` advances
/// at `share_i * throttle / solo_runtime_i` where the throttle is
/// `min(1, 1 / max(sum share*alu, sum share*dram))` over kernels still
/// running. With `reexpand`, survivors return to full share when another
/// kernel completes (intra-SM: freed resources flow back); without it the
/// shares are fixed for the whole run (inter-SM: partitions are static).
pub fn simulate_shares(kernels: &[SimKernel], reexpand: bool) -> CoRunOutcome {
    assert!(!kernels.is_empty(), "simulate_shares needs at least one kernel");
    let n = kernels.len();
    let mut share: Vec<f64> = kernels.iter().map(|k| k.share).collect();
    let mut remaining = vec![1.0f64; n];
    let mut alive = vec![true; n];
    let mut finish = vec![0.0f64; n];
    let mut segments = Vec::new();
    let mut now = 0.0f64;
    let mut n_alive = n;

    while n_alive > 0 {
        let mut alu_sum = 0.0;
        let mut dram_sum = 0.0;
        for i in 0..n {
            if alive[i] {
                alu_sum += share[i] * kernels[i].alu_util;
                dram_sum += share[i] * kernels[i].dram_util;
            }
        }
        let pressure = alu_sum.max(dram_sum);
        let (throttle, binding) = if pressure > 1.0 {
            (
                1.0 / pressure,
                if alu_sum >= dram_sum { Binding::Compute } else { Binding::Memory },
            )
        } else {
            (1.0, Binding::Occupancy)
        };

        // dt kept in rational form (remaining * t / factor) so that a kernel
        // at full speed closes in exactly its solo runtime.
        let mut dt = f64::INFINITY;
        for i in 0..n {
            if alive[i] {
                let factor = share[i] * throttle;
                let t = remaining[i] * kernels[i].solo_runtime_ms / factor;
                if t < dt {
                    dt = t;
                }
            }
        }
        debug_assert!(dt.is_finite() && dt > 0.0, "stalled simulation");

        let end = now + dt;
        let mut rates = vec![0.0f64; n];
        let mut someone_finished = false;
        for i in 0..n {
            if alive[i] {
                let factor = share[i] * throttle;
                rates[i] = factor / kernels[i].solo_runtime_ms;
                remaining[i] -= factor * dt / kernels[i].solo_runtime_ms;
                if remaining[i] <= WORK_EPSILON {
                    remaining[i] = 0.0;
                    alive[i] = false;
                    finish[i] = end;
                    n_alive -= 1;
                    someone_finished = true;
                }
            }
        }
        segments.push(Segment {
            start_ms: now,
            end_ms: end,
            rates,
            binding,
        });
        now = end;
        if reexpand && someone_finished {
            for i in 0..n {
                if alive[i] {
                    share[i] = 1.0;
                }
            }
        }
    }

    CoRunOutcome {
        finish_times_ms: finish,
        makespan_ms: now,
        segments,
    }
}

/// Decide whether `b` can co-reside with `a` on every SM while `a` keeps
/// its solo occupancy. Returns `None` when `b` cannot get a non-zero share.
///
/// Continuous mode treats shares as real numbers: the co-runner's share is
/// the tightest headroom-to-demand ratio across the four static resources.
/// Quantized mode places whole blocks: `b` receives the largest block count
/// that fits the per-resource headroom, the free block slots, and its own
/// solo residency.
pub fn intra_sm_allocate(
    a: &KernelProfile,
    b: &KernelProfile,
    device: &DeviceSpec,
    granularity: Granularity,
) -> Option<CoRunPlan> {
    match granularity {
        Granularity::Continuous => {
            let mut beta = f64::INFINITY;
            for (used, demand) in [
                (a.reg_frac, b.reg_frac),
                (a.shm_frac, b.shm_frac),
                (a.thread_frac, b.thread_frac),
                (a.block_frac, b.block_frac),
            ] {
                if demand > 0.0 {
                    beta = beta.min((1.0 - used) / demand);
                }
            }
            if beta <= 0.0 {
                return None;
            }
            Some(CoRunPlan::Intra {
                granularity,
                shares: vec![1.0, beta.min(1.0)],
                blocks_per_sm: None,
            })
        }
        Granularity::Quantized => {
            let fa = per_block_footprint(a, device);
            let fb = per_block_footprint(b, device);
            let free_slots = device.max_blocks_per_sm - fa.solo_blocks_per_sm;
            let mut blocks = free_slots.min(fb.solo_blocks_per_sm);
            for (used, per_block) in [
                (a.reg_frac, fb.reg_pb),
                (a.shm_frac, fb.shm_pb),
                (a.thread_frac, fb.thr_pb),
            ] {
                if per_block > 0.0 {
                    let fit = ((1.0 - used + 1e-12) / per_block).floor().max(0.0);
                    blocks = blocks.min(fit as u32);
                }
            }
            if blocks == 0 {
                return None;
            }
            Some(CoRunPlan::Intra {
                granularity,
                shares: vec![1.0, blocks as f64 / fb.solo_blocks_per_sm as f64],
                blocks_per_sm: Some(vec![fa.solo_blocks_per_sm, blocks]),
            })
        }
    }
}

fn inter_outcome(a: &KernelProfile, b: &KernelProfile, split: [f64; 2], total: f64, gamma: f64) -> CoRunOutcome {
    let kernels = [
        SimKernel::from_profile(a, (split[0] / total).powf(gamma)),
        SimKernel::from_profile(b, (split[1] / total).powf(gamma)),
    ];
    simulate_shares(&kernels, false)
}

/// Split the device's SMs between two kernels, minimizing the simulated
/// makespan over every integer split. Ties go to the split granting more
/// SMs to the longer kernel.
pub fn inter_sm_partition(
    a: &KernelProfile,
    b: &KernelProfile,
    device: &DeviceSpec,
    gamma: f64,
) -> Result<CoRunPlan> {
    let total = device.num_sms;
    if total < 2 {
        return Err(Error::TooFewSms { num_sms: total });
    }
    let longer_is_a = a.solo_runtime_ms >= b.solo_runtime_ms;
    let mut best: Option<(f64, u32)> = None;
    for sms_a in 1..total {
        let sms_b = total - sms_a;
        let makespan =
            inter_outcome(a, b, [sms_a as f64, sms_b as f64], total as f64, gamma).makespan_ms;
        let replace = match best {
            None => true,
            Some((best_makespan, best_a)) => {
                makespan < best_makespan
                    || (makespan == best_makespan && longer_is_a && sms_a > best_a)
            }
        };
        if replace {
            best = Some((makespan, sms_a));
        }
    }
    let (_, sms_a) = best.expect("at least one split enumerated");
    Ok(CoRunPlan::Inter {
        sms_assigned: vec![sms_a, total - sms_a],
        gamma,
    })
}

/// Simulate a co-run group under a concrete plan.
///
/// Kernels are listed in plan order. Intra-SM survivors re-expand to solo
/// occupancy as co-runners finish; inter-SM partitions stay fixed.
pub fn corun_simulate(
    kernels: &[&KernelProfile],
    plan: &CoRunPlan,
    device: &DeviceSpec,
) -> Result<CoRunOutcome> {
    if kernels.len() != plan.arity() {
        return Err(Error::InfeasibleAllocation {
            reason: format!(
                "plan covers {} kernels, got {}",
                plan.arity(),
                kernels.len()
            ),
        });
    }
    match plan {
        CoRunPlan::Intra { shares, .. } => {
            for (i, &s) in shares.iter().enumerate() {
                if !(s > 0.0 && s <= 1.0) {
                    return Err(Error::InfeasibleAllocation {
                        reason: format!("share {s} for kernel {i} outside (0, 1]"),
                    });
                }
            }
            let sim: Vec<SimKernel> = kernels
                .iter()
                .zip(shares)
                .map(|(p, &s)| SimKernel::from_profile(p, s))
                .collect();
            Ok(simulate_shares(&sim, true))
        }
        CoRunPlan::Inter { sms_assigned, gamma } => {
            let total: u32 = sms_assigned.iter().sum();
            if sms_assigned.contains(&0) || total > device.num_sms {
                return Err(Error::InfeasibleAllocation {
                    reason: format!(
                        "SM split {sms_assigned:?} invalid for {} SMs",
                        device.num_sms
                    ),
                });
            }
            if !gamma.is_finite() || *gamma <= 0.0 {
                return Err(Error::InfeasibleAllocation {
                    reason: format!("scaling exponent {gamma} must be positive"),
                });
            }
            let n = device.num_sms as f64;
            let sim: Vec<SimKernel> = kernels
                .iter()
                .zip(sms_assigned)
                .map(|(p, &s)| SimKernel::from_profile(p, (s as f64 / n).powf(*gamma)))
                .collect();
            Ok(simulate_shares(&sim, false))
        }
    }
}

/// Best co-run of `(primary, partner)` in that order: tries intra-SM at the
/// requested granularity and an optimal inter-SM split, returns whichever
/// simulates faster. `None` when neither mode admits the pair.
pub fn best_corun(
    primary: &KernelProfile,
    partner: &KernelProfile,
    device: &DeviceSpec,
    granularity: Granularity,
    gamma: f64,
) -> Option<(CoRunPlan, CoRunOutcome)> {
    let mut best: Option<(CoRunPlan, CoRunOutcome)> = None;
    let mut consider = |plan: CoRunPlan, outcome: CoRunOutcome| {
        let better = match &best {
            None => true,
            Some((_, current)) => outcome.makespan_ms < current.makespan_ms,
        };
        if better {
            best = Some((plan, outcome));
        }
    };
    if let Some(plan) = intra_sm_allocate(primary, partner, device, granularity) {
        if let Ok(outcome) = corun_simulate(&[primary, partner], &plan, device) {
            consider(plan, outcome);
        }
    }
    if device.num_sms >= 2 {
        if let Ok(plan) = inter_sm_partition(primary, partner, device, gamma) {
            if let Ok(outcome) = corun_simulate(&[primary, partner], &plan, device) {
                consider(plan, outcome);
            }
        }
    }
    best
}

/// One profitable co-run found by the census: an independent op pair, the
/// algorithm pair and plan that minimize the predicted makespan, and the
/// speedup over running both ops serially with their fastest algorithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusEntry {
    /// Op that keeps solo occupancy (intra) or is listed first (inter).
    pub primary_op: String,
    pub primary_algorithm: Algorithm,
    pub partner_op: String,
    pub partner_algorithm: Algorithm,
    pub plan: CoRunPlan,
    pub concurrent_makespan_ms: f64,
    pub serial_ms: f64,
    pub speedup: f64,
}

/// Enumerate every independent convolution pair, every algorithm
/// combination in both primary orders, and both co-location modes; keep the
/// pairs whose best predicted concurrent makespan beats serial execution.
///
/// "Beats serial" means a speedup strictly above 1 against the baseline of
/// running both ops back-to-back with their fastest memory-feasible
/// algorithms. Results are sorted by speedup descending, then by op ids.
pub fn pair_census(
    db: &ProfileDb,
    graph: &NetworkGraph,
    device: &DeviceSpec,
    granularity: Granularity,
    gamma: f64,
    mem_budget_bytes: u64,
) -> Result<Vec<CensusEntry>> {
    // Every conv op must be profiled, whether or not it pairs with anything.
    for node in graph.nodes() {
        if let crate::graph::OpKind::Conv { menu } = &node.kind {
            if db.menu(menu).is_none() {
                return Err(Error::MissingMenu {
                    op_id: node.op_id.clone(),
                    menu: menu.clone(),
                });
            }
        }
    }

    let mut entries = Vec::new();
    for (node_a, node_b) in graph.independent_conv_pairs() {
        let serial_ms = fastest_runtime(db, node_a, mem_budget_bytes)?
            + fastest_runtime(db, node_b, mem_budget_bytes)?;

        let mut best: Option<CensusEntry> = None;
        for (primary, partner) in [(node_a, node_b), (node_b, node_a)] {
            let primary_menu = conv_menu(primary);
            let partner_menu = conv_menu(partner);
            for p in db.profiles_for(primary_menu) {
                for q in db.profiles_for(partner_menu) {
                    let resident = primary.fixed_bytes
                        + p.workspace_bytes
                        + partner.fixed_bytes
                        + q.workspace_bytes;
                    if resident > mem_budget_bytes {
                        continue;
                    }
                    if let Some((plan, outcome)) = best_corun(p, q, device, granularity, gamma) {
                        let better = match &best {
                            None => true,
                            Some(b) => outcome.makespan_ms < b.concurrent_makespan_ms,
                        };
                        if better {
                            best = Some(CensusEntry {
                                primary_op: primary.op_id.clone(),
                                primary_algorithm: p.algorithm,
                                partner_op: partner.op_id.clone(),
                                partner_algorithm: q.algorithm,
                                plan,
                                concurrent_makespan_ms: outcome.makespan_ms,
                                serial_ms,
                                speedup: serial_ms / outcome.makespan_ms,
                            });
                        }
                    }
                }
            }
        }
        if let Some(entry) = best {
            if entry.concurrent_makespan_ms < serial_ms {
                entries.push(entry);
            }
        }
    }

    entries.sort_by(|a, b| {
        b.speedup
            .partial_cmp(&a.speedup)
            .expect("finite speedups")
            .then_with(|| a.primary_op.cmp(&b.primary_op))
            .then_with(|| a.partner_op.cmp(&b.partner_op))
            .then_with(|| a.primary_algorithm.name().cmp(b.primary_algorithm.name()))
            .then_with(|| a.partner_algorithm.name().cmp(b.partner_algorithm.name()))
    });
    Ok(entries)
}

fn conv_menu(node: &crate::graph::OpNode) -> &str {
    match &node.kind {
        crate::graph::OpKind::Conv { menu } => menu,
        crate::graph::OpKind::Other { .. } => unreachable!("census only pairs conv ops"),
    }
}

/// Fastest runtime among an op's memory-feasible algorithms.
pub(crate) fn fastest_runtime(
    db: &ProfileDb,
    node: &crate::graph::OpNode,
    mem_budget_bytes: u64,
) -> Result<f64> {
    match &node.kind {
        crate::graph::OpKind::Other { runtime_ms } => {
            if node.fixed_bytes > mem_budget_bytes {
                return Err(Error::NoFeasibleAlgorithm {
                    op_id: node.op_id.clone(),
                    needed_bytes: node.fixed_bytes,
                    fixed_bytes: node.fixed_bytes,
                    workspace_bytes: 0,
                    budget_bytes: mem_budget_bytes,
                });
            }
            Ok(*runtime_ms)
        }
        crate::graph::OpKind::Conv { menu } => {
            let menu = db.menu(menu).ok_or_else(|| Error::MissingMenu {
                op_id: node.op_id.clone(),
                menu: menu.clone(),
            })?;
            let budget_left = mem_budget_bytes.saturating_sub(node.fixed_bytes);
            let fits = menu
                .entries
                .iter()
                .filter(|e| e.workspace_bytes <= budget_left && node.fixed_bytes <= mem_budget_bytes)
                .min_by(|x, y| x.solo_runtime_ms.partial_cmp(&y.solo_runtime_ms).unwrap());
            match fits {
                Some(e) => Ok(e.solo_runtime_ms),
                None => {
                    let tightest = menu
                        .entries
                        .iter()
                        .min_by_key(|e| e.workspace_bytes)
                        .expect("menus are non-empty");
                    Err(Error::NoFeasibleAlgorithm {
                        op_id: node.op_id.clone(),
                        needed_bytes: node.fixed_bytes + tightest.workspace_bytes,
                        fixed_bytes: node.fixed_bytes,
                        workspace_bytes: tightest.workspace_bytes,
                        budget_bytes: mem_budget_bytes,
                    })
                }
            }
        }
    }
}
