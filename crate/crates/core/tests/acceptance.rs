//! Acceptance suite: one test per criterion, each printing a pass line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Criterion 4 cross-checks the exhaustive scheduler against a brute-force
//! enumerator written independently of the production search (different
//! recursion, its own ready-set bookkeeping), instantiated twice: once with
//! the shared pair evaluator for exact equality, once with a closed-form
//! pair-duration recomputation at 1e-9.

#![allow(clippy::too_many_arguments, clippy::type_complexity)]

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convsched::colocate::{simulate_shares, SimKernel};
use convsched::sched::ExhaustiveLimits;
use convsched::{
    best_corun, compare_algorithms, corun_simulate, intra_sm_allocate, load_device, load_graph,
    load_profiles, pair_census, report, schedule_concurrent_greedy, schedule_exhaustive,
    schedule_serial_fastest, validate_schedule, Algorithm, CoRunPlan, DeviceSpec, Granularity,
    KernelProfile, NetworkGraph, OpKind, OpNode, ProfileDb,
};

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn bundled_db() -> ProfileDb {
    let path = data_path("profiles.csv");
    ProfileDb::new(
        load_profiles(File::open(&path).unwrap(), &path.display().to_string()).unwrap(),
    )
}

fn bundled_device() -> DeviceSpec {
    let path = data_path("device_k40.json");
    load_device(File::open(&path).unwrap(), &path.display().to_string()).unwrap()
}

fn bundled_graph(name: &str) -> NetworkGraph {
    let path = data_path(name);
    load_graph(File::open(&path).unwrap(), &path.display().to_string()).unwrap()
}

fn conv(id: &str, menu: &str, fixed: u64) -> OpNode {
    OpNode {
        op_id: id.to_string(),
        fixed_bytes: fixed,
        kind: OpKind::Conv {
            menu: menu.to_string(),
        },
    }
}

#[test]
fn criterion_1_tradeoff_report() {
    let start = Instant::now();
    let db = bundled_db();
    let menu = db.menu("incep3_5x5").unwrap();
    let cmp = compare_algorithms(&menu, Algorithm::Fft, Algorithm::WinogradNonfused).unwrap();

    assert_eq!(cmp.faster, Some(Algorithm::Fft));
    let runtime_pct = report::percent(cmp.runtime_delta_frac);
    assert!(
        (21..=22).contains(&runtime_pct),
        "runtime delta {runtime_pct}% outside 21-22%"
    );
    let workspace_pct = report::percent(cmp.workspace_delta_frac);
    assert!(
        (68..=70).contains(&workspace_pct),
        "workspace delta {workspace_pct}% outside 68-70%"
    );
    assert!(
        (1_450_000_000..=1_550_000_000).contains(&cmp.workspace_delta_bytes),
        "workspace delta {} B not about 1.5 GB",
        cmp.workspace_delta_bytes
    );
    assert!(start.elapsed().as_secs_f64() < 1.0, "criterion 1 over 1 s");
    println!(
        "[PASS] criterion 1: FFT vs WINOGRAD_NONFUSED runtime delta {runtime_pct}%, \
         workspace delta {workspace_pct}% ({})",
        report::human_bytes(cmp.workspace_delta_bytes)
    );
}

#[test]
fn criterion_2_serial_baseline_fidelity() {
    let db = bundled_db();
    let device = bundled_device();
    let graph = NetworkGraph::new("one", vec![conv("op", "incep3_5x5", 0)], &[]).unwrap();

    let ample = schedule_serial_fastest(&graph, &db, &device, 12_000_000_000).unwrap();
    assert_eq!(ample.makespan_ms, 36.0);
    assert_eq!(ample.intervals[0].algorithm, Some(Algorithm::Fft));

    let tight = schedule_serial_fastest(&graph, &db, &device, 1_000_000_000).unwrap();
    assert_eq!(tight.makespan_ms, 46.0);
    assert_eq!(tight.intervals[0].algorithm, Some(Algorithm::WinogradNonfused));

    println!(
        "[PASS] criterion 2: serial-fastest picks FFT at 36 ms under 12 GB, \
         WINOGRAD_NONFUSED at 46 ms under 1 GB"
    );
}

#[test]
fn criterion_3_flagship_pair_feasibility() {
    let db = bundled_db();
    let device = bundled_device();
    let a = db.get("incep1_3x3", Algorithm::PrecompGemm).unwrap();
    let b = db.get("incep1_5x5", Algorithm::FftTiling).unwrap();

    let plan = intra_sm_allocate(a, b, &device, Granularity::Continuous)
        .expect("continuous co-residency is feasible");
    let CoRunPlan::Intra { shares, .. } = &plan else {
        panic!("intra plan expected");
    };
    assert!(
        (shares[1] - 0.2105).abs() <= 0.001,
        "co-runner share {} outside 0.2105 +/- 0.001",
        shares[1]
    );

    assert!(
        intra_sm_allocate(a, b, &device, Granularity::Quantized).is_none(),
        "quantized mode must report infeasible at 16 block slots"
    );
    println!(
        "[PASS] criterion 3: continuous share {:.4}, quantized infeasible",
        shares[1]
    );
}

// ---- criterion 4: oracle equivalence --------------------------------------

/// Instance description shared by the production schedulers and the
/// independent enumerator.
struct Instance {
    label: String,
    ops: Vec<(String, String, u64)>, // (op id, menu id, fixed bytes)
    edges: Vec<(usize, usize)>,
    budget: u64,
}

impl Instance {
    fn graph(&self) -> NetworkGraph {
        let nodes: Vec<OpNode> = self
            .ops
            .iter()
            .map(|(id, menu, fixed)| conv(id, menu, *fixed))
            .collect();
        let edges: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(u, v)| (self.ops[u].0.clone(), self.ops[v].0.clone()))
            .collect();
        NetworkGraph::new(self.label.clone(), nodes, &edges).unwrap()
    }
}

/// Brute force over algorithm assignments and block orders, written apart
/// from the production search: odometer assignment enumeration, explicit
/// predecessor masks, left-fold elapsed accumulation, pluggable pair cost.
fn brute_force_makespan(
    instance: &Instance,
    db: &ProfileDb,
    pair_cost: &dyn Fn(&KernelProfile, &KernelProfile) -> Option<f64>,
) -> f64 {
    let n = instance.ops.len();
    let menus: Vec<Vec<&KernelProfile>> = instance
        .ops
        .iter()
        .map(|(_, menu, fixed)| {
            let mut profiles: Vec<&KernelProfile> = db
                .profiles_for(menu)
                .into_iter()
                .filter(|p| fixed + p.workspace_bytes <= instance.budget)
                .collect();
            profiles.sort_by_key(|p| p.algorithm.name());
            profiles
        })
        .collect();
    assert!(
        menus.iter().all(|m| !m.is_empty()),
        "instances must keep every op feasible"
    );

    let mut pred_mask = vec![0u32; n];
    for &(u, v) in &instance.edges {
        pred_mask[v] |= 1 << u;
    }

    fn explore(
        n: usize,
        pred_mask: &[u32],
        fixed: &[u64],
        budget: u64,
        chosen: &[&KernelProfile],
        pair_cost: &dyn Fn(&KernelProfile, &KernelProfile) -> Option<f64>,
        done: u32,
        elapsed: f64,
        best: &mut f64,
    ) {
        let full = (1u32 << n) - 1;
        if done == full {
            if elapsed < *best {
                *best = elapsed;
            }
            return;
        }
        let ready: Vec<usize> = (0..n)
            .filter(|&i| done & (1 << i) == 0 && pred_mask[i] & !done == 0)
            .collect();
        for &i in &ready {
            explore(
                n,
                pred_mask,
                fixed,
                budget,
                chosen,
                pair_cost,
                done | (1 << i),
                elapsed + chosen[i].solo_runtime_ms,
                best,
            );
        }
        for &i in &ready {
            for &j in &ready {
                if i == j {
                    continue;
                }
                let resident = fixed[i]
                    + chosen[i].workspace_bytes
                    + fixed[j]
                    + chosen[j].workspace_bytes;
                if resident > budget {
                    continue;
                }
                if let Some(cost) = pair_cost(chosen[i], chosen[j]) {
                    explore(
                        n,
                        pred_mask,
                        fixed,
                        budget,
                        chosen,
                        pair_cost,
                        done | (1 << i) | (1 << j),
                        elapsed + cost,
                        best,
                    );
                }
            }
        }
    }

    let fixed: Vec<u64> = instance.ops.iter().map(|(_, _, f)| *f).collect();
    let mut best_overall = f64::INFINITY;
    let mut indices = vec![0usize; n];
    loop {
        let chosen: Vec<&KernelProfile> = indices
            .iter()
            .enumerate()
            .map(|(op, &k)| menus[op][k])
            .collect();
        let mut best = f64::INFINITY;
        explore(
            n, &pred_mask, &fixed, instance.budget, &chosen, pair_cost, 0, 0.0, &mut best,
        );
        if best < best_overall {
            best_overall = best;
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return best_overall;
            }
            indices[pos] += 1;
            if indices[pos] < menus[pos].len() {
                break;
            }
            indices[pos] = 0;
            pos += 1;
        }
    }
}

/// Closed-form co-run makespan for a pair, recomputing the model's
/// piecewise arithmetic without the event loop.
fn closed_form_pair_cost(
    a: &KernelProfile,
    b: &KernelProfile,
    device: &DeviceSpec,
    granularity: Granularity,
    gamma: f64,
) -> Option<f64> {
    let throttle = |sa: f64, sb: f64| -> f64 {
        let alu = sa * a.alu_util + sb * b.alu_util;
        let dram = sa * a.dram_util + sb * b.dram_util;
        let pressure = alu.max(dram);
        if pressure > 1.0 {
            1.0 / pressure
        } else {
            1.0
        }
    };
    // two-phase makespan for fixed initial shares; the survivor's share
    // either re-expands to 1 (intra) or stays put (inter)
    let two_phase = |sa: f64, sb: f64, reexpand: bool| -> f64 {
        let f = throttle(sa, sb);
        let end_a = a.solo_runtime_ms / (sa * f);
        let end_b = b.solo_runtime_ms / (sb * f);
        if end_a <= end_b {
            let done_b = end_a * sb * f / b.solo_runtime_ms;
            let share = if reexpand { 1.0 } else { sb };
            let f2 = throttle(0.0, share);
            end_a + (1.0 - done_b) * b.solo_runtime_ms / (share * f2)
        } else {
            let done_a = end_b * sa * f / a.solo_runtime_ms;
            let share = if reexpand { 1.0 } else { sa };
            let f2 = throttle(share, 0.0);
            end_b + (1.0 - done_a) * a.solo_runtime_ms / (share * f2)
        }
    };

    let intra = intra_share(a, b, device, granularity).map(|beta| two_phase(1.0, beta, true));
    let inter = if device.num_sms >= 2 {
        let total = device.num_sms as f64;
        (1..device.num_sms)
            .map(|na| {
                let sa = (na as f64 / total).powf(gamma);
                let sb = ((device.num_sms - na) as f64 / total).powf(gamma);
                two_phase(sa, sb, false)
            })
            .min_by(|x, y| x.partial_cmp(y).unwrap())
    } else {
        None
    };
    match (intra, inter) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Co-runner share from first principles: headroom ratios (continuous) or
/// whole-block fitting (quantized).
fn intra_share(
    a: &KernelProfile,
    b: &KernelProfile,
    device: &DeviceSpec,
    granularity: Granularity,
) -> Option<f64> {
    match granularity {
        Granularity::Continuous => {
            let mut beta = f64::INFINITY;
            for (ra, rb) in [
                (a.reg_frac, b.reg_frac),
                (a.shm_frac, b.shm_frac),
                (a.thread_frac, b.thread_frac),
                (a.block_frac, b.block_frac),
            ] {
                if rb > 0.0 {
                    beta = beta.min((1.0 - ra) / rb);
                }
            }
            (beta > 0.0).then(|| beta.min(1.0))
        }
        Granularity::Quantized => {
            let slots = device.max_blocks_per_sm;
            let solo = |p: &KernelProfile| {
                ((p.block_frac * slots as f64).round() as u32).clamp(1, slots)
            };
            let (na, nb_solo) = (solo(a), solo(b));
            let mut k = (slots - na).min(nb_solo);
            for (used, agg) in [
                (a.reg_frac, b.reg_frac),
                (a.shm_frac, b.shm_frac),
                (a.thread_frac, b.thread_frac),
            ] {
                let per_block = agg / nb_solo as f64;
                if per_block > 0.0 {
                    let fit = ((1.0 - used + 1e-12) / per_block).floor().max(0.0);
                    k = k.min(fit as u32);
                }
            }
            (k > 0).then(|| k as f64 / nb_solo as f64)
        }
    }
}

#[test]
fn criterion_4_oracle_equivalence() {
    let start = Instant::now();
    // trim the six-algorithm menu to three so instances respect the
    // exhaustive-search default limits
    let full = bundled_db();
    let trimmed: Vec<KernelProfile> = full
        .profiles()
        .iter()
        .filter(|p| {
            p.op_id != "incep3_5x5"
                || matches!(
                    p.algorithm,
                    Algorithm::Gemm | Algorithm::WinogradNonfused | Algorithm::Fft
                )
        })
        .cloned()
        .collect();
    let db = ProfileDb::new(trimmed);
    let device = bundled_device();

    let topologies: [(&str, usize, &[(usize, usize)]); 7] = [
        ("single", 1, &[]),
        ("chain2", 2, &[(0, 1)]),
        ("indep2", 2, &[]),
        ("chain3", 3, &[(0, 1), (1, 2)]),
        ("fork3", 3, &[(0, 1), (0, 2)]),
        ("join3", 3, &[(0, 2), (1, 2)]),
        ("indep3", 3, &[]),
    ];
    let menu_cycle = ["incep1_3x3", "incep1_5x5", "incep3_5x5"];
    let budgets: [u64; 3] = [12_000_000_000, 1_000_000_000, 400_000_000];
    let granularities = [Granularity::Continuous, Granularity::Quantized];
    let gamma = 1.0;

    let mut instances = 0;
    for (name, size, edges) in topologies {
        for &budget in &budgets {
            for &granularity in &granularities {
                let instance = Instance {
                    label: format!("{name}-{budget}-{granularity:?}"),
                    ops: (0..size)
                        .map(|i| {
                            (
                                format!("op{i}"),
                                menu_cycle[i % menu_cycle.len()].to_string(),
                                50_000_000,
                            )
                        })
                        .collect(),
                    edges: edges.to_vec(),
                    budget,
                };
                let graph = instance.graph();

                let exhaustive = schedule_exhaustive(
                    &graph,
                    &db,
                    &device,
                    budget,
                    granularity,
                    gamma,
                    ExhaustiveLimits::default(),
                )
                .unwrap();
                let greedy = schedule_concurrent_greedy(
                    &graph, &db, &device, budget, granularity, gamma,
                )
                .unwrap();
                let serial = schedule_serial_fastest(&graph, &db, &device, budget).unwrap();

                // same pair evaluator, independent search: exact agreement
                let oracle = brute_force_makespan(&instance, &db, &|p, q| {
                    best_corun(p, q, &device, granularity, gamma).map(|(_, o)| o.makespan_ms)
                });
                assert_eq!(
                    exhaustive.makespan_ms, oracle,
                    "{}: exhaustive vs enumerator",
                    instance.label
                );

                // closed-form durations: agreement within 1e-9
                let closed = brute_force_makespan(&instance, &db, &|p, q| {
                    closed_form_pair_cost(p, q, &device, granularity, gamma)
                });
                assert!(
                    (exhaustive.makespan_ms - closed).abs() <= 1e-9,
                    "{}: exhaustive {} vs closed-form {}",
                    instance.label,
                    exhaustive.makespan_ms,
                    closed
                );

                assert!(
                    greedy.makespan_ms <= serial.makespan_ms + 1e-9,
                    "{}: greedy above serial",
                    instance.label
                );
                assert!(
                    exhaustive.makespan_ms <= greedy.makespan_ms + 1e-9,
                    "{}: exhaustive above greedy",
                    instance.label
                );
                instances += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "criterion 4 took {elapsed:.1} s");
    println!(
        "[PASS] criterion 4: exhaustive = independent enumerator on {instances} instances \
         ({elapsed:.2} s), greedy <= serial throughout"
    );
}

// ---- criterion 5: simulation property suite --------------------------------

fn work_integral(outcome: &convsched::CoRunOutcome, i: usize) -> f64 {
    outcome
        .segments
        .iter()
        .map(|s| s.rates[i] * (s.end_ms - s.start_ms))
        .sum()
}

#[test]
fn criterion_5_simulation_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let instances = 1000;
    for trial in 0..instances {
        let rand_kernel = |rng: &mut ChaCha8Rng| SimKernel {
            solo_runtime_ms: rng.gen_range(0.5..50.0),
            alu_util: rng.gen_range(0.0..=1.0),
            dram_util: rng.gen_range(0.0..=1.0),
            share: rng.gen_range(0.01..=1.0),
        };
        let kernels = [rand_kernel(&mut rng), rand_kernel(&mut rng)];
        let reexpand = trial % 2 == 0;
        let outcome = simulate_shares(&kernels, reexpand);

        for (i, k) in kernels.iter().enumerate() {
            // work conservation
            let work = work_integral(&outcome, i);
            assert!(
                (work - 1.0).abs() < 1e-9,
                "trial {trial}: kernel {i} closed {work} work units"
            );
            // no super-solo speedup
            assert!(
                outcome.finish_times_ms[i] >= k.solo_runtime_ms - 1e-9,
                "trial {trial}: kernel {i} beat its solo runtime"
            );
            // solo identity is exact
            let mut solo = *k;
            solo.share = 1.0;
            let alone = simulate_shares(&[solo], reexpand);
            assert_eq!(alone.finish_times_ms[0], k.solo_runtime_ms);
        }

        // allocation monotonicity: shrinking one kernel's share never lets
        // that kernel finish earlier
        let victim = trial % 2;
        let mut reduced = kernels;
        reduced[victim].share *= rng.gen_range(0.05..0.95);
        let slower = simulate_shares(&reduced, reexpand);
        assert!(
            slower.finish_times_ms[victim] >= outcome.finish_times_ms[victim] - 1e-9,
            "trial {trial}: reducing kernel {victim}'s share sped it up"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 5 took {elapsed:.1} s");
    println!(
        "[PASS] criterion 5: {instances} randomized co-runs conserve work, never beat solo, \
         stay monotone ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_6_inter_sm_analytic_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let device_with = |num_sms: u32| DeviceSpec {
        name: None,
        num_sms,
        max_blocks_per_sm: 16,
        global_mem_bytes: 12_000_000_000,
    };
    let profile = |id: &str, t: f64, rng: &mut ChaCha8Rng| KernelProfile {
        op_id: id.to_string(),
        algorithm: Algorithm::Gemm,
        kernel_name: "k".to_string(),
        reg_frac: rng.gen_range(0.0..=1.0),
        shm_frac: rng.gen_range(0.0..=1.0),
        thread_frac: rng.gen_range(0.0..=1.0),
        block_frac: rng.gen_range(0.0..=1.0),
        alu_util: rng.gen_range(0.0..=1.0),
        mem_stall_frac: 0.0,
        dram_util: rng.gen_range(0.0..=1.0),
        workspace_bytes: 0,
        solo_runtime_ms: t,
    };

    for _ in 0..100 {
        let ta = rng.gen_range(1.0..50.0);
        let tb = rng.gen_range(1.0..50.0);
        let a = profile("a", ta, &mut rng);
        let b = profile("b", tb, &mut rng);
        let serial_ms = ta + tb;

        for num_sms in 2..=32u32 {
            let device = device_with(num_sms);
            for sms_a in 1..num_sms {
                let plan = CoRunPlan::Inter {
                    sms_assigned: vec![sms_a, num_sms - sms_a],
                    gamma: 1.0,
                };
                let outcome = corun_simulate(&[&a, &b], &plan, &device).unwrap();
                assert!(
                    outcome.makespan_ms >= serial_ms - 1e-9,
                    "split ({sms_a},{}) of {num_sms} SMs beat the serial sum",
                    num_sms - sms_a
                );
            }
        }

        // the proportional continuous split achieves exactly the serial sum
        let share_a = ta / serial_ms;
        let kernels = [
            SimKernel {
                solo_runtime_ms: ta,
                alu_util: a.alu_util,
                dram_util: a.dram_util,
                share: share_a,
            },
            SimKernel {
                solo_runtime_ms: tb,
                alu_util: b.alu_util,
                dram_util: b.dram_util,
                share: 1.0 - share_a,
            },
        ];
        let outcome = simulate_shares(&kernels, false);
        assert!(
            (outcome.makespan_ms - serial_ms).abs() <= 1e-9 * serial_ms,
            "proportional split gives {} instead of {serial_ms}",
            outcome.makespan_ms
        );
    }
    println!(
        "[PASS] criterion 6: every integer split >= t_a + t_b at gamma = 1; \
         proportional continuous split attains it"
    );
}

#[test]
fn criterion_7_end_to_end_desk_experiment() {
    let db = bundled_db();
    let device = bundled_device();
    let graph = bundled_graph("inception1.json");
    let budget = device.global_mem_bytes;

    let serial = schedule_serial_fastest(&graph, &db, &device, budget).unwrap();
    let greedy =
        schedule_concurrent_greedy(&graph, &db, &device, budget, Granularity::Continuous, 1.0)
            .unwrap();

    let beta = (1.0 - 0.92) / 0.38;
    let expected_greedy = 10.0 + (1.0 - beta * 10.0 / 8.0) * 8.0;
    assert!(
        (serial.makespan_ms - 18.0).abs() <= 1e-6 * 18.0,
        "serial {} != 18",
        serial.makespan_ms
    );
    assert!(
        (greedy.makespan_ms - expected_greedy).abs() <= 1e-6 * expected_greedy,
        "greedy {} != {expected_greedy}",
        greedy.makespan_ms
    );

    let speedup = serial.makespan_ms / greedy.makespan_ms;
    assert_eq!((speedup * 100.0).round() / 100.0, 1.13);

    assert!(validate_schedule(&serial, &graph, &db, &device, budget).is_empty());
    assert!(validate_schedule(&greedy, &graph, &db, &device, budget).is_empty());

    // the census methodology finds exactly the profiled pair
    let census = pair_census(&db, &graph, &device, Granularity::Continuous, 1.0, budget).unwrap();
    assert_eq!(census.len(), 1);
    let ops: BTreeMap<&str, Algorithm> = [
        (census[0].primary_op.as_str(), census[0].primary_algorithm),
        (census[0].partner_op.as_str(), census[0].partner_algorithm),
    ]
    .into();
    assert_eq!(ops["b2_conv3x3"], Algorithm::PrecompGemm);
    assert_eq!(ops["b3_conv5x5"], Algorithm::FftTiling);

    println!(
        "[PASS] criterion 7: greedy {:.4} ms vs serial {:.0} ms, speedup {speedup:.2}, \
         both schedules validate",
        greedy.makespan_ms, serial.makespan_ms
    );
}

// ---- criterion 8: CLI determinism ------------------------------------------

fn run_cli(args: &[&str]) -> (String, String, Option<i32>) {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_convsched"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(output.stdout).unwrap(),
        String::from_utf8(output.stderr).unwrap(),
        output.status.code(),
    )
}

#[test]
fn criterion_8_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let graph = data_path("inception1.json");
    let profiles = data_path("profiles.csv");
    let device = data_path("device_k40.json");
    let g = graph.to_str().unwrap();
    let p = profiles.to_str().unwrap();
    let d = device.to_str().unwrap();

    let mut artifacts: Vec<(String, Vec<u8>)> = Vec::new();
    for round in 0..2 {
        let schedule_out = dir.path().join(format!("sched{round}.json"));
        let report_out = dir.path().join(format!("report{round}.json"));
        let census_out = dir.path().join(format!("census{round}.json"));
        let svg_out = dir.path().join(format!("gantt{round}.svg"));

        let mut stdout_all = String::new();
        for args in [
            vec![
                "simulate", "--graph", g, "--profiles", p, "--device", d, "--out",
                schedule_out.to_str().unwrap(),
            ],
            vec![
                "compare", "--graph", g, "--profiles", p, "--device", d, "--out",
                report_out.to_str().unwrap(),
            ],
            vec![
                "census", "--graph", g, "--profiles", p, "--device", d, "--out",
                census_out.to_str().unwrap(),
            ],
            vec![
                "render", "--schedule", schedule_out.to_str().unwrap(), "--out",
                svg_out.to_str().unwrap(),
            ],
            vec![
                "algcompare", "--profiles", p, "--op", "incep3_5x5", "--a", "FFT", "--b",
                "WINOGRAD_NONFUSED",
            ],
        ] {
            let (stdout, stderr, code) = run_cli(&args);
            assert_eq!(code, Some(0), "args {args:?} failed: {stderr}");
            // strip the lines naming the temp files, which differ per round
            for line in stdout.lines() {
                if !line.contains(dir.path().to_str().unwrap()) {
                    stdout_all.push_str(line);
                    stdout_all.push('\n');
                }
            }
        }
        let bundle: Vec<u8> = [
            std::fs::read(&schedule_out).unwrap(),
            std::fs::read(&report_out).unwrap(),
            std::fs::read(&census_out).unwrap(),
            std::fs::read(&svg_out).unwrap(),
        ]
        .concat();
        artifacts.push((stdout_all, bundle));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "stdout differs across runs");
    assert_eq!(
        artifacts[0].1, artifacts[1].1,
        "artifact bytes differ across runs"
    );
    println!("[PASS] criterion 8: two consecutive CLI runs are byte-identical");
}
