//! Analytical model and scheduler for running independent convolutions of a
//! non-linear CNN concurrently on one GPU.
//!
//! The model answers, without touching hardware: which pairs of independent
//! convolutions can share the device, under which algorithm choices, at
//! what predicted cost. It combines:
//!
//! * a profile store of per-(op, algorithm) SM footprints, workspace sizes,
//!   and solo runtimes ([`profile`]);
//! * per-block footprint derivation over a normalized device ([`device`]);
//! * intra-SM / inter-SM co-location feasibility and a two-resource
//!   contention simulator ([`colocate`]);
//! * computation graphs with independence and ready-set queries ([`graph`]);
//! * serial, greedy-concurrent, and exhaustive schedulers under precedence,
//!   SM, and device-memory constraints ([`sched`]);
//! * report and Gantt rendering ([`report`]).

pub mod colocate;
pub mod device;
pub mod error;
pub mod graph;
pub mod profile;
pub mod report;
pub mod sched;

pub use colocate::{
    best_corun, corun_simulate, inter_sm_partition, intra_sm_allocate, pair_census, CensusEntry,
    CoRunOutcome, CoRunPlan, Granularity, SimKernel,
};
pub use device::{load_device, per_block_footprint, solo_blocks, BlockFootprint, DeviceSpec};
pub use error::{Error, Result};
pub use graph::{load_graph, NetworkGraph, OpKind, OpNode};
pub use profile::{
    compare_algorithms, load_profiles, AlgComparison, Algorithm, AlgorithmMenu, KernelProfile,
    ProfileDb,
};
pub use report::{render_algcompare, render_census, render_gantt, RunReport};
pub use sched::{
    schedule_concurrent_greedy, schedule_exhaustive, schedule_serial_fastest, validate_schedule,
    ExhaustiveLimits, Schedule, SchedulerKind, Violation,
};
