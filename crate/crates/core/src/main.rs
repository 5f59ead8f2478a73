//! Command-line front end: simulate schedules, compare schedulers, census
//! co-runnable pairs, compare algorithms, and render Gantt charts.
//!
//! Exit codes: 0 on success, 1 on input/validation failure, 2 when the
//! instance is well-formed but infeasible (no memory-feasible algorithm,
//! too few SMs, exhaustive-search limits exceeded).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convsched::sched::ExhaustiveLimits;
use convsched::{
    compare_algorithms, load_device, load_graph, load_profiles, pair_census, render_algcompare,
    render_census, render_gantt, schedule_concurrent_greedy, schedule_exhaustive,
    schedule_serial_fastest, validate_schedule, Algorithm, DeviceSpec, Error, Granularity,
    NetworkGraph, ProfileDb, RunReport, Schedule, SchedulerKind,
};

#[derive(Parser)]
#[command(
    name = "convsched",
    about = "Model concurrent convolution execution on a single GPU",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Network graph JSON file.
    #[arg(long)]
    graph: PathBuf,
    /// Kernel profile CSV file.
    #[arg(long)]
    profiles: PathBuf,
    /// Device spec JSON file.
    #[arg(long)]
    device: PathBuf,
    /// Intra-SM allocation granularity.
    #[arg(long, default_value = "continuous")]
    granularity: Granularity,
    /// Device memory budget in bytes; defaults to the device's global memory.
    #[arg(long)]
    mem_budget: Option<u64>,
    /// Inter-SM scaling exponent.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Produce one schedule and its memory timeline.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Scheduler to run.
        #[arg(long, default_value = "greedy")]
        mode: SchedulerKind,
        /// Exhaustive-search op limit.
        #[arg(long, default_value_t = 4)]
        max_ops: usize,
        /// Exhaustive-search per-menu algorithm limit.
        #[arg(long, default_value_t = 3)]
        max_algs: usize,
        /// Write the schedule JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run serial, greedy, and (within limits) exhaustive schedulers and report.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 4)]
        max_ops: usize,
        #[arg(long, default_value_t = 3)]
        max_algs: usize,
        /// Write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List independent convolution pairs predicted to beat serial execution.
    Census {
        #[command(flatten)]
        model: ModelArgs,
        /// Write the census JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show one op's algorithm menu and optionally compare two entries.
    Algcompare {
        /// Kernel profile CSV file.
        #[arg(long)]
        profiles: PathBuf,
        /// Op id whose menu to show.
        #[arg(long)]
        op: String,
        /// First algorithm to compare.
        #[arg(long, requires = "b")]
        a: Option<Algorithm>,
        /// Second algorithm to compare.
        #[arg(long, requires = "a")]
        b: Option<Algorithm>,
        /// Write menu and comparison JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a schedule JSON file as an SVG Gantt chart.
    Render {
        /// Schedule JSON produced by `simulate` or `compare`.
        #[arg(long)]
        schedule: PathBuf,
        /// Write the SVG here; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            if err.is_infeasible() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

struct ModelInputs {
    graph: NetworkGraph,
    db: ProfileDb,
    device: DeviceSpec,
    mem_budget_bytes: u64,
    granularity: Granularity,
    gamma: f64,
}

fn load_model(args: &ModelArgs) -> Result<ModelInputs, Error> {
    let graph = load_graph(open(&args.graph)?, &args.graph.display().to_string())?;
    let db = ProfileDb::new(load_profiles(
        open(&args.profiles)?,
        &args.profiles.display().to_string(),
    )?);
    let device = load_device(open(&args.device)?, &args.device.display().to_string())?;
    let mem_budget_bytes = args.mem_budget.unwrap_or(device.global_mem_bytes);
    Ok(ModelInputs {
        graph,
        db,
        device,
        mem_budget_bytes,
        granularity: args.granularity,
        gamma: args.gamma,
    })
}

fn open(path: &Path) -> Result<File, Error> {
    File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_out(path: &Path, content: &str) -> Result<(), Error> {
    let mut file = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(content.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable reports");
    text.push('\n');
    text
}

fn run_scheduler(
    inputs: &ModelInputs,
    mode: SchedulerKind,
    limits: ExhaustiveLimits,
) -> Result<Schedule, Error> {
    match mode {
        SchedulerKind::Serial => schedule_serial_fastest(
            &inputs.graph,
            &inputs.db,
            &inputs.device,
            inputs.mem_budget_bytes,
        ),
        SchedulerKind::Greedy => schedule_concurrent_greedy(
            &inputs.graph,
            &inputs.db,
            &inputs.device,
            inputs.mem_budget_bytes,
            inputs.granularity,
            inputs.gamma,
        ),
        SchedulerKind::Exhaustive => schedule_exhaustive(
            &inputs.graph,
            &inputs.db,
            &inputs.device,
            inputs.mem_budget_bytes,
            inputs.granularity,
            inputs.gamma,
            limits,
        ),
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate {
            model,
            mode,
            max_ops,
            max_algs,
            out,
        } => {
            let inputs = load_model(&model)?;
            let limits = ExhaustiveLimits { max_ops, max_algs };
            let schedule = run_scheduler(&inputs, mode, limits)?;
            print!("{}", render_schedule_text(&schedule));
            if let Some(path) = out {
                write_out(&path, &to_json(&schedule))?;
                println!("schedule written to {}", path.display());
            }
            Ok(())
        }
        Command::Compare {
            model,
            max_ops,
            max_algs,
            out,
        } => {
            let inputs = load_model(&model)?;
            let limits = ExhaustiveLimits { max_ops, max_algs };
            let serial = run_scheduler(&inputs, SchedulerKind::Serial, limits)?;
            let greedy = run_scheduler(&inputs, SchedulerKind::Greedy, limits)?;
            let exhaustive = match run_scheduler(&inputs, SchedulerKind::Exhaustive, limits) {
                Ok(schedule) => Some(schedule),
                Err(Error::LimitExceeded { .. }) => None,
                Err(err) => return Err(err),
            };
            for schedule in [Some(&serial), Some(&greedy), exhaustive.as_ref()]
                .into_iter()
                .flatten()
            {
                let violations = validate_schedule(
                    schedule,
                    &inputs.graph,
                    &inputs.db,
                    &inputs.device,
                    inputs.mem_budget_bytes,
                );
                for violation in violations {
                    eprintln!("warning: {:?} schedule: {violation}", schedule.mode);
                }
            }
            let census = pair_census(
                &inputs.db,
                &inputs.graph,
                &inputs.device,
                inputs.granularity,
                inputs.gamma,
                inputs.mem_budget_bytes,
            )?;

            let mut makespans_ms = BTreeMap::new();
            let mut peak_memory_bytes = BTreeMap::new();
            for (name, schedule) in [("serial", Some(&serial)), ("greedy", Some(&greedy)), ("exhaustive", exhaustive.as_ref())] {
                if let Some(s) = schedule {
                    makespans_ms.insert(name.to_string(), s.makespan_ms);
                    peak_memory_bytes.insert(name.to_string(), s.peak_memory_bytes());
                }
            }
            let speedup = if greedy.makespan_ms > 0.0 {
                serial.makespan_ms / greedy.makespan_ms
            } else {
                1.0
            };
            let report = RunReport {
                graph: inputs.graph.name().to_string(),
                device: inputs.device.label().to_string(),
                makespans_ms,
                speedup,
                census_pairs: census.len(),
                census_best: census.first().cloned(),
                peak_memory_bytes,
            };
            print!("{}", report.render_text());
            if let Some(path) = out {
                write_out(&path, &to_json(&report))?;
                println!("report written to {}", path.display());
            }
            Ok(())
        }
        Command::Census { model, out } => {
            let inputs = load_model(&model)?;
            let census = pair_census(
                &inputs.db,
                &inputs.graph,
                &inputs.device,
                inputs.granularity,
                inputs.gamma,
                inputs.mem_budget_bytes,
            )?;
            print!("{}", render_census(&census));
            if let Some(path) = out {
                write_out(&path, &to_json(&census))?;
                println!("census written to {}", path.display());
            }
            Ok(())
        }
        Command::Algcompare {
            profiles,
            op,
            a,
            b,
            out,
        } => {
            let db = ProfileDb::new(load_profiles(
                open(&profiles)?,
                &profiles.display().to_string(),
            )?);
            let menu = db.menu(&op).ok_or_else(|| Error::MissingMenu {
                op_id: op.clone(),
                menu: op.clone(),
            })?;
            let comparison = match (a, b) {
                (Some(a), Some(b)) => Some(compare_algorithms(&menu, a, b)?),
                _ => None,
            };
            print!("{}", render_algcompare(&menu, comparison.as_ref()));
            if let Some(path) = out {
                #[derive(serde::Serialize)]
                struct AlgReport<'a> {
                    menu: &'a convsched::AlgorithmMenu,
                    comparison: Option<&'a convsched::AlgComparison>,
                }
                write_out(
                    &path,
                    &to_json(&AlgReport {
                        menu: &menu,
                        comparison: comparison.as_ref(),
                    }),
                )?;
                println!("comparison written to {}", path.display());
            }
            Ok(())
        }
        Command::Render { schedule, out } => {
            let file = open(&schedule)?;
            let parsed: Schedule =
                serde_json::from_reader(file).map_err(|source| Error::Json {
                    path: schedule.display().to_string(),
                    source,
                })?;
            let svg = render_gantt(&parsed);
            match out {
                Some(path) => {
                    write_out(&path, &svg)?;
                    println!("gantt written to {}", path.display());
                }
                None => print!("{svg}"),
            }
            Ok(())
        }
    }
}

fn render_schedule_text(schedule: &Schedule) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} schedule of graph {}: makespan {:.4} ms, peak memory {}\n",
        schedule.mode,
        schedule.graph,
        schedule.makespan_ms,
        convsched::report::human_bytes(schedule.peak_memory_bytes()),
    ));
    for iv in &schedule.intervals {
        let alg = iv
            .algorithm
            .map(|a| a.to_string())
            .unwrap_or_else(|| "-".to_string());
        let slot = match iv.assignment {
            convsched::sched::Assignment::Solo => "solo".to_string(),
            convsched::sched::Assignment::CoRun(i) => format!("co-run #{i}"),
        };
        out.push_str(&format!(
            "  {:<16} {:<18} {:>10.4} -> {:>10.4} ms  {}\n",
            iv.op_id, alg, iv.start_ms, iv.end_ms, slot
        ));
    }
    out
}
