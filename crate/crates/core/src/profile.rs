//! Kernel profile database: per-(op, algorithm) resource footprints,
//! workspace sizes, and solo runtimes, loaded from a delimited table.
//!
//! The table is comma-separated with a fixed header. Fraction columns are
//! plain 0-1 values unless the file opens with a `# fraction_unit: percent`
//! directive, in which case they are 0-100. Workspace is always plain bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convolution algorithm identifiers, mirroring the cuDNN forward menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "GEMM")]
    Gemm,
    #[serde(rename = "IMPLICIT_GEMM")]
    ImplicitGemm,
    #[serde(rename = "PRECOMP_GEMM")]
    PrecompGemm,
    #[serde(rename = "WINOGRAD")]
    Winograd,
    #[serde(rename = "WINOGRAD_NONFUSED")]
    WinogradNonfused,
    #[serde(rename = "DIRECT")]
    Direct,
    #[serde(rename = "FFT")]
    Fft,
    #[serde(rename = "FFT_TILING")]
    FftTiling,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Gemm,
        Algorithm::ImplicitGemm,
        Algorithm::PrecompGemm,
        Algorithm::Winograd,
        Algorithm::WinogradNonfused,
        Algorithm::Direct,
        Algorithm::Fft,
        Algorithm::FftTiling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gemm => "GEMM",
            Algorithm::ImplicitGemm => "IMPLICIT_GEMM",
            Algorithm::PrecompGemm => "PRECOMP_GEMM",
            Algorithm::Winograd => "WINOGRAD",
            Algorithm::WinogradNonfused => "WINOGRAD_NONFUSED",
            Algorithm::Direct => "DIRECT",
            Algorithm::Fft => "FFT",
            Algorithm::FftTiling => "FFT_TILING",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// One algorithm's measured footprint on one network operation.
///
/// Static fractions (`reg_frac`, `shm_frac`, `thread_frac`, `block_frac`)
/// are the share of an SM's register file, shared memory, thread slots,
/// and resident-block slots the kernel holds at solo occupancy. Dynamic
/// utilizations (`alu_util`, `dram_util`) and `mem_stall_frac` describe
/// warp execution behavior. All fractions are stored normalized to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub op_id: String,
    pub algorithm: Algorithm,
    pub kernel_name: String,
    pub reg_frac: f64,
    pub shm_frac: f64,
    pub thread_frac: f64,
    pub block_frac: f64,
    pub alu_util: f64,
    pub mem_stall_frac: f64,
    /// DRAM bandwidth demand. When the source column is absent or empty this
    /// defaults to `mem_stall_frac`, a conservative lower-bound proxy.
    pub dram_util: f64,
    pub workspace_bytes: u64,
    pub solo_runtime_ms: f64,
}

/// One selectable algorithm for an op: the scheduling-relevant projection
/// of a [`KernelProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuEntry {
    pub algorithm: Algorithm,
    pub workspace_bytes: u64,
    pub solo_runtime_ms: f64,
}

/// The set of interchangeable algorithms profiled for one op,
/// sorted by algorithm name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmMenu {
    pub op_id: String,
    pub entries: Vec<MenuEntry>,
}

impl AlgorithmMenu {
    pub fn entry(&self, algorithm: Algorithm) -> Option<&MenuEntry> {
        self.entries.iter().find(|e| e.algorithm == algorithm)
    }
}

/// Immutable store of loaded profiles, indexed by (op_id, algorithm).
#[derive(Debug, Clone, Default)]
pub struct ProfileDb {
    profiles: Vec<KernelProfile>,
    by_key: BTreeMap<(String, Algorithm), usize>,
}

impl ProfileDb {
    pub fn new(profiles: Vec<KernelProfile>) -> Self {
        let by_key = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.op_id.clone(), p.algorithm), i))
            .collect();
        ProfileDb { profiles, by_key }
    }

    pub fn profiles(&self) -> &[KernelProfile] {
        &self.profiles
    }

    pub fn get(&self, op_id: &str, algorithm: Algorithm) -> Option<&KernelProfile> {
        self.by_key
            .get(&(op_id.to_string(), algorithm))
            .map(|&i| &self.profiles[i])
    }

    /// Profiles for one op, sorted by algorithm name.
    pub fn profiles_for(&self, op_id: &str) -> Vec<&KernelProfile> {
        self.by_key
            .iter()
            .filter(|((op, _), _)| op == op_id)
            .map(|(_, &i)| &self.profiles[i])
            .collect()
    }

    /// Project one op's profiles into an [`AlgorithmMenu`].
    /// Returns `None` when no profile mentions the op.
    pub fn menu(&self, op_id: &str) -> Option<AlgorithmMenu> {
        let entries: Vec<MenuEntry> = self
            .profiles_for(op_id)
            .iter()
            .map(|p| MenuEntry {
                algorithm: p.algorithm,
                workspace_bytes: p.workspace_bytes,
                solo_runtime_ms: p.solo_runtime_ms,
            })
            .collect();
        if entries.is_empty() {
            None
        } else {
            Some(AlgorithmMenu {
                op_id: op_id.to_string(),
                entries,
            })
        }
    }
}

/// How fraction columns are scaled in a profile table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FractionUnit {
    /// Plain 0-1 values (default).
    #[default]
    Fraction,
    /// 0-100 values, divided by 100 at load.
    Percent,
}

impl FractionUnit {
    fn max(self) -> f64 {
        match self {
            FractionUnit::Fraction => 1.0,
            FractionUnit::Percent => 100.0,
        }
    }

    fn scale(self, value: f64) -> f64 {
        match self {
            FractionUnit::Fraction => value,
            FractionUnit::Percent => value / 100.0,
        }
    }
}

const REQUIRED_COLUMNS: [&str; 11] = [
    "op_id",
    "algorithm",
    "kernel_name",
    "reg_frac",
    "shm_frac",
    "thread_frac",
    "block_frac",
    "alu_util",
    "mem_stall_frac",
    "workspace_bytes",
    "solo_runtime_ms",
];

#[derive(Debug, Deserialize)]
struct RawRow {
    op_id: String,
    algorithm: String,
    kernel_name: String,
    reg_frac: f64,
    shm_frac: f64,
    thread_frac: f64,
    block_frac: f64,
    alu_util: f64,
    mem_stall_frac: f64,
    #[serde(default)]
    dram_util: Option<f64>,
    workspace_bytes: u64,
    solo_runtime_ms: f64,
}

/// Load and validate a profile table from a reader.
///
/// The stream may open with `#`-prefixed directive lines before the header;
/// the only recognized directive is `fraction_unit: fraction|percent`.
/// `path` is used in error messages only.
pub fn load_profiles<R: Read>(mut reader: R, path: &str) -> Result<Vec<KernelProfile>> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    load_profiles_str(&text, path)
}

/// [`load_profiles`] over an in-memory string.
pub fn load_profiles_str(text: &str, path: &str) -> Result<Vec<KernelProfile>> {
    let (unit, body, header_line) = split_directives(text, path)?;

    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());

    let headers = csv_reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_string(),
            source,
        })?
        .clone();
    for col in REQUIRED_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MissingColumn {
                path: path.to_string(),
                column: col.to_string(),
            });
        }
    }

    let mut out = Vec::new();
    let mut seen: BTreeMap<(String, Algorithm), u64> = BTreeMap::new();
    for record in csv_reader.deserialize::<RawRow>() {
        let row = record.map_err(|source| Error::Csv {
            path: path.to_string(),
            source,
        })?;
        // Line numbers in errors count directive lines too.
        let line = header_line + out.len() as u64 + 1;
        let profile = validate_row(row, unit, path, line)?;
        let key = (profile.op_id.clone(), profile.algorithm);
        if seen.insert(key, line).is_some() {
            return Err(Error::DuplicateProfile {
                path: path.to_string(),
                line,
                op_id: profile.op_id,
                algorithm: profile.algorithm.to_string(),
            });
        }
        out.push(profile);
    }
    Ok(out)
}

/// Serialize profiles back to the table format (fraction units, full
/// precision). `load_profiles` on the output reproduces the records.
pub fn profiles_to_csv(profiles: &[KernelProfile]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "op_id",
        "algorithm",
        "kernel_name",
        "reg_frac",
        "shm_frac",
        "thread_frac",
        "block_frac",
        "alu_util",
        "mem_stall_frac",
        "dram_util",
        "workspace_bytes",
        "solo_runtime_ms",
    ])
    .expect("header write");
    for p in profiles {
        w.write_record([
            p.op_id.clone(),
            p.algorithm.to_string(),
            p.kernel_name.clone(),
            format_f64(p.reg_frac),
            format_f64(p.shm_frac),
            format_f64(p.thread_frac),
            format_f64(p.block_frac),
            format_f64(p.alu_util),
            format_f64(p.mem_stall_frac),
            format_f64(p.dram_util),
            p.workspace_bytes.to_string(),
            format_f64(p.solo_runtime_ms),
        ])
        .expect("row write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

// Display for f64 is the shortest representation that parses back exactly.
fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn split_directives<'a>(text: &'a str, path: &str) -> Result<(FractionUnit, &'a str, u64)> {
    let mut unit = FractionUnit::default();
    let mut offset = 0usize;
    let mut lines_skipped = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.starts_with('#') {
            break;
        }
        let directive = trimmed.trim_start_matches('#').trim();
        if let Some(value) = directive.strip_prefix("fraction_unit:") {
            match value.trim() {
                "fraction" => unit = FractionUnit::Fraction,
                "percent" => unit = FractionUnit::Percent,
                other => {
                    return Err(Error::UnknownDirective {
                        path: path.to_string(),
                        directive: format!("fraction_unit: {other}"),
                    })
                }
            }
        } else if !directive.is_empty() {
            return Err(Error::UnknownDirective {
                path: path.to_string(),
                directive: directive.to_string(),
            });
        }
        offset += line.len();
        lines_skipped += 1;
    }
    Ok((unit, &text[offset..], lines_skipped + 1))
}

fn validate_row(row: RawRow, unit: FractionUnit, path: &str, line: u64) -> Result<KernelProfile> {
    let algorithm = Algorithm::from_str(&row.algorithm).map_err(|_| Error::UnknownAlgorithm {
        path: path.to_string(),
        line,
        value: row.algorithm.clone(),
    })?;

    let check_fraction = |field: &str, value: f64| -> Result<f64> {
        if !value.is_finite() || value < 0.0 || value > unit.max() {
            return Err(Error::FieldOutOfRange {
                path: path.to_string(),
                line,
                field: field.to_string(),
                value: value.to_string(),
                reason: format!("expected 0..={}", unit.max()),
            });
        }
        Ok(unit.scale(value))
    };

    let reg_frac = check_fraction("reg_frac", row.reg_frac)?;
    let shm_frac = check_fraction("shm_frac", row.shm_frac)?;
    let thread_frac = check_fraction("thread_frac", row.thread_frac)?;
    let block_frac = check_fraction("block_frac", row.block_frac)?;
    let alu_util = check_fraction("alu_util", row.alu_util)?;
    let mem_stall_frac = check_fraction("mem_stall_frac", row.mem_stall_frac)?;
    let dram_util = match row.dram_util {
        Some(v) => check_fraction("dram_util", v)?,
        None => mem_stall_frac,
    };

    if !row.solo_runtime_ms.is_finite() || row.solo_runtime_ms <= 0.0 {
        return Err(Error::FieldOutOfRange {
            path: path.to_string(),
            line,
            field: "solo_runtime_ms".to_string(),
            value: row.solo_runtime_ms.to_string(),
            reason: "expected a positive runtime".to_string(),
        });
    }

    Ok(KernelProfile {
        op_id: row.op_id,
        algorithm,
        kernel_name: row.kernel_name,
        reg_frac,
        shm_frac,
        thread_frac,
        block_frac,
        alu_util,
        mem_stall_frac,
        dram_util,
        workspace_bytes: row.workspace_bytes,
        solo_runtime_ms: row.solo_runtime_ms,
    })
}

/// Pairwise algorithm comparison: non-negative delta magnitudes plus
/// direction flags. `faster`/`larger_workspace` are `None` on exact ties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgComparison {
    pub op_id: String,
    pub a: Algorithm,
    pub b: Algorithm,
    /// Which of the two runs faster, if either.
    pub faster: Option<Algorithm>,
    /// (t_slow - t_fast) / t_slow.
    pub runtime_delta_frac: f64,
    /// Which of the two needs more workspace, if either.
    pub larger_workspace: Option<Algorithm>,
    pub workspace_delta_bytes: u64,
    /// (ws_large - ws_small) / ws_large; 0 when both are zero.
    pub workspace_delta_frac: f64,
}

/// Compare two algorithms from one op's menu.
///
/// Deltas are reported relative to the slower runtime and the larger
/// workspace respectively, so both fractions land in [0, 1).
pub fn compare_algorithms(
    menu: &AlgorithmMenu,
    a: Algorithm,
    b: Algorithm,
) -> Result<AlgComparison> {
    let entry = |alg: Algorithm| -> Result<&MenuEntry> {
        menu.entry(alg).ok_or_else(|| Error::AlgorithmNotInMenu {
            op_id: menu.op_id.clone(),
            algorithm: alg.to_string(),
        })
    };
    let ea = entry(a)?;
    let eb = entry(b)?;

    let (faster, runtime_delta_frac) = if ea.solo_runtime_ms < eb.solo_runtime_ms {
        (Some(a), (eb.solo_runtime_ms - ea.solo_runtime_ms) / eb.solo_runtime_ms)
    } else if eb.solo_runtime_ms < ea.solo_runtime_ms {
        (Some(b), (ea.solo_runtime_ms - eb.solo_runtime_ms) / ea.solo_runtime_ms)
    } else {
        (None, 0.0)
    };

    let (larger_workspace, workspace_delta_bytes) = if ea.workspace_bytes > eb.workspace_bytes {
        (Some(a), ea.workspace_bytes - eb.workspace_bytes)
    } else if eb.workspace_bytes > ea.workspace_bytes {
        (Some(b), eb.workspace_bytes - ea.workspace_bytes)
    } else {
        (None, 0)
    };
    let larger_bytes = ea.workspace_bytes.max(eb.workspace_bytes);
    let workspace_delta_frac = if larger_bytes == 0 {
        0.0
    } else {
        workspace_delta_bytes as f64 / larger_bytes as f64
    };

    Ok(AlgComparison {
        op_id: menu.op_id.clone(),
        a,
        b,
        faster,
        runtime_delta_frac,
        larger_workspace,
        workspace_delta_bytes,
        workspace_delta_frac,
    })
}
