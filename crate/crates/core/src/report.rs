//! Report assembly and rendering: scheduler comparisons, census and
//! algorithm tables for humans, and Gantt charts as SVG.
//!
//! Human-facing text rounds fractions to the nearest integer percent and
//! bytes to decimal units; machine output (JSON) keeps raw values. All
//! rendering is deterministic: identical inputs yield identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::colocate::CensusEntry;
use crate::profile::{AlgComparison, AlgorithmMenu};
use crate::sched::Schedule;

/// Nearest integer percent of a fraction.
pub fn percent(frac: f64) -> i64 {
    (frac * 100.0).round() as i64
}

/// Decimal byte units, one decimal place (48 KB, 691.0 MB, 2.2 GB).
pub fn human_bytes(bytes: u64) -> String {
    const UNITS: [(f64, &str); 3] = [(1e9, "GB"), (1e6, "MB"), (1e3, "KB")];
    for (scale, unit) in UNITS {
        if bytes as f64 >= scale {
            return format!("{:.1} {unit}", bytes as f64 / scale);
        }
    }
    format!("{bytes} B")
}

/// Side-by-side scheduler comparison over one graph.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub graph: String,
    pub device: String,
    /// Makespan per scheduler name (serial, greedy, exhaustive when run).
    pub makespans_ms: BTreeMap<String, f64>,
    /// Serial makespan over greedy makespan.
    pub speedup: f64,
    pub census_pairs: usize,
    pub census_best: Option<CensusEntry>,
    /// Peak resident bytes per scheduler name.
    pub peak_memory_bytes: BTreeMap<String, u64>,
}

impl RunReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "graph {} on device {}\n",
            self.graph, self.device
        ));
        for (name, makespan) in &self.makespans_ms {
            let peak = self.peak_memory_bytes.get(name).copied().unwrap_or(0);
            out.push_str(&format!(
                "  {name:<10} makespan {makespan:.4} ms, peak memory {}\n",
                human_bytes(peak)
            ));
        }
        out.push_str(&format!(
            "  speedup (serial/greedy): {:.2}x\n",
            self.speedup
        ));
        out.push_str(&format!(
            "  census: {} profitable independent pair(s)\n",
            self.census_pairs
        ));
        if let Some(best) = &self.census_best {
            out.push_str(&format!(
                "  best pair: {} ({}) with {} ({}), {} mode, predicted {:.4} ms vs serial {:.4} ms ({:.2}x)\n",
                best.primary_op,
                best.primary_algorithm,
                best.partner_op,
                best.partner_algorithm,
                best.plan.mode_name(),
                best.concurrent_makespan_ms,
                best.serial_ms,
                best.speedup,
            ));
        }
        out
    }
}

/// Menu table plus optional pairwise comparison, in the style of a
/// workspace/runtime tradeoff listing.
pub fn render_algcompare(menu: &AlgorithmMenu, comparison: Option<&AlgComparison>) -> String {
    let mut out = String::new();
    out.push_str(&format!("algorithms for op {}\n", menu.op_id));
    out.push_str(&format!(
        "  {:<20} {:>14} {:>12}\n",
        "algorithm", "workspace", "runtime"
    ));
    for entry in &menu.entries {
        out.push_str(&format!(
            "  {:<20} {:>14} {:>9.1} ms\n",
            entry.algorithm.to_string(),
            human_bytes(entry.workspace_bytes),
            entry.solo_runtime_ms,
        ));
    }
    if let Some(cmp) = comparison {
        out.push('\n');
        match cmp.faster {
            Some(faster) => {
                let slower = if faster == cmp.a { cmp.b } else { cmp.a };
                out.push_str(&format!(
                    "  {faster} is {}% faster than {slower}\n",
                    percent(cmp.runtime_delta_frac)
                ));
            }
            None => out.push_str("  equal runtimes\n"),
        }
        match cmp.larger_workspace {
            Some(larger) => {
                let smaller = if larger == cmp.a { cmp.b } else { cmp.a };
                out.push_str(&format!(
                    "  {larger} needs {} ({}%) more workspace than {smaller}\n",
                    human_bytes(cmp.workspace_delta_bytes),
                    percent(cmp.workspace_delta_frac)
                ));
            }
            None => out.push_str("  equal workspace\n"),
        }
    }
    out
}

/// Census entries as a fixed-width table.
pub fn render_census(entries: &[CensusEntry]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} profitable independent pair(s)\n",
        entries.len()
    ));
    for (i, e) in entries.iter().enumerate() {
        out.push_str(&format!(
            "  {:>3}. {} ({}) + {} ({})  {} mode  {:.4} ms vs {:.4} ms serial  speedup {:.2}x\n",
            i + 1,
            e.primary_op,
            e.primary_algorithm,
            e.partner_op,
            e.partner_algorithm,
            e.plan.mode_name(),
            e.concurrent_makespan_ms,
            e.serial_ms,
            e.speedup,
        ));
    }
    out
}

const SVG_WIDTH: f64 = 900.0;
const LANE_HEIGHT: f64 = 34.0;
const LANE_GAP: f64 = 8.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 40.0;

const BAR_COLORS: [&str; 6] = [
    "#4878a8", "#d0803c", "#5d9e62", "#b45a5a", "#8a6fae", "#a3893a",
];

/// Render a schedule as a Gantt chart: one bar per interval, one lane per
/// concurrent executor slot, co-run partners stacked in separate lanes.
/// Output is deterministic for identical input.
pub fn render_gantt(schedule: &Schedule) -> String {
    // assign each interval to the first lane free at its start
    let mut order: Vec<usize> = (0..schedule.intervals.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&schedule.intervals[a], &schedule.intervals[b]);
        ia.start_ms
            .partial_cmp(&ib.start_ms)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut lane_free_at: Vec<f64> = Vec::new();
    let mut lane_of: Vec<usize> = vec![0; schedule.intervals.len()];
    for &i in &order {
        let iv = &schedule.intervals[i];
        let lane = lane_free_at
            .iter()
            .position(|&free| free <= iv.start_ms + 1e-12)
            .unwrap_or_else(|| {
                lane_free_at.push(0.0);
                lane_free_at.len() - 1
            });
        lane_free_at[lane] = iv.end_ms.max(lane_free_at[lane]);
        lane_of[i] = lane;
    }
    let lanes = lane_free_at.len().max(1);

    let span_ms = schedule.makespan_ms.max(1e-9);
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let height = MARGIN_TOP + lanes as f64 * (LANE_HEIGHT + LANE_GAP) + MARGIN_BOTTOM;
    let x = |t: f64| MARGIN_LEFT + t / span_ms * plot_w;
    let y = |lane: usize| MARGIN_TOP + lane as f64 * (LANE_HEIGHT + LANE_GAP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {SVG_WIDTH} {height}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{MARGIN_LEFT}\" y=\"20\" font-size=\"14\">{} schedule of {} ({:.4} ms)</text>\n",
        schedule.mode,
        xml_escape(&schedule.graph),
        schedule.makespan_ms,
    ));

    // axis with up to ten ticks
    let axis_y = height - MARGIN_BOTTOM + 6.0;
    svg.push_str(&format!(
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
        x(0.0),
        axis_y,
        x(span_ms),
        axis_y
    ));
    let tick_ms = nice_tick(span_ms);
    let mut tick = 0.0;
    while tick <= span_ms * (1.0 + 1e-9) {
        svg.push_str(&format!(
            "  <line x1=\"{0:.2}\" y1=\"{1}\" x2=\"{0:.2}\" y2=\"{2}\" stroke=\"#333\"/>\n",
            x(tick),
            axis_y,
            axis_y + 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            x(tick),
            axis_y + 18.0,
            trim_float(tick)
        ));
        tick += tick_ms;
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"#555\">ms</text>\n",
        SVG_WIDTH - 4.0,
        axis_y + 18.0
    ));

    for lane in 0..lanes {
        svg.push_str(&format!(
            "  <text x=\"8\" y=\"{:.2}\" fill=\"#555\">slot {}</text>\n",
            y(lane) + LANE_HEIGHT / 2.0 + 4.0,
            lane
        ));
    }

    for (i, iv) in schedule.intervals.iter().enumerate() {
        let x0 = x(iv.start_ms);
        let w = (x(iv.end_ms) - x0).max(1.0);
        let y0 = y(lane_of[i]);
        let color = BAR_COLORS[i % BAR_COLORS.len()];
        let label = match iv.algorithm {
            Some(alg) => format!("{} [{}]", iv.op_id, alg),
            None => iv.op_id.clone(),
        };
        svg.push_str(&format!(
            "  <rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{w:.2}\" height=\"{LANE_HEIGHT}\" \
             fill=\"{color}\" stroke=\"#222\" rx=\"3\"><title>{}: {} - {} ms</title></rect>\n",
            xml_escape(&label),
            trim_float(iv.start_ms),
            trim_float(iv.end_ms),
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" fill=\"#fff\">{}</text>\n",
            x0 + 4.0,
            y0 + LANE_HEIGHT / 2.0 + 4.0,
            xml_escape(&label)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn nice_tick(span_ms: f64) -> f64 {
    let raw = span_ms / 10.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let normalized = raw / magnitude;
    let factor = if normalized <= 1.0 {
        1.0
    } else if normalized <= 2.0 {
        2.0
    } else if normalized <= 5.0 {
        5.0
    } else {
        10.0
    };
    factor * magnitude
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colocate::Granularity;
    use crate::profile::{Algorithm, MenuEntry};
    use crate::sched::{Assignment, Interval, SchedulerKind};

    fn menu() -> AlgorithmMenu {
        AlgorithmMenu {
            op_id: "incep3_5x5".to_string(),
            entries: vec![
                MenuEntry {
                    algorithm: Algorithm::WinogradNonfused,
                    workspace_bytes: 691_000_000,
                    solo_runtime_ms: 46.0,
                },
                MenuEntry {
                    algorithm: Algorithm::Fft,
                    workspace_bytes: 2_200_000_000,
                    solo_runtime_ms: 36.0,
                },
            ],
        }
    }

    fn empty_schedule() -> Schedule {
        Schedule {
            graph: "empty".to_string(),
            mode: SchedulerKind::Serial,
            granularity: Granularity::Continuous,
            gamma: 1.0,
            mem_budget_bytes: 0,
            makespan_ms: 0.0,
            intervals: vec![],
            co_runs: vec![],
            memory_timeline: vec![(0.0, 0)],
        }
    }

    fn interval(op: &str, start: f64, end: f64, assignment: Assignment) -> Interval {
        Interval {
            op_id: op.to_string(),
            algorithm: None,
            start_ms: start,
            end_ms: end,
            assignment,
        }
    }

    #[test]
    fn percent_rounds_to_nearest() {
        assert_eq!(percent(10.0 / 46.0), 22);
        assert_eq!(percent(1_509.0 / 2_200.0), 69);
        assert_eq!(percent(0.204), 20);
        assert_eq!(percent(0.205), 21);
    }

    #[test]
    fn human_bytes_uses_decimal_units() {
        assert_eq!(human_bytes(0), "0 B");
        assert_eq!(human_bytes(48_000), "48.0 KB");
        assert_eq!(human_bytes(691_000_000), "691.0 MB");
        assert_eq!(human_bytes(2_200_000_000), "2.2 GB");
    }

    #[test]
    fn algcompare_text_carries_percent_deltas() {
        let cmp = crate::profile::compare_algorithms(
            &menu(),
            Algorithm::Fft,
            Algorithm::WinogradNonfused,
        )
        .unwrap();
        let text = render_algcompare(&menu(), Some(&cmp));
        assert!(text.contains("FFT is 22% faster than WINOGRAD_NONFUSED"));
        assert!(text.contains("FFT needs 1.5 GB (69%) more workspace"));
    }

    #[test]
    fn serial_bars_share_one_lane() {
        let mut s = empty_schedule();
        s.makespan_ms = 10.0;
        s.intervals = vec![
            interval("a", 0.0, 5.0, Assignment::Solo),
            interval("b", 5.0, 10.0, Assignment::Solo),
        ];
        let svg = render_gantt(&s);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert_eq!(svg.matches("slot 0").count(), 1);
        assert!(!svg.contains("slot 1"));
    }

    #[test]
    fn corun_bars_occupy_two_lanes() {
        let mut s = empty_schedule();
        s.makespan_ms = 16.0;
        s.intervals = vec![
            interval("a", 0.0, 10.0, Assignment::CoRun(0)),
            interval("b", 0.0, 16.0, Assignment::CoRun(0)),
        ];
        let svg = render_gantt(&s);
        assert!(svg.contains("slot 0"));
        assert!(svg.contains("slot 1"));
    }

    #[test]
    fn empty_schedule_still_renders_axes() {
        let svg = render_gantt(&empty_schedule());
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<line"));
        assert!(!svg.contains("<rect"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut s = empty_schedule();
        s.makespan_ms = 10.0;
        s.intervals = vec![interval("a", 0.0, 10.0, Assignment::Solo)];
        assert_eq!(render_gantt(&s), render_gantt(&s));
    }
}
