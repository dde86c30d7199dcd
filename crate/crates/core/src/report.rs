//! Summaries of simulation outputs: strategy comparisons and per-step
//! traces in, a markdown report and plot-ready CSV out.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a strategy comparison CSV as written by
/// [`Comparison::to_csv`](crate::hetsim::Comparison::to_csv). A `speedup`
/// column, if present, is ignored and recomputed.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct StrategyRow {
    pub strategy: String,
    pub step_time_s: f64,
    pub total_time_s: f64,
    pub hd_bytes_per_step: f64,
    pub net_bytes_per_step: f64,
    pub bulk_bytes: f64,
    pub host_idle: f64,
    pub device_idle: f64,
}

/// One row of a simulation trace CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub node: usize,
    pub host_busy_s: f64,
    pub dev_busy_s: f64,
    pub sync_wait_s: f64,
    pub hd_bytes: f64,
    pub net_bytes: f64,
}

fn parse_rows<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let wrap = |e: csv::Error| {
        let line = e.position().map_or(1, |p| p.line() as usize);
        let message = match e.kind() {
            csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
            _ => e.to_string(),
        };
        Error::Parse { path: path.to_string(), line, message }
    };
    reader.deserialize().map(|r| r.map_err(wrap)).collect()
}

pub fn parse_comparison_csv(path: &str, text: &str) -> Result<Vec<StrategyRow>> {
    parse_rows(path, text)
}

pub fn parse_trace_csv(path: &str, text: &str) -> Result<Vec<TraceRow>> {
    parse_rows(path, text)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategySummary {
    pub source: String,
    pub strategy: String,
    pub total_time_s: f64,
    /// Baseline total time over this strategy's total time.
    pub speedup: f64,
    pub hd_bytes_per_step: f64,
    pub net_bytes_per_step: f64,
    pub bulk_bytes: f64,
    pub host_idle: f64,
    pub device_idle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub source: String,
    pub steps: usize,
    pub nodes: usize,
    pub mean_host_busy_s: f64,
    pub mean_dev_busy_s: f64,
    pub mean_sync_wait_s: f64,
    /// Sync wait over the longer of host and device busy time, averaged
    /// over rows: the share of the compute phase the faster side idles.
    pub sync_idle_fraction: f64,
    pub hd_bytes_total: f64,
    pub net_bytes_total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub strategies: Vec<StrategySummary>,
    pub traces: Vec<TraceSummary>,
}

fn summarize_comparison(source: &str, rows: &[StrategyRow]) -> Vec<StrategySummary> {
    let baseline = rows.iter().find(|r| r.strategy == "offload_none").unwrap_or(&rows[0]).total_time_s;
    rows.iter()
        .map(|r| StrategySummary {
            source: source.to_string(),
            strategy: r.strategy.clone(),
            total_time_s: r.total_time_s,
            speedup: baseline / r.total_time_s,
            hd_bytes_per_step: r.hd_bytes_per_step,
            net_bytes_per_step: r.net_bytes_per_step,
            bulk_bytes: r.bulk_bytes,
            host_idle: r.host_idle,
            device_idle: r.device_idle,
        })
        .collect()
}

fn summarize_trace(source: &str, rows: &[TraceRow]) -> TraceSummary {
    let n = rows.len() as f64;
    let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
    steps.sort_unstable();
    steps.dedup();
    let mut nodes: Vec<usize> = rows.iter().map(|r| r.node).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let idle = rows
        .iter()
        .map(|r| {
            let longer = r.host_busy_s.max(r.dev_busy_s);
            if longer > 0.0 {
                r.sync_wait_s / longer
            } else {
                0.0
            }
        })
        .sum::<f64>();
    TraceSummary {
        source: source.to_string(),
        steps: steps.len(),
        nodes: nodes.len(),
        mean_host_busy_s: rows.iter().map(|r| r.host_busy_s).sum::<f64>() / n,
        mean_dev_busy_s: rows.iter().map(|r| r.dev_busy_s).sum::<f64>() / n,
        mean_sync_wait_s: rows.iter().map(|r| r.sync_wait_s).sum::<f64>() / n,
        sync_idle_fraction: idle / n,
        hd_bytes_total: rows.iter().map(|r| r.hd_bytes).sum(),
        net_bytes_total: rows.iter().map(|r| r.net_bytes).sum(),
    }
}

/// Build a report from `(source name, CSV text)` pairs. Speedups are taken
/// against the `offload_none` row of each comparison (its first row when
/// there is none). Fails when no input carries a data row.
pub fn build_report(comparisons: &[(String, String)], traces: &[(String, String)]) -> Result<Report> {
    let mut report = Report { strategies: Vec::new(), traces: Vec::new() };
    for (source, text) in comparisons {
        let rows = parse_comparison_csv(source, text)?;
        if rows.is_empty() {
            return Err(Error::EmptyReport(format!("{source} has no strategy rows")));
        }
        report.strategies.extend(summarize_comparison(source, &rows));
    }
    for (source, text) in traces {
        let rows = parse_trace_csv(source, text)?;
        if rows.is_empty() {
            return Err(Error::EmptyReport(format!("{source} has no trace rows")));
        }
        report.traces.push(summarize_trace(source, &rows));
    }
    if report.strategies.is_empty() && report.traces.is_empty() {
        return Err(Error::EmptyReport("no input files".into()));
    }
    Ok(report)
}

impl Report {
    pub fn strategies_csv(&self) -> String {
        let mut out = String::from(
            "source,strategy,total_time_s,speedup,hd_bytes_per_step,net_bytes_per_step,bulk_bytes,host_idle,device_idle\n",
        );
        for s in &self.strategies {
            let _ = writeln!(
                out,
                "{},{},{:.6e},{:.4},{},{},{},{:.6},{:.6}",
                s.source,
                s.strategy,
                s.total_time_s,
                s.speedup,
                s.hd_bytes_per_step,
                s.net_bytes_per_step,
                s.bulk_bytes,
                s.host_idle,
                s.device_idle
            );
        }
        out
    }

    pub fn traces_csv(&self) -> String {
        let mut out = String::from(
            "source,steps,nodes,mean_host_busy_s,mean_dev_busy_s,mean_sync_wait_s,sync_idle_fraction,hd_bytes_total,net_bytes_total\n",
        );
        for t in &self.traces {
            let _ = writeln!(
                out,
                "{},{},{},{:.6e},{:.6e},{:.6e},{:.6},{},{}",
                t.source,
                t.steps,
                t.nodes,
                t.mean_host_busy_s,
                t.mean_dev_busy_s,
                t.mean_sync_wait_s,
                t.sync_idle_fraction,
                t.hd_bytes_total,
                t.net_bytes_total
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Simulation report\n");
        if !self.strategies.is_empty() {
            out.push_str("\n## Strategies\n\n");
            out.push_str("| source | strategy | total time (s) | speedup | host-device bytes/step | network bytes/step | bulk bytes | host idle | device idle |\n");
            out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|\n");
            for s in &self.strategies {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.6e} | {:.4} | {} | {} | {} | {:.4} | {:.4} |",
                    s.source,
                    s.strategy,
                    s.total_time_s,
                    s.speedup,
                    s.hd_bytes_per_step,
                    s.net_bytes_per_step,
                    s.bulk_bytes,
                    s.host_idle,
                    s.device_idle
                );
            }
        }
        if !self.traces.is_empty() {
            out.push_str("\n## Traces\n\n");
            out.push_str("| source | steps | nodes | mean host busy (s) | mean device busy (s) | mean sync wait (s) | sync idle | host-device bytes | network bytes |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|\n");
            for t in &self.traces {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.6e} | {:.6e} | {:.6e} | {:.4} | {} | {} |",
                    t.source,
                    t.steps,
                    t.nodes,
                    t.mean_host_busy_s,
                    t.mean_dev_busy_s,
                    t.mean_sync_wait_s,
                    t.sync_idle_fraction,
                    t.hd_bytes_total,
                    t.net_bytes_total
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CMP: &str = "strategy,step_time_s,total_time_s,hd_bytes_per_step,net_bytes_per_step,bulk_bytes,host_idle,device_idle,speedup
offload_none,1e-2,1.0,0,0,0,0,1,1
nested,2.5e-3,0.25,1000,0,512,0.1,0.05,4
";

    #[test]
    fn speedup_is_baseline_over_strategy() {
        let r = build_report(&[("c.csv".into(), CMP.into())], &[]).unwrap();
        assert_eq!(r.strategies[0].speedup, 1.0);
        assert_eq!(r.strategies[1].speedup, 4.0);
        assert!(r.strategies_csv().contains("c.csv,nested,2.500000e-1,4.0000,1000,0,512,0.100000,0.050000"));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(build_report(&[], &[]), Err(Error::EmptyReport(_))));
        let header = "step,node,host_busy_s,dev_busy_s,sync_wait_s,hd_bytes,net_bytes\n";
        assert!(matches!(build_report(&[], &[("t.csv".into(), header.into())]), Err(Error::EmptyReport(_))));
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let text = "step,node,host_busy_s,dev_busy_s,sync_wait_s,hd_bytes,net_bytes\n0,0,1,1,0,0,0\n1,0,abc,1,0,0,0\n";
        match parse_trace_csv("t.csv", text) {
            Err(Error::Parse { path, line, .. }) => assert_eq!((path.as_str(), line), ("t.csv", 3)),
            other => panic!("{other:?}"),
        }
        let short = "step,node,host_busy_s,dev_busy_s,sync_wait_s,hd_bytes,net_bytes\n0,0,1\n";
        assert!(matches!(parse_trace_csv("t.csv", short), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn trace_summary_statistics() {
        let text = "step,node,host_busy_s,dev_busy_s,sync_wait_s,hd_bytes,net_bytes\n\
                    0,0,2,1,1,10,5\n0,1,2,2,0,10,5\n1,0,2,1,1,10,5\n1,1,2,2,0,10,5\n";
        let r = build_report(&[], &[("t".into(), text.into())]).unwrap();
        let t = &r.traces[0];
        assert_eq!((t.steps, t.nodes), (2, 2));
        assert_eq!(t.mean_dev_busy_s, 1.5);
        assert_eq!(t.sync_idle_fraction, 0.25);
        assert_eq!(t.hd_bytes_total, 40.0);
        assert!(r.to_markdown().contains("## Traces"));
        assert!(!r.to_markdown().contains("## Strategies"));
    }
}
