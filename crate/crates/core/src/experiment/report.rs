use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stats::{mean, min_max, sample_std};
use crate::infra::NodeClass;
use crate::sim::{DecisionRecord, Engine, MetricsRecord, PlacementRecord};
use crate::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const PLACEMENTS_FILE: &str = "placements.csv";
/// Wall-clock decision timings; not reproducible across runs.
pub const DECISIONS_FILE: &str = "decisions.csv";

/// Row label aggregating every application.
pub const ALL_APPS: &str = "ALL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// Raw per-run records of an experiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawRecords {
    pub metrics: Vec<MetricsRecord>,
    pub placements: Vec<PlacementRecord>,
    pub decisions: Vec<DecisionRecord>,
}

impl RawRecords {
    /// Sorts every table by engine, run, app and task.
    pub fn sort(&mut self) {
        self.metrics.sort_by_key(|m| (m.engine, m.run, m.app));
        self.placements.sort_by_key(|p| (p.engine, p.run, p.app, p.task));
        self.decisions.sort_by_key(|d| (d.engine, d.run, d.app, d.task));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(&dir.join(METRICS_FILE), &self.metrics)?;
        write_csv(&dir.join(PLACEMENTS_FILE), &self.placements)?;
        write_csv(&dir.join(DECISIONS_FILE), &self.decisions)
    }

    /// Reads a raw directory; the decision timing file is optional.
    pub fn read(dir: &Path) -> Result<Self> {
        let decisions = dir.join(DECISIONS_FILE);
        Ok(RawRecords {
            metrics: read_csv(&dir.join(METRICS_FILE))?,
            placements: read_csv(&dir.join(PLACEMENTS_FILE))?,
            decisions: if decisions.exists() {
                read_csv(&decisions)?
            } else {
                Vec::new()
            },
        })
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        rows.push(row.map_err(|e: csv::Error| Error::Row {
            path: path.display().to_string(),
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked io kind"),
        }
    } else {
        Error::Parse(format!("{}: {err}", path.display()))
    }
}

/// Aggregates of one engine on one application (or on all of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub engine: Engine,
    pub app: String,
    pub runs: usize,
    pub apps: usize,
    pub rt_mean_ms: f64,
    pub rt_std_ms: f64,
    pub rt_min_ms: f64,
    pub rt_max_ms: f64,
    pub battery_pct: f64,
    pub cost: f64,
    pub violation_pct: f64,
    /// Share of offloadable tasks placed on each class, percent.
    pub tier_pct: BTreeMap<NodeClass, f64>,
    pub fallback_pct: f64,
    pub failures: usize,
    /// Mean wall time per decision; absent without a timing file.
    pub decision_ms: Option<f64>,
    pub gas_wei: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub rows: Vec<SummaryRow>,
}

const TIER_COLUMNS: [NodeClass; 5] = [
    NodeClass::Ed,
    NodeClass::Ec,
    NodeClass::Er,
    NodeClass::Cd,
    NodeClass::Mobile,
];

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Folds raw records into per engine×app rows plus an `ALL` row per engine.
pub fn summarize(raw: &RawRecords) -> SummaryReport {
    let mut keys: Vec<(Engine, String)> = Vec::new();
    for m in &raw.metrics {
        for app in [m.app_name.label().to_string(), ALL_APPS.to_string()] {
            if !keys.contains(&(m.engine, app.clone())) {
                keys.push((m.engine, app));
            }
        }
    }
    keys.sort();
    let mut index: BTreeMap<(Engine, usize, usize), &str> = BTreeMap::new();
    for m in &raw.metrics {
        index.insert((m.engine, m.run, m.app), m.app_name.label());
    }
    let matches = |engine: Engine, run: usize, app: usize, label: &str, want: Engine| {
        engine == want && (label == ALL_APPS || index.get(&(engine, run, app)).copied() == Some(label))
    };

    let rows = keys
        .into_iter()
        .map(|(engine, label)| {
            let metrics: Vec<&MetricsRecord> = raw
                .metrics
                .iter()
                .filter(|m| matches(m.engine, m.run, m.app, &label, engine))
                .collect();
            let rts: Vec<f64> = metrics.iter().map(|m| m.rt_ms).collect();
            let (lo, hi) = min_max(&rts).unwrap_or((f64::NAN, f64::NAN));
            let mut runs: Vec<usize> = metrics.iter().map(|m| m.run).collect();
            runs.sort_unstable();
            runs.dedup();

            let placed: Vec<&PlacementRecord> = raw
                .placements
                .iter()
                .filter(|p| p.offloadable && matches(p.engine, p.run, p.app, &label, engine))
                .collect();
            let tier_pct = TIER_COLUMNS
                .iter()
                .map(|&c| (c, pct(placed.iter().filter(|p| p.class == c).count(), placed.len())))
                .collect();
            let timings: Vec<f64> = raw
                .decisions
                .iter()
                .filter(|d| matches(d.engine, d.run, d.app, &label, engine))
                .map(|d| d.decision_ms)
                .collect();

            SummaryRow {
                engine,
                app: label,
                runs: runs.len(),
                apps: metrics.len(),
                rt_mean_ms: mean(&rts),
                rt_std_ms: sample_std(&rts),
                rt_min_ms: lo,
                rt_max_ms: hi,
                battery_pct: mean(&metrics.iter().map(|m| m.battery_pct).collect::<Vec<_>>()),
                cost: mean(&metrics.iter().map(|m| m.cost).collect::<Vec<_>>()),
                violation_pct: pct(metrics.iter().filter(|m| m.violated).count(), metrics.len()),
                tier_pct,
                fallback_pct: pct(placed.iter().filter(|p| p.fallback).count(), placed.len()),
                failures: metrics.iter().map(|m| m.failures).sum(),
                decision_ms: (!timings.is_empty()).then(|| mean(&timings)),
                gas_wei: metrics.iter().map(|m| m.gas_wei).sum(),
            }
        })
        .collect();
    SummaryReport { rows }
}

/// Column names and fixed-precision cells of a report table.
pub trait Table {
    fn header(&self) -> Vec<String>;
    fn cells(&self) -> Vec<Vec<String>>;
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "NaN".into()
    }
}

impl Table for SummaryReport {
    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "engine",
            "app",
            "runs",
            "apps",
            "rt_mean_ms",
            "rt_std_ms",
            "rt_min_ms",
            "rt_max_ms",
            "battery_pct",
            "cost",
            "violation_pct",
        ]
        .map(String::from)
        .to_vec();
        h.extend(
            TIER_COLUMNS
                .iter()
                .map(|c| format!("tier_{}_pct", c.label().to_ascii_lowercase())),
        );
        h.extend(["fallback_pct", "failures", "decision_ms", "gas_wei"].map(String::from));
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut c = vec![
                    r.engine.label().to_string(),
                    r.app.clone(),
                    r.runs.to_string(),
                    r.apps.to_string(),
                    num(r.rt_mean_ms),
                    num(r.rt_std_ms),
                    num(r.rt_min_ms),
                    num(r.rt_max_ms),
                    num(r.battery_pct),
                    num(r.cost),
                    num(r.violation_pct),
                ];
                c.extend(
                    TIER_COLUMNS
                        .iter()
                        .map(|t| num(r.tier_pct.get(t).copied().unwrap_or(0.0))),
                );
                c.push(num(r.fallback_pct));
                c.push(r.failures.to_string());
                c.push(r.decision_ms.map_or_else(String::new, num));
                c.push(r.gas_wei.to_string());
                c
            })
            .collect()
    }
}

/// Renders a table in `format`. Numbers carry four decimals.
pub fn emit_report(table: &dyn Table, format: ReportFormat) -> String {
    let header = table.header();
    let cells = table.cells();
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for row in &cells {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
            for row in &cells {
                let _ = writeln!(out, "| {} |", row.join(" | "));
            }
        }
        ReportFormat::Json => {
            out.push_str("[\n");
            for (i, row) in cells.iter().enumerate() {
                let fields: Vec<String> = header
                    .iter()
                    .zip(row)
                    .map(|(k, v)| {
                        let value = if v.is_empty() {
                            "null".to_string()
                        } else if v.parse::<f64>().is_ok_and(f64::is_finite) {
                            v.clone()
                        } else {
                            serde_json::to_string(v).expect("string serializes")
                        };
                        format!("\"{k}\": {value}")
                    })
                    .collect();
                let sep = if i + 1 == cells.len() { "" } else { "," };
                let _ = writeln!(out, "  {{{}}}{sep}", fields.join(", "));
            }
            out.push_str("]\n");
        }
    }
    out
}

/// Writes `stem.<ext>` in every format.
pub fn write_all_formats(table: &dyn Table, dir: &Path, stem: &str) -> Result<()> {
    for format in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown] {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        fs::write(&path, emit_report(table, format)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infra::NodeId;
    use crate::workload::AppName;

    fn metric(engine: Engine, run: usize, app: usize, name: AppName, rt: f64, violated: bool) -> MetricsRecord {
        MetricsRecord {
            run,
            app,
            engine,
            app_name: name,
            rt_ms: rt,
            battery_pct: 99.5,
            cost: 1.0,
            violated,
            failures: 1,
            gas_wei: 100,
            deadline_ms: 400.0,
        }
    }

    fn placement(engine: Engine, run: usize, app: usize, class: NodeClass) -> PlacementRecord {
        PlacementRecord {
            run,
            app,
            engine,
            task: 0,
            task_name: "T".into(),
            offloadable: true,
            node: NodeId(0),
            class,
            attempts: 1,
            failures: 0,
            fallback: false,
            rt_ms: 1.0,
            max_util: 0.1,
        }
    }

    fn sample() -> RawRecords {
        RawRecords {
            metrics: vec![
                metric(Engine::Fresco, 0, 0, AppName::Mobiar, 100.0, false),
                metric(Engine::Fresco, 0, 1, AppName::Naviar, 300.0, true),
                metric(Engine::Fresco, 1, 0, AppName::Mobiar, 200.0, false),
            ],
            placements: vec![
                placement(Engine::Fresco, 0, 0, NodeClass::Ec),
                placement(Engine::Fresco, 0, 1, NodeClass::Cd),
                placement(Engine::Fresco, 1, 0, NodeClass::Ec),
                placement(Engine::Fresco, 1, 0, NodeClass::Mobile),
            ],
            decisions: Vec::new(),
        }
    }

    #[test]
    fn rows_per_engine_and_app() {
        let report = summarize(&sample());
        let labels: Vec<_> = report.rows.iter().map(|r| r.app.as_str()).collect();
        assert_eq!(labels, ["ALL", "MOBIAR", "NAVIAR"]);
        let all = &report.rows[0];
        assert_eq!((all.runs, all.apps), (2, 3));
        assert_eq!(all.rt_mean_ms, 200.0);
        assert_eq!(all.rt_std_ms, 100.0);
        assert!((all.violation_pct - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(all.gas_wei, 300);
        assert_eq!(all.tier_pct[&NodeClass::Ec], 50.0);
        assert!((all.tier_pct.values().sum::<f64>() - 100.0).abs() < 1e-9);
        let mobiar = &report.rows[1];
        assert_eq!(mobiar.rt_mean_ms, 150.0);
        assert_eq!(mobiar.violation_pct, 0.0);
        assert!(mobiar.decision_ms.is_none());
    }

    #[test]
    fn raw_round_trip_gives_the_same_report() {
        let dir = tempfile::tempdir().unwrap();
        let raw = sample();
        raw.write(dir.path()).unwrap();
        let back = RawRecords::read(dir.path()).unwrap();
        assert_eq!(back, raw);
        assert_eq!(summarize(&back), summarize(&raw));
    }

    #[test]
    fn formats_share_columns() {
        let report = summarize(&sample());
        let csv = emit_report(&report, ReportFormat::Csv);
        assert!(csv.starts_with("engine,app,runs,apps,rt_mean_ms"));
        assert!(csv.contains("FRESCO,ALL,2,3,200.0000,100.0000"));
        let md = emit_report(&report, ReportFormat::Markdown);
        assert_eq!(md.lines().count(), 2 + report.rows.len());
        let json = emit_report(&report, ReportFormat::Json);
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed[0]["rt_mean_ms"], 200.0);
        assert_eq!(parsed[0]["decision_ms"], serde_json::Value::Null);
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn malformed_row_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        sample().write(dir.path()).unwrap();
        let path = dir.path().join(METRICS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("0,9,FRESCO,MOBIAR,abc,1,1,false,0,0,400\n");
        fs::write(&path, text).unwrap();
        match RawRecords::read(dir.path()) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected a row error, got {other:?}"),
        }
    }
}
