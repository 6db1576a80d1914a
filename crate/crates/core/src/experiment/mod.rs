//! Experiment runner: resolves a spec, dispatches independent runs to a
//! worker pool, writes raw per-run files and folds them into reports.

mod report;
mod spec;
pub mod stats;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{
    emit_report, summarize, write_all_formats, RawRecords, ReportFormat, SummaryReport, SummaryRow, Table, ALL_APPS,
    DECISIONS_FILE, METRICS_FILE, PLACEMENTS_FILE,
};
pub use spec::{
    derive_seeds, seed_from_env, AppSelection, ExperimentSpec, InfraSpec, Ref, ResolvedExperiment, SiteSource,
    SweepSpec, TraceSource, SEED_ENV,
};

use crate::decision::ScoreWeights;
use crate::sim::{fresh_ledger, run_episode, Engine, Episode, SimConfig};
use crate::{Error, Result};

pub const FAILURES_FILE: &str = "failures.txt";

/// A run that returned an error instead of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub engine: Engine,
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub raw: RawRecords,
    pub summary: SummaryReport,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutput {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Runs every engine on every seed of `exp` with `sim`, in parallel on
/// `jobs` workers (0 = one per core). Results are merged in a fixed order.
fn run_grid(
    exp: &ResolvedExperiment,
    sim: &SimConfig,
    engines: &[Engine],
    jobs: usize,
) -> Result<(RawRecords, Vec<RunFailure>)> {
    let work: Vec<(Engine, usize, u64)> = engines
        .iter()
        .flat_map(|&e| exp.seeds.iter().enumerate().map(move |(r, &s)| (e, r, s)))
        .collect();
    let results: Vec<(Engine, usize, u64, Result<Episode>)> = pool(jobs)?.install(|| {
        work.par_iter()
            .map(|&(engine, run, seed)| {
                let infra = exp.run_infra(seed);
                let episode = fresh_ledger(&infra, &sim.ledger)
                    .and_then(|mut ledger| run_episode(sim, &infra, engine, &mut ledger, run, seed));
                (engine, run, seed, episode)
            })
            .collect()
    });
    let mut raw = RawRecords::default();
    let mut failures = Vec::new();
    for (engine, run, seed, result) in results {
        match result {
            Ok(ep) => {
                raw.metrics.extend(ep.metrics);
                raw.placements.extend(ep.placements);
                raw.decisions.extend(ep.decisions);
            }
            Err(e) => failures.push(RunFailure {
                engine,
                run,
                seed,
                error: e.to_string(),
            }),
        }
    }
    raw.sort();
    Ok((raw, failures))
}

fn write_failures(dir: &Path, failures: &[RunFailure]) -> Result<()> {
    let path = dir.join(FAILURES_FILE);
    if failures.is_empty() {
        if path.exists() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
        return Ok(());
    }
    let text: String = failures
        .iter()
        .map(|f| format!("{} run {} seed {}: {}\n", f.engine, f.run, f.seed, f.error))
        .collect();
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Executes runs × engines × apps. With `out`, writes the raw files, a
/// failure manifest when any run failed, and the summary in every format;
/// the summary is folded from the files as written.
pub fn run_experiment(exp: &ResolvedExperiment, out: Option<&Path>, jobs: usize) -> Result<ExperimentOutput> {
    let (raw, failures) = run_grid(exp, &exp.sim, &exp.engines, jobs)?;
    let raw = match out {
        Some(dir) => {
            raw.write(dir)?;
            write_failures(dir, &failures)?;
            RawRecords::read(dir)?
        }
        None => raw,
    };
    let summary = summarize(&raw);
    if let Some(dir) = out {
        write_all_formats(&summary, dir, "summary")?;
    }
    Ok(ExperimentOutput { raw, summary, failures })
}

/// One grid point of a sensitivity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rt_mean_ms: f64,
    pub cost: f64,
    pub battery_pct: f64,
    pub violation_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub engine: Option<Engine>,
    pub rows: Vec<GridRow>,
    pub failures: Vec<RunFailure>,
}

impl GridReport {
    /// Rows with the given γ, in α order.
    pub fn row(&self, gamma: f64) -> Vec<&GridRow> {
        let mut rows: Vec<&GridRow> = self.rows.iter().filter(|r| (r.gamma - gamma).abs() < 1e-9).collect();
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        rows
    }

    /// Mean cost over all points of a γ row.
    pub fn row_cost(&self, gamma: f64) -> f64 {
        stats::mean(&self.row(gamma).iter().map(|r| r.cost).collect::<Vec<_>>())
    }
}

impl Table for GridReport {
    fn header(&self) -> Vec<String> {
        [
            "alpha",
            "beta",
            "gamma",
            "rt_mean_ms",
            "cost",
            "battery_pct",
            "violation_pct",
        ]
        .map(String::from)
        .to_vec()
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.alpha,
                    r.beta,
                    r.gamma,
                    r.rt_mean_ms,
                    r.cost,
                    r.battery_pct,
                    r.violation_pct,
                ]
                .iter()
                .map(|x| format!("{x:.4}"))
                .collect()
            })
            .collect()
    }
}

/// Runs the sweep engine at every `(α, β, γ)` of the spec's grid.
pub fn sensitivity_sweep(exp: &ResolvedExperiment, out: Option<&Path>, jobs: usize) -> Result<GridReport> {
    let sweep = exp
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("experiment has no [sweep] block".into()))?;
    let mut report = GridReport {
        engine: Some(sweep.engine),
        ..GridReport::default()
    };
    for (alpha, beta, gamma) in sweep.grid()? {
        let mut sim = exp.sim.clone();
        sim.weights = ScoreWeights {
            alpha,
            beta,
            gamma,
            scale: exp.sim.weights.scale,
        };
        let (raw, failures) = run_grid(exp, &sim, &[sweep.engine], jobs)?;
        report.failures.extend(failures);
        let m = &raw.metrics;
        let col = |f: fn(&crate::sim::MetricsRecord) -> f64| stats::mean(&m.iter().map(f).collect::<Vec<_>>());
        report.rows.push(GridRow {
            alpha,
            beta,
            gamma,
            rt_mean_ms: col(|r| r.rt_ms),
            cost: col(|r| r.cost),
            battery_pct: col(|r| r.battery_pct),
            violation_pct: col(|r| if r.violated { 100.0 } else { 0.0 }),
        });
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_failures(dir, &report.failures)?;
        write_all_formats(&report, dir, "sweep")?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ResolvedExperiment {
        let spec = ExperimentSpec::parse(
            r#"
name = "tiny"
app = "MOBIAR"
[infra]
seed = 2
sites = "synth:blobs=3,per_blob=10"
traces = "synth:ratio=0.65"
config = { clusters = 3, edge_nodes = 9 }
[sim]
apps = 3
runs = 2
[sweep]
points = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
"#,
        )
        .unwrap();
        spec.resolve(Path::new("."), None).unwrap()
    }

    #[test]
    fn experiment_writes_and_refolds() {
        let dir = tempfile::tempdir().unwrap();
        let exp = tiny();
        let out = run_experiment(&exp, Some(dir.path()), 2).unwrap();
        assert!(!out.is_partial());
        assert_eq!(out.raw.metrics.len(), 3 * 2 * 3);
        let again = summarize(&RawRecords::read(dir.path()).unwrap());
        assert_eq!(again, out.summary);
        assert!(dir.path().join("summary.md").exists());
        assert!(!dir.path().join(FAILURES_FILE).exists());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let exp = tiny();
        let a = run_experiment(&exp, None, 1).unwrap();
        let b = run_experiment(&exp, None, 3).unwrap();
        assert_eq!(a.raw.metrics, b.raw.metrics);
        assert_eq!(a.raw.placements, b.raw.placements);
    }

    #[test]
    fn sweep_has_one_row_per_point() {
        let exp = tiny();
        let grid = sensitivity_sweep(&exp, None, 2).unwrap();
        assert_eq!(grid.rows.len(), 2);
        assert_eq!(grid.rows[0].alpha, 1.0);
        let no_sweep = ResolvedExperiment { sweep: None, ..exp };
        assert!(matches!(sensitivity_sweep(&no_sweep, None, 1), Err(Error::Config(_))));
    }
}
