use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::infra::{
    ingest_cell_sites, synth_sites, GeoPoint, InfraConfig, InfrastructureMap, SynthTraceConfig, TraceStore,
};
use crate::rng::{derive_seed, stream};
use crate::sim::{Engine, SimConfig};
use crate::workload::{AppCatalog, AppName, WorkloadProfile};
use crate::{Error, Result};

/// Environment variable that replaces the spec's base seed.
pub const SEED_ENV: &str = "FRESCO_SEED";

/// Application workload of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AppSelection {
    Intrasafed,
    Mobiar,
    Naviar,
    /// Usage-weighted mix under heavier background load.
    Random,
}

impl AppSelection {
    pub fn profile(self) -> WorkloadProfile {
        match self {
            AppSelection::Intrasafed => WorkloadProfile::catalog(AppName::Intrasafed),
            AppSelection::Mobiar => WorkloadProfile::catalog(AppName::Mobiar),
            AppSelection::Naviar => WorkloadProfile::catalog(AppName::Naviar),
            AppSelection::Random => WorkloadProfile::random(),
        }
    }
}

/// A block given inline or as a path relative to the spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref<T> {
    Path(PathBuf),
    Inline(T),
}

/// Cell sites: a CSV extract or `synth:blobs=B,per_blob=N`.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteSource {
    File(PathBuf),
    Synth { blobs: usize, per_blob: usize },
}

impl FromStr for SiteSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(body) = s.strip_prefix("synth:") else {
            return Ok(SiteSource::File(PathBuf::from(s)));
        };
        let (mut blobs, mut per_blob) = (30, 20);
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{part}`")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid count `{value}` in `{s}`")))?;
            match key.trim() {
                "blobs" => blobs = value,
                "per_blob" => per_blob = value,
                other => return Err(Error::Parse(format!("unknown site option `{other}`"))),
            }
        }
        if blobs == 0 || per_blob == 0 {
            return Err(Error::Config("synthetic sites need positive counts".into()));
        }
        Ok(SiteSource::Synth { blobs, per_blob })
    }
}

impl SiteSource {
    pub fn load(&self, base: &Path, seed: u64) -> Result<Vec<GeoPoint>> {
        match self {
            SiteSource::File(path) => ingest_cell_sites(resolve(base, path)),
            SiteSource::Synth { blobs, per_blob } => Ok(synth_sites(*blobs, *per_blob, &mut stream(seed, "sites"))),
        }
    }
}

/// Availability traces: a trace file or a `synth:` generator.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    File(PathBuf),
    Synth(SynthTraceConfig),
}

impl FromStr for TraceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("synth:") {
            Ok(TraceSource::Synth(s.parse()?))
        } else {
            Ok(TraceSource::File(PathBuf::from(s)))
        }
    }
}

impl TraceSource {
    pub fn load(&self, base: &Path, count: usize, seed: u64) -> Result<TraceStore> {
        match self {
            TraceSource::File(path) => TraceStore::load(resolve(base, path)),
            TraceSource::Synth(cfg) => cfg.generate(count, seed),
        }
    }
}

/// Inputs of an infrastructure build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfraSpec {
    pub seed: u64,
    /// CSV path or `synth:blobs=B,per_blob=N`.
    pub sites: String,
    /// Trace file path or `synth:ratio=a..b`.
    pub traces: String,
    #[serde(default)]
    pub config: InfraConfig,
}

impl InfraSpec {
    pub fn build(&self, base: &Path) -> Result<InfrastructureMap> {
        let sites = self.sites.parse::<SiteSource>()?.load(base, self.seed)?;
        let traces = self
            .traces
            .parse::<TraceSource>()?
            .load(base, self.config.edge_nodes, self.seed)?;
        InfrastructureMap::build(&self.config, &sites, &traces, self.seed)
    }
}

/// Weight grid of a sensitivity sweep: one row per γ, α stepping from 0 to
/// 1 − γ, β taking the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub gammas: Vec<f64>,
    pub alpha_step: f64,
    /// Explicit `(α, β, γ)` points, used instead of the rows when present.
    pub points: Vec<(f64, f64, f64)>,
    pub engine: Engine,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            gammas: vec![0.2, 0.4, 0.6],
            alpha_step: 0.1,
            points: Vec::new(),
            engine: Engine::Fresco,
        }
    }
}

impl SweepSpec {
    /// Grid points in row order, rounded to 1e-9 so they sum to one.
    pub fn grid(&self) -> Result<Vec<(f64, f64, f64)>> {
        let round = |x: f64| (x * 1e9).round() / 1e9;
        let points: Vec<(f64, f64, f64)> = if !self.points.is_empty() {
            self.points.clone()
        } else {
            if !(self.alpha_step > 0.0) {
                return Err(Error::Config("sweep alpha_step must be positive".into()));
            }
            let mut out = Vec::new();
            for &gamma in &self.gammas {
                let steps = ((1.0 - gamma) / self.alpha_step + 1e-9).floor() as usize;
                for i in 0..=steps {
                    let alpha = round(i as f64 * self.alpha_step);
                    out.push((alpha, round(1.0 - gamma - alpha).max(0.0), gamma));
                }
            }
            out
        };
        if points.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        for &(a, b, g) in &points {
            if [a, b, g].iter().any(|w| !(*w >= 0.0)) || (a + b + g - 1.0).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "grid point ({a}, {b}, {g}) must be non-negative and sum to 1"
                )));
            }
        }
        Ok(points)
    }
}

/// One experiment: infrastructure, workload, engines and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Built map JSON path or an inline [`InfraSpec`].
    pub infra: Ref<InfraSpec>,
    /// Simulation parameters, inline or a TOML path.
    #[serde(default = "default_sim")]
    pub sim: Ref<SimConfig>,
    /// Replaces `sim.workload` when set.
    #[serde(default)]
    pub app: Option<AppSelection>,
    /// Application catalog TOML replacing the built-in one.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default = "default_engines")]
    pub engines: Vec<Engine>,
    /// Explicit run seeds; derived from `sim.seed` and `sim.runs` otherwise.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Permute edge availability traces per run.
    #[serde(default = "default_true")]
    pub reshuffle_traces: bool,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_sim() -> Ref<SimConfig> {
    Ref::Inline(SimConfig::default())
}

fn default_engines() -> Vec<Engine> {
    Engine::ALL.to_vec()
}

fn default_true() -> bool {
    true
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A spec with every reference loaded.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub name: String,
    pub infra: InfrastructureMap,
    pub sim: SimConfig,
    pub engines: Vec<Engine>,
    pub seeds: Vec<u64>,
    pub reshuffle_traces: bool,
    pub sweep: Option<SweepSpec>,
}

impl ResolvedExperiment {
    /// Infrastructure seen by one run.
    pub fn run_infra(&self, seed: u64) -> InfrastructureMap {
        if self.reshuffle_traces {
            self.infra.reshuffle_availability(seed)
        } else {
            self.infra.clone()
        }
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_toml(path.as_ref())
    }

    /// Loads every referenced block relative to `base` and applies
    /// `seed_override` (usually from [`SEED_ENV`]).
    pub fn resolve(&self, base: &Path, seed_override: Option<u64>) -> Result<ResolvedExperiment> {
        let infra = match &self.infra {
            Ref::Path(path) => InfrastructureMap::load(resolve(base, path))?,
            Ref::Inline(spec) => spec.build(base)?,
        };
        let mut sim = match &self.sim {
            Ref::Path(path) => read_toml::<SimConfig>(&resolve(base, path))?,
            Ref::Inline(sim) => sim.clone(),
        };
        if let Some(app) = self.app {
            sim.workload = app.profile();
        }
        if let Some(path) = &self.catalog {
            sim.catalog = AppCatalog::load(resolve(base, path))?;
        }
        if let Some(seed) = seed_override {
            sim.seed = seed;
        }
        sim.validate()?;
        if self.engines.is_empty() {
            return Err(Error::Config("experiment lists no engines".into()));
        }
        let seeds = match (&self.seeds, seed_override) {
            (Some(seeds), None) => seeds.clone(),
            (Some(seeds), Some(_)) => derive_seeds(sim.seed, seeds.len()),
            (None, _) => derive_seeds(sim.seed, sim.runs),
        };
        if seeds.is_empty() {
            return Err(Error::Config("experiment has no runs".into()));
        }
        if let Some(sweep) = &self.sweep {
            sweep.grid()?;
        }
        Ok(ResolvedExperiment {
            name: self.name.clone(),
            infra,
            sim,
            engines: self.engines.clone(),
            seeds,
            reshuffle_traces: self.reshuffle_traces,
            sweep: self.sweep.clone(),
        })
    }
}

/// Run seeds derived from a base seed.
pub fn derive_seeds(seed: u64, runs: usize) -> Vec<u64> {
    (0..runs).map(|r| derive_seed(seed, &format!("run-{r}"))).collect()
}

/// Reads [`SEED_ENV`]; a malformed value is a configuration error.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}
