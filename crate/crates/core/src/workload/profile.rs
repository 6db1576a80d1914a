use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{sample_app, AppDag, AppName};
use crate::{Error, Result};

/// Probability of each application in a mixed workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppMix(pub BTreeMap<AppName, f64>);

impl AppMix {
    /// Usage-trace mix: 76.3% MobiAR, 20% Intrasafed, 3.7% NaviAR.
    pub fn usage() -> Self {
        AppMix(BTreeMap::from([
            (AppName::Mobiar, 0.763),
            (AppName::Intrasafed, 0.2),
            (AppName::Naviar, 0.037),
        ]))
    }

    pub fn single(name: AppName) -> Self {
        AppMix(BTreeMap::from([(name, 1.0)]))
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() || self.0.values().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::Config("app mix needs non-negative finite probabilities".into()));
        }
        let total: f64 = self.0.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("app mix sums to {total}, not 1")));
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> AppName {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = None;
        for (&name, &p) in &self.0 {
            acc += p;
            if u < acc {
                return name;
            }
            if p > 0.0 {
                last = Some(name);
            }
        }
        last.expect("validated mix has positive mass")
    }
}

/// One background load source: a Poisson stream of tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// Arrival rate, tasks/s.
    pub rate: f64,
    /// Task size, KB.
    pub data_kb: f64,
    /// Task work, MI.
    pub mi: f64,
}

/// Background load and application mix of one workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadProfile {
    /// Arrival rate interval, tasks/s.
    pub lambda_range: (f64, f64),
    /// Mean of the exponential task size, KB.
    pub task_size_kb: f64,
    /// Mean of the exponential task work, MI.
    pub task_mi: f64,
    /// Inclusive range of generator counts per queue.
    pub generators: (u32, u32),
    pub app_mix: AppMix,
}

impl Default for WorkloadProfile {
    fn default() -> Self {
        WorkloadProfile::catalog(AppName::Mobiar)
    }
}

impl WorkloadProfile {
    /// Single-application workload with arrival rates in [10, 20].
    pub fn catalog(name: AppName) -> Self {
        WorkloadProfile {
            lambda_range: (10.0, 20.0),
            task_size_kb: 15.0,
            task_mi: 150.0,
            generators: (0, 2),
            app_mix: AppMix::single(name),
        }
    }

    /// Mixed workload: arrival rates in [60, 70] and sizes in [10, 20].
    pub fn random() -> Self {
        WorkloadProfile {
            lambda_range: (60.0, 70.0),
            task_size_kb: 15.0,
            task_mi: 150.0,
            generators: (0, 2),
            app_mix: AppMix::usage(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.lambda_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config(format!("lambda range [{lo}, {hi}] must be positive")));
        }
        if !(self.task_size_kb > 0.0 && self.task_mi > 0.0) {
            return Err(Error::Config("background task size and work must be positive".into()));
        }
        if self.generators.0 > self.generators.1 {
            return Err(Error::Config("generator range is empty".into()));
        }
        self.app_mix.validate()
    }

    pub fn generator_count<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.random_range(self.generators.0..=self.generators.1)
    }
}

/// Draws an application from the profile's mix with freshly sampled sizes.
pub fn sample_random_app<R: Rng + ?Sized>(profile: &WorkloadProfile, rng: &mut R) -> AppDag {
    let name = profile.app_mix.draw(rng);
    sample_app(name, rng)
}

/// Arrival rate uniform in the profile's range; size and work exponential.
pub fn sample_background_load<R: Rng + ?Sized>(profile: &WorkloadProfile, rng: &mut R) -> Generator {
    let (lo, hi) = profile.lambda_range;
    let rate = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    let size = Exp::new(1.0 / profile.task_size_kb).expect("validated size");
    let work = Exp::new(1.0 / profile.task_mi).expect("validated work");
    Generator {
        rate,
        data_kb: size.sample(rng),
        mi: work.sample(rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn degenerate_mix_always_picks_its_app() {
        let profile = WorkloadProfile::catalog(AppName::Mobiar);
        let mut rng = stream(1, "mix");
        assert!((0..100).all(|_| sample_random_app(&profile, &mut rng).name == AppName::Mobiar));
    }

    #[test]
    fn usage_mix_frequency() {
        let profile = WorkloadProfile::random();
        let mut rng = stream(4, "mix");
        let hits = (0..10_000)
            .filter(|_| profile.app_mix.draw(&mut rng) == AppName::Mobiar)
            .count();
        let share = hits as f64 / 10_000.0;
        assert!((share - 0.763).abs() < 0.02, "{share}");
    }

    #[test]
    fn seeded_draws_replay() {
        let mix = AppMix(BTreeMap::from([(AppName::Intrasafed, 0.5), (AppName::Naviar, 0.5)]));
        let draw = |seed| {
            let mut rng = stream(seed, "mix");
            (0..50).map(|_| mix.draw(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn background_rate_in_range() {
        let profile = WorkloadProfile::random();
        let mut rng = stream(3, "bg");
        for _ in 0..1000 {
            let g = sample_background_load(&profile, &mut rng);
            assert!((60.0..=70.0).contains(&g.rate));
            assert!(g.data_kb >= 0.0 && g.mi >= 0.0);
        }
    }

    #[test]
    fn invalid_profiles() {
        let mut p = WorkloadProfile::random();
        p.app_mix = AppMix(BTreeMap::from([(AppName::Mobiar, 0.7)]));
        assert!(p.validate().is_err());
        let mut p = WorkloadProfile::random();
        p.lambda_range = (0.0, 5.0);
        assert!(p.validate().is_err());
    }
}
