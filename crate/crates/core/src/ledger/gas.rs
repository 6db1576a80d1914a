use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A batched function whose cost grows linearly from `base` for one record
/// to `at_span` for `span` records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchCost {
    pub base: u64,
    pub at_span: u64,
    pub span: u64,
}

impl BatchCost {
    /// `base + round((at_span − base)·(n − 1)/(span − 1))`, extrapolated
    /// past `span`. An empty batch costs `base`.
    pub fn cost(&self, n: usize) -> u64 {
        let extra = (n.max(1) - 1) as u64;
        let slope_num = self.at_span.saturating_sub(self.base);
        let den = self.span.saturating_sub(1).max(1);
        self.base + (slope_num * extra * 2 + den) / (den * 2)
    }
}

/// Gas per contract function, Wei.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasSchedule {
    pub register_node: u64,
    pub unregister_node: u64,
    pub get_node_count: u64,
    pub get_node: u64,
    pub get_reputation_score: u64,
    pub update_node_reputation: BatchCost,
    pub reset_reputation: BatchCost,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            register_node: 21_503,
            unregister_node: 21_204,
            get_node_count: 21_604,
            get_node: 21_204,
            get_reputation_score: 21_204,
            update_node_reputation: BatchCost {
                base: 21_638,
                at_span: 29_984,
                span: 30,
            },
            reset_reputation: BatchCost {
                base: 21_484,
                at_span: 25_544,
                span: 30,
            },
        }
    }
}

impl GasSchedule {
    pub fn parse(text: &str) -> Result<Self> {
        let schedule: GasSchedule = toml::from_str(text)?;
        for batch in [schedule.update_node_reputation, schedule.reset_reputation] {
            if batch.span == 0 || batch.at_span < batch.base {
                return Err(Error::Config("batched gas needs span >= 1 and at_span >= base".into()));
            }
        }
        Ok(schedule)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
