use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Half-open `[start, end)` span on the normalized timeline. A span ending
/// exactly at `1.0` also covers the final instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.start && (t < self.end || (self.end >= 1.0 && t <= 1.0))
    }
}

/// Up-time intervals of one node, sorted and disjoint inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct AvailabilityTrace {
    intervals: Vec<Interval>,
}

impl AvailabilityTrace {
    /// Validates and normalizes a list of `(start, end)` pairs; adjacent
    /// intervals are merged.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut intervals: Vec<Interval> = Vec::new();
        for (start, end) in pairs {
            if !(start.is_finite() && end.is_finite()) || start < 0.0 || end > 1.0 || start >= end {
                return Err(Error::Domain(format!(
                    "availability interval [{start}, {end}) must satisfy 0 <= start < end <= 1"
                )));
            }
            if let Some(last) = intervals.last_mut() {
                if start < last.end {
                    return Err(Error::Domain(format!(
                        "availability interval [{start}, {end}) overlaps or precedes [{}, {})",
                        last.start, last.end
                    )));
                }
                if start == last.end {
                    last.end = end;
                    continue;
                }
            }
            intervals.push(Interval { start, end });
        }
        Ok(AvailabilityTrace { intervals })
    }

    pub fn always_on() -> Self {
        AvailabilityTrace {
            intervals: vec![Interval { start: 0.0, end: 1.0 }],
        }
    }

    pub fn never() -> Self {
        AvailabilityTrace { intervals: Vec::new() }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Fraction of the timeline covered by up intervals.
    pub fn ratio(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    /// Binary search for the interval holding `t`.
    pub fn is_available(&self, t: f64) -> Result<bool> {
        check_time(t)?;
        Ok(self.covering(t).is_some())
    }

    /// True when a single up interval spans all of `[from, to]`.
    pub fn covers(&self, from: f64, to: f64) -> Result<bool> {
        check_time(from)?;
        let to = to.min(1.0);
        Ok(match self.covering(from) {
            Some(iv) => to < iv.end || (iv.end >= 1.0 && to <= 1.0) || to <= from,
            None => false,
        })
    }

    fn covering(&self, t: f64) -> Option<&Interval> {
        let idx = self.intervals.partition_point(|iv| iv.start <= t);
        let iv = self.intervals.get(idx.checked_sub(1)?)?;
        iv.contains(t).then_some(iv)
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}-{}", iv.start, iv.end);
        }
        out
    }
}

impl TryFrom<Vec<(f64, f64)>> for AvailabilityTrace {
    type Error = Error;

    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        AvailabilityTrace::new(pairs)
    }
}

impl From<AvailabilityTrace> for Vec<(f64, f64)> {
    fn from(trace: AvailabilityTrace) -> Self {
        trace.intervals.iter().map(|iv| (iv.start, iv.end)).collect()
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("normalized time {t} outside [0, 1]")))
    }
}

/// Generates alternating up/down periods whose up-time totals exactly `ratio`.
///
/// Period lengths are exponential (up periods with mean `mean_interval`,
/// down periods scaled to match the ratio) and then rescaled per state so the
/// timeline is filled exactly.
pub fn synth_availability<R: Rng + ?Sized>(ratio: f64, mean_interval: f64, rng: &mut R) -> Result<AvailabilityTrace> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Domain(format!("availability ratio {ratio} outside (0, 1]")));
    }
    if !(mean_interval > 0.0 && mean_interval <= 1.0) {
        return Err(Error::Domain(format!("mean interval {mean_interval} outside (0, 1]")));
    }
    if ratio == 1.0 {
        return Ok(AvailabilityTrace::always_on());
    }

    let up_dist = Exp::new(1.0 / mean_interval).expect("positive rate");
    let down_mean = mean_interval * (1.0 - ratio) / ratio;
    let down_dist = Exp::new(1.0 / down_mean).expect("positive rate");

    let mut up = rng.random_bool(ratio);
    let mut periods: Vec<(bool, f64)> = Vec::new();
    let mut total = 0.0;
    while total < 1.0 {
        let len = if up { up_dist.sample(rng) } else { down_dist.sample(rng) };
        periods.push((up, len));
        total += len;
        up = !up;
    }
    // both states must appear for the rescale to hit the ratio exactly
    if !periods.iter().any(|p| p.0) {
        periods.push((true, up_dist.sample(rng)));
    }
    if !periods.iter().any(|p| !p.0) {
        periods.push((false, down_dist.sample(rng)));
    }

    let up_total: f64 = periods.iter().filter(|p| p.0).map(|p| p.1).sum();
    let down_total: f64 = periods.iter().filter(|p| !p.0).map(|p| p.1).sum();
    let (up_scale, down_scale) = (ratio / up_total, (1.0 - ratio) / down_total);

    let mut pairs = Vec::new();
    let mut cursor = 0.0;
    let last = periods.len() - 1;
    for (i, (is_up, len)) in periods.into_iter().enumerate() {
        let scaled = if is_up { len * up_scale } else { len * down_scale };
        let end = if i == last { 1.0 } else { (cursor + scaled).min(1.0) };
        if is_up && end > cursor {
            pairs.push((cursor, end));
        }
        cursor = end;
    }
    AvailabilityTrace::new(pairs)
}

/// Availability traces keyed by trace id.
///
/// Text format: one trace per line, `id: s1-e1, s2-e2, ...`, with blank
/// lines and `#` comments ignored. An id with nothing after the colon is a
/// node that is never available.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceStore {
    traces: BTreeMap<u32, AvailabilityTrace>,
}

impl TraceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: u32, trace: AvailabilityTrace) -> Option<AvailabilityTrace> {
        self.traces.insert(id, trace)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&AvailabilityTrace> {
        self.traces.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &AvailabilityTrace)> {
        self.traces.iter().map(|(k, v)| (*k, v))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut store = TraceStore::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let row_err = |message: String| Error::Row {
                path: source.to_string(),
                line,
                message,
            };
            let (id, rest) = content
                .split_once(':')
                .ok_or_else(|| row_err("expected `node_id: start-end, ...`".into()))?;
            let id: u32 = id
                .trim()
                .parse()
                .map_err(|_| row_err(format!("invalid node id `{}`", id.trim())))?;
            let mut pairs = Vec::new();
            for span in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (s, e) = span
                    .split_once('-')
                    .ok_or_else(|| row_err(format!("interval `{span}` is not `start-end`")))?;
                let s: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| row_err(format!("bad start in `{span}`")))?;
                let e: f64 = e.trim().parse().map_err(|_| row_err(format!("bad end in `{span}`")))?;
                pairs.push((s, e));
            }
            let trace = AvailabilityTrace::new(pairs).map_err(|e| row_err(e.to_string()))?;
            if store.insert(id, trace).is_some() {
                return Err(row_err(format!("duplicate node id {id}")));
            }
        }
        Ok(store)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (id, trace) in &self.traces {
            let _ = writeln!(out, "{id}: {}", trace.render());
        }
        out
    }

    /// `count` synthetic traces with per-trace ratios drawn uniformly from
    /// `[ratio_lo, ratio_hi]`.
    pub fn synthetic<R: Rng + ?Sized>(
        count: usize,
        ratio_lo: f64,
        ratio_hi: f64,
        mean_interval: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if ratio_lo > ratio_hi {
            return Err(Error::Domain(format!("empty ratio range {ratio_lo}..{ratio_hi}")));
        }
        let mut store = TraceStore::new();
        for id in 0..count {
            let ratio = if ratio_lo == ratio_hi {
                ratio_lo
            } else {
                rng.random_range(ratio_lo..=ratio_hi)
            };
            store.insert(id as u32, synth_availability(ratio, mean_interval, rng)?);
        }
        Ok(store)
    }
}
