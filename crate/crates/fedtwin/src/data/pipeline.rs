//! From raw records to model-ready samples: gap filling, smoothing,
//! plan-vector encoding, normalization, and windowing.

use chrono::{Days, NaiveDate};

use crate::data::ingest::{DailyRecord, PlanInterval};
use crate::error::{Error, Result};
use crate::model::Sample;
use crate::numerics::Tensor;

/// Ordered list of plan names; position defines the vector coordinate.
/// All clients of one experiment must share the same catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanCatalog {
    names: Vec<String>,
}

/// Default response-operation channels.
pub const DEFAULT_PLANS: [&str; 6] = [
    "domestic-travel-limitations",
    "gatherings-limits",
    "stay-at-home",
    "nonessential-business-closures",
    "reopening-plans",
    "statewide-mask-policy",
];

impl PlanCatalog {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::config("plans: catalog must not be empty".to_string()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::config(format!("plans: duplicate plan name '{n}'")));
            }
        }
        Ok(PlanCatalog { names })
    }

    pub fn default_catalog() -> Self {
        PlanCatalog {
            names: DEFAULT_PLANS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Trailing moving average with a partial window at the left edge:
/// `output[t] = mean(series[max(0, t-window+1) ..= t])`. Output length
/// equals input length.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("window: must be >= 1".to_string()));
    }
    let mut out = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let lo = (t + 1).saturating_sub(window);
        let slice = &series[lo..=t];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    Ok(out)
}

/// Binary plan vector for one date: coordinate `k` is 1 iff some interval
/// named `catalog[k]` covers the date (boundaries inclusive). Several plans
/// may be active at once. An interval naming a plan outside the catalog is
/// a configuration error.
pub fn encode_plan_vector(
    date: NaiveDate,
    intervals: &[PlanInterval],
    catalog: &PlanCatalog,
) -> Result<Vec<f64>> {
    let mut v = vec![0.0; catalog.len()];
    for interval in intervals {
        let k = catalog.index_of(&interval.plan_name).ok_or_else(|| {
            Error::config(format!(
                "plan '{}' is not in the catalog {:?}",
                interval.plan_name,
                catalog.names()
            ))
        })?;
        if interval.contains(date) {
            v[k] = 1.0;
        }
    }
    Ok(v)
}

/// Min-max scaler captured during normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub min: f64,
    pub max: f64,
}

impl Scaler {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }
}

/// Min-max normalization into `[0, 1]`. A constant series maps to all
/// zeros with scaler `(min, min + 1)` so the transform stays invertible.
pub fn normalize(series: &[f64]) -> (Vec<f64>, Scaler) {
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if series.is_empty() || min == max {
        let min = if series.is_empty() { 0.0 } else { min };
        let scaler = Scaler { min, max: min + 1.0 };
        return (vec![0.0; series.len()], scaler);
    }
    let scaler = Scaler { min, max };
    (series.iter().map(|&v| scaler.apply(v)).collect(), scaler)
}

/// One client's model-ready data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub region: String,
    pub samples: Vec<Sample>,
    pub scaler: Scaler,
}

impl ClientDataset {
    /// Sample count `m`; this exact value is what the client reports for
    /// aggregation weighting.
    pub fn m(&self) -> usize {
        self.samples.len()
    }
}

/// Pipeline switches.
#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    /// Treat the confirmed column as cumulative totals and difference it
    /// into daily new cases first (negative corrections clamp to zero).
    pub cumulative: bool,
}

/// Gap-filled daily series for one region: contiguous dates with linearly
/// interpolated counts where days were missing.
fn gap_fill(records: &[DailyRecord]) -> Vec<(NaiveDate, f64)> {
    let mut out = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if i > 0 {
            let prev = &records[i - 1];
            let gap = (rec.date - prev.date).num_days();
            for step in 1..gap {
                let date = prev.date + Days::new(step as u64);
                let frac = step as f64 / gap as f64;
                let value =
                    prev.confirmed as f64 + frac * (rec.confirmed as f64 - prev.confirmed as f64);
                out.push((date, value));
            }
        }
        out.push((rec.date, rec.confirmed as f64));
    }
    out
}

/// Builds one client's dataset from its daily records and plan intervals:
/// gap-fill, difference if cumulative, smooth with a 7-day trailing moving
/// average, min-max normalize, then window every position with 13 days of
/// history behind it and 7 days ahead of it into a [`Sample`].
///
/// Fewer than 21 days of span yields an empty dataset with a warning.
pub fn build_samples(
    records: &[DailyRecord],
    intervals: &[PlanInterval],
    catalog: &PlanCatalog,
    options: &PipelineOptions,
) -> Result<ClientDataset> {
    const HISTORY: usize = 14;
    const HORIZON: usize = 7;

    if records.is_empty() {
        log::warn!("build_samples: no records, emitting empty dataset");
        return Ok(ClientDataset {
            region: String::new(),
            samples: Vec::new(),
            scaler: Scaler { min: 0.0, max: 1.0 },
        });
    }
    let region = records[0].region.clone();
    if records.iter().any(|r| r.region != region) {
        return Err(Error::data(
            None,
            "build_samples: records span multiple regions; split per region first",
        ));
    }
    for w in records.windows(2) {
        if w[1].date <= w[0].date {
            return Err(Error::data(
                None,
                "build_samples: records must be sorted by date with unique dates",
            ));
        }
    }
    let intervals: Vec<PlanInterval> = intervals
        .iter()
        .filter(|iv| iv.region == region)
        .cloned()
        .collect();

    let daily = gap_fill(records);
    let mut values: Vec<f64> = daily.iter().map(|(_, v)| *v).collect();
    if options.cumulative {
        // Differenced cumulative totals; corrections can dip below zero and
        // are clamped.
        let mut prev = 0.0;
        for v in values.iter_mut() {
            let daily_new = (*v - prev).max(0.0);
            prev = *v;
            *v = daily_new;
        }
    }

    let days = values.len();
    if days < HISTORY + HORIZON {
        log::warn!(
            "build_samples({region}): {days} days of data, need at least {}; emitting empty dataset",
            HISTORY + HORIZON
        );
        return Ok(ClientDataset {
            region,
            samples: Vec::new(),
            scaler: Scaler { min: 0.0, max: 1.0 },
        });
    }

    let smoothed = moving_average(&values, 7)?;
    let (normalized, scaler) = normalize(&smoothed);
    let plan_vectors: Vec<Vec<f64>> = daily
        .iter()
        .map(|(date, _)| encode_plan_vector(*date, &intervals, catalog))
        .collect::<Result<_>>()?;

    let k = catalog.len();
    let mut samples = Vec::new();
    // t is the last history day: needs 13 days before and 7 after.
    for t in (HISTORY - 1)..(days - HORIZON) {
        let mut history = Vec::with_capacity(HISTORY * (1 + k));
        for day in (t + 1 - HISTORY)..=t {
            history.push(normalized[day]);
            history.extend_from_slice(&plan_vectors[day]);
        }
        let mut plans = Vec::with_capacity(HORIZON * k);
        let mut targets = Vec::with_capacity(HORIZON);
        for day in (t + 1)..=(t + HORIZON) {
            plans.extend_from_slice(&plan_vectors[day]);
            targets.push(normalized[day]);
        }
        samples.push(Sample {
            history: Tensor::from_vec(HISTORY, 1 + k, history)?,
            future_plans: Tensor::from_vec(HORIZON, k, plans)?,
            targets,
        });
    }

    Ok(ClientDataset {
        region,
        samples,
        scaler,
    })
}

/// Chronological split: the last `ceil(test_fraction * m)` samples form the
/// test set, so no test window starts before a training window.
pub fn train_test_split(
    dataset: &ClientDataset,
    test_fraction: f64,
) -> Result<(ClientDataset, ClientDataset)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::config(format!(
            "test_fraction: must be in [0, 1], got {test_fraction}"
        )));
    }
    let m = dataset.samples.len();
    let n_test = ((test_fraction * m as f64).ceil() as usize).min(m);
    let split = m - n_test;
    let train = ClientDataset {
        region: dataset.region.clone(),
        samples: dataset.samples[..split].to_vec(),
        scaler: dataset.scaler,
    };
    let test = ClientDataset {
        region: dataset.region.clone(),
        samples: dataset.samples[split..].to_vec(),
        scaler: dataset.scaler,
    };
    Ok((train, test))
}
