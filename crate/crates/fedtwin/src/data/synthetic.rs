//! Seeded synthetic-epidemic generator for desk-scale experiments.
//!
//! Every client follows a multiplicative daily-growth process whose drift
//! is suppressed while response plans are active:
//!
//! ```text
//! c[t+1] = c[t] * exp(g - sum_k e_k * a[k][t]) * (1 + eta[t])
//! ```
//!
//! The plan effects `e_k` are shared across all clients while the base
//! growth `g` is drawn per client, so clients obey the same plan dynamics
//! but trace different curves — the regime where pooling parameter updates
//! across clients should pay off.

use chrono::{Days, NaiveDate};

use crate::data::ingest::{DailyRecord, PlanInterval};
use crate::data::pipeline::{build_samples, ClientDataset, PipelineOptions, PlanCatalog};
use crate::error::{Error, Result};
use crate::numerics::{SplitMix64, XorShift64};

/// All synthetic series start on the same calendar day.
pub const SYNTH_EPOCH: (i32, u32, u32) = (2020, 3, 1);

/// Generator overrides used by targeted experiments.
#[derive(Debug, Clone, Default)]
pub struct SyntheticOptions {
    /// Fixed plan-effect coefficients instead of seeded draws from
    /// `[0.01, 0.08]`. Length must equal the catalog size.
    pub effect_override: Option<Vec<f64>>,
}

/// Core recurrence, exposed so tests can drive it with explicit schedules
/// and noise. `schedule[k][t]` is the activity of plan `k` on day `t`;
/// `noise` holds one multiplicative jitter per transition (`days - 1`
/// entries).
pub fn synth_trajectory(
    c0: f64,
    growth: f64,
    effects: &[f64],
    schedule: &[Vec<bool>],
    noise: &[f64],
) -> Vec<f64> {
    assert_eq!(schedule.len(), effects.len(), "one schedule row per effect");
    let days = noise.len() + 1;
    let mut counts = Vec::with_capacity(days);
    counts.push(c0);
    for t in 0..noise.len() {
        let mut drift = growth;
        for (e, row) in effects.iter().zip(schedule) {
            if row[t] {
                drift -= e;
            }
        }
        let next = counts[t] * drift.exp() * (1.0 + noise[t]);
        counts.push(next.max(0.0));
    }
    counts
}

/// Deterministically generates `n_clients` client datasets with shared plan
/// effects, per-client growth and plan schedules, and a fixed start date.
/// A given `(seed, days, catalog)` always produces the same client `i`
/// regardless of `n_clients`, which is what keeps the probe client of the
/// scaling sweep fixed across runs.
pub fn gen_synthetic(
    n_clients: usize,
    days: usize,
    catalog: &PlanCatalog,
    seed: u64,
) -> Result<Vec<ClientDataset>> {
    gen_synthetic_with(n_clients, days, catalog, seed, &SyntheticOptions::default())
}

pub fn gen_synthetic_with(
    n_clients: usize,
    days: usize,
    catalog: &PlanCatalog,
    seed: u64,
    options: &SyntheticOptions,
) -> Result<Vec<ClientDataset>> {
    if days < 21 {
        return Err(Error::config(format!(
            "days: need at least 21 days to emit a sample, got {days}"
        )));
    }
    if n_clients == 0 {
        return Err(Error::config("n_clients: must be >= 1".to_string()));
    }

    let k = catalog.len();
    let mut master = SplitMix64::new(seed);

    let effects: Vec<f64> = match &options.effect_override {
        Some(e) => {
            if e.len() != k {
                return Err(Error::config(format!(
                    "effect_override: {} effects for {k} plan channels",
                    e.len()
                )));
            }
            // Consume the draw either way so overriding effects does not
            // shift the per-client seed stream.
            master.next_u64();
            e.clone()
        }
        None => {
            let mut rng = XorShift64::new(master.next_u64());
            (0..k).map(|_| rng.uniform(0.01, 0.08)).collect()
        }
    };

    let epoch = NaiveDate::from_ymd_opt(SYNTH_EPOCH.0, SYNTH_EPOCH.1, SYNTH_EPOCH.2)
        .expect("valid epoch date");

    let mut datasets = Vec::with_capacity(n_clients);
    for i in 0..n_clients {
        let mut rng = XorShift64::new(master.next_u64());
        let region = format!("synth-{i:02}");

        let c0 = rng.uniform(20.0, 100.0);
        let growth = rng.uniform(0.02, 0.12);

        // Random activation intervals per plan channel.
        let mut schedule: Vec<Vec<bool>> = vec![vec![false; days]; k];
        let mut intervals = Vec::new();
        for (channel, row) in schedule.iter_mut().enumerate() {
            let mut t = 0usize;
            loop {
                let gap = 5 + rng.below(21); // 5..=25 idle days
                let start = t + gap;
                if start >= days {
                    break;
                }
                let len = 10 + rng.below(21); // 10..=30 active days
                let end = (start + len - 1).min(days - 1);
                for day in row.iter_mut().take(end + 1).skip(start) {
                    *day = true;
                }
                intervals.push(PlanInterval {
                    region: region.clone(),
                    plan_name: catalog.names()[channel].clone(),
                    start: epoch + Days::new(start as u64),
                    end: Some(epoch + Days::new(end as u64)),
                });
                t = end + 1;
            }
        }

        let noise: Vec<f64> = (0..days - 1).map(|_| rng.uniform(-0.02, 0.02)).collect();
        let counts = synth_trajectory(c0, growth, &effects, &schedule, &noise);

        let records: Vec<DailyRecord> = counts
            .iter()
            .enumerate()
            .map(|(t, &c)| DailyRecord {
                region: region.clone(),
                date: epoch + Days::new(t as u64),
                confirmed: c.round() as u64,
            })
            .collect();

        datasets.push(build_samples(
            &records,
            &intervals,
            catalog,
            &PipelineOptions::default(),
        )?);
    }
    Ok(datasets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_datasets() {
        let catalog = PlanCatalog::default_catalog();
        let a = gen_synthetic(3, 40, &catalog, 42).unwrap();
        let b = gen_synthetic(3, 40, &catalog, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(3, 40, &catalog, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn client_count_matches() {
        let catalog = PlanCatalog::default_catalog();
        let ds = gen_synthetic(5, 30, &catalog, 7).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds[0].region, "synth-00");
        assert_eq!(ds[4].region, "synth-04");
    }

    #[test]
    fn clients_are_stable_across_n_clients() {
        let catalog = PlanCatalog::default_catalog();
        let two = gen_synthetic(2, 40, &catalog, 11).unwrap();
        let eight = gen_synthetic(8, 40, &catalog, 11).unwrap();
        assert_eq!(two[0], eight[0]);
        assert_eq!(two[1], eight[1]);
    }

    #[test]
    fn too_few_days_is_an_input_error() {
        let catalog = PlanCatalog::default_catalog();
        assert!(gen_synthetic(2, 20, &catalog, 1).is_err());
    }

    #[test]
    fn active_plan_suppresses_the_trajectory_pointwise() {
        // Identical noise, one strongly suppressive plan: always-active must
        // sit at or below never-active on every day.
        let days = 60;
        let mut rng = XorShift64::new(5);
        let noise: Vec<f64> = (0..days - 1).map(|_| rng.uniform(-0.02, 0.02)).collect();
        let effects = [0.3];
        let on = synth_trajectory(50.0, 0.08, &effects, &[vec![true; days]], &noise);
        let off = synth_trajectory(50.0, 0.08, &effects, &[vec![false; days]], &noise);
        for (a, b) in on.iter().zip(&off) {
            assert!(a <= b, "active {a} > inactive {b}");
        }
        // And strictly below once the plan has had any time to act.
        assert!(on[10] < off[10]);
    }
}
