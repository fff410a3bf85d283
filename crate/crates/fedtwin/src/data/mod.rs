//! Data pipeline: ingest daily case counts and response-plan intervals,
//! join them per region, smooth, normalize, window into samples, and
//! generate seeded synthetic epidemics for desk-scale experiments.

mod ingest;
mod pipeline;
mod synthetic;

pub use ingest::{ingest_actions, ingest_cases, DailyRecord, PlanInterval};
pub use pipeline::{
    build_samples, encode_plan_vector, moving_average, normalize, train_test_split,
    ClientDataset, PipelineOptions, PlanCatalog, Scaler, DEFAULT_PLANS,
};
pub use synthetic::{
    gen_synthetic, gen_synthetic_with, synth_trajectory, SyntheticOptions, SYNTH_EPOCH,
};
