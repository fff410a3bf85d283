//! Collaborative epidemic-trend forecasting across city digital twins.
//!
//! A set of simulated "city digital twin" clients jointly train a GRU-based
//! sequence-to-sequence model that maps 14 days of infection history plus a
//! planned week of response operations to a 7-day infection forecast. No
//! client ever shares raw data: each trains locally and uploads parameters,
//! which a central server aggregates with sample-count-weighted averaging.
//!
//! Crate layout:
//!
//! - [`numerics`] — dense `f64` tensor kernel, seeded init, SGD, and a
//!   finite-difference gradient oracle.
//! - [`model`] — the GRU encoder/decoder forecaster with hand-derived
//!   backpropagation and mini-batch training.
//! - [`data`] — ingestion of daily-case and response-plan files, smoothing,
//!   normalization, windowing into samples, and a seeded synthetic generator.
//! - [`federation`] — the synchronous round protocol: distribute, train
//!   locally, aggregate, evaluate.
//! - [`transport`] — bit-exact parameter serialization, message framing, and
//!   the TCP server/client loops for running rounds across processes.

pub mod data;
pub mod error;
pub mod federation;
pub mod model;
pub mod numerics;
pub mod transport;

pub use error::{Error, Result};
