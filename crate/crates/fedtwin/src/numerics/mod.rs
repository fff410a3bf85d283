//! Minimal dense-tensor kernel: deterministic 64-bit arithmetic, elementwise
//! activations, matrix products, a plain SGD update, seeded initialization,
//! and a finite-difference gradient oracle.
//!
//! Everything here is pure or mutates only its explicit receiver, so
//! independent instances can run on separate threads freely.

mod gradcheck;
mod param_store;
mod rng;
mod tensor;

pub use gradcheck::{gradcheck_error, numeric_gradient};
pub use param_store::{sgd_step, ParamEntry, ParamId, ParamStore, ParamValues};
pub use rng::{seeded_init, InitScheme, SplitMix64, XorShift64};
pub use tensor::{
    col_acc, matmul, matvec, matvec_transpose_acc, outer_acc, sigmoid, sigmoid_scalar, tanh_act,
    Tensor,
};
