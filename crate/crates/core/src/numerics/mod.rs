//! Dense `f64` tensors with reverse-mode differentiation, the Adam optimizer
//! and binary checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod params;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use params::{BoundParams, Gradients, ParamId, ParamStore};
pub use rng::SeedRng;
pub use tape::{Tape, Var};
pub use tensor::Tensor;
