//! Gain surrogate: an MLP from mission context `(x₀, w, x_f)` to expected
//! cost, gains and transient duration, trained with Adam on tuner datasets.

mod mlp;
mod model;

pub use mlp::{train_network, write_loss_history, Layer, Mlp, TrainConfig};
pub use model::{output_range, Explanation, SurrogateModel, SurrogatePlan, DEFAULT_HIDDEN, IN_DISTRIBUTION_Z};
