//! Feed-forward tanh network for scenario classification.

mod mlp;
mod model_io;
mod train;

pub use mlp::{
    classify, complexity_count, forward, gradients, init_mlp, loss, output_argmax, Gradients,
    MlpParams,
};
pub use model_io::{load_model, read_model, save_model, write_model, ModelFile, MODEL_FORMAT_VERSION};
pub use train::{train, TrainConfig, TrainReport};

/// Hidden layer widths used when none are configured.
pub const DEFAULT_HIDDEN: [usize; 4] = [64, 48, 32, 24];
