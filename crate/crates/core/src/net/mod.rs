//! Small fully-connected classifiers with a reverse-mode tape.

mod checkpoint;
mod mlp;
mod tape;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use mlp::{init_params, loss_and_gradient, Activation, InitRule, MlpOracle, MlpSpec};
pub use tape::Tape;
