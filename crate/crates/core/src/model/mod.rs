//! Feed-forward networks and the two-stage diagnosis model.

mod hier;
mod mlp;

pub use hier::{predict_hier, HierClassifier, HierModel, MODEL_FORMAT_VERSION};
pub use mlp::{argmax, loss_ce, sgd_step, Gradients, Layer, MlpParams, MlpSpec, PROB_FLOOR};
