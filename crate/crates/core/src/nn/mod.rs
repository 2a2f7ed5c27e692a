//! Layers, activations, initializers, losses and metrics for complex and
//! real value domains.

pub mod act;
pub mod batchnorm;
pub mod checkpoint;
pub mod dropout;
pub mod init;
pub mod layer;
pub mod loss;
pub mod metrics;
pub mod pool;
pub mod softmax;

pub use act::{crelu, type_a, type_b, RealFn};
pub use batchnorm::{complex_batchnorm, BnComplex, BnReal};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use dropout::dropout_complex;
pub use init::{he_complex_init, he_real_init};
pub use layer::{ActKind, BnState, ConvLayer, DenseLayer, Domain, Layer, NetForward, Network, SoftmaxMode};
pub use loss::{ace_loss, cce_loss, one_hot};
pub use metrics::{metrics, ConfusionMatrix, Metrics};
pub use pool::{avg_pool, max_pool_modulus, max_unpool};
pub use softmax::{prediction, prediction_real, softmax_output, softmax_output_real};
