//! Trainable parameters, the collaborative encoders (MF, LightGCN) and the
//! MLP feature encoder.

mod encoder;
mod feature;
mod params;
pub mod snapshot;

pub use encoder::{collaborative, encode_lightgcn, encode_mf, EncoderKind, GraphAdjacency};
pub use feature::{encode_feature, leaky_relu, FeatureActivation, MlpGrads, LEAKY_SLOPE};
pub(crate) use feature::{feature_backward, feature_forward};
pub use params::{xavier_bound, xavier_init, ModelDims, ParameterSet, TENSOR_NAMES};
