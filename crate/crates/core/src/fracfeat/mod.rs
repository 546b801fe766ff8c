//! Dual fractional-order feature extraction.

mod features;
mod gamma;
mod normalize;
mod operators;

pub use features::{
    build_feature_channels, channel_stats, features_csv, summarize, summarize_series,
    FeatureChannels, FeatureExtractor, FeatureKind, FeatureSpec, FeatureVector, DEFAULT_WARMUP,
    FRAC_CHANNEL_NAMES, NUM_FRAC_CHANNELS, NUM_STATS, STAT_NAMES,
};
pub use gamma::gamma_fn;
pub use normalize::{apply_normalizer, fit_normalizer, Normalizer, STD_FLOOR};
pub use operators::{
    caputo_derivative, gl_derivative, gl_weights, l1_weights, FracConfig, FracOperators,
};
