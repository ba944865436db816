//! Automated layered feature engineering for labeled 1-D sensor signals.

pub mod signal_io;
pub mod transforms;
pub mod feature_bank;
pub mod selection;
pub mod classifier;
pub mod baseline_pca;
pub mod synth;
pub mod pipeline;
