//! Transferability estimation for pre-trained model selection.
//!
//! Given a feature matrix extracted by a candidate pre-trained model on a
//! target dataset, together with the target labels, this crate computes
//! scores that predict how well the model will transfer after fine-tuning.
//! The primary score is the coding-rate difference (`coding::transrate`);
//! several established baselines (LEEP, NCE, H-score, LogME, label-feature
//! correlation) live in [`baselines`], and [`metrics`] evaluates how well any
//! score ranks a zoo of models against observed fine-tuned accuracy.
//!
//! All numeric entry points are deterministic: identical inputs produce
//! bit-identical outputs regardless of thread count, because every
//! floating-point accumulation runs in a pinned order.

pub mod baselines;
pub mod coding;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod synth;

pub use coding::{ClassWeighting, LabelVector, ScoreConfig, TransferScore};
pub use linalg::{FeatureMatrix, SidePolicy};
