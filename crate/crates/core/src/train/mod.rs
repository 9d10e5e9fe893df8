//! Losses, optimizer, metrics and the training loop.

pub mod adam;
pub mod fit;
pub mod loss;
pub mod metrics;

pub use adam::{AdamConfig, AdamState};
pub use fit::{
    evaluate, fit, fit_with, predict_all, BatchSize, EpochRecord, FitResult, History, Samples,
    Targets, TrainConfig,
};
pub use loss::{cross_entropy_loss, mse_loss, softmax, Loss};
pub use metrics::{accuracy, argmax, gradient_variance, r2_score};
