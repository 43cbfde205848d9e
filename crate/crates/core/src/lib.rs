//! Toolkit for music source restoration: stem degradation, training-pair
//! and benchmark generation, SI-SDR and mel-SSIM evaluation, and dataset
//! statistics and splitting.

pub mod audio;
pub mod filters;
pub mod effects;
pub mod metrics;
pub mod codec;
pub mod dataset;
pub mod degrade;
pub mod cli;
