//! Trainable document image binarization.
//!
//! Pixels are described by a 142-channel feature vector (intensity, local statistics,
//! contrast, Laplacian, reformulated Niblack/Sauvola indices, intensity percentiles,
//! local ternary pattern statistics and global image statistics) and classified by an
//! extremely randomized trees ensemble trained on subclass-balanced samples.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod fsutil;
pub mod image;
pub mod integral;
pub mod learner;
pub mod metrics;
pub mod sampler;
pub mod seeding;
pub mod synth;
pub mod thresholders;
pub mod window;

pub use error::{Error, Result};
pub use image::{GrayImage, LabelImage, Polarity};
