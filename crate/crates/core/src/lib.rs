//! Contrastive learning for cold-start recommendation.
//!
//! Users and items get collaborative embeddings z from an ID-embedding
//! encoder (matrix factorization or LightGCN); items additionally get a
//! feature representation f from an MLP over their content vector. Training
//! maximizes two contrastive objectives: user–item agreement of z (U-I) and
//! agreement between each item's z and its own f (R-E). With hybrid training,
//! f randomly stands in for z in the U-I term, so that cold items, which have
//! no interactions, can be ranked through f alone.
//!
//! Module map:
//! - [`corpus`]: interaction/feature files, warm/cold splits, negative sampling, synthetic data
//! - [`model`]: parameters, CF encoders, feature encoder, snapshots
//! - [`objective`]: density ratios, losses, gradients
//! - [`optim`]: Adam, the training loop, finite-difference checks
//! - [`eval`]: full-ranking recall@K / NDCG@K
//! - [`config`] and [`cli`]: configuration files and the command-line frontend

pub mod cli;
pub mod config;
pub mod corpus;
mod error;
pub mod eval;
pub mod model;
pub mod objective;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
