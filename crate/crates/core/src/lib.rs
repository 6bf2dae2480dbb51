//! Inductive social-relation graphs over comment authors, a relational graph
//! autoencoder pretrained on them, and a classifier that fuses the learned
//! relation features with text features to label replies as agree, disagree
//! or neutral.

pub mod autoenc;
pub mod cli;
pub mod classifier;
pub mod config;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod ingest;
pub mod optim;
pub mod protocol;
pub mod pipeline;
pub mod relgraph;
pub mod synth;
pub mod textfeat;

pub use error::{Error, Result};
