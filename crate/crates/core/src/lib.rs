#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod bundle;
pub mod data;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod floats;
pub mod generate;
pub mod latent;
pub mod linalg;
pub mod optim;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
