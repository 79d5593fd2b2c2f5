//! Ship silhouette identification on top of `ccss-core`: mask I/O, model
//! databases, rendering, evaluation and an HTTP query service.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod database;
pub mod describe;
pub mod error;
pub mod eval;
pub mod format;
pub mod io;
pub mod options;
pub mod render;
pub mod service;
pub mod synth;

pub use database::{Database, DatabaseBuilder, ModelMeta, ModelRecord, QueryParams};
pub use describe::DescribeParams;
pub use error::{Error, Result};
