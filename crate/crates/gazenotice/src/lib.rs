//! File formats, pipelines and the command-line front end for the
//! `gazenotice-core` analytics.
//!
//! Sessions are stored as JSON Lines: a header line followed by one trial
//! per line. Models, selections and reports are JSON or CSV. Every command
//! of the CLI is a thin wrapper over the functions in [`pipeline`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
pub use gazenotice_core as core;
