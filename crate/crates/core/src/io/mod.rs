//! Text formats read and written by the command-line front end: grid and
//! window specifications, run configuration files, CSV tables, SVG plots
//! and run manifests.
//!
//! Every parser here accepts untrusted text and reports failures as
//! [`ParseError`]; none of them panic.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod spec;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{what}: {detail}")]
    Invalid { what: &'static str, detail: String },
}

impl ParseError {
    pub(crate) fn new(what: &'static str, detail: impl Into<String>) -> Self {
        ParseError::Invalid { what, detail: detail.into() }
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
