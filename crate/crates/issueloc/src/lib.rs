//! Git access, file formats, statistics and the command pipeline around
//! `issueloc-core`.

pub mod analysis;
pub mod config;
pub mod formats;
pub mod git;
pub mod pipeline;

pub use issueloc_core as core;
