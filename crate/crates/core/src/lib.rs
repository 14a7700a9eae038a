//! Core algorithms for localising the source files an issue will touch:
//! commit-graph link refinement, dataset labelling, text normalisation,
//! retrieval models and ranking metrics. Needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod eval;
pub mod graph;
pub mod links;
pub mod retrieval;
pub mod text;
