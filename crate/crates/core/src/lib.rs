//! Dynamic-programming kernels and a cycle/energy model of a processing-in-memory
//! accelerator built on monolithic 3D DRAM with tiered wordline latency.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration parsing and
//! the command line live in the `dpim` crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod align;
pub mod apsp;
pub mod engine;
mod error;
pub mod memmodel;
pub mod seed;
pub mod semiring;
mod util;

pub use error::{Error, Result};
