//! Core of the declarative robot platform: the LogiCore language, its
//! evaluator and the simulated world. `no_std`, needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod engine;
pub mod geometry;
pub mod rulelang;
pub mod simcore;
pub mod value;

pub use value::{Record, Value};
