//! Quantum circuit Born machines for one-dimensional numerical data.
//!
//! A circuit over `n` qubits defines a distribution over `n`-bit strings.
//! A [`codes::BinaryCode`] maps those strings onto `2^n` ordered
//! representatives of `[-1, 1]`, and training minimizes a kernel MMD^2
//! between the mapped model and a dataset.

pub mod codes;
pub mod data;
pub mod error;
pub mod mmd;
pub mod seed;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
