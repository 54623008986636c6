//! Weight sequences, associated weights, flat kernels and the construction of
//! ultradifferentiable vectors of non-elliptic operators that are not
//! ultradifferentiable functions.

pub mod assocweight;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod metivier;
pub mod numerics;
pub mod weightseq;

pub use error::{Error, Result};
pub use weightseq::WeightSequence;
