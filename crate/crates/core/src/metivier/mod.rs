//! Non-elliptic operators, the cut-off, the vector `u` and its iterates.
pub mod bump;
pub mod evaluate;
pub mod verify;
pub mod instance;
pub mod terms;
pub mod operator;
pub mod poly;
pub use bump::{BumpFit, BumpFunction};
pub use instance::{select_parameters, InstanceOptions, MetivierInstance, Regime, RegimeRequest};
pub use operator::{DiffOperator, NonEllipticPoint, SearchBox, ShrinkingReport};
pub use poly::Poly;
pub use terms::{IterateExpansion, IterateTermSum, TermKey};
