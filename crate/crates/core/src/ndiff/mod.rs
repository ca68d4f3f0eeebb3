//! Dense tensors with define-by-run reverse-mode differentiation.
//!
//! A [`Graph`] is rebuilt for every forward pass. Leaves are bound from plain
//! [`Tensor`] values, operations append nodes, and [`Graph::backward`] walks
//! the nodes in reverse creation order. Every tensor is viewed as a row-major
//! matrix whose column count is the last extent; row-wise operations
//! (linear, layer norm, softmax, activation) act on that last axis.

mod gradcheck;
mod graph;
pub mod kernels;
mod optim;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{Graph, Reduction, Var};
pub use optim::{Adam, AdamConfig};
pub use tensor::Tensor;
