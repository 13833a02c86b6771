//! Sparse nonnegative convolution with a dense convolution engine underneath.

pub mod dense_conv;
pub mod hashing;
pub mod instances;
pub mod numeric;
pub mod par;
pub mod pipeline;
pub mod vandermonde;
pub mod vectors;
pub mod verify;
