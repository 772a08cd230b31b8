//! Block-recursive dense matrix algorithms and a deterministic simulator of
//! a decentralized drop/amine runtime that executes them on a cluster.
//!
//! * [`matrix`] and [`scalar`]: dense matrices over `f64` or exact rationals.
//! * [`kernels`]: recursive multiply, Strassen multiply, triangular inverse,
//!   Cholesky and Strassen inversion, all instrumented with [`OpCounter`].
//! * [`qr`]: Givens rotations, sequential QR, QP parallelogram cancellation
//!   and the three-stage recursive QR_G, plus its cost model.
//! * [`runtime`]: drops, Amines and the per-node state machines.
//! * [`sim`]: a deterministic discrete-event cluster that runs them, with
//!   failure injection and trace replay.

pub mod error;
pub mod gen;
pub mod kernels;
pub mod matrix;
pub mod oracle;
pub mod par;
pub mod qr;
pub mod runtime;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use kernels::{KernelConfig, MultiplyAlgo, OpCounter};
pub use matrix::{Matrix, PaddingScheme, Quadrants};
pub use scalar::{Scalar, ScalarKind};
