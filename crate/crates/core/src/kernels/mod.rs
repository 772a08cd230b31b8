//! Block-recursive rational-class kernels: multiply (standard and
//! Strassen), lower-triangular inverse, Cholesky and Strassen inversion.
//!
//! Every kernel recurses on quadrants while the operand order exceeds
//! `KernelConfig::leaf_size` and switches to a plain sequential algorithm
//! at or below it.

mod cholesky;
mod inverse;
mod multiply;
mod triangular;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use cholesky::cholesky;
pub use inverse::inv_strassen;
pub use multiply::{mul_accum_recursive, mul_neg, mul_strassen, multiply};
pub use triangular::inv_lower_triangular;

pub(crate) use cholesky::recurse as cholesky_block;
pub(crate) use inverse::{recurse as inv_strassen_block, Position};
pub(crate) use triangular::recurse as inv_lower_block;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplyAlgo {
    Standard,
    Strassen,
}

/// Rational direct (MA1) vs irrational direct (MA2) algorithm class.
/// Metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgoClass {
    MA1,
    MA2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Order at or below which the sequential leaf algorithms run.
    pub leaf_size: usize,
    pub multiply_algo: MultiplyAlgo,
    pub class_tag: AlgoClass,
    /// Fork independent sub-problems onto the rayon pool. Ignored when the
    /// crate is built without the `parallel` feature.
    pub parallel: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            leaf_size: 16,
            multiply_algo: MultiplyAlgo::Standard,
            class_tag: AlgoClass::MA1,
            parallel: true,
        }
    }
}

impl KernelConfig {
    pub fn with_leaf(leaf_size: usize) -> Self {
        KernelConfig { leaf_size, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.leaf_size == 0 || !self.leaf_size.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "leaf_size {} is not a power of two",
                self.leaf_size
            )));
        }
        Ok(())
    }

    pub(crate) fn fork(&self, order: usize) -> bool {
        self.parallel && order > self.leaf_size
    }
}

/// Operation counts of one computation. Scalar counts are taken at the
/// leaves; `block_mul_calls` maps a block order to the number of block
/// multiplications invoked at that order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub mul_count: u64,
    pub addsub_count: u64,
    pub div_count: u64,
    pub sqrt_count: u64,
    pub block_mul_calls: BTreeMap<usize, u64>,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_block_mul(&mut self, order: usize) {
        *self.block_mul_calls.entry(order).or_insert(0) += 1;
    }

    pub fn block_muls_at(&self, order: usize) -> u64 {
        self.block_mul_calls.get(&order).copied().unwrap_or(0)
    }

    pub fn total_block_muls(&self) -> u64 {
        self.block_mul_calls.values().sum()
    }

    pub fn scalar_ops(&self) -> u64 {
        self.mul_count + self.addsub_count + self.div_count + self.sqrt_count
    }

    pub fn merge(&mut self, other: &OpCounter) {
        self.mul_count += other.mul_count;
        self.addsub_count += other.addsub_count;
        self.div_count += other.div_count;
        self.sqrt_count += other.sqrt_count;
        for (&order, &n) in &other.block_mul_calls {
            *self.block_mul_calls.entry(order).or_insert(0) += n;
        }
    }
}

pub(crate) fn require_square_pow2(m: &Matrix, what: &str) -> Result<usize> {
    if !m.is_square() || !m.rows().is_power_of_two() {
        return Err(Error::InvalidShape(format!(
            "{what}: expected a square power-of-two order, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.rows())
}
