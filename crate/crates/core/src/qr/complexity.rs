use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order-h block products issued by one level of the QP recursion: 8 to
/// carry the ld and lu rotations across the second block column and 20 to
/// assemble the explicit transform.
pub const QP_BLOCK_PRODUCTS_PER_LEVEL: u64 = 28;

/// Cost model `M(n) = γ·n^β` for one product of order-n matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityModel {
    pub gamma: f64,
    pub beta: f64,
}

impl ComplexityModel {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        let m = ComplexityModel { gamma, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta == 1.0 || self.beta == 2.0 {
            return Err(Error::ModelSingular(self.beta));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 || !(2.0..=3.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!(
                "need gamma > 0 and 2 < beta <= 3, got gamma = {}, beta = {}",
                self.gamma, self.beta
            )));
        }
        Ok(())
    }

    pub fn mul_cost(&self, n: f64) -> f64 {
        self.gamma * n.powf(self.beta)
    }

    fn check_n(&self, n: u64) -> Result<f64> {
        self.validate()?;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("n = {n} is not a power of two >= 2")));
        }
        Ok(n as f64)
    }

    fn two_beta(&self) -> f64 {
        2f64.powf(self.beta)
    }

    /// Coefficient of the quadratic term; it only fixes the base-case cost
    /// and drops out of both recurrences.
    fn quad_coeff(&self) -> f64 {
        1.5 * (1.0 - self.gamma / (self.two_beta() - 4.0))
    }

    /// Parallelogram cancellation cost for `n` rows, the solution of
    /// `Cp(2n) = 4·Cp(n) + 24·M(n/2)`:
    /// `Cp(n) = 24γn^β / (2^β(2^β−4)) + K·n²`.
    pub fn predicted_cp(&self, n: u64) -> Result<f64> {
        let n = self.check_n(n)?;
        let tb = self.two_beta();
        Ok(24.0 * self.gamma * n.powf(self.beta) / (tb * (tb - 4.0)) + self.quad_coeff() * n * n)
    }

    /// QR cost for order `n`, the solution of
    /// `C(n) = 2·C(n/2) + Cp(n) + 6·M(n/2)`:
    /// `C(n) = 6γ2^β(n^β − 2n/2^β) / ((2^β−4)(2^β−2)) + 2K(n² − n)`.
    pub fn predicted_c(&self, n: u64) -> Result<f64> {
        let n = self.check_n(n)?;
        let tb = self.two_beta();
        let a = 6.0 * self.gamma * tb / ((tb - 4.0) * (tb - 2.0));
        Ok(a * (n.powf(self.beta) - 2.0 * n / tb) + 2.0 * self.quad_coeff() * (n * n - n))
    }

    /// `6γn^β / (2^β(2^β−4)) + (3n²/2)(1 − γ/(2^β−4))`, the closed form as
    /// usually printed. It solves the recurrence with `6·M(n/2)` in place
    /// of `24·M(n/2)`.
    pub fn literal_cp(&self, n: u64) -> Result<f64> {
        let n = self.check_n(n)?;
        let tb = self.two_beta();
        Ok(6.0 * self.gamma * n.powf(self.beta) / (tb * (tb - 4.0)) + 1.5 * n * n * (1.0 - self.gamma / (tb - 4.0)))
    }

    /// `6γ(2^β−3)(n^β − 2n/2^β) / ((2^β−4)(2^β−2))`, likewise as printed.
    pub fn literal_c(&self, n: u64) -> Result<f64> {
        let n = self.check_n(n)?;
        let tb = self.two_beta();
        Ok(6.0 * self.gamma * (tb - 3.0) * (n.powf(self.beta) - 2.0 * n / tb) / ((tb - 4.0) * (tb - 2.0)))
    }
}
