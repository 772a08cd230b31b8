use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::OpCounter;
use crate::matrix::Matrix;
use crate::scalar::{Scalar, ScalarKind};

/// Rotation `g = [[c, −s], [s, c]]`; applying `gᵀ` to `(α, γ)` yields `(a, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GivensPair {
    pub c: f64,
    pub s: f64,
}

impl GivensPair {
    pub const IDENTITY: GivensPair = GivensPair { c: 1.0, s: 0.0 };

    pub fn is_identity(&self) -> bool {
        self.c == 1.0 && self.s == 0.0
    }
}

fn as_f64(v: &Scalar) -> Result<f64> {
    match v {
        Scalar::F64(x) => Ok(*x),
        Scalar::Rat(_) => Err(Error::UnsupportedScalar("Givens rotations need f64 scalars".into())),
    }
}

/// Rotation annihilating `gamma` against `alpha`:
/// `Δ = α² + γ²`, `c = α/√Δ`, `s = γ/√Δ`, new leading entry `a = √Δ`.
/// When `γ = 0` the identity rotation is returned and `a = α`.
pub fn givens2(alpha: &Scalar, gamma: &Scalar) -> Result<(GivensPair, Scalar)> {
    let (a, g) = (as_f64(alpha)?, as_f64(gamma)?);
    if g == 0.0 {
        return Ok((GivensPair::IDENTITY, Scalar::F64(a)));
    }
    let root = (a * a + g * g).sqrt();
    Ok((GivensPair { c: a / root, s: g / root }, Scalar::F64(root)))
}

pub(crate) fn count_givens(ctr: &mut OpCounter) {
    ctr.mul_count += 2;
    ctr.addsub_count += 1;
    ctr.sqrt_count += 1;
    ctr.div_count += 2;
}

/// In-place `rows (i, k) ← (c·rowᵢ + s·rowₖ, −s·rowᵢ + c·rowₖ)` for
/// columns `from_col..`. Entry `(k, from_col)` is written as exact zero
/// when `zero_pivot` is set.
pub(crate) fn rotate_rows(
    m: &mut Matrix,
    i: usize,
    k: usize,
    g: GivensPair,
    from_col: usize,
    zero_pivot: bool,
    ctr: &mut OpCounter,
) {
    for j in from_col..m.cols() {
        let x = m.get(i, j).to_f64();
        let y = m.get(k, j).to_f64();
        m.set(i, j, Scalar::F64(g.c * x + g.s * y));
        m.set(k, j, Scalar::F64(-g.s * x + g.c * y));
    }
    let w = (m.cols() - from_col) as u64;
    ctr.mul_count += 4 * w;
    ctr.addsub_count += 2 * w;
    if zero_pivot && from_col < m.cols() {
        m.set(k, from_col, Scalar::F64(0.0));
    }
}

/// Applies `G = diag(I, gᵀ, I)` acting on rows `i, i+1` from `from_col`
/// onward and writes an exact zero at `(i+1, from_col)`.
pub fn apply_givens_rows(m: &Matrix, i: usize, g: GivensPair, from_col: usize) -> Result<Matrix> {
    if i + 1 >= m.rows() || from_col >= m.cols() {
        return Err(Error::InvalidIndex(format!(
            "rows ({i}, {}) / column {from_col} outside {}x{}",
            i + 1,
            m.rows(),
            m.cols()
        )));
    }
    if m.kind() != ScalarKind::F64 {
        return Err(Error::UnsupportedScalar("Givens rotations need f64 scalars".into()));
    }
    let mut out = m.clone();
    if !g.is_identity() {
        rotate_rows(&mut out, i, i + 1, g, from_col, true, &mut OpCounter::new());
    }
    Ok(out)
}
