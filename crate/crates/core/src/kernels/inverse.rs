use crate::error::{Error, Result};
use crate::matrix::{Matrix, Quadrants};
use crate::scalar::Scalar;

use super::{mul_accum_recursive, mul_neg, multiply, require_square_pow2, KernelConfig, OpCounter};

/// Where a leaf block sits inside the top-level problem.
#[derive(Clone, Copy)]
pub(crate) struct Position {
    pub offset: usize,
    pub total: usize,
}

/// Classifies a zero pivot at global index `g` of an order-`n` problem.
///
/// Pivots before `g` are nonzero, so a block of the quadrant recursion is
/// singular exactly when its index range ends at `g`. The outermost such
/// block that is a leading quadrant names the failing level; if only
/// trailing blocks end at `g` the whole matrix is singular.
fn classify_zero_pivot(g: usize, n: usize) -> Error {
    let (mut level, mut lo, mut size) = (0, 0, n);
    while size > 1 {
        let half = size / 2;
        if g < lo + half {
            if g + 1 == lo + half {
                return Error::PivotBlockSingular(level);
            }
        } else {
            lo += half;
        }
        size = half;
        level += 1;
    }
    Error::Singular(g)
}

/// Gauss-Jordan on `[A | I]` in natural pivot order. Row exchanges would
/// hide exactly the singular leading blocks the block recursion cannot
/// handle, so none are made: a zero pivot is reported instead.
fn leaf_gauss_jordan(a: &Matrix, pos: Position, ctr: &mut OpCounter) -> Result<Matrix> {
    let n = a.rows();
    let kind = a.kind();
    let mut w: Vec<Vec<Scalar>> = (0..n)
        .map(|i| {
            let mut row: Vec<Scalar> = (0..n).map(|j| a.get(i, j).clone()).collect();
            row.extend((0..n).map(|j| if i == j { Scalar::one(kind) } else { Scalar::zero(kind) }));
            row
        })
        .collect();
    for k in 0..n {
        let Some(inv) = w[k][k].recip() else {
            return Err(classify_zero_pivot(pos.offset + k, pos.total));
        };
        ctr.div_count += 1;
        for v in w[k].iter_mut() {
            *v = &*v * &inv;
        }
        ctr.mul_count += 2 * n as u64;
        let pivot_row = w[k].clone();
        for (i, row) in w.iter_mut().enumerate() {
            if i == k || row[k].is_zero() {
                continue;
            }
            let f = row[k].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = &*v - &(&f * p);
            }
            ctr.mul_count += 2 * n as u64;
            ctr.addsub_count += 2 * n as u64;
        }
    }
    let data = w.into_iter().flat_map(|row| row.into_iter().skip(n)).collect();
    Matrix::from_scalars(n, n, kind, data)
}

/// Block inversion without cross-quadrant pivoting:
/// `M₀ = −A₀⁻¹`, `M₁ = M₀A₁`, `M₂ = A₂M₀`, `M₃ = M₂A₁`,
/// `M₄ = (A₃ + M₃)⁻¹`, `M₅ = M₄M₂`, `M₆ = M₁M₅ − M₀`, and
/// `A⁻¹ = [[M₆, M₁M₄], [M₅, M₄]]`.
///
/// Since `M₂ = −A₂A₀⁻¹`, the lower-left block `−S⁻¹A₂A₀⁻¹` of the inverse
/// is `M₄M₂` itself (no extra negation).
///
/// `M₀` is never materialized: with `P = A₀⁻¹` the same values are
/// `M₁ = −(P·A₁)`, `M₂ = −(A₂·P)` and `M₆ = M₁M₅ + P`.
pub fn inv_strassen(a: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Matrix> {
    cfg.validate()?;
    let n = require_square_pow2(a, "inv_strassen")?;
    recurse(a, Position { offset: 0, total: n }, cfg, ctr)
}

pub(crate) fn recurse(a: &Matrix, pos: Position, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Matrix> {
    let n = a.rows();
    if n <= cfg.leaf_size {
        return leaf_gauss_jordan(a, pos, ctr);
    }
    let h = n / 2;
    let q = a.split()?;
    let p = recurse(&q.a0, pos, cfg, ctr)?;
    let m1 = mul_neg(&p, &q.a1, cfg, ctr)?;
    let m2 = mul_neg(&q.a2, &p, cfg, ctr)?;
    let m3 = multiply(&m2, &q.a1, cfg, ctr)?;
    let s = q.a3.add(&m3)?;
    ctr.addsub_count += (h * h) as u64;
    let m4 = recurse(&s, Position { offset: pos.offset + h, ..pos }, cfg, ctr)?;
    let m5 = multiply(&m4, &m2, cfg, ctr)?;
    let m6 = mul_accum_recursive(&m1, &m5, &p, cfg, ctr)?;
    let top_right = multiply(&m1, &m4, cfg, ctr)?;
    Matrix::join(&Quadrants { a0: m6, a1: top_right, a2: m5, a3: m4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::naive_mul;
    use crate::scalar::ScalarKind;

    #[test]
    fn identity() {
        let i = Matrix::identity(8, ScalarKind::Rat);
        assert!(inv_strassen(&i, &KernelConfig::with_leaf(1), &mut OpCounter::new())
            .unwrap()
            .is_identity());
    }

    #[test]
    fn two_by_two_exact() {
        let a = Matrix::from_i64(2, 2, &[1, 2, 3, 4], ScalarKind::Rat);
        for leaf in [1, 2] {
            let inv = inv_strassen(&a, &KernelConfig::with_leaf(leaf), &mut OpCounter::new()).unwrap();
            let want = [Scalar::from_i64(-2, ScalarKind::Rat), Scalar::from_i64(1, ScalarKind::Rat), Scalar::ratio(3, 2), Scalar::ratio(-1, 2)];
            assert_eq!(inv.data(), &want);
            assert!(naive_mul(&a, &inv).is_identity());
        }
    }

    #[test]
    fn singular_leading_block() {
        let a = Matrix::from_i64(2, 2, &[0, 1, 1, 0], ScalarKind::Rat);
        for cfg in [KernelConfig::default(), KernelConfig::with_leaf(1)] {
            assert_eq!(
                inv_strassen(&a, &cfg, &mut OpCounter::new()),
                Err(Error::PivotBlockSingular(0))
            );
        }
    }

    #[test]
    fn singular_matrix() {
        let a = Matrix::from_i64(2, 2, &[1, 2, 2, 4], ScalarKind::Rat);
        assert_eq!(
            inv_strassen(&a, &KernelConfig::default(), &mut OpCounter::new()),
            Err(Error::Singular(1))
        );
        assert_eq!(
            inv_strassen(&a, &KernelConfig::with_leaf(1), &mut OpCounter::new()),
            Err(Error::Singular(1))
        );
    }

    #[test]
    fn zero_pivot_classification() {
        assert_eq!(classify_zero_pivot(0, 2), Error::PivotBlockSingular(0));
        assert_eq!(classify_zero_pivot(1, 2), Error::Singular(1));
        assert_eq!(classify_zero_pivot(0, 8), Error::PivotBlockSingular(2));
        assert_eq!(classify_zero_pivot(3, 8), Error::PivotBlockSingular(0));
        assert_eq!(classify_zero_pivot(5, 8), Error::PivotBlockSingular(1));
        assert_eq!(classify_zero_pivot(7, 8), Error::Singular(7));
    }

    #[test]
    fn leaf_size_does_not_change_the_diagnosis() {
        // leading 2x2 block [[1, 2], [2, 4]] is singular; the full matrix is not
        let a = Matrix::from_i64(4, 4, &[1, 2, 0, 0, 2, 4, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0], ScalarKind::Rat);
        for leaf in [1, 2, 4] {
            assert_eq!(
                inv_strassen(&a, &KernelConfig::with_leaf(leaf), &mut OpCounter::new()),
                Err(Error::PivotBlockSingular(0))
            );
        }
    }

    #[test]
    fn diagonally_dominant_exact() {
        for seed in 0..3 {
            let a = gen::random_diag_dominant(16, ScalarKind::Rat, seed);
            let inv = inv_strassen(&a, &KernelConfig::with_leaf(2), &mut OpCounter::new()).unwrap();
            assert!(naive_mul(&inv, &a).is_identity());
        }
    }
}
