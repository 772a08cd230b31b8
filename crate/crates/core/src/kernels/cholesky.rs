use crate::error::{Error, Result};
use crate::matrix::{Matrix, Quadrants};
use crate::scalar::ScalarKind;

use super::triangular::leaf_inv_lower;
use super::{multiply, mul_neg, require_square_pow2, KernelConfig, OpCounter};

/// Unblocked Cholesky of the lower triangle of `a`, followed by forward
/// substitution for the inverse factor. `offset` shifts reported pivot
/// indices into the caller's coordinates.
pub(crate) fn leaf_cholesky(a: &Matrix, offset: usize, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let n = a.rows();
    let kind = a.kind();
    let mut h = Matrix::zeros(n, n, kind);
    for j in 0..n {
        let mut s = a.get(j, j).clone();
        for k in 0..j {
            s = &s - &(h.get(j, k) * h.get(j, k));
            ctr.mul_count += 1;
            ctr.addsub_count += 1;
        }
        if !s.is_positive() {
            return Err(Error::NotPositiveDefinite(offset + j));
        }
        let d = s.sqrt()?;
        ctr.sqrt_count += 1;
        for i in j + 1..n {
            let mut t = a.get(i, j).clone();
            for k in 0..j {
                t = &t - &(h.get(i, k) * h.get(j, k));
                ctr.mul_count += 1;
                ctr.addsub_count += 1;
            }
            h.set(i, j, t.checked_div(&d).expect("positive pivot"));
            ctr.div_count += 1;
        }
        h.set(j, j, d);
    }
    let h_inv = leaf_inv_lower(&h, ctr)?;
    Ok((h, h_inv))
}

/// Returns `(H, H⁻¹)` with `A = H·Hᵀ`, `H` lower triangular.
///
/// With `A = [[A₁, A₂], [A₂ᵀ, A₃]]`: `(B, B⁻¹) = chol(A₁)`,
/// `C = A₂ᵀ·(B⁻¹)ᵀ`, `F = A₃ − C·Cᵀ`, `(D, D⁻¹) = chol(F)`, and the
/// inverse corner is `−D⁻¹·(C·B⁻¹)`.
pub fn cholesky(a: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    cfg.validate()?;
    require_square_pow2(a, "cholesky")?;
    if a.kind() != ScalarKind::F64 {
        return Err(Error::UnsupportedScalar("cholesky needs f64 scalars".into()));
    }
    if !a.transpose().bitwise_eq(a) {
        return Err(Error::PreconditionViolated("matrix is not symmetric".into()));
    }
    recurse(a, 0, cfg, ctr)
}

pub(crate) fn recurse(a: &Matrix, offset: usize, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let n = a.rows();
    if n <= cfg.leaf_size {
        return leaf_cholesky(a, offset, ctr);
    }
    let h = n / 2;
    let q = a.split()?;
    let (b, b_inv) = recurse(&q.a0, offset, cfg, ctr)?;
    let c = multiply(&q.a1.transpose(), &b_inv.transpose(), cfg, ctr)?;
    let ncc = mul_neg(&c, &c.transpose(), cfg, ctr)?;
    let f = q.a3.add(&ncc)?;
    ctr.addsub_count += (h * h) as u64;
    let (d, d_inv) = recurse(&f, offset + h, cfg, ctr)?;
    let e = multiply(&c, &b_inv, cfg, ctr)?;
    let corner = mul_neg(&d_inv, &e, cfg, ctr)?;
    let zero = Matrix::zeros(h, h, a.kind());
    let hm = Matrix::join(&Quadrants { a0: b, a1: zero.clone(), a2: c, a3: d })?;
    let hi = Matrix::join(&Quadrants { a0: b_inv, a1: zero, a2: corner, a3: d_inv })?;
    Ok((hm, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::{naive_mul, relative_residual};

    #[test]
    fn identity() {
        let i = Matrix::identity(8, ScalarKind::F64);
        let (h, hi) = cholesky(&i, &KernelConfig::with_leaf(2), &mut OpCounter::new()).unwrap();
        assert!(h.is_identity() && hi.is_identity());
    }

    #[test]
    fn two_by_two() {
        let a = Matrix::from_f64(2, 2, &[4.0, 2.0, 2.0, 5.0]);
        for leaf in [1, 2] {
            let (h, hi) = cholesky(&a, &KernelConfig::with_leaf(leaf), &mut OpCounter::new()).unwrap();
            assert_eq!(h.to_f64_vec(), vec![2.0, 0.0, 1.0, 2.0]);
            assert_eq!(hi.to_f64_vec(), vec![0.5, 0.0, -0.25, 0.5]);
            assert!(naive_mul(&h, &h.transpose()).bitwise_eq(&a));
            assert!(naive_mul(&h, &hi).is_identity());
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = Matrix::from_f64(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        for leaf in [1, 2] {
            assert_eq!(
                cholesky(&a, &KernelConfig::with_leaf(leaf), &mut OpCounter::new()),
                Err(Error::NotPositiveDefinite(1))
            );
        }
    }

    #[test]
    fn rationals_unsupported() {
        let a = Matrix::identity(2, ScalarKind::Rat);
        assert!(matches!(
            cholesky(&a, &KernelConfig::default(), &mut OpCounter::new()),
            Err(Error::UnsupportedScalar(_))
        ));
    }

    #[test]
    fn seeded_reconstruction() {
        for (n, seed) in [(8, 1), (32, 2), (64, 3)] {
            let a = gen::random_spd(n, seed);
            let (h, hi) = cholesky(&a, &KernelConfig::with_leaf(4), &mut OpCounter::new()).unwrap();
            assert!(h.is_lower_triangular() && hi.is_lower_triangular());
            assert!(relative_residual(&h, &h.transpose(), &a) <= 1e-9);
            let eye = Matrix::identity(n, ScalarKind::F64);
            assert!(naive_mul(&h, &hi).frobenius_distance(&eye).unwrap() <= 1e-9);
        }
    }
}
